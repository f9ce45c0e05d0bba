//! Three-layer text analysis of paired content/reaction corpora.
//!
//! Videos belong to channels, and every video contributes two documents: its
//! caption (the content) and its pooled comments (the reaction). The crate
//! compares the two sides at three levels:
//!
//! * [`lexicon`]: semantic-category profiles, caption/comments cosine
//!   similarity and channel-level correlation tables.
//! * [`topics`]: LDA topic models fit by collapsed Gibbs sampling.
//! * [`embedding`] + [`weat`]: skip-gram word embeddings and the Word
//!   Embedding Association Test.
//!
//! [`pipeline`] wires the layers together behind a config file and emits a
//! deterministic report.

pub mod corpus;
pub mod embedding;
pub mod lexicon;
pub mod pipeline;
pub mod seed;
pub mod stats;
pub mod topics;
pub mod weat;

pub use corpus::{Channel, RawDocument, Source, TokenDocument};
pub use embedding::{EmbeddingModel, SgnsConfig};
pub use lexicon::{CategoryLexicon, CategoryVector, NormalizedCategoryVector};
pub use pipeline::{Report, RunConfig};
pub use topics::{LdaConfig, TopicModel};
pub use weat::{WeatResult, WeatSpec};
