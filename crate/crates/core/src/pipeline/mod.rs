//! End-to-end analysis: ingest, preprocess, the lexical, topic and
//! embedding layers, summaries, and the report.
//!
//! Every random choice uses a seed derived from the global seed and the
//! name of the entity it concerns (stage, group, channel, source), so work
//! on one channel never shifts the random stream of another. Parallel work
//! is collected back in input order.

mod config;
mod emit;
mod summary;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    lemmatize, load_corpus, preprocess_tokens, strip_markup, Corpus, LanguageScorer, LemmaTable,
    Source, Stoplist, StopwordProfileScorer, TokenDocument,
};
use crate::embedding::{self, fine_tune, train_sgns, EmbeddingModel, SgnsConfig};
use crate::lexicon::{
    self, aggregate_channel, caption_comment_similarity, correlation_table, count_categories,
    normalize_vector, CategoryLexicon, ChannelObservation, CorrelationRow,
    NormalizedCategoryVector, Polarity,
};
use crate::seed;
use crate::topics::{
    self, rank_by_dominance, top_words_weighted, train_lda, LdaConfig, TopicModel,
};
use crate::weat::{
    self, builtin_specs, run_weat, Comparison, PValueMode, PermutationOptions, SampledOptions,
    WeatSpec,
};

pub use config::{ConfigError, RunConfig, WeatSettings, KEYS};
pub use emit::{
    csv_tables, emit_report, file_stem, format_real, report_json, write_run, ReportFormat,
};
pub use summary::{summarize_distribution, BoxStats, DistributionSummary, GroupTest, Samples};

/// Topics listed per document class.
pub const TOP_TOPICS: usize = 2;
/// Words listed per topic.
pub const TOP_WORDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingest,
    Preprocess,
    Lexical,
    Topics,
    Embedding,
    Weat,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Preprocess => "preprocess",
            Stage::Lexical => "lexical",
            Stage::Topics => "topics",
            Stage::Embedding => "embedding",
            Stage::Weat => "weat",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} stage: configuration error: {source}")]
    Config {
        stage: Stage,
        #[source]
        source: ConfigError,
    },
    #[error("{stage} stage: {source}")]
    Data {
        stage: Stage,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("report stage: cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl PipelineError {
    fn data(stage: Stage, e: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        PipelineError::Data {
            stage,
            source: e.into(),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Config { stage, .. } | PipelineError::Data { stage, .. } => *stage,
            PipelineError::Output { .. } => Stage::Report,
        }
    }

    /// 2 for configuration errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config { .. } => 2,
            _ => 3,
        }
    }
}

impl From<ConfigError> for PipelineError {
    fn from(source: ConfigError) -> Self {
        let stage = match &source {
            ConfigError::MissingPath { key, .. } => match *key {
                "corpus" => Stage::Ingest,
                "stoplist" | "lemmas" => Stage::Preprocess,
                "lexicon" => Stage::Lexical,
                "base_model" => Stage::Embedding,
                "weat_specs" => Stage::Weat,
                _ => Stage::Config,
            },
            _ => Stage::Config,
        };
        PipelineError::Config { stage, source }
    }
}

// ---------------------------------------------------------------------------
// inputs

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputFingerprint {
    pub key: &'static str,
    /// File name only, so reports do not depend on where inputs live.
    pub file: String,
    pub sha256: String,
}

pub struct Inputs {
    pub corpus: Corpus,
    pub stoplist: Stoplist,
    pub lemmas: LemmaTable,
    pub lexicon: CategoryLexicon,
    pub specs: Vec<WeatSpec>,
    pub base_model: Option<EmbeddingModel>,
    pub fingerprints: Vec<InputFingerprint>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Validate the config and read every input file.
pub fn load_inputs(config: &RunConfig) -> Result<Inputs, PipelineError> {
    config.validate()?;
    let mut fingerprints = Vec::new();
    for (key, path) in config.input_paths() {
        let bytes = fs::read(path).map_err(|e| PipelineError::data(Stage::Ingest, e))?;
        fingerprints.push(InputFingerprint {
            key,
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(&bytes),
        });
    }
    let corpus = load_corpus(&config.corpus).map_err(|e| PipelineError::data(Stage::Ingest, e))?;
    let stoplist =
        Stoplist::load(&config.stoplist).map_err(|e| PipelineError::data(Stage::Preprocess, e))?;
    let lemmas =
        LemmaTable::load(&config.lemmas).map_err(|e| PipelineError::data(Stage::Preprocess, e))?;
    let lexicon = CategoryLexicon::load(&config.lexicon)
        .map_err(|e| PipelineError::data(Stage::Lexical, e))?;
    let specs = match &config.weat_specs {
        Some(p) => weat::load_specs(p).map_err(|e| PipelineError::data(Stage::Weat, e))?,
        None => builtin_specs(),
    };
    for spec in &specs {
        spec.validate()
            .map_err(|e| PipelineError::data(Stage::Weat, e))?;
    }
    let base_model = match &config.base_model {
        Some(p) => {
            let mut m =
                embedding::load_any(p).map_err(|e| PipelineError::data(Stage::Embedding, e))?;
            m.config = SgnsConfig {
                dim: m.dim(),
                ..config.sgns.clone()
            };
            Some(m)
        }
        None => None,
    };
    Ok(Inputs {
        corpus,
        stoplist,
        lemmas,
        lexicon,
        specs,
        base_model,
        fingerprints,
    })
}

// ---------------------------------------------------------------------------
// preprocessing

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDocument {
    pub doc: TokenDocument,
    pub group: String,
    pub language_score: f64,
    /// Passed the language filter. Rejected documents carry no tokens.
    pub kept: bool,
}

impl PreparedDocument {
    fn usable(&self) -> bool {
        self.kept && !self.doc.tokens.is_empty()
    }
}

/// Markup removal, language filter, tokenization and lemmatization.
///
/// Documents come back ordered by channel, video and source, so the input
/// order of the corpus file has no effect on any later stage.
pub fn preprocess(config: &RunConfig, inputs: &Inputs) -> Vec<PreparedDocument> {
    let scorer = StopwordProfileScorer::default();
    let groups: HashMap<&str, &str> = inputs
        .corpus
        .channels
        .iter()
        .map(|c| (c.id.as_str(), c.group.as_str()))
        .collect();
    let mut docs = inputs
        .corpus
        .documents
        .par_iter()
        .map(|raw| {
            let text = strip_markup(&raw.text);
            let language_score = scorer.probability(&text);
            let kept = language_score >= config.language_threshold;
            let tokens = if kept {
                lemmatize(&preprocess_tokens(&text, &inputs.stoplist), &inputs.lemmas)
            } else {
                Vec::new()
            };
            PreparedDocument {
                doc: TokenDocument {
                    video_id: raw.video_id.clone(),
                    channel_id: raw.channel_id.clone(),
                    source: raw.source,
                    tokens,
                },
                group: groups[raw.channel_id.as_str()].to_string(),
                language_score,
                kept,
            }
        })
        .collect::<Vec<_>>();
    docs.sort_by(|a, b| {
        (&a.doc.channel_id, &a.doc.video_id, a.doc.source).cmp(&(
            &b.doc.channel_id,
            &b.doc.video_id,
            b.doc.source,
        ))
    });
    docs
}

/// What happened to one document in one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Included,
    /// Removed by the language filter before any layer.
    LanguageFilter,
    /// No token belongs to any category.
    ZeroCategory,
    /// Nothing left after preprocessing.
    EmptyDocument,
    /// No token is in the channel model's vocabulary.
    AllOov,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Included => "included",
            Status::LanguageFilter => "language_filter",
            Status::ZeroCategory => "zero_category",
            Status::EmptyDocument => "empty_document",
            Status::AllOov => "all_oov",
        }
    }
}

fn base_status(d: &PreparedDocument) -> Status {
    if !d.kept {
        Status::LanguageFilter
    } else if d.doc.tokens.is_empty() {
        Status::EmptyDocument
    } else {
        Status::Included
    }
}

// ---------------------------------------------------------------------------
// lexical layer

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryInfo {
    pub name: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VideoProfile {
    pub video_id: String,
    pub channel_id: String,
    pub group: String,
    pub source: Source,
    pub counts: Vec<u64>,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelProfile {
    pub channel_id: String,
    pub group: String,
    pub source: Source,
    pub videos: usize,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VideoSimilarity {
    pub video_id: String,
    pub channel_id: String,
    pub group: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSimilarity {
    pub channel_id: String,
    pub group: String,
    /// Videos with both profiles; the mean runs over these only.
    pub videos: usize,
    pub mean_similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexicalSection {
    pub categories: Vec<CategoryInfo>,
    pub videos: Vec<VideoProfile>,
    pub channels: Vec<ChannelProfile>,
    pub similarities: Vec<VideoSimilarity>,
    pub channel_similarities: Vec<ChannelSimilarity>,
    pub correlations: Vec<CorrelationRow>,
    pub summaries: Vec<DistributionSummary>,
    pub group_tests: Vec<GroupTest>,
}

pub const NEGATIVE_TOTAL: &str = "negative_total";

pub fn lexical_layer(
    config: &RunConfig,
    inputs: &Inputs,
    docs: &[PreparedDocument],
) -> Result<(LexicalSection, Vec<Status>), PipelineError> {
    let lexicon = &inputs.lexicon;
    let fail = |e: lexicon::LexiconError| PipelineError::data(Stage::Lexical, e);
    let vectors: Vec<Option<(Vec<u64>, NormalizedCategoryVector)>> = docs
        .par_iter()
        .map(|d| {
            if !d.usable() {
                return None;
            }
            let counts = count_categories(&d.doc.video_id, d.doc.source, &d.doc.tokens, lexicon);
            normalize_vector(&counts).ok().map(|n| (counts.counts, n))
        })
        .collect();
    let statuses: Vec<Status> = docs
        .iter()
        .zip(&vectors)
        .map(|(d, v)| match (base_status(d), v) {
            (Status::Included, None) => Status::ZeroCategory,
            (s, _) => s,
        })
        .collect();

    let negative: Vec<bool> = lexicon
        .categories()
        .iter()
        .map(|c| c.polarity == Polarity::Negative)
        .collect();
    let negative_total = |fr: &[f64]| {
        fr.iter()
            .zip(&negative)
            .filter(|(_, n)| **n)
            .map(|(f, _)| f)
            .sum::<f64>()
    };
    let names = lexicon.names();

    let mut samples = Samples::default();
    let mut videos = Vec::new();
    let mut by_channel: BTreeMap<(&str, Source), Vec<NormalizedCategoryVector>> = BTreeMap::new();
    let mut pairs: BTreeMap<&str, [Option<&NormalizedCategoryVector>; 2]> = BTreeMap::new();
    let group_of: HashMap<&str, &str> = docs
        .iter()
        .map(|d| (d.doc.channel_id.as_str(), d.group.as_str()))
        .collect();
    for (d, v) in docs.iter().zip(&vectors) {
        let Some((counts, n)) = v else { continue };
        let source = Some(d.doc.source);
        for (name, f) in names.iter().zip(&n.fractions) {
            samples.push(name, "video", source, &d.group, *f);
        }
        samples.push(
            NEGATIVE_TOTAL,
            "video",
            source,
            &d.group,
            negative_total(&n.fractions),
        );
        videos.push(VideoProfile {
            video_id: d.doc.video_id.clone(),
            channel_id: d.doc.channel_id.clone(),
            group: d.group.clone(),
            source: d.doc.source,
            counts: counts.clone(),
            fractions: n.fractions.clone(),
        });
        by_channel
            .entry((d.doc.channel_id.as_str(), d.doc.source))
            .or_default()
            .push(n.clone());
    }
    for (d, v) in docs.iter().zip(&vectors) {
        if let Some((_, n)) = v {
            let slot = pairs.entry(d.doc.video_id.as_str()).or_default();
            slot[d.doc.source as usize] = Some(n);
        }
    }

    let mut channels = Vec::new();
    for ((channel_id, source), vs) in &by_channel {
        let agg = aggregate_channel(channel_id, *source, vs).map_err(fail)?;
        let group = group_of[channel_id];
        for (name, f) in names.iter().zip(&agg.means) {
            samples.push(name, "channel", Some(*source), group, *f);
        }
        samples.push(
            NEGATIVE_TOTAL,
            "channel",
            Some(*source),
            group,
            negative_total(&agg.means),
        );
        channels.push(ChannelProfile {
            channel_id: channel_id.to_string(),
            group: group.to_string(),
            source: *source,
            videos: agg.videos,
            fractions: agg.means,
        });
    }

    let video_channel: HashMap<&str, &str> = docs
        .iter()
        .map(|d| (d.doc.video_id.as_str(), d.doc.channel_id.as_str()))
        .collect();
    let mut similarities = Vec::new();
    let mut per_channel: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (video_id, pair) in &pairs {
        let [Some(cap), Some(com)] = pair else {
            continue;
        };
        let s = caption_comment_similarity(cap, com).map_err(fail)?;
        let channel_id = video_channel[video_id];
        let group = group_of[channel_id];
        samples.push("similarity", "video", None, group, s.value);
        per_channel.entry(channel_id).or_default().push(s.value);
        similarities.push(VideoSimilarity {
            video_id: video_id.to_string(),
            channel_id: channel_id.to_string(),
            group: group.to_string(),
            similarity: s.value,
        });
    }
    similarities.sort_by(|a, b| (&a.channel_id, &a.video_id).cmp(&(&b.channel_id, &b.video_id)));

    let channel_ids: BTreeSet<&str> = group_of.keys().copied().collect();
    let mut channel_similarities = Vec::new();
    for channel_id in channel_ids {
        let sims = per_channel
            .get(channel_id)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let mean = (!sims.is_empty()).then(|| crate::stats::mean(sims));
        if let Some(m) = mean {
            samples.push("similarity", "channel", None, group_of[channel_id], m);
        }
        channel_similarities.push(ChannelSimilarity {
            channel_id: channel_id.to_string(),
            group: group_of[channel_id].to_string(),
            videos: sims.len(),
            mean_similarity: mean,
        });
    }

    let observations: Vec<ChannelObservation> = channels
        .iter()
        .filter_map(|c| {
            let sim = channel_similarities
                .iter()
                .find(|s| s.channel_id == c.channel_id)?
                .mean_similarity?;
            Some(ChannelObservation {
                group: c.group.clone(),
                profile: lexicon::ChannelCategoryVector {
                    channel_id: c.channel_id.clone(),
                    source: c.source,
                    means: c.fractions.clone(),
                    videos: c.videos,
                },
                mean_similarity: sim,
            })
        })
        .collect();
    let correlations = correlation_table(
        &observations,
        lexicon,
        config.pearson_permutations,
        seed::derive(config.seed, &["pearson"]),
    );

    let section = LexicalSection {
        categories: lexicon
            .categories()
            .iter()
            .map(|c| CategoryInfo {
                name: c.name.clone(),
                polarity: c.polarity,
            })
            .collect(),
        videos,
        channels,
        similarities,
        channel_similarities,
        correlations,
        summaries: samples.summaries(),
        group_tests: group_tests(config, "lexical", &samples),
    };
    Ok((section, statuses))
}

fn group_tests(config: &RunConfig, section: &str, samples: &Samples) -> Vec<GroupTest> {
    samples.group_tests(
        config.group_test_resamples,
        |metric, level, source, a, b| {
            let source = source.map(Source::as_str).unwrap_or("pair");
            seed::derive(
                config.seed,
                &["group-test", section, metric, level, source, a, b],
            )
        },
    )
}

// ---------------------------------------------------------------------------
// topic layer

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedTopic {
    pub rank: usize,
    pub topic: usize,
    /// Documents whose most probable topic this is.
    pub dominant_documents: usize,
    pub words: Vec<String>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicClass {
    pub group: String,
    pub source: Source,
    pub documents: usize,
    pub topics: Vec<RankedTopic>,
}

impl TopicClass {
    pub fn label(&self) -> String {
        format!("{}_{}", self.group, self.source)
    }
}

pub struct TopicOutcome {
    pub classes: Vec<TopicClass>,
    pub models: Vec<TopicModel>,
    pub statuses: Vec<Status>,
}

/// One LDA model per (group, source) document class.
pub fn topic_layer(
    config: &RunConfig,
    docs: &[PreparedDocument],
) -> Result<TopicOutcome, PipelineError> {
    let groups: BTreeSet<&str> = docs.iter().map(|d| d.group.as_str()).collect();
    let classes: Vec<(&str, Source)> = groups
        .iter()
        .flat_map(|g| Source::ALL.map(|s| (*g, s)))
        .collect();
    let fitted: Vec<Option<(TopicClass, TopicModel)>> = classes
        .par_iter()
        .map(|&(group, source)| {
            let members: Vec<TokenDocument> = docs
                .iter()
                .filter(|d| d.group == group && d.doc.source == source && d.usable())
                .map(|d| d.doc.clone())
                .collect();
            if members.is_empty() {
                return Ok(None);
            }
            let lda = LdaConfig {
                seed: seed::derive(config.seed, &["lda", group, source.as_str()]),
                ..config.lda.clone()
            };
            let model = train_lda(&members, &lda)?;
            let mut ranked = rank_by_dominance(&model.doc_topic);
            for t in 0..lda.k {
                if ranked.len() >= TOP_TOPICS {
                    break;
                }
                if !ranked.iter().any(|r| r.0 == t) {
                    ranked.push((t, 0));
                }
            }
            let topics = ranked
                .into_iter()
                .take(TOP_TOPICS)
                .enumerate()
                .map(|(i, (topic, dominant))| {
                    let (words, weights) = top_words_weighted(&model, topic, TOP_WORDS)?
                        .into_iter()
                        .unzip();
                    Ok(RankedTopic {
                        rank: i + 1,
                        topic,
                        dominant_documents: dominant,
                        words,
                        weights,
                    })
                })
                .collect::<Result<Vec<_>, topics::TopicError>>()?;
            let class = TopicClass {
                group: group.to_string(),
                source,
                documents: members.len(),
                topics,
            };
            Ok(Some((class, model)))
        })
        .collect::<Result<_, topics::TopicError>>()
        .map_err(|e| PipelineError::data(Stage::Topics, e))?;
    let (classes, models) = fitted.into_iter().flatten().unzip();
    Ok(TopicOutcome {
        classes,
        models,
        statuses: docs.iter().map(base_status).collect(),
    })
}

// ---------------------------------------------------------------------------
// embedding layer

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseOrigin {
    File,
    /// No base model was configured; one was trained on the pooled corpus.
    TrainedOnCorpus,
}

pub struct ChannelModel {
    pub channel_id: String,
    pub group: String,
    pub source: Source,
    pub documents: usize,
    pub tokens: usize,
    pub model: EmbeddingModel,
}

pub struct Embeddings {
    pub base: EmbeddingModel,
    pub origin: BaseOrigin,
    pub models: Vec<ChannelModel>,
    pub statuses: Vec<Status>,
}

/// Fine-tune one caption and one comments model per channel.
pub fn embedding_layer(
    config: &RunConfig,
    inputs: &Inputs,
    docs: &[PreparedDocument],
) -> Result<Embeddings, PipelineError> {
    let fail = |e: embedding::EmbeddingError| PipelineError::data(Stage::Embedding, e);
    let (base, origin) = match &inputs.base_model {
        Some(m) => (m.clone(), BaseOrigin::File),
        None => {
            let pooled: Vec<Vec<String>> = docs
                .iter()
                .filter(|d| d.usable())
                .map(|d| d.doc.tokens.clone())
                .collect();
            let sgns = SgnsConfig {
                seed: seed::derive(config.seed, &["sgns", "base"]),
                ..config.sgns.clone()
            };
            (
                train_sgns(&pooled, &sgns).map_err(fail)?,
                BaseOrigin::TrainedOnCorpus,
            )
        }
    };

    // (channel, source) -> (group, sentences)
    type Pooled<'a> = BTreeMap<(&'a str, Source), (&'a str, Vec<Vec<String>>)>;
    let mut keys: Pooled = BTreeMap::new();
    for d in docs.iter().filter(|d| d.usable()) {
        keys.entry((d.doc.channel_id.as_str(), d.doc.source))
            .or_insert_with(|| (d.group.as_str(), Vec::new()))
            .1
            .push(d.doc.tokens.clone());
    }
    let keys: Vec<_> = keys.into_iter().collect();
    let models = keys
        .par_iter()
        .map(|((channel_id, source), (group, sentences))| {
            let s = seed::derive(config.seed, &["fine-tune", channel_id, source.as_str()]);
            let model = fine_tune(&base, sentences, config.fine_tune_epochs, s)?;
            Ok(ChannelModel {
                channel_id: channel_id.to_string(),
                group: group.to_string(),
                source: *source,
                documents: sentences.len(),
                tokens: sentences.iter().map(Vec::len).sum(),
                model,
            })
        })
        .collect::<Result<Vec<_>, embedding::EmbeddingError>>()
        .map_err(fail)?;

    let statuses = docs
        .iter()
        .map(|d| match base_status(d) {
            Status::Included => {
                let m = models
                    .iter()
                    .find(|m| m.channel_id == d.doc.channel_id && m.source == d.doc.source)
                    .expect("every usable document has a channel model");
                if d.doc.tokens.iter().any(|t| m.model.contains(t)) {
                    Status::Included
                } else {
                    Status::AllOov
                }
            }
            s => s,
        })
        .collect();
    Ok(Embeddings {
        base,
        origin,
        models,
        statuses,
    })
}

// ---------------------------------------------------------------------------
// WEAT layer

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseModelInfo {
    pub origin: BaseOrigin,
    /// True when a corpus-trained model stands in for a configured one.
    pub substituted: bool,
    pub vocabulary: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInfo {
    pub channel_id: String,
    pub group: String,
    pub source: Source,
    pub documents: usize,
    pub tokens: usize,
    pub vocabulary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatOutcome {
    pub statistic: Option<f64>,
    pub effect_size: Option<f64>,
    pub p_value: Option<f64>,
    pub partitions: Option<u64>,
    pub mode: Option<PValueMode>,
    pub comparison: Comparison,
    pub degenerate: bool,
    pub dropped: Vec<String>,
    pub error: Option<String>,
}

impl WeatOutcome {
    fn failed(comparison: Comparison, error: String) -> Self {
        Self {
            statistic: None,
            effect_size: None,
            p_value: None,
            partitions: None,
            mode: None,
            comparison,
            degenerate: false,
            dropped: Vec::new(),
            error: Some(error),
        }
    }

    fn significant(&self, threshold: f64) -> bool {
        self.p_value.is_some_and(|p| p < threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatRow {
    pub channel_id: String,
    pub group: String,
    pub spec: String,
    pub caption: WeatOutcome,
    pub comments: WeatOutcome,
    /// `comments - caption`, only when both p-values fall below the
    /// threshold.
    pub effect_size_difference: Option<f64>,
    pub statistic_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatSection {
    pub specs: Vec<WeatSpec>,
    pub base_model: BaseModelInfo,
    pub models: Vec<ModelInfo>,
    pub rows: Vec<WeatRow>,
    pub summaries: Vec<DistributionSummary>,
    pub group_tests: Vec<GroupTest>,
}

pub fn weat_layer(config: &RunConfig, inputs: &Inputs, embeddings: &Embeddings) -> WeatSection {
    let settings = &config.weat;
    let channels: BTreeMap<&str, &str> = inputs
        .corpus
        .channels
        .iter()
        .map(|c| (c.id.as_str(), c.group.as_str()))
        .collect();
    let outcome = |channel_id: &str, source: Source, spec: &WeatSpec| -> WeatOutcome {
        let Some(m) = embeddings
            .models
            .iter()
            .find(|m| m.channel_id == channel_id && m.source == source)
        else {
            return WeatOutcome::failed(settings.comparison, "no usable documents".into());
        };
        let options = PermutationOptions {
            comparison: settings.comparison,
            ceiling: settings.enumeration_ceiling,
            sampled: (settings.sampled_partitions > 0).then(|| SampledOptions {
                samples: settings.sampled_partitions,
                seed: seed::derive(
                    config.seed,
                    &["weat", channel_id, source.as_str(), &spec.name],
                ),
            }),
        };
        match run_weat(&m.model, spec, settings.oov_policy, &options) {
            Ok(r) => WeatOutcome {
                statistic: Some(r.statistic),
                effect_size: r.effect_size,
                p_value: Some(r.p_value),
                partitions: Some(r.partitions_evaluated),
                mode: Some(r.mode),
                comparison: r.comparison,
                degenerate: r.degenerate,
                dropped: r.dropped,
                error: None,
            },
            Err(e) => WeatOutcome::failed(settings.comparison, e.to_string()),
        }
    };

    let jobs: Vec<(&str, &str, &WeatSpec)> = channels
        .iter()
        .flat_map(|(c, g)| inputs.specs.iter().map(move |s| (*c, *g, s)))
        .collect();
    let rows: Vec<WeatRow> = jobs
        .par_iter()
        .map(|&(channel_id, group, spec)| {
            let caption = outcome(channel_id, Source::Caption, spec);
            let comments = outcome(channel_id, Source::Comments, spec);
            let both = caption.significant(settings.p_threshold)
                && comments.significant(settings.p_threshold);
            let diff = |a: Option<f64>, b: Option<f64>| match (both, a, b) {
                (true, Some(a), Some(b)) => Some(b - a),
                _ => None,
            };
            WeatRow {
                channel_id: channel_id.to_string(),
                group: group.to_string(),
                spec: spec.name.clone(),
                effect_size_difference: diff(caption.effect_size, comments.effect_size),
                statistic_difference: diff(caption.statistic, comments.statistic),
                caption,
                comments,
            }
        })
        .collect();

    let mut samples = Samples::default();
    for row in &rows {
        for (source, o) in [
            (Source::Caption, &row.caption),
            (Source::Comments, &row.comments),
        ] {
            if let Some(d) = o.effect_size {
                let metric = format!("{}.effect_size", row.spec);
                samples.push(&metric, "channel", Some(source), &row.group, d);
            }
        }
    }

    WeatSection {
        specs: inputs.specs.clone(),
        base_model: BaseModelInfo {
            origin: embeddings.origin,
            substituted: embeddings.origin == BaseOrigin::TrainedOnCorpus,
            vocabulary: embeddings.base.len(),
            dim: embeddings.base.dim(),
        },
        models: embeddings
            .models
            .iter()
            .map(|m| ModelInfo {
                channel_id: m.channel_id.clone(),
                group: m.group.clone(),
                source: m.source,
                documents: m.documents,
                tokens: m.tokens,
                vocabulary: m.model.len(),
            })
            .collect(),
        rows,
        summaries: samples.summaries(),
        group_tests: group_tests(config, "weat", &samples),
    }
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub language_threshold: f64,
    pub lda: LdaConfig,
    pub sgns: SgnsConfig,
    pub fine_tune_epochs: usize,
    pub weat: WeatSettings,
    pub pearson_permutations: usize,
    pub group_test_resamples: usize,
    pub top_topics: usize,
    pub top_words: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub quartiles: &'static str,
    pub whiskers: &'static str,
    pub effect_size_sd: &'static str,
    pub weat_p_value: &'static str,
    pub pearson_p_value: &'static str,
    pub group_test: &'static str,
    pub similarity_mean: &'static str,
    pub seeds: &'static str,
}

pub const CONVENTIONS: Conventions = Conventions {
    quartiles: "linear interpolation at position q*(n-1) of the sorted sample",
    whiskers: "most extreme points within 1.5*IQR of the quartiles; points beyond are outliers",
    effect_size_sd: "sample standard deviation (n-1) over both classes",
    weat_p_value: "share of equal-size class repartitions whose statistic exceeds the observed one (strictly for gt, or equal for gte)",
    pearson_p_value: "two-sided permutation test, (1 + extreme) / (1 + permutations)",
    group_test: "two-sided permutation test on the difference of group medians, (1 + extreme) / (1 + resamples)",
    similarity_mean: "channel similarity averages only videos with both profiles",
    seeds: "sha-256 of the global seed and the stage and entity labels",
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub groups: Vec<String>,
    pub channels: usize,
    pub videos: usize,
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub inputs: Vec<InputFingerprint>,
    pub settings: Settings,
    pub conventions: Conventions,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub video_id: String,
    pub channel_id: String,
    pub group: String,
    pub source: Source,
    pub language_score: f64,
    pub lexical: Status,
    pub topics: Status,
    pub embedding: Status,
}

impl LedgerEntry {
    pub fn excluded(&self) -> bool {
        [self.lexical, self.topics, self.embedding]
            .iter()
            .any(|s| *s != Status::Included)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusions {
    /// Layer name to status name to document count.
    pub counts: BTreeMap<&'static str, BTreeMap<&'static str, usize>>,
    /// One entry per ingested document.
    pub ledger: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub lexical: LexicalSection,
    pub topics: Vec<TopicClass>,
    pub weat: WeatSection,
    pub exclusions: Exclusions,
}

/// Everything a run produces, before anything is written.
pub struct Analysis {
    pub report: Report,
    pub topic_models: Vec<TopicModel>,
    pub embeddings: Embeddings,
}

fn exclusions(
    docs: &[PreparedDocument],
    lexical: &[Status],
    topics: &[Status],
    embedding: &[Status],
) -> Exclusions {
    let ledger: Vec<LedgerEntry> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| LedgerEntry {
            video_id: d.doc.video_id.clone(),
            channel_id: d.doc.channel_id.clone(),
            group: d.group.clone(),
            source: d.doc.source,
            language_score: d.language_score,
            lexical: lexical[i],
            topics: topics[i],
            embedding: embedding[i],
        })
        .collect();
    let mut counts: BTreeMap<&'static str, BTreeMap<&'static str, usize>> = BTreeMap::new();
    for e in &ledger {
        for (layer, status) in [
            ("lexical", e.lexical),
            ("topics", e.topics),
            ("embedding", e.embedding),
        ] {
            *counts
                .entry(layer)
                .or_default()
                .entry(status.as_str())
                .or_default() += 1;
        }
    }
    Exclusions { counts, ledger }
}

/// Run every layer in memory.
pub fn analyze(config: &RunConfig) -> Result<Analysis, PipelineError> {
    let inputs = load_inputs(config)?;
    analyze_inputs(config, &inputs)
}

pub fn analyze_inputs(config: &RunConfig, inputs: &Inputs) -> Result<Analysis, PipelineError> {
    let docs = preprocess(config, inputs);
    let (lexical, lexical_status) = lexical_layer(config, inputs, &docs)?;
    let topics = topic_layer(config, &docs)?;
    let embeddings = embedding_layer(config, inputs, &docs)?;
    let weat = weat_layer(config, inputs, &embeddings);
    let exclusions = exclusions(
        &docs,
        &lexical_status,
        &topics.statuses,
        &embeddings.statuses,
    );

    let groups: BTreeSet<&str> = inputs
        .corpus
        .channels
        .iter()
        .map(|c| c.group.as_str())
        .collect();
    let meta = Meta {
        tool: "channelscope",
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        inputs: inputs.fingerprints.clone(),
        settings: Settings {
            language_threshold: config.language_threshold,
            lda: LdaConfig {
                seed: config.seed,
                ..config.lda.clone()
            },
            sgns: SgnsConfig {
                seed: config.seed,
                ..config.sgns.clone()
            },
            fine_tune_epochs: config.fine_tune_epochs,
            weat: config.weat.clone(),
            pearson_permutations: config.pearson_permutations,
            group_test_resamples: config.group_test_resamples,
            top_topics: TOP_TOPICS,
            top_words: TOP_WORDS,
        },
        conventions: CONVENTIONS,
        counts: Counts {
            groups: groups.into_iter().map(String::from).collect(),
            channels: inputs.corpus.channels.len(),
            videos: inputs.corpus.video_ids().len(),
            documents: docs.len(),
        },
    };
    Ok(Analysis {
        report: Report {
            meta,
            lexical,
            topics: topics.classes,
            weat,
            exclusions,
        },
        topic_models: topics.models,
        embeddings,
    })
}

/// Analyze, then write every artifact under `config.output`. Nothing is
/// left behind if writing fails.
pub fn run_full_analysis(config: &RunConfig) -> Result<Report, PipelineError> {
    let analysis = analyze(config)?;
    write_run(&analysis, &config.output)?;
    Ok(analysis.report)
}
