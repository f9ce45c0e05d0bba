//! Semantic-category profiles of documents.
//!
//! A document's lemmas are counted against a category lexicon, the counts
//! are normalized to fractions, fractions are averaged per channel, and the
//! caption and comments profiles of a video are compared by cosine.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LemmaTable, Source};
use crate::seed;
use crate::stats::{self, StatsError};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate category `{0}`")]
    DuplicateCategory(String),
    #[error("category `{0}` has no words")]
    EmptyCategory(String),
    #[error("category `{0}` not found in the imported lists")]
    MissingCategory(String),
    #[error("video {video_id} ({source_kind}): no token matched any category")]
    ZeroSum {
        video_id: String,
        source_kind: Source,
    },
    #[error("cannot aggregate an empty list of vectors")]
    EmptyAggregate,
    #[error("vectors belong to different videos ({0} vs {1})")]
    VideoMismatch(String, String),
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Negative,
    Positive,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Negative => "negative",
            Polarity::Positive => "positive",
        })
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negative" => Ok(Polarity::Negative),
            "positive" => Ok(Polarity::Positive),
            other => Err(format!("unknown polarity `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    pub polarity: Polarity,
    pub words: BTreeSet<String>,
}

/// The category selection used by default: 15 negative and 5 positive
/// semantic fields. Pairs are `(name, name in the Empath category list)`.
pub const DEFAULT_CATEGORIES: [(&str, &str, Polarity); 20] = [
    ("aggression", "aggression", Polarity::Negative),
    ("anger", "anger", Polarity::Negative),
    ("disgust", "disgust", Polarity::Negative),
    (
        "dominant_personality",
        "dominant_personality",
        Polarity::Negative,
    ),
    ("hate", "hate", Polarity::Negative),
    ("kill", "kill", Polarity::Negative),
    ("negative_emotion", "negative_emotion", Polarity::Negative),
    ("nervousness", "nervousness", Polarity::Negative),
    ("pain", "pain", Polarity::Negative),
    ("rage", "rage", Polarity::Negative),
    ("sadness", "sadness", Polarity::Negative),
    ("suffering", "suffering", Polarity::Negative),
    ("swearing_terms", "swearing_terms", Polarity::Negative),
    ("terrorism", "terrorism", Polarity::Negative),
    ("violence", "violence", Polarity::Negative),
    ("joy", "joy", Polarity::Positive),
    ("love", "love", Polarity::Positive),
    ("optimist", "optimism", Polarity::Positive),
    ("politeness", "politeness", Polarity::Positive),
    ("positive_emotion", "positive_emotion", Polarity::Positive),
];

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.tsv");

/// Ordered categories with a reverse word index.
#[derive(Debug, Clone)]
pub struct CategoryLexicon {
    categories: Vec<Category>,
    index: HashMap<String, Vec<usize>>,
}

impl CategoryLexicon {
    pub fn new(categories: Vec<Category>) -> Result<Self, LexiconError> {
        let mut seen = BTreeSet::new();
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, cat) in categories.iter().enumerate() {
            if !seen.insert(cat.name.clone()) {
                return Err(LexiconError::DuplicateCategory(cat.name.clone()));
            }
            if cat.words.is_empty() {
                return Err(LexiconError::EmptyCategory(cat.name.clone()));
            }
            for w in &cat.words {
                index.entry(w.clone()).or_default().push(i);
            }
        }
        Ok(Self { categories, index })
    }

    /// The small synthetic lexicon shipped with the crate. It carries the
    /// default 20 category names with stand-in word lists.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON, Path::new("<bundled lexicon>"))
            .expect("bundled lexicon is well formed")
    }

    /// Parse `category<TAB>polarity<TAB>word1,word2,...` lines.
    pub fn parse(text: &str, path: &Path) -> Result<Self, LexiconError> {
        let mut categories = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| LexiconError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let name = fields[0].trim();
            if name.is_empty() {
                return Err(err("empty category name".into()));
            }
            let polarity = fields[1].trim().parse::<Polarity>().map_err(err)?;
            let words: BTreeSet<String> = fields[2]
                .split(',')
                .map(str::trim)
                .filter(|w| !w.is_empty())
                .map(str::to_lowercase)
                .collect();
            categories.push(Category {
                name: name.to_string(),
                polarity,
                words,
            });
        }
        Self::new(categories)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Convert Empath's `categories.tsv` (`name<TAB>word<TAB>word...`) into a
    /// lexicon with the given selection of `(our name, empath name,
    /// polarity)`. Words are lemmatized with `lemmas` so they match the
    /// lemmatized documents.
    pub fn import_empath(
        text: &str,
        selection: &[(&str, &str, Polarity)],
        lemmas: &LemmaTable,
    ) -> Result<Self, LexiconError> {
        let mut lists: HashMap<&str, Vec<&str>> = HashMap::new();
        for line in text.lines() {
            let mut fields = line.split('\t');
            if let Some(name) = fields.next() {
                lists.insert(name.trim(), fields.collect());
            }
        }
        let mut categories = Vec::with_capacity(selection.len());
        for &(name, source_name, polarity) in selection {
            let words = lists
                .get(source_name)
                .ok_or_else(|| LexiconError::MissingCategory(source_name.to_string()))?;
            categories.push(Category {
                name: name.to_string(),
                polarity,
                words: words
                    .iter()
                    .map(|w| w.trim().to_lowercase())
                    .filter(|w| !w.is_empty() && !w.contains(char::is_whitespace))
                    .map(|w| lemmas.lemma(&w).to_string())
                    .collect(),
            });
        }
        Self::new(categories)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for cat in &self.categories {
            let words: Vec<&str> = cat.words.iter().map(String::as_str).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                cat.name,
                cat.polarity,
                words.join(",")
            ));
        }
        out
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn names(&self) -> Vec<&str> {
        self.categories.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Indices of the categories containing `word`.
    pub fn categories_of(&self, word: &str) -> &[usize] {
        self.index.get(word).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategoryVector {
    pub video_id: String,
    pub source: Source,
    pub counts: Vec<u64>,
}

impl CategoryVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedCategoryVector {
    pub video_id: String,
    pub source: Source,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelCategoryVector {
    pub channel_id: String,
    pub source: Source,
    pub means: Vec<f64>,
    /// Number of contributing videos.
    pub videos: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityScore {
    pub video_id: String,
    pub value: f64,
}

/// Count token occurrences per category. A token in several categories
/// counts in each of them.
pub fn count_categories(
    video_id: &str,
    source: Source,
    tokens: &[String],
    lexicon: &CategoryLexicon,
) -> CategoryVector {
    let mut counts = vec![0u64; lexicon.len()];
    for token in tokens {
        for &i in lexicon.categories_of(token) {
            counts[i] += 1;
        }
    }
    CategoryVector {
        video_id: video_id.to_string(),
        source,
        counts,
    }
}

/// Divide each count by the sum over the selected categories.
pub fn normalize_vector(cv: &CategoryVector) -> Result<NormalizedCategoryVector, LexiconError> {
    let total = cv.total();
    if total == 0 {
        return Err(LexiconError::ZeroSum {
            video_id: cv.video_id.clone(),
            source_kind: cv.source,
        });
    }
    let total = total as f64;
    Ok(NormalizedCategoryVector {
        video_id: cv.video_id.clone(),
        source: cv.source,
        fractions: cv.counts.iter().map(|&c| c as f64 / total).collect(),
    })
}

/// Componentwise mean of one channel's normalized vectors for one source.
pub fn aggregate_channel(
    channel_id: &str,
    source: Source,
    vectors: &[NormalizedCategoryVector],
) -> Result<ChannelCategoryVector, LexiconError> {
    let first = vectors.first().ok_or(LexiconError::EmptyAggregate)?;
    let dim = first.fractions.len();
    let mut sums = vec![0.0; dim];
    for v in vectors {
        if v.fractions.len() != dim {
            return Err(LexiconError::DimensionMismatch(dim, v.fractions.len()));
        }
        for (s, f) in sums.iter_mut().zip(&v.fractions) {
            *s += f;
        }
    }
    let n = vectors.len() as f64;
    Ok(ChannelCategoryVector {
        channel_id: channel_id.to_string(),
        source,
        means: sums.into_iter().map(|s| s / n).collect(),
        videos: vectors.len(),
    })
}

/// Cosine between a video's caption and comments profiles.
pub fn caption_comment_similarity(
    cap: &NormalizedCategoryVector,
    com: &NormalizedCategoryVector,
) -> Result<SimilarityScore, LexiconError> {
    if cap.video_id != com.video_id {
        return Err(LexiconError::VideoMismatch(
            cap.video_id.clone(),
            com.video_id.clone(),
        ));
    }
    if cap.fractions.len() != com.fractions.len() {
        return Err(LexiconError::DimensionMismatch(
            cap.fractions.len(),
            com.fractions.len(),
        ));
    }
    let dot: f64 = cap
        .fractions
        .iter()
        .zip(&com.fractions)
        .map(|(a, b)| a * b)
        .sum();
    let na: f64 = cap.fractions.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = com.fractions.iter().map(|b| b * b).sum::<f64>().sqrt();
    Ok(SimilarityScore {
        video_id: cap.video_id.clone(),
        value: (dot / (na * nb)).clamp(0.0, 1.0),
    })
}

/// One channel's input to [`correlation_table`].
#[derive(Debug, Clone)]
pub struct ChannelObservation {
    pub group: String,
    pub profile: ChannelCategoryVector,
    pub mean_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub category: String,
    pub group: String,
    pub source: Source,
    pub channels: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
    pub diagnostic: Option<String>,
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Correlate each category's channel mean fraction with the channels' mean
/// caption/comments similarity, per (group, source).
///
/// Channels are ordered by id inside each group, so the result does not
/// depend on input order. Groups with fewer than three channels yield rows
/// with no `r` and a diagnostic.
pub fn correlation_table(
    observations: &[ChannelObservation],
    lexicon: &CategoryLexicon,
    permutations: usize,
    seed: u64,
) -> Vec<CorrelationRow> {
    let mut groups: BTreeMap<(&str, Source), Vec<&ChannelObservation>> = BTreeMap::new();
    for obs in observations {
        groups
            .entry((obs.group.as_str(), obs.profile.source))
            .or_default()
            .push(obs);
    }
    let mut rows = Vec::new();
    for ((group, source), mut members) in groups {
        members.sort_by(|a, b| a.profile.channel_id.cmp(&b.profile.channel_id));
        let sims: Vec<f64> = members.iter().map(|m| m.mean_similarity).collect();
        for (ci, category) in lexicon.categories().iter().enumerate() {
            let mut row = CorrelationRow {
                category: category.name.clone(),
                group: group.to_string(),
                source,
                channels: members.len(),
                r: None,
                p: None,
                significant: false,
                diagnostic: None,
            };
            if members.len() < 3 {
                row.diagnostic = Some(format!(
                    "insufficient channels: {} (need at least 3)",
                    members.len()
                ));
                rows.push(row);
                continue;
            }
            let fractions: Vec<f64> = members.iter().map(|m| m.profile.means[ci]).collect();
            let row_seed = seed::derive(seed, &["pearson", group, source.as_str(), &category.name]);
            match stats::pearson_correlation(&fractions, &sims, permutations, row_seed) {
                Ok(c) => {
                    row.r = Some(c.r);
                    row.p = Some(c.p);
                    row.significant = c.p < SIGNIFICANCE_LEVEL;
                }
                Err(e) => row.diagnostic = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn lex(cats: &[(&str, &[&str])]) -> CategoryLexicon {
        CategoryLexicon::new(
            cats.iter()
                .map(|(n, ws)| Category {
                    name: n.to_string(),
                    polarity: Polarity::Negative,
                    words: ws.iter().map(|w| w.to_string()).collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn toks(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|s| s.to_string()).collect()
    }

    fn nv(id: &str, f: &[f64]) -> NormalizedCategoryVector {
        NormalizedCategoryVector {
            video_id: id.into(),
            source: Source::Caption,
            fractions: f.to_vec(),
        }
    }

    #[test]
    fn bundled_lexicon_has_default_categories() {
        let lex = CategoryLexicon::bundled();
        assert_eq!(lex.len(), 20);
        let names = lex.names();
        let expected: Vec<&str> = DEFAULT_CATEGORIES.iter().map(|c| c.0).collect();
        assert_eq!(names, expected);
        let neg = lex
            .categories()
            .iter()
            .filter(|c| c.polarity == Polarity::Negative)
            .count();
        assert_eq!(neg, 15);
        for (cat, (_, _, pol)) in lex.categories().iter().zip(DEFAULT_CATEGORIES.iter()) {
            assert_eq!(cat.polarity, *pol);
        }
    }

    #[test]
    fn count_examples() {
        let l = lex(&[
            ("kill", &["kill"]),
            ("love", &["love"]),
            ("hate", &["hate"]),
        ]);
        let cv = count_categories("v", Source::Caption, &toks(&["kill", "kill", "love"]), &l);
        assert_eq!(cv.counts, [2, 1, 0]);
        assert_eq!(
            count_categories("v", Source::Caption, &[], &l).counts,
            [0, 0, 0]
        );

        let l = lex(&[("anger", &["rage", "fury"]), ("rage", &["rage"])]);
        let cv = count_categories("v", Source::Caption, &toks(&["rage"]), &l);
        assert_eq!(cv.counts, [1, 1]);
    }

    #[test]
    fn normalize_examples() {
        let mk = |c: &[u64]| CategoryVector {
            video_id: "v".into(),
            source: Source::Comments,
            counts: c.to_vec(),
        };
        let n = normalize_vector(&mk(&[2, 1, 0])).unwrap();
        assert_eq!(n.fractions, [2.0 / 3.0, 1.0 / 3.0, 0.0]);
        assert_eq!(
            normalize_vector(&mk(&[5, 0, 0])).unwrap().fractions,
            [1.0, 0.0, 0.0]
        );
        assert!(matches!(
            normalize_vector(&mk(&[0, 0, 0])),
            Err(LexiconError::ZeroSum { .. })
        ));
    }

    #[test]
    fn aggregate_examples() {
        let a = aggregate_channel(
            "c",
            Source::Caption,
            &[nv("a", &[1.0, 0.0]), nv("b", &[0.0, 1.0])],
        )
        .unwrap();
        assert_eq!(a.means, [0.5, 0.5]);
        assert_eq!(a.videos, 2);
        let one = aggregate_channel("c", Source::Caption, &[nv("a", &[0.3, 0.7])]).unwrap();
        assert_eq!(one.means, [0.3, 0.7]);
        let three = aggregate_channel(
            "c",
            Source::Caption,
            &[
                nv("a", &[0.2, 0.8]),
                nv("b", &[0.4, 0.6]),
                nv("c", &[0.6, 0.4]),
            ],
        )
        .unwrap();
        assert!((three.means[0] - 0.4).abs() < 1e-12);
        assert!((three.means[1] - 0.6).abs() < 1e-12);
        assert!(matches!(
            aggregate_channel("c", Source::Caption, &[]),
            Err(LexiconError::EmptyAggregate)
        ));
    }

    #[test]
    fn similarity_examples() {
        let s = caption_comment_similarity(&nv("v", &[0.2, 0.8]), &nv("v", &[0.2, 0.8])).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        let s = caption_comment_similarity(&nv("v", &[1.0, 0.0, 0.0]), &nv("v", &[0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(s.value, 0.0);
        let s = caption_comment_similarity(&nv("v", &[1.0, 0.0]), &nv("v", &[0.5, 0.5])).unwrap();
        assert!((s.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert!(matches!(
            caption_comment_similarity(&nv("v", &[1.0]), &nv("w", &[1.0])),
            Err(LexiconError::VideoMismatch(..))
        ));
    }

    fn profile(id: &str, means: Vec<f64>) -> ChannelCategoryVector {
        ChannelCategoryVector {
            channel_id: id.into(),
            source: Source::Caption,
            means,
            videos: 1,
        }
    }

    #[test]
    fn correlation_table_identity_and_insufficient_groups() {
        let l = lex(&[("violence", &["hit"]), ("love", &["hug"])]);
        let fractions = [0.1, 0.35, 0.2, 0.6];
        let mut obs: Vec<ChannelObservation> = fractions
            .iter()
            .enumerate()
            .map(|(i, &f)| ChannelObservation {
                group: "rightwing".into(),
                profile: profile(&format!("r{i}"), vec![f, 1.0 - f * f]),
                mean_similarity: f,
            })
            .collect();
        obs.push(ChannelObservation {
            group: "baseline".into(),
            profile: profile("b0", vec![0.5, 0.5]),
            mean_similarity: 0.3,
        });
        obs.push(ChannelObservation {
            group: "baseline".into(),
            profile: profile("b1", vec![0.4, 0.6]),
            mean_similarity: 0.4,
        });
        let rows = correlation_table(&obs, &l, 200, 1);
        let violence = rows
            .iter()
            .find(|r| r.group == "rightwing" && r.category == "violence")
            .unwrap();
        assert!((violence.r.unwrap() - 1.0).abs() < 1e-12);
        let base: Vec<_> = rows.iter().filter(|r| r.group == "baseline").collect();
        assert_eq!(base.len(), 2);
        assert!(base.iter().all(|r| r.r.is_none() && r.diagnostic.is_some()));

        // reordering channels does not change anything
        let mut shuffled = obs.clone();
        shuffled.reverse();
        assert_eq!(correlation_table(&shuffled, &l, 200, 1), rows);
    }

    #[test]
    fn correlation_table_matches_direct_formula() {
        let l = lex(&[("a", &["a"]), ("b", &["b"]), ("c", &["c"])]);
        let mut rng = seed::rng(99);
        let obs: Vec<ChannelObservation> = (0..5)
            .map(|i| {
                let raw: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                ChannelObservation {
                    group: "g".into(),
                    profile: profile(&format!("c{i}"), raw.iter().map(|x| x / s).collect()),
                    mean_similarity: rng.gen(),
                }
            })
            .collect();
        let rows = correlation_table(&obs, &l, 100, 4);
        for (ci, row) in rows.iter().enumerate() {
            let xs: Vec<f64> = obs.iter().map(|o| o.profile.means[ci]).collect();
            let ys: Vec<f64> = obs.iter().map(|o| o.mean_similarity).collect();
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
            let direct = cov / (vx * vy).sqrt();
            assert!((row.r.unwrap().abs() - direct.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn lexicon_file_round_trip_and_errors() {
        let l = CategoryLexicon::bundled();
        let again = CategoryLexicon::parse(&l.to_tsv(), Path::new("x")).unwrap();
        assert_eq!(again.categories(), l.categories());
        assert!(matches!(
            CategoryLexicon::parse("a\tnegative\tx\na\tpositive\ty\n", Path::new("x")),
            Err(LexiconError::DuplicateCategory(_))
        ));
        assert!(matches!(
            CategoryLexicon::parse("a\tneutral\tx\n", Path::new("x")),
            Err(LexiconError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            CategoryLexicon::parse("a\tnegative\t\n", Path::new("x")),
            Err(LexiconError::EmptyCategory(_))
        ));
    }

    #[test]
    fn empath_import_selects_and_lemmatizes() {
        let tsv = "hate\thate\thated\tdespise\nlove\tlove\tadore\nother\tx\n";
        let lemmas = LemmaTable::from_pairs([("hated", "hate")]).unwrap();
        let l = CategoryLexicon::import_empath(
            tsv,
            &[
                ("hate", "hate", Polarity::Negative),
                ("love", "love", Polarity::Positive),
            ],
            &lemmas,
        )
        .unwrap();
        assert_eq!(l.len(), 2);
        let hate: Vec<&str> = l.categories()[0].words.iter().map(String::as_str).collect();
        assert_eq!(hate, ["despise", "hate"]);
        assert!(matches!(
            CategoryLexicon::import_empath(tsv, &[("x", "missing", Polarity::Positive)], &lemmas),
            Err(LexiconError::MissingCategory(_))
        ));
    }

    proptest! {
        #[test]
        fn similarity_is_scale_invariant(
            a in proptest::collection::vec(0u64..50, 5),
            b in proptest::collection::vec(0u64..50, 5),
            ka in 1u64..20,
            kb in 1u64..20,
        ) {
            prop_assume!(a.iter().sum::<u64>() > 0 && b.iter().sum::<u64>() > 0);
            let mk = |s: Source, c: Vec<u64>| CategoryVector { video_id: "v".into(), source: s, counts: c };
            let sim = |x: Vec<u64>, y: Vec<u64>| {
                caption_comment_similarity(
                    &normalize_vector(&mk(Source::Caption, x)).unwrap(),
                    &normalize_vector(&mk(Source::Comments, y)).unwrap(),
                ).unwrap().value
            };
            let base = sim(a.clone(), b.clone());
            let scaled = sim(a.iter().map(|x| x * ka).collect(), b.iter().map(|x| x * kb).collect());
            prop_assert!((base - scaled).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn aggregate_commutes_with_permutation(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 1..8),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let vs: Vec<_> = rows.iter().enumerate().map(|(i, r)| nv(&i.to_string(), r)).collect();
            let mut shuffled = vs.clone();
            shuffled.shuffle(&mut seed::rng(seed));
            let a = aggregate_channel("c", Source::Caption, &vs).unwrap();
            let b = aggregate_channel("c", Source::Caption, &shuffled).unwrap();
            for (x, y) in a.means.iter().zip(&b.means) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
