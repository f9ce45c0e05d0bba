//! Corpus ingestion and text cleaning.
//!
//! The cleaning stages are `strip_markup` → `language_filter` →
//! `preprocess_tokens` → `lemmatize`. Each stage is a pure per-document
//! function and is idempotent.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("{path}:{line}: document {video_id} references unknown channel `{channel_id}`")]
    UnknownChannel {
        path: PathBuf,
        line: usize,
        video_id: String,
        channel_id: String,
    },
    #[error("{path}:{line}: duplicate document ({video_id}, {source_kind})")]
    DuplicateDocument {
        path: PathBuf,
        line: usize,
        video_id: String,
        source_kind: Source,
    },
    #[error("{path}:{line}: duplicate channel id `{id}`")]
    DuplicateChannel {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("lemma table has a cycle through `{0}`")]
    LemmaCycle(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Which side of a video a document comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Caption,
    Comments,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Caption, Source::Comments];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Caption => "caption",
            Source::Comments => "comments",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub id: String,
    pub name: String,
    /// Free-form group tag, e.g. `rightwing` or `baseline`.
    pub group: String,
    pub subscriber_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub video_id: String,
    pub channel_id: String,
    pub source: Source,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDocument {
    pub video_id: String,
    pub channel_id: String,
    pub source: Source,
    pub tokens: Vec<String>,
}

impl TokenDocument {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

// ---------------------------------------------------------------------------
// markup

/// Remove HTML tags and URL tokens, replacing each removed span with one
/// space.
///
/// A tag is `<` followed by any run of characters other than `<`/`>` and a
/// closing `>`. A URL token starts at a token boundary with `http://`,
/// `https://` or `www.` and runs to the next whitespace; the single
/// whitespace character that ends it is consumed as well. Removal repeats
/// until no tag or URL remains, so the function is idempotent.
pub fn strip_markup(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = strip_urls(&strip_tags_to_fixpoint(&current));
        if next == current {
            return next;
        }
        current = next;
    }
}

fn strip_tags_to_fixpoint(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = strip_tags_once(&current);
        if next == current {
            return next;
        }
        current = next;
    }
}

fn strip_tags_once(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '<' {
            let close = chars[i + 1..]
                .iter()
                .position(|&c| c == '<' || c == '>')
                .map(|off| i + 1 + off);
            if let Some(j) = close {
                if chars[j] == '>' {
                    out.push(' ');
                    i = j + 1;
                    continue;
                }
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut at_boundary = true;
    while let Some(c) = rest.chars().next() {
        if at_boundary && URL_PREFIXES.iter().any(|p| rest.starts_with(p)) {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let mut skip = end;
            if let Some(ws) = rest[end..].chars().next() {
                skip += ws.len_utf8();
            }
            out.push(' ');
            rest = &rest[skip..];
            at_boundary = true;
            continue;
        }
        out.push(c);
        at_boundary = c.is_whitespace();
        rest = &rest[c.len_utf8()..];
    }
    out
}

// ---------------------------------------------------------------------------
// language identification

/// Probability that a text is written in the target language.
pub trait LanguageScorer {
    fn probability(&self, text: &str) -> f64;
}

impl<F> LanguageScorer for F
where
    F: Fn(&str) -> f64,
{
    fn probability(&self, text: &str) -> f64 {
        self(text)
    }
}

/// Scores English by the share of tokens that are common function words.
///
/// Running English prose has well over a third of its tokens in this list;
/// the share is divided by `saturation` and clamped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct StopwordProfileScorer {
    words: HashSet<&'static str>,
    saturation: f64,
}

const ENGLISH_FUNCTION_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
    "because", "been", "before", "but", "by", "can", "could", "did", "do", "does", "for", "from",
    "had", "has", "have", "he", "her", "here", "him", "his", "how", "i", "if", "in", "into", "is",
    "it", "its", "just", "me", "more", "my", "no", "not", "now", "of", "on", "one", "only", "or",
    "our", "out", "over", "she", "so", "some", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "those", "to", "up", "very", "was", "we", "were", "what",
    "when", "where", "which", "who", "why", "will", "with", "would", "you", "your",
];

impl Default for StopwordProfileScorer {
    fn default() -> Self {
        Self {
            words: ENGLISH_FUNCTION_WORDS.iter().copied().collect(),
            saturation: 0.3,
        }
    }
}

impl StopwordProfileScorer {
    pub fn with_saturation(saturation: f64) -> Self {
        assert!(saturation > 0.0, "saturation must be positive");
        Self {
            saturation,
            ..Self::default()
        }
    }
}

impl LanguageScorer for StopwordProfileScorer {
    fn probability(&self, text: &str) -> f64 {
        let mut total = 0usize;
        let mut hits = 0usize;
        for word in text
            .split(|c: char| !c.is_alphanumeric() && c != '\'')
            .filter(|w| !w.is_empty())
        {
            total += 1;
            if self.words.contains(word.to_lowercase().as_str()) {
                hits += 1;
            }
        }
        if total == 0 {
            return 0.0;
        }
        (hits as f64 / total as f64 / self.saturation).min(1.0)
    }
}

/// Keep the documents whose score reaches `threshold` (inclusive), in order.
pub fn language_filter<S: LanguageScorer + ?Sized>(
    docs: Vec<RawDocument>,
    scorer: &S,
    threshold: f64,
) -> Vec<RawDocument> {
    partition_by_language(docs, scorer, threshold).0
}

/// Like [`language_filter`], but also returns the rejected documents.
pub fn partition_by_language<S: LanguageScorer + ?Sized>(
    docs: Vec<RawDocument>,
    scorer: &S,
    threshold: f64,
) -> (Vec<RawDocument>, Vec<RawDocument>) {
    docs.into_iter()
        .partition(|d| scorer.probability(&d.text) >= threshold)
}

// ---------------------------------------------------------------------------
// tokenization

/// ASCII punctuation and symbols, plus every Unicode punctuation category.
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Lowercase, drop punctuation (joining word halves, so `don't` → `dont`),
/// split on whitespace and drop stopwords.
///
/// Uppercase letters without a lowercase mapping are dropped along with the
/// punctuation.
pub fn preprocess_tokens(text: &str, stoplist: &Stoplist) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .filter(|&c| !is_punctuation(c) && !c.is_uppercase())
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| !stoplist.contains(t))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_lowercase),
        )
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Ok(Self::parse(
            &fs::read_to_string(path).map_err(io_err(path))?,
        ))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

// ---------------------------------------------------------------------------
// lemmatization

/// Surface form → verb lemma.
///
/// Chains (`a → b`, `b → c`) are closed when the table is built so that
/// lemmatizing twice equals lemmatizing once.
#[derive(Debug, Clone, Default)]
pub struct LemmaTable {
    map: HashMap<String, String>,
}

impl LemmaTable {
    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let raw: HashMap<String, String> = pairs
            .into_iter()
            .map(|(a, b)| (a.into(), b.into()))
            .filter(|(a, b)| a != b)
            .collect();
        let mut map = HashMap::with_capacity(raw.len());
        for surface in raw.keys() {
            let mut seen = HashSet::new();
            let mut lemma = surface;
            while let Some(next) = raw.get(lemma) {
                if !seen.insert(lemma.clone()) {
                    return Err(CorpusError::LemmaCycle(surface.clone()));
                }
                lemma = next;
            }
            map.insert(surface.clone(), lemma.clone());
        }
        Ok(Self { map })
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CorpusError> {
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (surface, lemma) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: "expected `surface<TAB>lemma`".into(),
            })?;
            let (surface, lemma) = (surface.trim(), lemma.trim());
            if surface.is_empty() || lemma.is_empty() || lemma.contains('\t') {
                return Err(CorpusError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: "expected `surface<TAB>lemma`".into(),
                });
            }
            pairs.push((surface.to_string(), lemma.to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::parse(&fs::read_to_string(path).map_err(io_err(path))?, path)
    }

    pub fn lemma<'a>(&'a self, token: &'a str) -> &'a str {
        self.map.get(token).map(String::as_str).unwrap_or(token)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn lemmatize(tokens: &[String], table: &LemmaTable) -> Vec<String> {
    tokens.iter().map(|t| table.lemma(t).to_owned()).collect()
}

// ---------------------------------------------------------------------------
// ingestion

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Channel {
        id: String,
        name: String,
        group: String,
        #[serde(default)]
        subscribers: Option<u64>,
    },
    Doc {
        video_id: String,
        channel_id: String,
        source: Source,
        text: String,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub channels: Vec<Channel>,
    pub documents: Vec<RawDocument>,
}

impl Corpus {
    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == id)
    }

    /// Distinct video ids in first-appearance order.
    pub fn video_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.documents
            .iter()
            .filter(|d| seen.insert(d.video_id.as_str()))
            .map(|d| d.video_id.as_str())
            .collect()
    }
}

/// Parse line-delimited JSON: channel records first, then document records.
pub fn parse_corpus(text: &str, path: &Path) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::default();
    let mut channel_ids: HashSet<String> = HashSet::new();
    let mut doc_keys: BTreeMap<(String, Source), usize> = BTreeMap::new();
    let parse_err = |line: usize, message: String| CorpusError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(line).map_err(|e| parse_err(lineno, e.to_string()))?;
        match record {
            Record::Channel {
                id,
                name,
                group,
                subscribers,
            } => {
                if !corpus.documents.is_empty() {
                    return Err(parse_err(
                        lineno,
                        "channel record after document records".into(),
                    ));
                }
                if group.trim().is_empty() {
                    return Err(parse_err(
                        lineno,
                        format!("channel `{id}` has an empty group"),
                    ));
                }
                if !channel_ids.insert(id.clone()) {
                    return Err(CorpusError::DuplicateChannel {
                        path: path.to_path_buf(),
                        line: lineno,
                        id,
                    });
                }
                corpus.channels.push(Channel {
                    id,
                    name,
                    group,
                    subscriber_count: subscribers,
                });
            }
            Record::Doc {
                video_id,
                channel_id,
                source,
                text,
            } => {
                if !channel_ids.contains(&channel_id) {
                    return Err(CorpusError::UnknownChannel {
                        path: path.to_path_buf(),
                        line: lineno,
                        video_id,
                        channel_id,
                    });
                }
                if doc_keys
                    .insert((video_id.clone(), source), lineno)
                    .is_some()
                {
                    return Err(CorpusError::DuplicateDocument {
                        path: path.to_path_buf(),
                        line: lineno,
                        video_id,
                        source_kind: source,
                    });
                }
                corpus.documents.push(RawDocument {
                    video_id,
                    channel_id,
                    source,
                    text,
                });
            }
        }
    }
    Ok(corpus)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    parse_corpus(&fs::read_to_string(path).map_err(io_err(path))?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(id: &str, text: &str) -> RawDocument {
        RawDocument {
            video_id: id.into(),
            channel_id: "c".into(),
            source: Source::Caption,
            text: text.into(),
        }
    }

    #[test]
    fn strip_markup_examples() {
        assert_eq!(
            strip_markup("<b>hi</b> see http://x.com now"),
            " hi  see  now"
        );
        assert_eq!(strip_markup("plain text"), "plain text");
        assert_eq!(strip_markup("<a href='u'>link</a>"), " link ");
        assert_eq!(strip_markup(""), "");
    }

    #[test]
    fn strip_markup_handles_nested_and_prefixed_urls() {
        assert_eq!(strip_markup("<<b>>x"), " x");
        assert_eq!(strip_markup("go www.a.org"), "go  ");
        assert_eq!(strip_markup("https://a https://b"), "  ");
        // not at a token boundary
        assert_eq!(strip_markup("xhttp://a"), "xhttp://a");
        assert_eq!(strip_markup("a < b and c > d"), "a   d");
    }

    #[test]
    fn language_filter_threshold_is_inclusive() {
        let docs = vec![raw("a", "0.80"), raw("b", "0.79"), raw("c", "1")];
        let scorer = |t: &str| t.parse::<f64>().unwrap();
        let kept = language_filter(docs.clone(), &scorer, 0.8);
        let ids: Vec<_> = kept.iter().map(|d| d.video_id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert_eq!(language_filter(docs.clone(), &scorer, 0.0), docs);
        assert!(language_filter(docs, &scorer, 1.01).is_empty());
    }

    #[test]
    fn stopword_profile_separates_english() {
        let scorer = StopwordProfileScorer::default();
        let en = "the people in this video are talking about what they want to do with the country";
        let es = "la gente en este video habla de lo que quieren hacer con el pais";
        assert!(scorer.probability(en) >= 0.8);
        assert!(scorer.probability(es) < 0.8);
        assert_eq!(scorer.probability(""), 0.0);
    }

    #[test]
    fn preprocess_examples() {
        let empty = Stoplist::default();
        assert_eq!(
            preprocess_tokens("Hello,   World!", &empty),
            ["hello", "world"]
        );
        assert_eq!(
            preprocess_tokens("the cat", &Stoplist::new(["the"])),
            ["cat"]
        );
        assert!(preprocess_tokens("", &empty).is_empty());
        assert_eq!(preprocess_tokens("Don't «stop»", &empty), ["dont", "stop"]);
        assert!(preprocess_tokens(" -- ... ", &empty).is_empty());
    }

    #[test]
    fn lemmatize_examples() {
        let table =
            LemmaTable::from_pairs([("cats", "cat"), ("running", "run"), ("ran", "run")]).unwrap();
        assert_eq!(lemmatize(&["cats".into()], &table), ["cat"]);
        assert_eq!(lemmatize(&["running".into()], &table), ["run"]);
        assert_eq!(lemmatize(&["zzyx".into()], &table), ["zzyx"]);
    }

    #[test]
    fn lemma_chains_are_closed_and_cycles_rejected() {
        let table = LemmaTable::from_pairs([("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(table.lemma("a"), "c");
        assert!(matches!(
            LemmaTable::from_pairs([("a", "b"), ("b", "a")]),
            Err(CorpusError::LemmaCycle(_))
        ));
    }

    #[test]
    fn lemma_file_parsing() {
        let p = Path::new("lemmas.tsv");
        let table = LemmaTable::parse("cats\tcat\n\nwent\tgo\n", p).unwrap();
        assert_eq!(table.len(), 2);
        let err = LemmaTable::parse("cats cat\n", p).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
    }

    const CORPUS: &str = r#"{"type":"channel","id":"c1","name":"One","group":"rightwing","subscribers":10}
{"type":"channel","id":"c2","name":"Two","group":"baseline"}
{"type":"doc","video_id":"v1","channel_id":"c1","source":"caption","text":"a"}
{"type":"doc","video_id":"v1","channel_id":"c1","source":"comments","text":"b"}
{"type":"doc","video_id":"v2","channel_id":"c2","source":"caption","text":"c"}
{"type":"doc","video_id":"v2","channel_id":"c2","source":"comments","text":"d"}
"#;

    #[test]
    fn load_well_formed_corpus() {
        let corpus = parse_corpus(CORPUS, Path::new("x.jsonl")).unwrap();
        assert_eq!(corpus.channels.len(), 2);
        assert_eq!(corpus.documents.len(), 4);
        assert_eq!(corpus.channels[0].subscriber_count, Some(10));
        assert_eq!(corpus.channels[1].subscriber_count, None);
        assert_eq!(corpus.video_ids(), ["v1", "v2"]);
    }

    #[test]
    fn load_rejects_unknown_channel() {
        let text = format!(
            "{CORPUS}{}\n",
            r#"{"type":"doc","video_id":"v3","channel_id":"zz","source":"caption","text":"e"}"#
        );
        match parse_corpus(&text, Path::new("x")) {
            Err(CorpusError::UnknownChannel {
                channel_id, line, ..
            }) => {
                assert_eq!(channel_id, "zz");
                assert_eq!(line, 7);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_document() {
        let text = format!(
            "{CORPUS}{}\n",
            r#"{"type":"doc","video_id":"v1","channel_id":"c1","source":"caption","text":"e"}"#
        );
        assert!(matches!(
            parse_corpus(&text, Path::new("x")),
            Err(CorpusError::DuplicateDocument { line: 7, .. })
        ));
    }

    #[test]
    fn load_reports_line_of_malformed_record() {
        let text =
            "{\"type\":\"channel\",\"id\":\"c1\",\"name\":\"n\",\"group\":\"g\"}\n{not json\n";
        assert!(matches!(
            parse_corpus(text, Path::new("x")),
            Err(CorpusError::Parse { line: 2, .. })
        ));
        let late = format!(
            "{CORPUS}{}\n",
            r#"{"type":"channel","id":"c9","name":"n","group":"g"}"#
        );
        assert!(matches!(
            parse_corpus(&late, Path::new("x")),
            Err(CorpusError::Parse { line: 7, .. })
        ));
    }

    proptest! {
        #[test]
        fn strip_markup_is_idempotent(s in "[a-z <>/:.w\\thps]{0,40}") {
            let once = strip_markup(&s);
            prop_assert_eq!(strip_markup(&once), once);
        }

        #[test]
        fn preprocess_is_idempotent_and_retokenizes(s in "\\PC{0,60}") {
            let stop = Stoplist::new(["the", "a"]);
            let tokens = preprocess_tokens(&s, &stop);
            for t in &tokens {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(|c| c.is_whitespace() || c.is_uppercase()));
            }
            prop_assert_eq!(preprocess_tokens(&tokens.join(" "), &stop), tokens);
        }

        #[test]
        fn lemmatize_is_idempotent(words in proptest::collection::vec("[a-d]", 0..10)) {
            let table = LemmaTable::from_pairs([("a", "b"), ("b", "c"), ("d", "c")]).unwrap();
            let tokens: Vec<String> = words;
            let once = lemmatize(&tokens, &table);
            prop_assert_eq!(once.len(), tokens.len());
            prop_assert_eq!(lemmatize(&once, &table), once);
        }
    }
}
