//! Skip-gram word embeddings trained with negative sampling.
//!
//! Single-worker training is a pure function of the corpus and the config.
//! The multi-worker mode shares the weight matrices between threads without
//! synchronization (relaxed atomics) and is not reproducible.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::seed;

pub const BINARY_MAGIC: &[u8; 4] = b"EMB1";

/// Learning rate floor as a fraction of the initial rate.
const MIN_LR_FRACTION: f32 = 1e-4;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid embedding configuration: {0}")]
    InvalidConfig(String),
    #[error("no word reaches min_count = {0}")]
    EmptyVocabulary(usize),
    #[error("training produced non-finite weights in epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("out of vocabulary: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error("not an EMB1 model file (found magic {0:?})")]
    VersionMismatch(Vec<u8>),
    #[error("model file is truncated")]
    Truncated,
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SgnsConfig {
    pub dim: usize,
    /// Maximum context radius; each center word draws its radius uniformly
    /// from `1..=window`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    pub min_count: usize,
    pub seed: u64,
    /// `1` trains deterministically; more workers train concurrently
    /// without locks.
    pub workers: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 2,
            seed: 0,
            workers: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub config: SgnsConfig,
    vocabulary: Vec<VocabEntry>,
    index: HashMap<String, usize>,
    input: Vec<f32>,
    output: Vec<f32>,
}

impl PartialEq for EmbeddingModel {
    fn eq(&self, other: &Self) -> bool {
        self.config.dim == other.config.dim
            && self.vocabulary == other.vocabulary
            && bits(&self.input) == bits(&other.input)
            && bits(&self.output) == bits(&other.output)
    }
}

fn bits(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

impl EmbeddingModel {
    fn from_parts(
        config: SgnsConfig,
        vocabulary: Vec<VocabEntry>,
        input: Vec<f32>,
        output: Vec<f32>,
    ) -> Self {
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i))
            .collect();
        Self {
            config,
            vocabulary,
            index,
            input,
            output,
        }
    }

    /// Build a model from explicit word vectors (output vectors zero).
    pub fn from_vectors<I, S>(words_and_vectors: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut vocabulary = Vec::new();
        let mut input = Vec::new();
        let mut dim = None;
        for (word, vector) in words_and_vectors {
            let d = *dim.get_or_insert(vector.len());
            if d == 0 || vector.len() != d {
                return Err(EmbeddingError::InvalidConfig(
                    "vectors must share one nonzero dimension".into(),
                ));
            }
            vocabulary.push(VocabEntry {
                word: word.into(),
                count: 0,
            });
            input.extend(vector);
        }
        let dim = dim.ok_or(EmbeddingError::EmptyVocabulary(0))?;
        let output = vec![0.0; input.len()];
        let model = Self::from_parts(
            SgnsConfig {
                dim,
                ..SgnsConfig::default()
            },
            vocabulary,
            input,
            output,
        );
        if model.index.len() != model.vocabulary.len() {
            return Err(EmbeddingError::InvalidConfig("duplicate word".into()));
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn vocabulary(&self) -> &[VocabEntry] {
        &self.vocabulary
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        let d = self.dim();
        self.index
            .get(word)
            .map(|&i| &self.input[i * d..(i + 1) * d])
    }

    pub fn output_vector(&self, word: &str) -> Option<&[f32]> {
        let d = self.dim();
        self.index
            .get(word)
            .map(|&i| &self.output[i * d..(i + 1) * d])
    }

    pub fn all_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }

    /// Apply `f` to every input vector (used to test invariances).
    pub fn map_vectors(&self, mut f: impl FnMut(&[f32]) -> Vec<f32>) -> Self {
        let d = self.dim();
        let input: Vec<f32> = self.input.chunks(d).flat_map(&mut f).collect();
        assert_eq!(
            input.len(),
            self.input.len(),
            "mapped vectors changed dimension"
        );
        Self {
            input,
            ..self.clone()
        }
    }

    /// Cosine of the angle between two words' input vectors.
    pub fn cosine(&self, w1: &str, w2: &str) -> Result<f64, EmbeddingError> {
        let missing: Vec<String> = [w1, w2]
            .iter()
            .filter(|w| !self.contains(w))
            .map(|w| w.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(EmbeddingError::OutOfVocabulary(missing));
        }
        Ok(cosine(self.vector(w1).unwrap(), self.vector(w2).unwrap()))
    }
}

/// Cosine with `f64` accumulation.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

// ---------------------------------------------------------------------------
// training

fn count_words(corpus: &[Vec<String>]) -> BTreeMap<&str, u64> {
    let mut counts = BTreeMap::new();
    for sentence in corpus {
        for w in sentence {
            *counts.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

/// Most frequent first, ties by word.
fn sorted_entries(counts: impl IntoIterator<Item = (String, u64)>) -> Vec<VocabEntry> {
    let mut entries: Vec<VocabEntry> = counts
        .into_iter()
        .map(|(word, count)| VocabEntry { word, count })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    entries
}

fn init_input(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Vec<f32> {
    let half = 0.5 / dim as f32;
    (0..rows * dim)
        .map(|_| rng.gen_range(-half..half))
        .collect()
}

/// Negative-sampling distribution: word `i` drawn with weight
/// `count_i^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    words: Vec<usize>,
    dist: WeightedIndex<f64>,
}

impl NegativeSampler {
    /// `counts` pairs vocabulary indices with their corpus counts.
    pub fn new(counts: &[(usize, u64)]) -> Option<Self> {
        let (words, weights): (Vec<usize>, Vec<f64>) = counts
            .iter()
            .filter(|(_, c)| *c > 0)
            .map(|&(w, c)| (w, (c as f64).powf(0.75)))
            .unzip();
        let dist = WeightedIndex::new(&weights).ok()?;
        Some(Self { words, dist })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.words[self.dist.sample(rng)]
    }
}

/// Row-addressable weight storage for the SGD kernel.
trait Rows {
    fn load(&self, row: usize, buf: &mut [f32]);
    fn add(&mut self, row: usize, delta: &[f32]);
}

struct PlainRows<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl Rows for PlainRows<'_> {
    fn load(&self, row: usize, buf: &mut [f32]) {
        buf.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn add(&mut self, row: usize, delta: &[f32]) {
        for (x, d) in self.data[row * self.dim..(row + 1) * self.dim]
            .iter_mut()
            .zip(delta)
        {
            *x += d;
        }
    }
}

struct SharedRows<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl Rows for SharedRows<'_> {
    fn load(&self, row: usize, buf: &mut [f32]) {
        for (b, a) in buf
            .iter_mut()
            .zip(&self.data[row * self.dim..(row + 1) * self.dim])
        {
            *b = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add(&mut self, row: usize, delta: &[f32]) {
        for (a, d) in self.data[row * self.dim..(row + 1) * self.dim]
            .iter()
            .zip(delta)
        {
            let v = f32::from_bits(a.load(Ordering::Relaxed)) + d;
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x.clamp(-30.0, 30.0)).exp())
}

struct Scratch {
    hidden: Vec<f32>,
    out: Vec<f32>,
    grad_hidden: Vec<f32>,
    grad_out: Vec<f32>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            hidden: vec![0.0; dim],
            out: vec![0.0; dim],
            grad_hidden: vec![0.0; dim],
            grad_out: vec![0.0; dim],
        }
    }
}

/// One (center, context) update with `negatives` sampled noise words.
#[allow(clippy::too_many_arguments)]
fn train_pair<I: Rows, O: Rows, R: Rng>(
    input: &mut I,
    output: &mut O,
    center: usize,
    context: usize,
    negatives: usize,
    sampler: &NegativeSampler,
    lr: f32,
    rng: &mut R,
    s: &mut Scratch,
) {
    input.load(center, &mut s.hidden);
    s.grad_hidden.iter_mut().for_each(|g| *g = 0.0);
    for n in 0..=negatives {
        let (target, label) = if n == 0 {
            (context, 1.0)
        } else {
            let t = sampler.sample(rng);
            if t == context {
                continue;
            }
            (t, 0.0)
        };
        output.load(target, &mut s.out);
        let f: f32 = s.hidden.iter().zip(&s.out).map(|(a, b)| a * b).sum();
        let g = (label - sigmoid(f)) * lr;
        for ((gh, gout), (&h, &o)) in s
            .grad_hidden
            .iter_mut()
            .zip(s.grad_out.iter_mut())
            .zip(s.hidden.iter().zip(&s.out))
        {
            *gh += g * o;
            *gout = g * h;
        }
        output.add(target, &s.grad_out);
    }
    input.add(center, &s.grad_hidden);
}

struct Schedule {
    initial: f32,
    total: usize,
}

impl Schedule {
    fn rate(&self, processed: usize) -> f32 {
        let progress = processed as f32 / (self.total + 1) as f32;
        self.initial * (1.0 - progress).max(MIN_LR_FRACTION)
    }
}

/// Sentences as vocabulary indices; unknown words dropped.
fn encode(corpus: &[Vec<String>], index: &HashMap<String, usize>) -> Vec<Vec<usize>> {
    corpus
        .iter()
        .map(|s| {
            s.iter()
                .filter_map(|w| index.get(w).copied())
                .collect::<Vec<_>>()
        })
        .filter(|s| s.len() > 1)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn train_sentences<I: Rows, O: Rows>(
    sentences: &[Vec<usize>],
    input: &mut I,
    output: &mut O,
    config: &SgnsConfig,
    sampler: &NegativeSampler,
    schedule: &Schedule,
    processed: &AtomicUsize,
    rng: &mut ChaCha8Rng,
) {
    let mut scratch = Scratch::new(config.dim);
    for sentence in sentences {
        for (i, &center) in sentence.iter().enumerate() {
            let lr = schedule.rate(processed.fetch_add(1, Ordering::Relaxed));
            let radius = rng.gen_range(1..=config.window);
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(sentence.len() - 1);
            for (j, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                train_pair(
                    input,
                    output,
                    center,
                    context,
                    config.negatives,
                    sampler,
                    lr,
                    rng,
                    &mut scratch,
                );
            }
        }
    }
}

/// Run `config.epochs` passes of SGD over `sentences`, in place.
fn run_epochs(
    model: &mut EmbeddingModel,
    sentences: &[Vec<usize>],
    sampler: &NegativeSampler,
) -> Result<(), EmbeddingError> {
    let config = model.config.clone();
    let tokens: usize = sentences.iter().map(Vec::len).sum();
    let schedule = Schedule {
        initial: config.learning_rate,
        total: tokens * config.epochs,
    };
    let processed = AtomicUsize::new(0);
    let dim = config.dim;

    if config.workers <= 1 {
        let mut rng = seed::rng(seed::derive(config.seed, &["sgns", "train"]));
        for epoch in 0..config.epochs {
            let mut input = PlainRows {
                data: &mut model.input,
                dim,
            };
            let mut output = PlainRows {
                data: &mut model.output,
                dim,
            };
            train_sentences(
                sentences,
                &mut input,
                &mut output,
                &config,
                sampler,
                &schedule,
                &processed,
                &mut rng,
            );
            if !model.all_finite() {
                return Err(EmbeddingError::NonFinite { epoch });
            }
        }
        return Ok(());
    }

    let to_atomic =
        |v: &[f32]| -> Vec<AtomicU32> { v.iter().map(|x| AtomicU32::new(x.to_bits())).collect() };
    let shared_in = to_atomic(&model.input);
    let shared_out = to_atomic(&model.output);
    let chunk = sentences.len().div_ceil(config.workers).max(1);
    for epoch in 0..config.epochs {
        std::thread::scope(|scope| {
            for (worker, shard) in sentences.chunks(chunk).enumerate() {
                let (shared_in, shared_out) = (&shared_in, &shared_out);
                let (config, sampler, schedule, processed) =
                    (&config, sampler, &schedule, &processed);
                scope.spawn(move || {
                    let mut rng = seed::rng(seed::derive(
                        config.seed,
                        &["sgns", "worker", &epoch.to_string(), &worker.to_string()],
                    ));
                    let mut input = SharedRows {
                        data: shared_in,
                        dim,
                    };
                    let mut output = SharedRows {
                        data: shared_out,
                        dim,
                    };
                    train_sentences(
                        shard,
                        &mut input,
                        &mut output,
                        config,
                        sampler,
                        schedule,
                        processed,
                        &mut rng,
                    );
                });
            }
        });
        model.input = shared_in
            .iter()
            .map(|a| f32::from_bits(a.load(Ordering::Relaxed)))
            .collect();
        model.output = shared_out
            .iter()
            .map(|a| f32::from_bits(a.load(Ordering::Relaxed)))
            .collect();
        if !model.all_finite() {
            return Err(EmbeddingError::NonFinite { epoch });
        }
    }
    Ok(())
}

/// Train skip-gram embeddings from scratch.
pub fn train_sgns(
    corpus: &[Vec<String>],
    config: &SgnsConfig,
) -> Result<EmbeddingModel, EmbeddingError> {
    config.validate()?;
    let counts = count_words(corpus);
    let vocabulary = sorted_entries(
        counts
            .iter()
            .filter(|(_, &c)| c as usize >= config.min_count)
            .map(|(w, &c)| (w.to_string(), c)),
    );
    if vocabulary.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary(config.min_count));
    }
    let mut init_rng = seed::rng(seed::derive(config.seed, &["sgns", "init"]));
    let input = init_input(&mut init_rng, vocabulary.len(), config.dim);
    let output = vec![0.0; input.len()];
    let mut model = EmbeddingModel::from_parts(config.clone(), vocabulary, input, output);

    let weights: Vec<(usize, u64)> = model
        .vocabulary
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e.count))
        .collect();
    let sampler = NegativeSampler::new(&weights).expect("vocabulary has positive counts");
    let sentences = encode(corpus, &model.index);
    run_epochs(&mut model, &sentences, &sampler)?;
    Ok(model)
}

/// Continue training a base model on a domain corpus.
///
/// The vocabulary becomes the base vocabulary followed by new words that
/// reach the base `min_count`. Only words that occur in `corpus` are
/// updated, and negatives are drawn from the corpus words only, so every
/// other row keeps its base values exactly.
pub fn fine_tune(
    base: &EmbeddingModel,
    corpus: &[Vec<String>],
    epochs: usize,
    seed: u64,
) -> Result<EmbeddingModel, EmbeddingError> {
    let counts = count_words(corpus);
    if counts.is_empty() {
        return Ok(base.clone());
    }
    let config = SgnsConfig {
        epochs,
        seed,
        ..base.config.clone()
    };
    config.validate()?;
    let dim = config.dim;

    let mut vocabulary = base.vocabulary.clone();
    for entry in &mut vocabulary {
        entry.count += counts.get(entry.word.as_str()).copied().unwrap_or(0);
    }
    let new_words = sorted_entries(
        counts
            .iter()
            .filter(|(w, &c)| c as usize >= config.min_count && !base.contains(w))
            .map(|(w, &c)| (w.to_string(), c)),
    );
    let mut init_rng = seed::rng(seed::derive(seed, &["sgns", "fine-tune-init"]));
    let mut input = base.input.clone();
    input.extend(init_input(&mut init_rng, new_words.len(), dim));
    let mut output = base.output.clone();
    output.extend(std::iter::repeat_n(0.0, new_words.len() * dim));
    vocabulary.extend(new_words);
    let mut model = EmbeddingModel::from_parts(config, vocabulary, input, output);

    let weights: Vec<(usize, u64)> = counts
        .iter()
        .filter_map(|(w, &c)| model.index.get(*w).map(|&i| (i, c)))
        .collect();
    let Some(sampler) = NegativeSampler::new(&weights) else {
        return Ok(model);
    };
    let sentences = encode(corpus, &model.index);
    run_epochs(&mut model, &sentences, &sampler)?;
    Ok(model)
}

// ---------------------------------------------------------------------------
// model files

/// `EMB1`, dim and vocabulary size as little-endian `u32`, then per word a
/// `u32` byte length, the UTF-8 bytes, a `u64` count, and `dim` input then
/// `dim` output `f32` values, all little-endian.
pub fn write_binary<W: Write>(model: &EmbeddingModel, mut out: W) -> io::Result<()> {
    let dim = model.dim();
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(dim as u32).to_le_bytes())?;
    out.write_all(&(model.len() as u32).to_le_bytes())?;
    for (i, entry) in model.vocabulary.iter().enumerate() {
        out.write_all(&(entry.word.len() as u32).to_le_bytes())?;
        out.write_all(entry.word.as_bytes())?;
        out.write_all(&entry.count.to_le_bytes())?;
        for x in &model.input[i * dim..(i + 1) * dim] {
            out.write_all(&x.to_le_bytes())?;
        }
        for x in &model.output[i * dim..(i + 1) * dim] {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<(), EmbeddingError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => EmbeddingError::Truncated,
        _ => EmbeddingError::Io(e),
    })
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, EmbeddingError> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(input: &mut R, n: usize, into: &mut Vec<f32>) -> Result<(), EmbeddingError> {
    let mut buf = vec![0u8; n * 4];
    read_exact(input, &mut buf)?;
    into.extend(
        buf.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
    );
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<EmbeddingModel, EmbeddingError> {
    let mut magic = [0u8; 4];
    read_exact(&mut input, &mut magic).map_err(|e| match e {
        EmbeddingError::Truncated => EmbeddingError::VersionMismatch(Vec::new()),
        e => e,
    })?;
    if &magic != BINARY_MAGIC {
        return Err(EmbeddingError::VersionMismatch(magic.to_vec()));
    }
    let dim = read_u32(&mut input)? as usize;
    let len = read_u32(&mut input)? as usize;
    if dim == 0 {
        return Err(EmbeddingError::Format {
            line: 0,
            message: "dimension is zero".into(),
        });
    }
    let mut vocabulary = Vec::with_capacity(len.min(1 << 20));
    let mut in_vecs = Vec::new();
    let mut out_vecs = Vec::new();
    for _ in 0..len {
        let wlen = read_u32(&mut input)? as usize;
        let mut wbuf = vec![0u8; wlen];
        read_exact(&mut input, &mut wbuf)?;
        let word = String::from_utf8(wbuf).map_err(|e| EmbeddingError::Format {
            line: 0,
            message: e.to_string(),
        })?;
        let mut cbuf = [0u8; 8];
        read_exact(&mut input, &mut cbuf)?;
        vocabulary.push(VocabEntry {
            word,
            count: u64::from_le_bytes(cbuf),
        });
        read_f32s(&mut input, dim, &mut in_vecs)?;
        read_f32s(&mut input, dim, &mut out_vecs)?;
    }
    Ok(EmbeddingModel::from_parts(
        SgnsConfig {
            dim,
            ..SgnsConfig::default()
        },
        vocabulary,
        in_vecs,
        out_vecs,
    ))
}

/// `|V| dim` header, then `word v1 ... vdim` per line (input vectors).
pub fn write_text<W: Write>(model: &EmbeddingModel, mut out: W) -> io::Result<()> {
    let dim = model.dim();
    writeln!(out, "{} {}", model.len(), dim)?;
    for (i, entry) in model.vocabulary.iter().enumerate() {
        write!(out, "{}", entry.word)?;
        for x in &model.input[i * dim..(i + 1) * dim] {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Read the text format. Counts are not stored in it and come back as zero;
/// output vectors come back as zero.
pub fn read_text<R: BufRead>(input: R) -> Result<EmbeddingModel, EmbeddingError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(EmbeddingError::Truncated)??;
    let fmt = |line: usize, message: String| EmbeddingError::Format { line, message };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(fmt(1, "expected `|V| dim` header".into()));
    }
    let len: usize = fields[0]
        .parse()
        .map_err(|_| fmt(1, "bad vocabulary size".into()))?;
    let dim: usize = fields[1]
        .parse()
        .map_err(|_| fmt(1, "bad dimension".into()))?;
    let mut entries = Vec::with_capacity(len.min(1 << 20));
    for i in 0..len {
        let line = lines.next().ok_or(EmbeddingError::Truncated)??;
        let mut parts = line.split(' ');
        let word = parts.next().unwrap_or_default().to_string();
        let vector: Vec<f32> = parts
            .map(|s| s.parse::<f32>().map_err(|e| fmt(i + 2, e.to_string())))
            .collect::<Result<_, _>>()?;
        if vector.len() != dim {
            return Err(fmt(
                i + 2,
                format!("expected {dim} values, found {}", vector.len()),
            ));
        }
        entries.push((word, vector));
    }
    EmbeddingModel::from_vectors(entries)
}

pub fn save_binary(model: &EmbeddingModel, path: &Path) -> io::Result<()> {
    write_binary(model, io::BufWriter::new(fs::File::create(path)?))
}

pub fn load_binary(path: &Path) -> Result<EmbeddingModel, EmbeddingError> {
    read_binary(BufReader::new(fs::File::open(path)?))
}

pub fn load_text(path: &Path) -> Result<EmbeddingModel, EmbeddingError> {
    read_text(BufReader::new(fs::File::open(path)?))
}

/// Load either format, deciding by the magic bytes.
pub fn load_any(path: &Path) -> Result<EmbeddingModel, EmbeddingError> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        read_binary(bytes.as_slice())
    } else {
        read_text(bytes.as_slice())
    }
}
