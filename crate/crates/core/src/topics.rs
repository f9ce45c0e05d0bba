//! LDA topic models fit by collapsed Gibbs sampling.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead, Write};

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Source, TokenDocument};
use crate::seed;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("invalid LDA configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("document {video_id} ({source_kind}) has no tokens")]
    EmptyDocument {
        video_id: String,
        source_kind: Source,
    },
    #[error("document {0} has no in-vocabulary tokens")]
    AllOutOfVocabulary(String),
    #[error("topic {topic} out of range (k = {k})")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Full Gibbs sweeps over the corpus.
    pub iterations: usize,
    pub token_cap: usize,
    pub seed: u64,
    /// Document shards sampled concurrently per sweep. `1` is the exact
    /// sequential sampler; larger values use approximate distributed
    /// sampling with merged counts, which gives different (still seeded)
    /// results.
    pub workers: usize,
}

impl LdaConfig {
    /// Symmetric priors `alpha = beta = 1/k`, 500 sweeps, 2,000-token cap.
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            alpha: 1.0 / k as f64,
            beta: 1.0 / k as f64,
            iterations: 500,
            token_cap: 2000,
            seed,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        let bad = |m: &str| Err(TopicError::InvalidConfig(m.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.token_cap == 0 {
            return bad("token_cap must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::new(300, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub vocabulary: Vec<String>,
    /// `k` rows of `|V|` word probabilities.
    pub topic_word: Vec<Vec<f64>>,
    /// One topic distribution per training document, in training order.
    /// Empty for models read back from disk.
    pub doc_topic: Vec<Vec<f64>>,
}

/// Keep at most `cap` tokens, chosen uniformly without replacement and kept
/// in their original order.
pub fn subsample_tokens(doc: &TokenDocument, cap: usize, seed: u64) -> TokenDocument {
    assert!(cap >= 1, "cap must be at least 1");
    if doc.tokens.len() <= cap {
        return doc.clone();
    }
    let mut rng = seed::rng(seed);
    let mut picked = index::sample(&mut rng, doc.tokens.len(), cap).into_vec();
    picked.sort_unstable();
    TokenDocument {
        tokens: picked.into_iter().map(|i| doc.tokens[i].clone()).collect(),
        ..doc.clone()
    }
}

/// Seed for subsampling one document: derived from the global seed and the
/// document identity, never its position.
pub fn subsample_seed(global: u64, doc: &TokenDocument) -> u64 {
    seed::derive(global, &["subsample", &doc.video_id, doc.source.as_str()])
}

/// Collapsed Gibbs sampler state.
pub struct LdaSampler {
    config: LdaConfig,
    vocabulary: Vec<String>,
    docs: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
    rng: ChaCha8Rng,
    sweeps: usize,
}

impl LdaSampler {
    /// Subsample every document, build the vocabulary and draw the initial
    /// random assignment.
    pub fn new(docs: &[TokenDocument], config: &LdaConfig) -> Result<Self, TopicError> {
        config.validate()?;
        if docs.is_empty() {
            return Err(TopicError::EmptyCorpus);
        }
        let docs: Vec<TokenDocument> = docs
            .iter()
            .map(|d| subsample_tokens(d, config.token_cap, subsample_seed(config.seed, d)))
            .collect();
        if let Some(d) = docs.iter().find(|d| d.is_empty()) {
            return Err(TopicError::EmptyDocument {
                video_id: d.video_id.clone(),
                source_kind: d.source,
            });
        }
        let vocabulary: Vec<String> = docs
            .iter()
            .flat_map(|d| d.tokens.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ids: HashMap<&str, u32> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i as u32))
            .collect();
        let docs: Vec<Vec<u32>> = docs
            .iter()
            .map(|d| d.tokens.iter().map(|t| ids[t.as_str()]).collect())
            .collect();

        let k = config.k;
        let v = vocabulary.len();
        let mut rng = seed::rng(seed::derive(config.seed, &["lda", "init"]));
        let mut doc_topic = vec![0u32; docs.len() * k];
        let mut topic_word = vec![0u32; k * v];
        let mut topic_totals = vec![0u32; k];
        let mut assignments = Vec::with_capacity(docs.len());
        for (d, words) in docs.iter().enumerate() {
            let z: Vec<u32> = words.iter().map(|_| rng.gen_range(0..k as u32)).collect();
            for (&w, &t) in words.iter().zip(&z) {
                doc_topic[d * k + t as usize] += 1;
                topic_word[t as usize * v + w as usize] += 1;
                topic_totals[t as usize] += 1;
            }
            assignments.push(z);
        }
        Ok(Self {
            rng: seed::rng(seed::derive(config.seed, &["lda", "sweeps"])),
            config: config.clone(),
            vocabulary,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_totals,
            sweeps: 0,
        })
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    /// One full pass resampling every token's topic.
    pub fn sweep(&mut self) {
        if self.config.workers > 1 {
            self.sweep_sharded();
        } else {
            let k = self.config.k;
            let v = self.vocabulary.len();
            let mut weights = vec![0.0f64; k];
            for d in 0..self.docs.len() {
                let dt = &mut self.doc_topic[d * k..(d + 1) * k];
                sample_document(
                    &self.docs[d],
                    &mut self.assignments[d],
                    dt,
                    &mut self.topic_word,
                    &mut self.topic_totals,
                    &mut weights,
                    &self.config,
                    v,
                    &mut self.rng,
                );
            }
        }
        self.sweeps += 1;
    }

    fn sweep_sharded(&mut self) {
        let k = self.config.k;
        let v = self.vocabulary.len();
        let workers = self.config.workers.min(self.docs.len());
        let chunk = self.docs.len().div_ceil(workers);
        let sweep = self.sweeps.to_string();
        let config = &self.config;
        let global_tw = &self.topic_word;
        let global_tt = &self.topic_totals;

        let deltas: Vec<(Vec<i64>, Vec<i64>)> = self
            .docs
            .par_chunks(chunk)
            .zip(self.assignments.par_chunks_mut(chunk))
            .zip(self.doc_topic.par_chunks_mut(chunk * k))
            .enumerate()
            .map(|(shard, ((docs, assignments), doc_topic))| {
                let mut tw = global_tw.clone();
                let mut tt = global_tt.clone();
                let mut rng = seed::rng(seed::derive(
                    config.seed,
                    &["lda", "shard", &sweep, &shard.to_string()],
                ));
                let mut weights = vec![0.0f64; k];
                for (i, words) in docs.iter().enumerate() {
                    sample_document(
                        words,
                        &mut assignments[i],
                        &mut doc_topic[i * k..(i + 1) * k],
                        &mut tw,
                        &mut tt,
                        &mut weights,
                        config,
                        v,
                        &mut rng,
                    );
                }
                let dtw = tw
                    .iter()
                    .zip(global_tw)
                    .map(|(&a, &b)| a as i64 - b as i64)
                    .collect();
                let dtt = tt
                    .iter()
                    .zip(global_tt)
                    .map(|(&a, &b)| a as i64 - b as i64)
                    .collect();
                (dtw, dtt)
            })
            .collect();
        for (dtw, dtt) in deltas {
            for (c, d) in self.topic_word.iter_mut().zip(dtw) {
                *c = (*c as i64 + d) as u32;
            }
            for (c, d) in self.topic_totals.iter_mut().zip(dtt) {
                *c = (*c as i64 + d) as u32;
            }
        }
    }

    /// Check `Σ_t n(d,t) = len(d)`, `Σ_w n(t,w) = n(t)` and that the count
    /// tables agree with the current assignments.
    pub fn check_counts(&self) -> Result<(), String> {
        let k = self.config.k;
        let v = self.vocabulary.len();
        for (d, words) in self.docs.iter().enumerate() {
            let row = &self.doc_topic[d * k..(d + 1) * k];
            let sum: u64 = row.iter().map(|&c| c as u64).sum();
            if sum != words.len() as u64 {
                return Err(format!(
                    "doc {d}: topic counts sum to {sum}, length {}",
                    words.len()
                ));
            }
        }
        for t in 0..k {
            let sum: u64 = self.topic_word[t * v..(t + 1) * v]
                .iter()
                .map(|&c| c as u64)
                .sum();
            if sum != self.topic_totals[t] as u64 {
                return Err(format!(
                    "topic {t}: word counts sum to {sum}, total {}",
                    self.topic_totals[t]
                ));
            }
        }
        let mut tw = vec![0u32; k * v];
        for (words, z) in self.docs.iter().zip(&self.assignments) {
            for (&w, &t) in words.iter().zip(z) {
                tw[t as usize * v + w as usize] += 1;
            }
        }
        if tw != self.topic_word {
            return Err("topic-word counts disagree with assignments".into());
        }
        Ok(())
    }

    /// Read the smoothed distributions off the current counts.
    pub fn into_model(self) -> TopicModel {
        let k = self.config.k;
        let v = self.vocabulary.len();
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let topic_word = (0..k)
            .map(|t| {
                let denom = self.topic_totals[t] as f64 + v as f64 * beta;
                self.topic_word[t * v..(t + 1) * v]
                    .iter()
                    .map(|&c| (c as f64 + beta) / denom)
                    .collect()
            })
            .collect();
        let doc_topic = self
            .docs
            .iter()
            .enumerate()
            .map(|(d, words)| {
                let denom = words.len() as f64 + k as f64 * alpha;
                self.doc_topic[d * k..(d + 1) * k]
                    .iter()
                    .map(|&c| (c as f64 + alpha) / denom)
                    .collect()
            })
            .collect();
        TopicModel {
            config: self.config,
            vocabulary: self.vocabulary,
            topic_word,
            doc_topic,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_document(
    words: &[u32],
    z: &mut [u32],
    doc_topic: &mut [u32],
    topic_word: &mut [u32],
    topic_totals: &mut [u32],
    weights: &mut [f64],
    config: &LdaConfig,
    v: usize,
    rng: &mut ChaCha8Rng,
) {
    let k = config.k;
    let vbeta = v as f64 * config.beta;
    for (i, &w) in words.iter().enumerate() {
        let old = z[i] as usize;
        doc_topic[old] -= 1;
        topic_word[old * v + w as usize] -= 1;
        topic_totals[old] -= 1;

        let mut total = 0.0;
        for t in 0..k {
            total += (doc_topic[t] as f64 + config.alpha)
                * (topic_word[t * v + w as usize] as f64 + config.beta)
                / (topic_totals[t] as f64 + vbeta);
            weights[t] = total;
        }
        let new = draw_cumulative(weights, total, rng);

        z[i] = new as u32;
        doc_topic[new] += 1;
        topic_word[new * v + w as usize] += 1;
        topic_totals[new] += 1;
    }
}

fn draw_cumulative(cumulative: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u = rng.gen::<f64>() * total;
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// Fit LDA with `config.iterations` sweeps from a seeded random assignment.
pub fn train_lda(docs: &[TokenDocument], config: &LdaConfig) -> Result<TopicModel, TopicError> {
    let mut sampler = LdaSampler::new(docs, config)?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

/// Topic distribution of a document with the topic-word table held fixed.
///
/// Out-of-vocabulary tokens are skipped; runs `model.config.iterations`
/// sweeps.
pub fn infer_topics(
    model: &TopicModel,
    doc: &TokenDocument,
    seed: u64,
) -> Result<Vec<f64>, TopicError> {
    let ids: HashMap<&str, usize> = model
        .vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let words: Vec<usize> = doc
        .tokens
        .iter()
        .filter_map(|t| ids.get(t.as_str()).copied())
        .collect();
    if words.is_empty() {
        return Err(TopicError::AllOutOfVocabulary(doc.video_id.clone()));
    }
    let k = model.topic_word.len();
    let alpha = model.config.alpha;
    let mut rng = seed::rng(seed);
    let mut counts = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            counts[t] += 1;
            t
        })
        .collect();
    let mut weights = vec![0.0; k];
    for _ in 0..model.config.iterations.max(1) {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (counts[t] as f64 + alpha) * model.topic_word[t][w];
                weights[t] = total;
            }
            let t = draw_cumulative(&weights, total, &mut rng);
            z[i] = t;
            counts[t] += 1;
        }
    }
    let denom = words.len() as f64 + k as f64 * alpha;
    Ok(counts.iter().map(|&c| (c as f64 + alpha) / denom).collect())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn dominant_topic(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > dist[best] {
            best = i;
        }
    }
    best
}

/// The `n` most probable words of a topic, most probable first; equal
/// probabilities are ordered lexicographically.
pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>, TopicError> {
    Ok(top_words_weighted(model, topic, n)?
        .into_iter()
        .map(|(w, _)| w)
        .collect())
}

pub fn top_words_weighted(
    model: &TopicModel,
    topic: usize,
    n: usize,
) -> Result<Vec<(String, f64)>, TopicError> {
    let row = model
        .topic_word
        .get(topic)
        .ok_or(TopicError::TopicOutOfRange {
            topic,
            k: model.topic_word.len(),
        })?;
    let mut ranked: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| model.vocabulary[a.0].cmp(&model.vocabulary[b.0]))
    });
    Ok(ranked
        .into_iter()
        .take(n)
        .map(|(i, p)| (model.vocabulary[i].clone(), p))
        .collect())
}

/// Rank topics by how many documents pick them as dominant, most popular
/// first; ties go to the lower topic index. Topics nobody picks are left
/// out.
pub fn rank_by_dominance(distributions: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for d in distributions {
        *counts.entry(dominant_topic(d)).or_default() += 1;
    }
    let mut ranked: Vec<(usize, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

// ---------------------------------------------------------------------------
// model file

/// Header `lda k |V| alpha beta seed`, one vocabulary word per line, then one
/// line of `|V|` reals per topic. Reals use the shortest exact
/// representation, so reading back reproduces them bit for bit.
pub fn write_model<W: Write>(model: &TopicModel, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "lda {} {} {:e} {:e} {}",
        model.topic_word.len(),
        model.vocabulary.len(),
        model.config.alpha,
        model.config.beta,
        model.config.seed
    )?;
    for w in &model.vocabulary {
        writeln!(out, "{w}")?;
    }
    for row in &model.topic_word {
        let line: Vec<String> = row.iter().map(|p| format!("{p:e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()
}

pub fn read_model<R: BufRead>(input: R) -> Result<TopicModel, TopicError> {
    let mut lines = input.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), TopicError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(TopicError::Format {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    };
    let fmt_err = |line: usize, message: String| TopicError::Format { line, message };

    let (ln, header) = next("header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 || fields[0] != "lda" {
        return Err(fmt_err(ln, "expected `lda k V alpha beta seed`".into()));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| fmt_err(ln, e.to_string()));
    let int = |s: &str| s.parse::<u64>().map_err(|e| fmt_err(ln, e.to_string()));
    let k = int(fields[1])? as usize;
    let v = int(fields[2])? as usize;
    let alpha = num(fields[3])?;
    let beta = num(fields[4])?;
    let seed = int(fields[5])?;

    let mut vocabulary = Vec::with_capacity(v);
    for _ in 0..v {
        let (_, w) = next("vocabulary word")?;
        vocabulary.push(w);
    }
    let mut topic_word = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, line) = next("topic row")?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| fmt_err(ln, e.to_string())))
            .collect::<Result<_, _>>()?;
        if row.len() != v {
            return Err(fmt_err(
                ln,
                format!("expected {v} values, found {}", row.len()),
            ));
        }
        topic_word.push(row);
    }
    Ok(TopicModel {
        config: LdaConfig {
            alpha,
            beta,
            ..LdaConfig::new(k, seed)
        },
        vocabulary,
        topic_word,
        doc_topic: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, tokens: &[&str]) -> TokenDocument {
        TokenDocument {
            video_id: id.into(),
            channel_id: "c".into(),
            source: Source::Caption,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Each document uses only its planted topic's 10-word vocabulary.
    fn planted(docs_per_topic: usize, seed: u64) -> (Vec<TokenDocument>, Vec<usize>) {
        let mut rng = seed::rng(seed);
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..docs_per_topic * 3 {
            let t = i % 3;
            let tokens: Vec<String> = (0..30)
                .map(|_| format!("t{t}w{}", rng.gen_range(0..10)))
                .collect();
            docs.push(TokenDocument {
                video_id: format!("d{i}"),
                channel_id: "c".into(),
                source: Source::Caption,
                tokens,
            });
            labels.push(t);
        }
        (docs, labels)
    }

    #[test]
    fn subsample_respects_cap_and_seed() {
        let tokens: Vec<String> = (0..5000).map(|i| format!("w{}", i % 97)).collect();
        let long = TokenDocument {
            tokens,
            ..doc("v", &[])
        };
        let sub = subsample_tokens(&long, 2000, 3);
        assert_eq!(sub.len(), 2000);
        let mut pool: HashMap<&str, i64> = HashMap::new();
        for t in &long.tokens {
            *pool.entry(t).or_default() += 1;
        }
        for t in &sub.tokens {
            let c = pool.get_mut(t.as_str()).unwrap();
            *c -= 1;
            assert!(*c >= 0, "token drawn more often than it occurs");
        }
        assert_eq!(subsample_tokens(&long, 2000, 3), sub);
        assert_ne!(subsample_tokens(&long, 2000, 4), sub);

        let short = TokenDocument {
            tokens: long.tokens[..1500].to_vec(),
            ..doc("v", &[])
        };
        assert_eq!(subsample_tokens(&short, 2000, 3), short);
    }

    #[test]
    fn single_topic_degenerates_to_unigram() {
        let docs = [doc("a", &["a", "a", "a", "b"])];
        let model = train_lda(
            &docs,
            &LdaConfig {
                iterations: 5,
                ..LdaConfig::new(1, 0)
            },
        )
        .unwrap();
        assert_eq!(model.doc_topic, vec![vec![1.0]]);
        // (3 + 1) / (4 + 2), (1 + 1) / (4 + 2)
        assert!((model.topic_word[0][0] - 4.0 / 6.0).abs() < 1e-12);
        assert!((model.topic_word[0][1] - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(top_words(&model, 0, 2).unwrap(), ["a", "b"]);
        assert_eq!(top_words(&model, 0, 10).unwrap(), ["a", "b"]);
        assert!(matches!(
            top_words(&model, 1, 2),
            Err(TopicError::TopicOutOfRange { .. })
        ));
        assert_eq!(infer_topics(&model, &docs[0], 1).unwrap(), vec![1.0]);
    }

    #[test]
    fn training_errors() {
        let cfg = LdaConfig::new(2, 0);
        assert!(matches!(train_lda(&[], &cfg), Err(TopicError::EmptyCorpus)));
        match train_lda(&[doc("a", &["x"]), doc("b", &[])], &cfg) {
            Err(TopicError::EmptyDocument { video_id, .. }) => assert_eq!(video_id, "b"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            train_lda(&[doc("a", &["x"])], &LdaConfig::new(0, 0)),
            Err(TopicError::InvalidConfig(_))
        ));
    }

    #[test]
    fn counts_stay_consistent_and_rows_normalize() {
        let (docs, _) = planted(10, 1);
        for workers in [1, 3] {
            let cfg = LdaConfig {
                iterations: 0,
                workers,
                ..LdaConfig::new(3, 9)
            };
            let mut s = LdaSampler::new(&docs, &cfg).unwrap();
            s.check_counts().unwrap();
            for _ in 0..20 {
                s.sweep();
                s.check_counts().unwrap();
            }
            let m = s.into_model();
            for row in m.topic_word.iter().chain(&m.doc_topic) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&p| p > 0.0));
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (docs, _) = planted(10, 2);
        let cfg = LdaConfig {
            iterations: 30,
            ..LdaConfig::new(3, 5)
        };
        assert_eq!(
            train_lda(&docs, &cfg).unwrap(),
            train_lda(&docs, &cfg).unwrap()
        );
    }

    #[test]
    fn planted_topics_top_words_come_from_one_partition() {
        let (docs, _) = planted(20, 3);
        let cfg = LdaConfig {
            iterations: 100,
            ..LdaConfig::new(3, 7)
        };
        let model = train_lda(&docs, &cfg).unwrap();
        for t in 0..3 {
            let words = top_words(&model, t, 5).unwrap();
            let prefix = &words[0][..2];
            assert!(words.iter().all(|w| &w[..2] == prefix), "{words:?}");
        }
    }

    #[test]
    fn held_in_inference_matches_training_distribution() {
        let (docs, _) = planted(20, 4);
        let cfg = LdaConfig {
            iterations: 100,
            ..LdaConfig::new(3, 8)
        };
        let model = train_lda(&docs, &cfg).unwrap();
        for (d, trained) in docs.iter().zip(&model.doc_topic).take(10) {
            let inferred = infer_topics(&model, d, subsample_seed(8, d)).unwrap();
            assert!((inferred.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let tv: f64 = inferred
                .iter()
                .zip(trained)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv < 0.05, "total variation {tv}");
        }
        assert!(matches!(
            infer_topics(&model, &doc("z", &["nope", "never"]), 0),
            Err(TopicError::AllOutOfVocabulary(_))
        ));
    }

    #[test]
    fn dominant_topic_examples() {
        assert_eq!(dominant_topic(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(dominant_topic(&[0.5, 0.5]), 0);
        assert_eq!(dominant_topic(&[1.0]), 0);
    }

    #[test]
    fn dominance_ranking() {
        let d = vec![
            vec![0.1, 0.9, 0.0],
            vec![0.8, 0.1, 0.1],
            vec![0.2, 0.7, 0.1],
            vec![0.1, 0.1, 0.8],
        ];
        assert_eq!(rank_by_dominance(&d), [(1, 2), (0, 1), (2, 1)]);
    }

    #[test]
    fn model_file_round_trip() {
        let (docs, _) = planted(5, 6);
        let cfg = LdaConfig {
            iterations: 10,
            ..LdaConfig::new(3, 1)
        };
        let model = train_lda(&docs, &cfg).unwrap();
        let mut buf = Vec::new();
        write_model(&model, &mut buf).unwrap();
        let back = read_model(buf.as_slice()).unwrap();
        assert_eq!(back.vocabulary, model.vocabulary);
        assert_eq!(back.config.alpha, model.config.alpha);
        for (a, b) in back
            .topic_word
            .iter()
            .flatten()
            .zip(model.topic_word.iter().flatten())
        {
            assert!((a - b).abs() <= 1e-12);
        }
        let truncated = &buf[..buf.len() / 2];
        assert!(read_model(truncated).is_err());
        assert!(matches!(
            read_model("lad 1 1 1 1 1\n".as_bytes()),
            Err(TopicError::Format { line: 1, .. })
        ));
    }
}
