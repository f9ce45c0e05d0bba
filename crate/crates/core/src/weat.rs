//! Word Embedding Association Test.
//!
//! For target classes `C1`, `C2` and attribute sets `A1`, `A2`:
//!
//! * `s(w) = mean_{a in A1} cos(w, a) - mean_{b in A2} cos(w, b)`
//! * statistic `= Σ_{x in C1} s(x) - Σ_{y in C2} s(y)`
//! * effect size `= (mean_{C1} s - mean_{C2} s) / sd_{C1 ∪ C2} s`, with the
//!   sample (`n - 1`) standard deviation
//! * p-value: share of equal-size repartitions of `C1 ∪ C2` whose statistic
//!   is strictly greater than the observed one (or `>=` in
//!   [`Comparison::GreaterOrEqual`] mode).

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingModel;
use crate::seed;
use crate::stats;

/// `binomial(20, 10)`: exact enumeration handles classes of up to 10 words.
pub const DEFAULT_ENUMERATION_CEILING: u64 = 184_756;
pub const DEFAULT_MONTE_CARLO_SAMPLES: usize = 100_000;

#[derive(Debug, Error)]
pub enum WeatError {
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
    #[error("invalid WEAT spec `{name}`: {message}")]
    InvalidSpec { name: String, message: String },
    #[error("out of vocabulary: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),
    #[error("associations have zero variance; effect size undefined")]
    ZeroVariance,
    #[error(
        "exact test needs {partitions} partitions, above the ceiling of {ceiling}; \
         use the sampled mode"
    )]
    CeilingExceeded { partitions: u64, ceiling: u64 },
    #[error("spec `{name}`: {which} is empty after dropping out-of-vocabulary words")]
    EmptyAfterDrop { name: String, which: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatSpec {
    pub name: String,
    /// Discriminated-group targets.
    pub class1: Vec<String>,
    /// Dominant-group targets.
    pub class2: Vec<String>,
    /// Negative attributes.
    pub attrs1: Vec<String>,
    /// Positive attributes.
    pub attrs2: Vec<String>,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

impl WeatSpec {
    pub fn new(
        name: &str,
        class1: &[&str],
        class2: &[&str],
        attrs1: &[&str],
        attrs2: &[&str],
    ) -> Self {
        Self {
            name: name.to_string(),
            class1: words(class1),
            class2: words(class2),
            attrs1: words(attrs1),
            attrs2: words(attrs2),
        }
    }

    pub fn validate(&self) -> Result<(), WeatError> {
        let bad = |message: String| {
            Err(WeatError::InvalidSpec {
                name: self.name.clone(),
                message,
            })
        };
        if self.class1.is_empty() || self.class1.len() != self.class2.len() {
            return bad(format!(
                "classes must be non-empty and equal in size ({} vs {})",
                self.class1.len(),
                self.class2.len()
            ));
        }
        if self.attrs1.is_empty() || self.attrs2.is_empty() {
            return bad("attribute sets must be non-empty".into());
        }
        for (label, set) in [
            ("class1", &self.class1),
            ("class2", &self.class2),
            ("attrs1", &self.attrs1),
            ("attrs2", &self.attrs2),
        ] {
            let unique: HashSet<&String> = set.iter().collect();
            if unique.len() != set.len() {
                return bad(format!("{label} contains duplicates"));
            }
        }
        Ok(())
    }

    pub fn swap_classes(&self) -> Self {
        Self {
            class1: self.class2.clone(),
            class2: self.class1.clone(),
            ..self.clone()
        }
    }

    pub fn swap_attributes(&self) -> Self {
        Self {
            attrs1: self.attrs2.clone(),
            attrs2: self.attrs1.clone(),
            ..self.clone()
        }
    }

    pub fn all_words(&self) -> impl Iterator<Item = &String> {
        self.class1
            .iter()
            .chain(&self.class2)
            .chain(&self.attrs1)
            .chain(&self.attrs2)
    }

    /// Words of the spec missing from the model, first-appearance order.
    pub fn missing_words(&self, model: &EmbeddingModel) -> Vec<String> {
        let mut seen = HashSet::new();
        self.all_words()
            .filter(|w| !model.contains(w) && seen.insert(w.as_str()))
            .cloned()
            .collect()
    }
}

/// The immigrants, muslims and lgbt tests.
pub fn builtin_specs() -> Vec<WeatSpec> {
    vec![
        WeatSpec::new(
            "immigrants",
            &["immigrant", "migrant"],
            &["citizen", "native"],
            &["bad", "burden", "pirate", "plague", "taker", "thief"],
            &["good", "honest", "maker", "rightful"],
        ),
        WeatSpec::new(
            "muslims",
            &["islamism", "muhammed", "muslim", "quran"],
            &["bible", "christian", "christianity", "jesus"],
            &[
                "assassin",
                "attack",
                "bomb",
                "death",
                "murder",
                "radical",
                "terrorist",
            ],
            &["compassionate", "gentle", "humane", "kind", "tolerant"],
        ),
        WeatSpec::new(
            "lgbt",
            &["bisexual", "gay", "homosexual", "lesbian"],
            &["het", "hetero", "heterosexual", "straight"],
            &[
                "immoral",
                "outrageous",
                "promiscuous",
                "revolting",
                "sinner",
            ],
            &["moral", "natural", "normal"],
        ),
    ]
}

/// Parse a spec file: one JSON object per line with `name`, `class1`,
/// `class2`, `attrs1` and `attrs2`.
pub fn parse_specs(text: &str, path: &Path) -> Result<Vec<WeatSpec>, WeatError> {
    let mut specs = Vec::new();
    let mut names = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| WeatError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let spec: WeatSpec = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        spec.validate().map_err(|e| err(e.to_string()))?;
        if !names.insert(spec.name.clone()) {
            return Err(err(format!("duplicate spec name `{}`", spec.name)));
        }
        specs.push(spec);
    }
    Ok(specs)
}

pub fn load_specs(path: &Path) -> Result<Vec<WeatSpec>, WeatError> {
    let text = fs::read_to_string(path).map_err(|source| WeatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_specs(&text, path)
}

pub fn specs_to_jsonl(specs: &[WeatSpec]) -> String {
    specs
        .iter()
        .map(|s| serde_json::to_string(s).expect("spec serializes") + "\n")
        .collect()
}

fn require_in_vocab<'a>(
    model: &EmbeddingModel,
    words: impl IntoIterator<Item = &'a String>,
) -> Result<(), WeatError> {
    let mut seen = HashSet::new();
    let missing: Vec<String> = words
        .into_iter()
        .filter(|w| !model.contains(w) && seen.insert(w.as_str()))
        .cloned()
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(WeatError::OutOfVocabulary(missing))
    }
}

fn mean_cosine(model: &EmbeddingModel, w: &[f32], attrs: &[String]) -> f64 {
    let total: f64 = attrs
        .iter()
        .map(|a| crate::embedding::cosine(w, model.vector(a).expect("checked")))
        .sum();
    total / attrs.len() as f64
}

/// `s(w, A1, A2)`: mean cosine with `attrs1` minus mean cosine with `attrs2`.
pub fn word_association(
    model: &EmbeddingModel,
    word: &str,
    attrs1: &[String],
    attrs2: &[String],
) -> Result<f64, WeatError> {
    let w = word.to_string();
    require_in_vocab(model, std::iter::once(&w).chain(attrs1).chain(attrs2))?;
    let v = model.vector(word).expect("checked");
    Ok(mean_cosine(model, v, attrs1) - mean_cosine(model, v, attrs2))
}

/// Associations of `class1` then `class2`, in spec order.
pub fn class_associations(
    model: &EmbeddingModel,
    spec: &WeatSpec,
) -> Result<(Vec<f64>, Vec<f64>), WeatError> {
    require_in_vocab(model, spec.all_words())?;
    let assoc = |ws: &[String]| -> Vec<f64> {
        ws.iter()
            .map(|w| {
                let v = model.vector(w).expect("checked");
                mean_cosine(model, v, &spec.attrs1) - mean_cosine(model, v, &spec.attrs2)
            })
            .collect()
    };
    Ok((assoc(&spec.class1), assoc(&spec.class2)))
}

/// `Σ a1 - Σ a2`, each sum taken in order.
pub fn statistic_from(assoc1: &[f64], assoc2: &[f64]) -> f64 {
    assoc1.iter().sum::<f64>() - assoc2.iter().sum::<f64>()
}

/// Cohen's d with the sample standard deviation of the pooled associations.
pub fn effect_size_from(assoc1: &[f64], assoc2: &[f64]) -> Result<f64, WeatError> {
    let pooled: Vec<f64> = assoc1.iter().chain(assoc2).copied().collect();
    if pooled.len() < 2 {
        return Err(WeatError::ZeroVariance);
    }
    let sd = stats::sample_std(&pooled);
    if sd == 0.0 || !sd.is_finite() {
        return Err(WeatError::ZeroVariance);
    }
    Ok((stats::mean(assoc1) - stats::mean(assoc2)) / sd)
}

pub fn test_statistic(model: &EmbeddingModel, spec: &WeatSpec) -> Result<f64, WeatError> {
    let (a1, a2) = class_associations(model, spec)?;
    Ok(statistic_from(&a1, &a2))
}

pub fn effect_size(model: &EmbeddingModel, spec: &WeatSpec) -> Result<f64, WeatError> {
    let (a1, a2) = class_associations(model, spec)?;
    effect_size_from(&a1, &a2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// Count partitions with a strictly greater statistic.
    #[serde(rename = "gt")]
    Greater,
    /// Count partitions with a greater or equal statistic.
    #[serde(rename = "gte")]
    GreaterOrEqual,
}

impl Comparison {
    fn counts(self, candidate: f64, observed: f64) -> bool {
        match self {
            Comparison::Greater => candidate > observed,
            Comparison::GreaterOrEqual => candidate >= observed,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Greater => "gt",
            Comparison::GreaterOrEqual => "gte",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMode {
    Exact,
    Sampled,
}

impl fmt::Display for PValueMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PValueMode::Exact => "exact",
            PValueMode::Sampled => "sampled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationOptions {
    pub comparison: Comparison,
    pub ceiling: u64,
    /// When set, classes too large for exact enumeration fall back to this
    /// many random partitions.
    pub sampled: Option<SampledOptions>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for PermutationOptions {
    fn default() -> Self {
        Self {
            comparison: Comparison::Greater,
            ceiling: DEFAULT_ENUMERATION_CEILING,
            sampled: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue {
    pub p: f64,
    pub partitions: u64,
    pub mode: PValueMode,
    pub comparison: Comparison,
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Advance `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Statistic of the partition whose first set is `members` (sorted).
fn partition_statistic(pooled: &[f64], members: &[usize], in_x: &mut [bool]) -> f64 {
    in_x.iter_mut().for_each(|b| *b = false);
    for &m in members {
        in_x[m] = true;
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (i, &a) in pooled.iter().enumerate() {
        if in_x[i] {
            sx += a;
        } else {
            sy += a;
        }
    }
    sx - sy
}

/// Permutation p-value from class associations.
///
/// Enumerates every split of the `2n` pooled associations into two sets of
/// `n`, including the observed one.
pub fn pvalue_from(
    assoc1: &[f64],
    assoc2: &[f64],
    options: &PermutationOptions,
) -> Result<PValue, WeatError> {
    let n = assoc1.len();
    debug_assert_eq!(n, assoc2.len());
    let observed = statistic_from(assoc1, assoc2);
    let pooled: Vec<f64> = assoc1.iter().chain(assoc2).copied().collect();
    let total = binomial(2 * n as u64, n as u64);
    let mut in_x = vec![false; pooled.len()];

    if total > options.ceiling {
        let Some(sampled) = options.sampled else {
            return Err(WeatError::CeilingExceeded {
                partitions: total,
                ceiling: options.ceiling,
            });
        };
        let mut rng = seed::rng(sampled.seed);
        let mut order: Vec<usize> = (0..pooled.len()).collect();
        let mut hits = 0u64;
        for _ in 0..sampled.samples {
            order.shuffle(&mut rng);
            let mut members = order[..n].to_vec();
            members.sort_unstable();
            if options
                .comparison
                .counts(partition_statistic(&pooled, &members, &mut in_x), observed)
            {
                hits += 1;
            }
        }
        return Ok(PValue {
            p: hits as f64 / sampled.samples as f64,
            partitions: sampled.samples as u64,
            mode: PValueMode::Sampled,
            comparison: options.comparison,
        });
    }

    let mut members: Vec<usize> = (0..n).collect();
    let mut hits = 0u64;
    let mut seen = 0u64;
    loop {
        seen += 1;
        if options
            .comparison
            .counts(partition_statistic(&pooled, &members, &mut in_x), observed)
        {
            hits += 1;
        }
        if !next_combination(&mut members, pooled.len()) {
            break;
        }
    }
    debug_assert_eq!(seen, total);
    Ok(PValue {
        p: hits as f64 / total as f64,
        partitions: total,
        mode: PValueMode::Exact,
        comparison: options.comparison,
    })
}

pub fn permutation_pvalue(
    model: &EmbeddingModel,
    spec: &WeatSpec,
    options: &PermutationOptions,
) -> Result<PValue, WeatError> {
    let (a1, a2) = class_associations(model, spec)?;
    pvalue_from(&a1, &a2, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    /// Any missing word is an error.
    #[default]
    Strict,
    /// Drop missing words; keep the classes the same size by also dropping
    /// the other class's words with the smallest association magnitude.
    Balance,
}

impl fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OovPolicy::Strict => "strict",
            OovPolicy::Balance => "balance",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatResult {
    pub spec: String,
    /// The words actually used, after the OOV policy.
    pub class1: Vec<String>,
    pub class2: Vec<String>,
    pub attrs1: Vec<String>,
    pub attrs2: Vec<String>,
    pub per_word_associations: Vec<(String, f64)>,
    pub statistic: f64,
    /// `None` when all associations are equal.
    pub effect_size: Option<f64>,
    pub p_value: f64,
    pub partitions_evaluated: u64,
    pub mode: PValueMode,
    pub comparison: Comparison,
    /// All associations equal: statistic 0 and no spread.
    pub degenerate: bool,
    pub dropped: Vec<String>,
}

/// Apply the OOV policy and return the effective spec plus dropped words.
pub fn apply_oov_policy(
    model: &EmbeddingModel,
    spec: &WeatSpec,
    policy: OovPolicy,
) -> Result<(WeatSpec, Vec<String>), WeatError> {
    spec.validate()?;
    let missing = spec.missing_words(model);
    if missing.is_empty() {
        return Ok((spec.clone(), Vec::new()));
    }
    if policy == OovPolicy::Strict {
        return Err(WeatError::OutOfVocabulary(missing));
    }
    let keep = |ws: &[String]| -> Vec<String> {
        ws.iter().filter(|w| model.contains(w)).cloned().collect()
    };
    let mut effective = WeatSpec {
        name: spec.name.clone(),
        class1: keep(&spec.class1),
        class2: keep(&spec.class2),
        attrs1: keep(&spec.attrs1),
        attrs2: keep(&spec.attrs2),
    };
    let mut dropped = missing;
    let empty = |which| WeatError::EmptyAfterDrop {
        name: spec.name.clone(),
        which,
    };
    if effective.attrs1.is_empty() {
        return Err(empty("attrs1"));
    }
    if effective.attrs2.is_empty() {
        return Err(empty("attrs2"));
    }
    let target = effective.class1.len().min(effective.class2.len());
    if target == 0 {
        return Err(empty(if effective.class1.is_empty() {
            "class1"
        } else {
            "class2"
        }));
    }
    let (attrs1, attrs2) = (effective.attrs1.clone(), effective.attrs2.clone());
    for class in [&mut effective.class1, &mut effective.class2] {
        while class.len() > target {
            let weakest = class
                .iter()
                .map(|w| word_association(model, w, &attrs1, &attrs2).map(f64::abs))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i)
                .expect("class is non-empty");
            dropped.push(class.remove(weakest));
        }
    }
    Ok((effective, dropped))
}

/// Full test: OOV policy, associations, statistic, effect size and p-value.
pub fn run_weat(
    model: &EmbeddingModel,
    spec: &WeatSpec,
    policy: OovPolicy,
    options: &PermutationOptions,
) -> Result<WeatResult, WeatError> {
    let (effective, dropped) = apply_oov_policy(model, spec, policy)?;
    let (a1, a2) = class_associations(model, &effective)?;
    let statistic = statistic_from(&a1, &a2);
    let effect_size = match effect_size_from(&a1, &a2) {
        Ok(d) => Some(d),
        Err(WeatError::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    let pv = pvalue_from(&a1, &a2, options)?;
    let per_word_associations = effective
        .class1
        .iter()
        .chain(&effective.class2)
        .cloned()
        .zip(a1.iter().chain(&a2).copied())
        .collect();
    Ok(WeatResult {
        spec: spec.name.clone(),
        degenerate: effect_size.is_none(),
        class1: effective.class1,
        class2: effective.class2,
        attrs1: effective.attrs1,
        attrs2: effective.attrs2,
        per_word_associations,
        statistic,
        effect_size,
        p_value: pv.p,
        partitions_evaluated: pv.partitions,
        mode: pv.mode,
        comparison: pv.comparison,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    const BUNDLED: &str = include_str!("../data/weat_specs.jsonl");

    fn space(entries: &[(&str, [f32; 2])]) -> EmbeddingModel {
        EmbeddingModel::from_vectors(entries.iter().map(|(w, v)| (*w, v.to_vec()))).unwrap()
    }

    fn s(ws: &[&str]) -> Vec<String> {
        words(ws)
    }

    /// Unit vector whose association with A1 = {e1}, A2 = {e2} is `target`.
    /// For `v = (cos t, sin t)`, `s = cos t - sin t`.
    fn with_association(target: f64) -> [f32; 2] {
        // cos t - sin t = sqrt(2) cos(t + pi/4)
        let t = (target / std::f64::consts::SQRT_2).acos() - std::f64::consts::FRAC_PI_4;
        [t.cos() as f32, t.sin() as f32]
    }

    #[test]
    fn association_examples() {
        let m = space(&[
            ("w", [1.0, 0.0]),
            (
                "d",
                [
                    std::f32::consts::FRAC_1_SQRT_2,
                    std::f32::consts::FRAC_1_SQRT_2,
                ],
            ),
            ("a", [1.0, 0.0]),
            ("b", [0.0, 1.0]),
        ]);
        assert_eq!(
            word_association(&m, "w", &s(&["a", "b"]), &s(&["a", "b"])).unwrap(),
            0.0
        );
        assert_eq!(
            word_association(&m, "w", &s(&["a"]), &s(&["b"])).unwrap(),
            1.0
        );
        assert!(
            word_association(&m, "d", &s(&["a"]), &s(&["b"]))
                .unwrap()
                .abs()
                < 1e-7
        );
        match word_association(&m, "zz", &s(&["a", "qq"]), &s(&["b"])) {
            Err(WeatError::OutOfVocabulary(missing)) => assert_eq!(missing, ["zz", "qq"]),
            other => panic!("{other:?}"),
        }
    }

    fn stated_space() -> (EmbeddingModel, WeatSpec) {
        let m = space(&[
            ("x1", with_association(0.8)),
            ("x2", with_association(0.6)),
            ("y1", with_association(-0.5)),
            ("y2", with_association(-0.7)),
            ("neg", [1.0, 0.0]),
            ("pos", [0.0, 1.0]),
        ]);
        let spec = WeatSpec::new("t", &["x1", "x2"], &["y1", "y2"], &["neg"], &["pos"]);
        (m, spec)
    }

    #[test]
    fn statistic_and_effect_size_examples() {
        let (m, spec) = stated_space();
        let (a1, a2) = class_associations(&m, &spec).unwrap();
        for (got, want) in a1.iter().chain(&a2).zip([0.8, 0.6, -0.5, -0.7]) {
            assert!((got - want).abs() < 1e-6);
        }
        assert!((test_statistic(&m, &spec).unwrap() - 2.6).abs() < 1e-5);
        assert!((effect_size(&m, &spec).unwrap() - 1.71).abs() < 0.01);
        let swapped = spec.swap_classes();
        assert_eq!(
            test_statistic(&m, &swapped).unwrap(),
            -test_statistic(&m, &spec).unwrap()
        );
        assert_eq!(
            effect_size(&m, &swapped).unwrap(),
            -effect_size(&m, &spec).unwrap()
        );
        assert!(
            (test_statistic(&m, &spec.swap_attributes()).unwrap()
                + test_statistic(&m, &spec).unwrap())
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn effect_size_edge_cases() {
        assert_eq!(statistic_from(&[0.3, -0.2], &[0.3, -0.2]), 0.0);
        assert_eq!(effect_size_from(&[0.3, -0.2], &[-0.2, 0.3]).unwrap(), 0.0);
        assert!(matches!(
            effect_size_from(&[0.5, 0.5], &[0.5, 0.5]),
            Err(WeatError::ZeroVariance)
        ));
    }

    #[test]
    fn pvalue_examples() {
        let opts = PermutationOptions::default();
        let pv = pvalue_from(&[1.0], &[-1.0], &opts).unwrap();
        assert_eq!(pv.partitions, 2);
        assert_eq!(pv.p, 0.0);
        assert_eq!(pv.mode, PValueMode::Exact);

        let pv = pvalue_from(&[0.4, 0.1], &[-0.3, 0.25], &opts).unwrap();
        assert_eq!(pv.partitions, 6);
        // splits of {0.4, 0.1, -0.3, 0.25}; observed 0.55
        let pooled = [0.4, 0.1, -0.3, 0.25];
        let total: f64 = pooled.iter().sum();
        let mut greater = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                let sx = pooled[i] + pooled[j];
                if sx - (total - sx) > 0.55 + 1e-12 {
                    greater += 1;
                }
            }
        }
        assert_eq!(pv.p, greater as f64 / 6.0);

        let flat = pvalue_from(&[0.2, 0.2], &[0.2, 0.2], &opts).unwrap();
        assert_eq!(flat.p, 0.0);
        let gte = PermutationOptions {
            comparison: Comparison::GreaterOrEqual,
            ..opts.clone()
        };
        assert_eq!(pvalue_from(&[0.2, 0.2], &[0.2, 0.2], &gte).unwrap().p, 1.0);
    }

    #[test]
    fn ceiling_and_sampled_mode() {
        let mut rng = seed::rng(3);
        let a1: Vec<f64> = (0..11).map(|_| rng.gen_range(0.0..1.0)).collect();
        let a2: Vec<f64> = (0..11).map(|_| rng.gen_range(-1.0..0.5)).collect();
        match pvalue_from(&a1, &a2, &PermutationOptions::default()) {
            Err(WeatError::CeilingExceeded {
                partitions,
                ceiling,
            }) => {
                assert_eq!(partitions, 705_432);
                assert_eq!(ceiling, 184_756);
            }
            other => panic!("{other:?}"),
        }
        let opts = PermutationOptions {
            sampled: Some(SampledOptions {
                samples: 20_000,
                seed: 1,
            }),
            ..PermutationOptions::default()
        };
        let pv = pvalue_from(&a1, &a2, &opts).unwrap();
        assert_eq!(pv.mode, PValueMode::Sampled);
        assert_eq!(pv.partitions, 20_000);
        assert_eq!(pvalue_from(&a1, &a2, &opts).unwrap(), pv);

        // n = 10 is still exact
        let pv = pvalue_from(&a1[..10], &a2[..10], &PermutationOptions::default()).unwrap();
        assert_eq!(pv.partitions, 184_756);
    }

    #[test]
    fn combinations_cover_all_subsets() {
        let mut idx = vec![0, 1, 2];
        let mut n = 1;
        while next_combination(&mut idx, 6) {
            n += 1;
        }
        assert_eq!(n, 20);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(4, 2), 6);
    }

    #[test]
    fn builtin_specs_match_bundled_file() {
        let bundled = parse_specs(BUNDLED, Path::new("weat_specs.jsonl")).unwrap();
        assert_eq!(bundled, builtin_specs());
        let shapes: Vec<_> = bundled
            .iter()
            .map(|s| {
                (
                    s.name.as_str(),
                    s.class1.len(),
                    s.class2.len(),
                    s.attrs1.len(),
                    s.attrs2.len(),
                )
            })
            .collect();
        assert_eq!(
            shapes,
            [
                ("immigrants", 2, 2, 6, 4),
                ("muslims", 4, 4, 7, 5),
                ("lgbt", 4, 4, 5, 3)
            ]
        );
        assert_eq!(
            bundled[1].class1,
            ["islamism", "muhammed", "muslim", "quran"]
        );
        assert_eq!(
            parse_specs(&specs_to_jsonl(&bundled), Path::new("x")).unwrap(),
            bundled
        );
    }

    #[test]
    fn spec_validation() {
        assert!(WeatSpec::new("x", &["a"], &["b", "c"], &["d"], &["e"])
            .validate()
            .is_err());
        assert!(WeatSpec::new("x", &["a"], &["b"], &[], &["e"])
            .validate()
            .is_err());
        assert!(WeatSpec::new("x", &["a", "a"], &["b", "c"], &["d"], &["e"])
            .validate()
            .is_err());
        assert!(WeatSpec::new("x", &["a"], &["b"], &["d", "f"], &["e"])
            .validate()
            .is_ok());
        assert!(matches!(
            parse_specs("{\"name\":\"x\",\"class1\":[\"a\"]}\n", Path::new("f")),
            Err(WeatError::Parse { line: 1, .. })
        ));
    }

    fn full_space(skip: &[&str]) -> EmbeddingModel {
        let spec = &builtin_specs()[2];
        let mut rng = seed::rng(5);
        let entries: Vec<(String, Vec<f32>)> = spec
            .all_words()
            .filter(|w| !skip.contains(&w.as_str()))
            .map(|w| {
                (
                    w.clone(),
                    (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        EmbeddingModel::from_vectors(entries).unwrap()
    }

    #[test]
    fn oov_policies() {
        let spec = &builtin_specs()[2];
        let m = full_space(&["het"]);
        match run_weat(&m, spec, OovPolicy::Strict, &PermutationOptions::default()) {
            Err(WeatError::OutOfVocabulary(missing)) => assert_eq!(missing, ["het"]),
            other => panic!("{other:?}"),
        }
        let r = run_weat(&m, spec, OovPolicy::Balance, &PermutationOptions::default()).unwrap();
        assert_eq!(r.class1.len(), 3);
        assert_eq!(r.class2, ["hetero", "heterosexual", "straight"]);
        assert_eq!(r.dropped.len(), 2);
        assert_eq!(r.dropped[0], "het");
        assert_eq!(r.partitions_evaluated, 20);

        // the class-1 word dropped is the one with the weakest association
        let weakest = spec
            .class1
            .iter()
            .min_by(|a, b| {
                let sa = word_association(&m, a, &spec.attrs1, &spec.attrs2)
                    .unwrap()
                    .abs();
                let sb = word_association(&m, b, &spec.attrs1, &spec.attrs2)
                    .unwrap()
                    .abs();
                sa.total_cmp(&sb)
            })
            .unwrap();
        assert_eq!(&r.dropped[1], weakest);

        let gutted = full_space(&["moral", "natural", "normal"]);
        assert!(matches!(
            run_weat(
                &gutted,
                spec,
                OovPolicy::Balance,
                &PermutationOptions::default()
            ),
            Err(WeatError::EmptyAfterDrop {
                which: "attrs2",
                ..
            })
        ));
    }

    #[test]
    fn run_weat_echoes_builtin_classes() {
        let spec = &builtin_specs()[1];
        let mut rng = seed::rng(8);
        let m = EmbeddingModel::from_vectors(
            spec.all_words()
                .map(|w| {
                    (
                        w.clone(),
                        (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    )
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let r = run_weat(&m, spec, OovPolicy::Strict, &PermutationOptions::default()).unwrap();
        assert_eq!(r.class1, ["islamism", "muhammed", "muslim", "quran"]);
        assert_eq!(r.partitions_evaluated, 70);
        assert_eq!(r.per_word_associations.len(), 8);
        assert!(r.dropped.is_empty());
        assert_eq!(r.comparison, Comparison::Greater);
    }

    /// Random orthogonal matrix by Gram-Schmidt on Gaussian-ish rows.
    fn random_rotation(dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seed::rng(seed);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        while rows.len() < dim {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for r in &rows {
                let dot: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(r).for_each(|(a, b)| *a -= dot * b);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-3 {
                rows.push(v.into_iter().map(|a| a / norm).collect());
            }
        }
        rows
    }

    fn rotate(m: &EmbeddingModel, rot: &[Vec<f64>]) -> EmbeddingModel {
        m.map_vectors(|v| {
            rot.iter()
                .map(|r| r.iter().zip(v).map(|(a, b)| a * *b as f64).sum::<f64>() as f32)
                .collect()
        })
    }

    fn assert_invariant(m: &EmbeddingModel, rotated: &EmbeddingModel, spec: &WeatSpec, tol: f64) {
        let opts = PermutationOptions::default();
        let a = run_weat(m, spec, OovPolicy::Strict, &opts).unwrap();
        let b = run_weat(rotated, spec, OovPolicy::Strict, &opts).unwrap();
        for ((_, x), (_, y)) in a.per_word_associations.iter().zip(&b.per_word_associations) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
        assert!((a.statistic - b.statistic).abs() <= tol);
        assert!((a.effect_size.unwrap() - b.effect_size.unwrap()).abs() <= tol);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn rotations_leave_results_unchanged() {
        let spec = &builtin_specs()[1];
        let dim = 8;
        let mut rng = seed::rng(21);
        let m = EmbeddingModel::from_vectors(
            spec.all_words()
                .map(|w| {
                    (
                        w.clone(),
                        (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    )
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();

        // signed permutations are exact in floating point
        let mut order: Vec<usize> = (0..dim).collect();
        order.reverse();
        order.swap(1, 5);
        let signs: Vec<f32> = (0..dim)
            .map(|i| if i % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        let permuted =
            m.map_vectors(|v| order.iter().zip(&signs).map(|(&j, s)| v[j] * s).collect());
        assert_invariant(&m, &permuted, spec, 1e-9);

        // a general rotation rounds every coordinate back to single precision
        let rot = random_rotation(dim, 22);
        for (i, r) in rot.iter().enumerate() {
            for (j, q) in rot.iter().enumerate() {
                let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-12);
            }
        }
        assert_invariant(&m, &rotate(&m, &rot), spec, 1e-5);
    }

    #[test]
    fn planted_bias_gives_zero_p() {
        let m = space(&[
            ("c1a", [0.9, 0.1]),
            ("c1b", [0.8, 0.3]),
            ("c2a", [0.1, 0.9]),
            ("c2b", [0.2, 0.7]),
            ("neg", [1.0, 0.0]),
            ("pos", [0.0, 1.0]),
        ]);
        let spec = WeatSpec::new("p", &["c1a", "c1b"], &["c2a", "c2b"], &["neg"], &["pos"]);
        let r = run_weat(&m, &spec, OovPolicy::Strict, &PermutationOptions::default()).unwrap();
        assert!(r.effect_size.unwrap() > 0.0);
        assert_eq!(r.p_value, 0.0);
        assert!(!r.degenerate);
    }
}
