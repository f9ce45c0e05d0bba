//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the config file. Unknown and
//! repeated keys are errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::embedding::SgnsConfig;
use crate::topics::LdaConfig;
use crate::weat::{Comparison, OovPolicy, DEFAULT_ENUMERATION_CEILING};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("`{key}` path does not exist: {path}")]
    MissingPath { key: &'static str, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatSettings {
    pub oov_policy: OovPolicy,
    pub comparison: Comparison,
    /// Both sides must fall below this for a comments/caption difference.
    pub p_threshold: f64,
    /// Random partitions used when a spec exceeds the enumeration ceiling;
    /// `0` makes that an error instead.
    pub sampled_partitions: usize,
    pub enumeration_ceiling: u64,
}

impl Default for WeatSettings {
    fn default() -> Self {
        Self {
            oov_policy: OovPolicy::Strict,
            comparison: Comparison::Greater,
            p_threshold: 0.05,
            sampled_partitions: 0,
            enumeration_ceiling: DEFAULT_ENUMERATION_CEILING,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub lexicon: PathBuf,
    pub stoplist: PathBuf,
    pub lemmas: PathBuf,
    /// Without one, a base model is trained on the pooled corpus.
    pub base_model: Option<PathBuf>,
    /// Without one, the built-in specs are used.
    pub weat_specs: Option<PathBuf>,
    pub language_threshold: f64,
    pub seed: u64,
    pub output: PathBuf,
    /// `seed` is ignored; each document class derives its own.
    pub lda: LdaConfig,
    /// `seed` is ignored; the base model derives its own.
    pub sgns: SgnsConfig,
    pub fine_tune_epochs: usize,
    pub weat: WeatSettings,
    pub pearson_permutations: usize,
    pub group_test_resamples: usize,
}

pub const KEYS: &[&str] = &[
    "corpus",
    "lexicon",
    "stoplist",
    "lemmas",
    "base_model",
    "weat_specs",
    "language_threshold",
    "seed",
    "output",
    "lda.k",
    "lda.alpha",
    "lda.beta",
    "lda.iterations",
    "lda.token_cap",
    "lda.workers",
    "sgns.dim",
    "sgns.window",
    "sgns.negatives",
    "sgns.epochs",
    "sgns.learning_rate",
    "sgns.min_count",
    "sgns.workers",
    "fine_tune.epochs",
    "weat.oov_policy",
    "weat.comparison",
    "weat.p_threshold",
    "weat.sampled_partitions",
    "weat.enumeration_ceiling",
    "pearson.permutations",
    "group_test.resamples",
];

impl RunConfig {
    /// Defaults for everything but the input paths.
    pub fn with_paths(
        corpus: impl Into<PathBuf>,
        lexicon: impl Into<PathBuf>,
        stoplist: impl Into<PathBuf>,
        lemmas: impl Into<PathBuf>,
        output: impl Into<PathBuf>,
    ) -> Self {
        Self {
            corpus: corpus.into(),
            lexicon: lexicon.into(),
            stoplist: stoplist.into(),
            lemmas: lemmas.into(),
            base_model: None,
            weat_specs: None,
            language_threshold: 0.8,
            seed: 0,
            output: output.into(),
            lda: LdaConfig::default(),
            sgns: SgnsConfig::default(),
            fine_tune_epochs: 5,
            weat: WeatSettings::default(),
            pearson_permutations: 10_000,
            group_test_resamples: 10_000,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut values: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            };
            if values.insert(known, (i + 1, value.trim())).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
        }

        let path = |key: &'static str| -> Option<PathBuf> {
            values.get(key).map(|(_, v)| base_dir.join(v))
        };
        let required = |key: &'static str| path(key).ok_or(ConfigError::MissingKey(key));
        let mut config = Self::with_paths(
            required("corpus")?,
            required("lexicon")?,
            required("stoplist")?,
            required("lemmas")?,
            path("output").unwrap_or_else(|| base_dir.join("out")),
        );
        config.base_model = path("base_model");
        config.weat_specs = path("weat_specs");

        fn get<T: FromStr>(
            values: &BTreeMap<&str, (usize, &str)>,
            key: &str,
            slot: &mut T,
        ) -> Result<bool, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            let Some((_, raw)) = values.get(key) else {
                return Ok(false);
            };
            *slot = raw.parse().map_err(|e: T::Err| ConfigError::Invalid {
                key: key.to_string(),
                message: e.to_string(),
            })?;
            Ok(true)
        }

        get(
            &values,
            "language_threshold",
            &mut config.language_threshold,
        )?;
        get(&values, "seed", &mut config.seed)?;

        let lda = &mut config.lda;
        get(&values, "lda.k", &mut lda.k)?;
        lda.alpha = 1.0 / lda.k.max(1) as f64;
        lda.beta = lda.alpha;
        get(&values, "lda.alpha", &mut lda.alpha)?;
        get(&values, "lda.beta", &mut lda.beta)?;
        get(&values, "lda.iterations", &mut lda.iterations)?;
        get(&values, "lda.token_cap", &mut lda.token_cap)?;
        get(&values, "lda.workers", &mut lda.workers)?;

        let sgns = &mut config.sgns;
        get(&values, "sgns.dim", &mut sgns.dim)?;
        get(&values, "sgns.window", &mut sgns.window)?;
        get(&values, "sgns.negatives", &mut sgns.negatives)?;
        get(&values, "sgns.epochs", &mut sgns.epochs)?;
        get(&values, "sgns.learning_rate", &mut sgns.learning_rate)?;
        get(&values, "sgns.min_count", &mut sgns.min_count)?;
        get(&values, "sgns.workers", &mut sgns.workers)?;
        get(&values, "fine_tune.epochs", &mut config.fine_tune_epochs)?;

        let mut word = String::new();
        if get(&values, "weat.oov_policy", &mut word)? {
            config.weat.oov_policy = match word.as_str() {
                "strict" => OovPolicy::Strict,
                "balance" => OovPolicy::Balance,
                _ => return Err(invalid("weat.oov_policy", "expected strict or balance")),
            };
        }
        if get(&values, "weat.comparison", &mut word)? {
            config.weat.comparison = match word.as_str() {
                "gt" => Comparison::Greater,
                "gte" => Comparison::GreaterOrEqual,
                _ => return Err(invalid("weat.comparison", "expected gt or gte")),
            };
        }
        get(&values, "weat.p_threshold", &mut config.weat.p_threshold)?;
        get(
            &values,
            "weat.sampled_partitions",
            &mut config.weat.sampled_partitions,
        )?;
        get(
            &values,
            "weat.enumeration_ceiling",
            &mut config.weat.enumeration_ceiling,
        )?;
        get(
            &values,
            "pearson.permutations",
            &mut config.pearson_permutations,
        )?;
        get(
            &values,
            "group_test.resamples",
            &mut config.group_test_resamples,
        )?;
        Ok(config)
    }

    /// Check value ranges and that every input path exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.language_threshold) {
            return Err(invalid("language_threshold", "must lie in [0, 1]"));
        }
        self.lda
            .validate()
            .map_err(|e| invalid("lda", &e.to_string()))?;
        if self.lda.k < 2 {
            return Err(invalid("lda.k", "at least 2 topics are reported per class"));
        }
        self.sgns
            .validate()
            .map_err(|e| invalid("sgns", &e.to_string()))?;
        if self.fine_tune_epochs == 0 {
            return Err(invalid("fine_tune.epochs", "must be at least 1"));
        }
        if !(self.weat.p_threshold > 0.0 && self.weat.p_threshold <= 1.0) {
            return Err(invalid("weat.p_threshold", "must lie in (0, 1]"));
        }
        if self.pearson_permutations == 0 {
            return Err(invalid("pearson.permutations", "must be at least 1"));
        }
        if self.group_test_resamples == 0 {
            return Err(invalid("group_test.resamples", "must be at least 1"));
        }
        for (key, path) in self.input_paths() {
            if !path.exists() {
                return Err(ConfigError::MissingPath {
                    key,
                    path: path.to_path_buf(),
                });
            }
        }
        Ok(())
    }

    /// Every configured input file with its key.
    pub fn input_paths(&self) -> Vec<(&'static str, &Path)> {
        let mut paths = vec![
            ("corpus", self.corpus.as_path()),
            ("lexicon", self.lexicon.as_path()),
            ("stoplist", self.stoplist.as_path()),
            ("lemmas", self.lemmas.as_path()),
        ];
        if let Some(p) = &self.base_model {
            paths.push(("base_model", p));
        }
        if let Some(p) = &self.weat_specs {
            paths.push(("weat_specs", p));
        }
        paths
    }
}

fn invalid(key: &str, message: &str) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "corpus = c.ndjson\nlexicon = l.tsv\nstoplist = s.txt\nlemmas = m.tsv\n";

    #[test]
    fn defaults_and_resolution() {
        let c = RunConfig::parse(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(c.corpus, Path::new("/data/c.ndjson"));
        assert_eq!(c.output, Path::new("/data/out"));
        assert_eq!(c.language_threshold, 0.8);
        assert_eq!(c.lda.k, 300);
        assert_eq!(c.lda.alpha, 1.0 / 300.0);
        assert_eq!(c.weat, WeatSettings::default());
        assert!(c.base_model.is_none());
    }

    #[test]
    fn priors_follow_k_unless_given() {
        let c = RunConfig::parse(&format!("{MINIMAL}lda.k = 4\n"), Path::new(".")).unwrap();
        assert_eq!((c.lda.alpha, c.lda.beta), (0.25, 0.25));
        let c = RunConfig::parse(
            &format!("{MINIMAL}lda.k = 4\nlda.beta = 0.1\n"),
            Path::new("."),
        )
        .unwrap();
        assert_eq!((c.lda.alpha, c.lda.beta), (0.25, 0.1));
    }

    #[test]
    fn every_key_parses() {
        let text = "corpus=a\nlexicon=b\nstoplist=c\nlemmas=d\nbase_model=e\nweat_specs=f\n\
            language_threshold=0.5\nseed=9\noutput=o\nlda.k=3\nlda.alpha=0.2\nlda.beta=0.3\n\
            lda.iterations=7\nlda.token_cap=10\nlda.workers=2\nsgns.dim=8\nsgns.window=2\n\
            sgns.negatives=3\nsgns.epochs=4\nsgns.learning_rate=0.05\nsgns.min_count=1\n\
            sgns.workers=1\nfine_tune.epochs=2\nweat.oov_policy=balance\nweat.comparison=gte\n\
            weat.p_threshold=0.01\nweat.sampled_partitions=500\nweat.enumeration_ceiling=70\n\
            pearson.permutations=99\ngroup_test.resamples=98\n";
        let c = RunConfig::parse(text, Path::new("")).unwrap();
        assert_eq!(text.lines().count(), KEYS.len());
        assert_eq!(c.seed, 9);
        assert_eq!(c.lda.workers, 2);
        assert_eq!(c.sgns.learning_rate, 0.05);
        assert_eq!(c.weat.oov_policy, OovPolicy::Balance);
        assert_eq!(c.weat.comparison, Comparison::GreaterOrEqual);
        assert_eq!(c.weat.enumeration_ceiling, 70);
        assert_eq!(c.group_test_resamples, 98);
        assert_eq!(c.base_model.as_deref(), Some(Path::new("e")));
    }

    #[test]
    fn rejects_bad_input() {
        let p = Path::new(".");
        assert!(matches!(
            RunConfig::parse(&format!("{MINIMAL}colour = red\n"), p),
            Err(ConfigError::UnknownKey { line: 5, .. })
        ));
        assert!(matches!(
            RunConfig::parse(&format!("{MINIMAL}seed = 1\nseed = 2\n"), p),
            Err(ConfigError::DuplicateKey { line: 6, .. })
        ));
        assert!(matches!(
            RunConfig::parse("corpus = x\n", p),
            Err(ConfigError::MissingKey("lexicon"))
        ));
        assert!(matches!(
            RunConfig::parse(&format!("{MINIMAL}seed = -1\n"), p),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            RunConfig::parse(&format!("{MINIMAL}just words\n"), p),
            Err(ConfigError::Syntax { line: 5, .. })
        ));
    }

    #[test]
    fn validate_reports_missing_paths() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["c.ndjson", "s.txt", "m.tsv"] {
            fs::write(dir.path().join(f), "").unwrap();
        }
        let mut c = RunConfig::parse(MINIMAL, dir.path()).unwrap();
        c.lda.k = 5;
        match c.validate() {
            Err(ConfigError::MissingPath { key: "lexicon", .. }) => {}
            other => panic!("{other:?}"),
        }
        fs::write(dir.path().join("l.tsv"), "").unwrap();
        c.validate().unwrap();
        c.language_threshold = 1.5;
        assert!(c.validate().is_err());
    }
}
