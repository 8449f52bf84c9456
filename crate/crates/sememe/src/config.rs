//! Pipeline configuration: a flat `key = value` text file with one
//! documented key per hyperparameter. Unknown and duplicate keys are
//! rejected so a typo cannot silently run with defaults.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: expected `key = value`")]
    BadSyntax { line: usize },
    #[error("line {line}: bad value for {key:?}: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("{key}: {msg}")]
    OutOfRange { key: String, msg: String },
    #[error("missing required key {0:?} for this command")]
    MissingKey(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Every knob of the pipeline. Defaults reproduce the published
/// experimental settings; a config file only has to name the input paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub annotations: Option<String>,
    pub word_embeddings: Option<String>,
    pub char_embeddings: Option<String>,
    pub frequency_corpus: Option<String>,
    pub output_dir: Option<String>,

    pub embedding_dim: usize,
    pub char_embedding_dim: usize,
    pub n_prototypes: u32,
    pub min_sememe_count: usize,

    pub train_size: usize,
    pub dev_size: usize,
    pub test_size: usize,
    pub seed: u64,

    pub spwe_c: f64,
    pub spwe_k: usize,

    pub spse_lambda: f64,
    pub spse_lambda_csp: f64,
    pub spse_zero_sample_prob: f64,
    pub spse_epochs: usize,
    pub spse_lr0: f64,

    pub spcse_lambda: f64,
    pub spcse_zero_sample_prob: f64,
    pub spcse_epochs: usize,
    pub spcse_lr0: f64,

    pub ratio_spwe_spse: f64,
    pub ratio_spwe_spse_csp: f64,
    pub ratio_spwcf_spcse: f64,
    pub ratio_internal_external: f64,

    pub bucket_bounds: Vec<u64>,
    pub exclude_numerals: bool,
    pub exclude_punctuation: bool,
    pub exclude_single_char: bool,
    pub exclude_zero_freq: bool,
    pub exclude_foreign: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            annotations: None,
            word_embeddings: None,
            char_embeddings: None,
            frequency_corpus: None,
            output_dir: None,
            embedding_dim: 200,
            char_embedding_dim: 200,
            n_prototypes: 3,
            min_sememe_count: 5,
            train_size: 48_000,
            dev_size: 6_000,
            test_size: 6_000,
            seed: 42,
            spwe_c: 0.8,
            spwe_k: 100,
            spse_lambda: 0.5,
            spse_lambda_csp: 0.1,
            spse_zero_sample_prob: 0.005,
            spse_epochs: 20,
            spse_lr0: 0.01,
            spcse_lambda: 0.1,
            spcse_zero_sample_prob: 0.025,
            spcse_epochs: 20,
            spcse_lr0: 0.01,
            ratio_spwe_spse: 2.1,
            ratio_spwe_spse_csp: 0.3125,
            ratio_spwcf_spcse: 4.0,
            ratio_internal_external: 1.0,
            bucket_bounds: vec![50, 100, 1000, 5000, 10_000, 30_000],
            exclude_numerals: true,
            exclude_punctuation: true,
            exclude_single_char: true,
            exclude_zero_freq: true,
            exclude_foreign: true,
        }
    }
}

const KEYS: &[&str] = &[
    "annotations",
    "word_embeddings",
    "char_embeddings",
    "frequency_corpus",
    "output_dir",
    "embedding_dim",
    "char_embedding_dim",
    "n_prototypes",
    "min_sememe_count",
    "train_size",
    "dev_size",
    "test_size",
    "seed",
    "spwe_c",
    "spwe_k",
    "spse_lambda",
    "spse_lambda_csp",
    "spse_zero_sample_prob",
    "spse_epochs",
    "spse_lr0",
    "spcse_lambda",
    "spcse_zero_sample_prob",
    "spcse_epochs",
    "spcse_lr0",
    "ratio_spwe_spse",
    "ratio_spwe_spse_csp",
    "ratio_spwcf_spcse",
    "ratio_internal_external",
    "bucket_bounds",
    "exclude_numerals",
    "exclude_punctuation",
    "exclude_single_char",
    "exclude_zero_freq",
    "exclude_foreign",
];

impl PipelineConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = PipelineConfig::default();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::BadSyntax { line: lineno })?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line: lineno,
                    key: key.to_string(),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line: lineno,
                    key: key.to_string(),
                });
            }
            config.set(key, value, lineno)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies `key=value` overrides (command-line flags, environment) on
    /// top of the parsed file.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line: 0,
                key: key.to_string(),
            });
        }
        self.set(key, value, 0)?;
        self.validate()
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(
            value: &str,
            key: &str,
            line: usize,
        ) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                line,
                key: key.to_string(),
                msg: format!("cannot parse {value:?}"),
            })
        }
        match key {
            "annotations" => self.annotations = Some(value.to_string()),
            "word_embeddings" => self.word_embeddings = Some(value.to_string()),
            "char_embeddings" => self.char_embeddings = Some(value.to_string()),
            "frequency_corpus" => self.frequency_corpus = Some(value.to_string()),
            "output_dir" => self.output_dir = Some(value.to_string()),
            "embedding_dim" => self.embedding_dim = parse(value, key, line)?,
            "char_embedding_dim" => self.char_embedding_dim = parse(value, key, line)?,
            "n_prototypes" => self.n_prototypes = parse(value, key, line)?,
            "min_sememe_count" => self.min_sememe_count = parse(value, key, line)?,
            "train_size" => self.train_size = parse(value, key, line)?,
            "dev_size" => self.dev_size = parse(value, key, line)?,
            "test_size" => self.test_size = parse(value, key, line)?,
            "seed" => self.seed = parse(value, key, line)?,
            "spwe_c" => self.spwe_c = parse(value, key, line)?,
            "spwe_k" => self.spwe_k = parse(value, key, line)?,
            "spse_lambda" => self.spse_lambda = parse(value, key, line)?,
            "spse_lambda_csp" => self.spse_lambda_csp = parse(value, key, line)?,
            "spse_zero_sample_prob" => self.spse_zero_sample_prob = parse(value, key, line)?,
            "spse_epochs" => self.spse_epochs = parse(value, key, line)?,
            "spse_lr0" => self.spse_lr0 = parse(value, key, line)?,
            "spcse_lambda" => self.spcse_lambda = parse(value, key, line)?,
            "spcse_zero_sample_prob" => self.spcse_zero_sample_prob = parse(value, key, line)?,
            "spcse_epochs" => self.spcse_epochs = parse(value, key, line)?,
            "spcse_lr0" => self.spcse_lr0 = parse(value, key, line)?,
            "ratio_spwe_spse" => self.ratio_spwe_spse = parse(value, key, line)?,
            "ratio_spwe_spse_csp" => self.ratio_spwe_spse_csp = parse(value, key, line)?,
            "ratio_spwcf_spcse" => self.ratio_spwcf_spcse = parse(value, key, line)?,
            "ratio_internal_external" => self.ratio_internal_external = parse(value, key, line)?,
            "bucket_bounds" => {
                let mut bounds = Vec::new();
                for piece in value.split(',') {
                    bounds.push(parse(piece.trim(), key, line)?);
                }
                self.bucket_bounds = bounds;
            }
            "exclude_numerals" => self.exclude_numerals = parse(value, key, line)?,
            "exclude_punctuation" => self.exclude_punctuation = parse(value, key, line)?,
            "exclude_single_char" => self.exclude_single_char = parse(value, key, line)?,
            "exclude_zero_freq" => self.exclude_zero_freq = parse(value, key, line)?,
            "exclude_foreign" => self.exclude_foreign = parse(value, key, line)?,
            _ => unreachable!("key membership checked by caller"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    key: key.to_string(),
                    msg: msg.to_string(),
                })
            }
        };
        check(self.embedding_dim >= 1, "embedding_dim", "must be >= 1")?;
        check(self.char_embedding_dim >= 1, "char_embedding_dim", "must be >= 1")?;
        check(self.n_prototypes >= 1, "n_prototypes", "must be >= 1")?;
        check(self.min_sememe_count >= 1, "min_sememe_count", "must be >= 1")?;
        check(
            self.spwe_c > 0.0 && self.spwe_c < 1.0,
            "spwe_c",
            "must lie in (0, 1)",
        )?;
        check(self.spwe_k >= 1, "spwe_k", "must be >= 1")?;
        for (key, p) in [
            ("spse_zero_sample_prob", self.spse_zero_sample_prob),
            ("spcse_zero_sample_prob", self.spcse_zero_sample_prob),
        ] {
            check((0.0..=1.0).contains(&p), key, "must lie in [0, 1]")?;
        }
        for (key, v) in [
            ("spse_lambda", self.spse_lambda),
            ("spse_lambda_csp", self.spse_lambda_csp),
            ("spcse_lambda", self.spcse_lambda),
        ] {
            check(v.is_finite() && v >= 0.0, key, "must be finite and >= 0")?;
        }
        for (key, v) in [("spse_lr0", self.spse_lr0), ("spcse_lr0", self.spcse_lr0)] {
            check(v.is_finite() && v > 0.0, key, "must be positive")?;
        }
        for (key, v) in [
            ("ratio_spwe_spse", self.ratio_spwe_spse),
            ("ratio_spwe_spse_csp", self.ratio_spwe_spse_csp),
            ("ratio_spwcf_spcse", self.ratio_spwcf_spcse),
            ("ratio_internal_external", self.ratio_internal_external),
        ] {
            check(v.is_finite() && v > 0.0, key, "must be positive")?;
        }
        check(!self.bucket_bounds.is_empty(), "bucket_bounds", "must be non-empty")?;
        check(
            self.bucket_bounds.windows(2).all(|w| w[0] < w[1]),
            "bucket_bounds",
            "must be strictly increasing",
        )?;
        Ok(())
    }

    /// Serializes every key in a fixed order; parsing the result yields an
    /// equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |key: &str, value: String| {
            writeln!(out, "{key} = {value}").expect("String write cannot fail");
        };
        for (key, value) in [
            ("annotations", &self.annotations),
            ("word_embeddings", &self.word_embeddings),
            ("char_embeddings", &self.char_embeddings),
            ("frequency_corpus", &self.frequency_corpus),
            ("output_dir", &self.output_dir),
        ] {
            if let Some(v) = value {
                kv(key, v.clone());
            }
        }
        kv("embedding_dim", self.embedding_dim.to_string());
        kv("char_embedding_dim", self.char_embedding_dim.to_string());
        kv("n_prototypes", self.n_prototypes.to_string());
        kv("min_sememe_count", self.min_sememe_count.to_string());
        kv("train_size", self.train_size.to_string());
        kv("dev_size", self.dev_size.to_string());
        kv("test_size", self.test_size.to_string());
        kv("seed", self.seed.to_string());
        kv("spwe_c", self.spwe_c.to_string());
        kv("spwe_k", self.spwe_k.to_string());
        kv("spse_lambda", self.spse_lambda.to_string());
        kv("spse_lambda_csp", self.spse_lambda_csp.to_string());
        kv("spse_zero_sample_prob", self.spse_zero_sample_prob.to_string());
        kv("spse_epochs", self.spse_epochs.to_string());
        kv("spse_lr0", self.spse_lr0.to_string());
        kv("spcse_lambda", self.spcse_lambda.to_string());
        kv("spcse_zero_sample_prob", self.spcse_zero_sample_prob.to_string());
        kv("spcse_epochs", self.spcse_epochs.to_string());
        kv("spcse_lr0", self.spcse_lr0.to_string());
        kv("ratio_spwe_spse", self.ratio_spwe_spse.to_string());
        kv("ratio_spwe_spse_csp", self.ratio_spwe_spse_csp.to_string());
        kv("ratio_spwcf_spcse", self.ratio_spwcf_spcse.to_string());
        kv("ratio_internal_external", self.ratio_internal_external.to_string());
        kv(
            "bucket_bounds",
            self.bucket_bounds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("exclude_numerals", self.exclude_numerals.to_string());
        kv("exclude_punctuation", self.exclude_punctuation.to_string());
        kv("exclude_single_char", self.exclude_single_char.to_string());
        kv("exclude_zero_freq", self.exclude_zero_freq.to_string());
        kv("exclude_foreign", self.exclude_foreign.to_string());
        out
    }

    /// Resolves a configured path against the config file's directory.
    pub fn resolve(&self, base_dir: &Path, raw: &str) -> PathBuf {
        base_dir.join(raw)
    }

    pub fn require<'a>(
        field: &'a Option<String>,
        key: &'static str,
    ) -> Result<&'a str, ConfigError> {
        field.as_deref().ok_or(ConfigError::MissingKey(key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_settings() {
        let c = PipelineConfig::default();
        assert_eq!(c.spwe_c, 0.8);
        assert_eq!(c.spwe_k, 100);
        assert_eq!(c.spse_lambda, 0.5);
        assert_eq!(c.spse_lambda_csp, 0.1);
        assert_eq!(c.spse_zero_sample_prob, 0.005);
        assert_eq!(c.spcse_lambda, 0.1);
        assert_eq!(c.spcse_zero_sample_prob, 0.025);
        assert_eq!(c.spse_epochs, 20);
        assert_eq!(c.spcse_epochs, 20);
        assert_eq!(c.spse_lr0, 0.01);
        assert_eq!(c.spcse_lr0, 0.01);
        assert_eq!(c.n_prototypes, 3);
        assert_eq!(c.embedding_dim, 200);
        assert_eq!(c.ratio_spwe_spse, 2.1);
        assert_eq!(c.ratio_spwe_spse_csp, 0.3125);
        assert_eq!(c.ratio_spwcf_spcse, 4.0);
        assert_eq!(c.ratio_internal_external, 1.0);
        assert_eq!(c.train_size, 48_000);
        assert_eq!(c.dev_size, 6_000);
        assert_eq!(c.test_size, 6_000);
        assert_eq!(c.bucket_bounds, vec![50, 100, 1000, 5000, 10_000, 30_000]);
    }

    #[test]
    fn parse_round_trip() {
        let mut c = PipelineConfig::default();
        c.annotations = Some("data/annotations.tsv".into());
        c.spwe_c = 0.65;
        c.bucket_bounds = vec![10, 20];
        let text = c.to_text();
        let parsed = PipelineConfig::parse(&text).unwrap();
        assert_eq!(c, parsed);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::parse("spwe_cc = 0.8\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 1, .. }));
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = PipelineConfig::parse("spwe_c = 0.8\nspwe_c = 0.7\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn out_of_range_values_rejected() {
        assert!(PipelineConfig::parse("spwe_c = 1.5\n").is_err());
        assert!(PipelineConfig::parse("spse_zero_sample_prob = 2\n").is_err());
        assert!(PipelineConfig::parse("min_sememe_count = 0\n").is_err());
        assert!(PipelineConfig::parse("bucket_bounds = 50,40\n").is_err());
        assert!(PipelineConfig::parse("spwe_k = 0\n").is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let c = PipelineConfig::parse("# a comment\n\nseed = 7\n").unwrap();
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut c = PipelineConfig::default();
        c.apply_override("seed", "9").unwrap();
        assert_eq!(c.seed, 9);
        assert!(c.apply_override("nope", "1").is_err());
        assert!(c.apply_override("spwe_c", "7").is_err());
    }
}
