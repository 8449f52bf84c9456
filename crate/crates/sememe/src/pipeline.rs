//! Reproducible pipelines over the library: artifact preparation, model
//! training with loss logs, batch prediction, and the evaluation report.
//! Every step is a pure function of the configuration and the input
//! files, so reruns produce byte-identical artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::embeddings::{CharEmbeddings, EmbeddingError, WordEmbeddings};
use crate::ensemble::{
    ensemble, normalize_scores, CspModels, EnsembleError, EnsembleWeights,
};
use crate::eval::{
    evaluate_buckets, evaluate_map, EvalError, ExclusionRules, FrequencyBuckets, MapReport,
};
use crate::external::{train_spse, Spwe, SpweConfig, SpseHyper, SpseModel};
use crate::internal::{train_spcse, PositionIndex, SpcseHyper, SpcseModel};
use crate::kb::{AnnotationSet, CorpusFrequencies, KbError, SememeCorrelation, SplitSizes};
use crate::model::ModelError;
use crate::score::RankedPrediction;

pub const FILTERED_FILE: &str = "filtered.tsv";
pub const SEMEMES_FILE: &str = "sememes.tsv";
pub const TRAIN_FILE: &str = "train.tsv";
pub const DEV_FILE: &str = "dev.tsv";
pub const TEST_FILE: &str = "test.tsv";
pub const PMI_FILE: &str = "pmi.tsv";
pub const POSITION_INDEX_FILE: &str = "position_index.tsv";
pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{field} file {path:?}: {source}")]
    Input {
        field: &'static str,
        path: PathBuf,
        source: Box<PipelineError>,
    },
    #[error("missing artifact {path:?}; {hint}")]
    MissingArtifact { path: PathBuf, hint: &'static str },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit code class: 2 configuration, 4 numeric, 3 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Model(ModelError::NonFiniteLoss { .. }) => 4,
            PipelineError::Ensemble(EnsembleError::Model(ModelError::NonFiniteLoss {
                ..
            })) => 4,
            PipelineError::Input { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

fn with_field<T>(
    field: &'static str,
    path: &Path,
    result: Result<T, PipelineError>,
) -> Result<T, PipelineError> {
    result.map_err(|e| PipelineError::Input {
        field,
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

/// Resolved key paths of a run: everything is joined against the config
/// file's directory.
pub struct Paths {
    pub base: PathBuf,
    pub out: PathBuf,
}

pub fn resolve_paths(config: &PipelineConfig, base: &Path) -> Result<Paths, PipelineError> {
    let out_raw = PipelineConfig::require(&config.output_dir, "output_dir")?;
    Ok(Paths {
        base: base.to_path_buf(),
        out: base.join(out_raw),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepareSummary {
    pub loaded_words: usize,
    pub filtered_words: usize,
    pub sememes: usize,
    pub train_words: usize,
    pub dev_words: usize,
    pub test_words: usize,
    pub pmi_entries: usize,
    pub manifest: PathBuf,
}

/// Loads and filters annotations, splits deterministically, computes the
/// PMI matrix and the position index, and writes every artifact plus a
/// digest manifest.
pub fn prepare(config: &PipelineConfig, base: &Path) -> Result<PrepareSummary, PipelineError> {
    let paths = resolve_paths(config, base)?;
    let ann_path = base.join(PipelineConfig::require(&config.annotations, "annotations")?);
    let full = with_field(
        "annotations",
        &ann_path,
        AnnotationSet::from_path(&ann_path).map_err(PipelineError::from),
    )?;
    let loaded_words = full.word_count();
    let filtered = full.filter_sememes(config.min_sememe_count)?;
    let split = filtered.split(
        SplitSizes {
            train: config.train_size,
            dev: config.dev_size,
            test: config.test_size,
        },
        config.seed,
    )?;
    let pmi = split.train.compute_pmi();
    let index = PositionIndex::build(&split.train);

    fs::create_dir_all(&paths.out)?;
    let mut digests: BTreeMap<&'static str, String> = BTreeMap::new();
    let mut write_artifact = |name: &'static str, content: String| -> Result<(), PipelineError> {
        let path = paths.out.join(name);
        fs::write(&path, content.as_bytes())?;
        digests.insert(name, hex_digest(content.as_bytes()));
        Ok(())
    };
    write_artifact(FILTERED_FILE, filtered.to_tsv())?;
    write_artifact(
        SEMEMES_FILE,
        filtered
            .sememes()
            .iter()
            .map(|s| format!("{s}\n"))
            .collect::<String>(),
    )?;
    write_artifact(TRAIN_FILE, split.train.to_tsv())?;
    write_artifact(DEV_FILE, split.dev.to_tsv())?;
    write_artifact(TEST_FILE, split.test.to_tsv())?;
    write_artifact(PMI_FILE, pmi.to_tsv())?;
    write_artifact(POSITION_INDEX_FILE, index.to_tsv())?;

    let mut manifest = String::new();
    for (key, value) in [
        ("loaded_words", loaded_words),
        ("filtered_words", filtered.word_count()),
        ("sememes", filtered.sememe_count()),
        ("train_size", split.train.word_count()),
        ("dev_size", split.dev.word_count()),
        ("test_size", split.test.word_count()),
        ("seed", config.seed as usize),
        ("pmi_entries", pmi.len()),
    ] {
        writeln!(manifest, "meta\t{key}\t{value}").expect("String write cannot fail");
    }
    for (name, digest) in &digests {
        writeln!(manifest, "digest\t{name}\t{digest}").expect("String write cannot fail");
    }
    let manifest_path = paths.out.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest.as_bytes())?;

    Ok(PrepareSummary {
        loaded_words,
        filtered_words: filtered.word_count(),
        sememes: filtered.sememe_count(),
        train_words: split.train.word_count(),
        dev_words: split.dev.word_count(),
        test_words: split.test.word_count(),
        pmi_entries: pmi.len(),
        manifest: manifest_path,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn read_artifact(out: &Path, name: &str, hint: &'static str) -> Result<String, PipelineError> {
    let path = out.join(name);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact { path, hint });
    }
    Ok(fs::read_to_string(path)?)
}

fn load_inventory(out: &Path) -> Result<Vec<String>, PipelineError> {
    let text = read_artifact(out, SEMEMES_FILE, "run `prepare` first")?;
    Ok(text.lines().map(str::to_string).collect())
}

fn load_split_set(
    out: &Path,
    name: &str,
    inventory: &[String],
) -> Result<AnnotationSet, PipelineError> {
    let text = read_artifact(out, name, "run `prepare` first")?;
    Ok(AnnotationSet::parse_with_inventory(&text, inventory)?)
}

fn load_word_embeddings(
    config: &PipelineConfig,
    base: &Path,
) -> Result<WordEmbeddings, PipelineError> {
    let raw = PipelineConfig::require(&config.word_embeddings, "word_embeddings")?;
    let path = base.join(raw);
    with_field(
        "word_embeddings",
        &path,
        WordEmbeddings::from_path(&path, config.embedding_dim).map_err(PipelineError::from),
    )
}

fn load_char_embeddings(
    config: &PipelineConfig,
    base: &Path,
) -> Result<CharEmbeddings, PipelineError> {
    let raw = PipelineConfig::require(&config.char_embeddings, "char_embeddings")?;
    let path = base.join(raw);
    with_field(
        "char_embeddings",
        &path,
        CharEmbeddings::from_path(&path, config.char_embedding_dim, config.n_prototypes)
            .map_err(PipelineError::from),
    )
}

/// Which factorization model a `train` run produces. `SpseCsp` is the SPSE
/// variant regularized for the full ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainTarget {
    Spse,
    SpseCsp,
    Spcse,
}

impl TrainTarget {
    pub fn parse(name: &str) -> Option<TrainTarget> {
        match name {
            "spse" => Some(TrainTarget::Spse),
            "spse-csp" => Some(TrainTarget::SpseCsp),
            "spcse" => Some(TrainTarget::Spcse),
            _ => None,
        }
    }

    pub fn checkpoint_file(self) -> &'static str {
        match self {
            TrainTarget::Spse => "spse.ckpt.tsv",
            TrainTarget::SpseCsp => "spse_csp.ckpt.tsv",
            TrainTarget::Spcse => "spcse.ckpt.tsv",
        }
    }

    pub fn loss_file(self) -> &'static str {
        match self {
            TrainTarget::Spse => "spse.loss.tsv",
            TrainTarget::SpseCsp => "spse_csp.loss.tsv",
            TrainTarget::Spcse => "spcse.loss.tsv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub target: TrainTarget,
    pub epochs: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub dropped_words: usize,
    pub checkpoint: PathBuf,
}

/// Trains the requested model from prepared artifacts; writes the
/// checkpoint and a per-epoch full-objective loss log.
pub fn train(
    config: &PipelineConfig,
    base: &Path,
    target: TrainTarget,
) -> Result<TrainSummary, PipelineError> {
    let paths = resolve_paths(config, base)?;
    let inventory = load_inventory(&paths.out)?;
    let train_set = load_split_set(&paths.out, TRAIN_FILE, &inventory)?;
    let pmi_text = read_artifact(&paths.out, PMI_FILE, "run `prepare` first")?;
    let pmi = SememeCorrelation::parse(&pmi_text)?;

    let (epoch_losses, dropped, checkpoint): (Vec<f64>, usize, PathBuf) = match target {
        TrainTarget::Spse | TrainTarget::SpseCsp => {
            let emb = load_word_embeddings(config, base)?;
            let hyper = SpseHyper {
                lambda: if target == TrainTarget::Spse {
                    config.spse_lambda
                } else {
                    config.spse_lambda_csp
                },
                zero_sample_prob: config.spse_zero_sample_prob,
                epochs: config.spse_epochs,
                lr0: config.spse_lr0,
                seed: config.seed,
            };
            let out = train_spse(&train_set, &pmi, &emb, &hyper)?;
            let path = paths.out.join(target.checkpoint_file());
            out.model.save(&path)?;
            (out.epoch_losses, out.dropped_words, path)
        }
        TrainTarget::Spcse => {
            let chars = load_char_embeddings(config, base)?;
            let hyper = SpcseHyper {
                lambda: config.spcse_lambda,
                zero_sample_prob: config.spcse_zero_sample_prob,
                epochs: config.spcse_epochs,
                lr0: config.spcse_lr0,
                seed: config.seed,
            };
            let out = train_spcse(&train_set, &pmi, &chars, &hyper)?;
            let path = paths.out.join(target.checkpoint_file());
            out.model.save(&path)?;
            (out.epoch_losses, out.dropped_words, path)
        }
    };

    let mut loss_log = String::new();
    for (epoch, loss) in epoch_losses.iter().enumerate() {
        writeln!(loss_log, "{epoch}\t{loss}").expect("String write cannot fail");
    }
    fs::write(paths.out.join(target.loss_file()), loss_log.as_bytes())?;

    Ok(TrainSummary {
        target,
        epochs: epoch_losses.len() - 1,
        initial_loss: epoch_losses[0],
        final_loss: *epoch_losses.last().expect("at least the initial loss"),
        dropped_words: dropped,
        checkpoint,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SememeScore {
    pub sememe: String,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PredictionRecord {
    pub word: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<&'static str>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sememes: Vec<SememeScore>,
}

/// Everything the full-ensemble predictor needs, loaded from artifacts.
pub struct LoadedModels {
    pub inventory: Vec<String>,
    pub train_set: AnnotationSet,
    pub index: PositionIndex,
    pub words: WordEmbeddings,
    pub chars: CharEmbeddings,
    pub spse_standalone: SpseModel,
    pub spse_csp: SpseModel,
    pub spcse: SpcseModel,
}

pub fn load_models(config: &PipelineConfig, base: &Path) -> Result<LoadedModels, PipelineError> {
    let paths = resolve_paths(config, base)?;
    let inventory = load_inventory(&paths.out)?;
    let train_set = load_split_set(&paths.out, TRAIN_FILE, &inventory)?;
    let index_text = read_artifact(&paths.out, POSITION_INDEX_FILE, "run `prepare` first")?;
    let index = PositionIndex::parse(&index_text)?;
    let words = load_word_embeddings(config, base)?;
    let chars = load_char_embeddings(config, base)?;

    let spse_path = paths.out.join(TrainTarget::Spse.checkpoint_file());
    if !spse_path.exists() {
        return Err(PipelineError::MissingArtifact {
            path: spse_path,
            hint: "run `train --model spse` first",
        });
    }
    let spse_standalone = SpseModel::load(&spse_path)?;
    let csp_path = paths.out.join(TrainTarget::SpseCsp.checkpoint_file());
    let spse_csp = if csp_path.exists() {
        SpseModel::load(&csp_path)?
    } else {
        spse_standalone.clone()
    };
    let spcse_path = paths.out.join(TrainTarget::Spcse.checkpoint_file());
    if !spcse_path.exists() {
        return Err(PipelineError::MissingArtifact {
            path: spcse_path,
            hint: "run `train --model spcse` first",
        });
    }
    let spcse = SpcseModel::load(&spcse_path)?;

    Ok(LoadedModels {
        inventory,
        train_set,
        index,
        words,
        chars,
        spse_standalone,
        spse_csp,
        spcse,
    })
}

impl LoadedModels {
    pub fn weights(&self, config: &PipelineConfig) -> EnsembleWeights {
        EnsembleWeights {
            ratio_spwe_spse: config.ratio_spwe_spse_csp,
            ratio_spwcf_spcse: config.ratio_spwcf_spcse,
            ratio_internal_external: config.ratio_internal_external,
            lambda_spse: config.spse_lambda_csp,
        }
    }

    pub fn spwe(&self, config: &PipelineConfig) -> Result<Spwe<'_>, PipelineError> {
        Ok(Spwe::new(
            &self.train_set,
            &self.words,
            SpweConfig {
                c: config.spwe_c,
                k: config.spwe_k,
            },
        )?)
    }
}

/// One record per word: the top-k sememes with scores and which evidence
/// sources contributed.
pub fn predict(
    config: &PipelineConfig,
    base: &Path,
    words: &[String],
    top_k: usize,
) -> Result<Vec<PredictionRecord>, PipelineError> {
    let models = load_models(config, base)?;
    let spwe = models.spwe(config)?;
    let csp = CspModels {
        spwe: &spwe,
        spse: &models.spse_csp,
        index: &models.index,
        spcse: &models.spcse,
        words: &models.words,
        chars: &models.chars,
        weights: models.weights(config),
    };
    let mut records = Vec::with_capacity(words.len());
    for word in words {
        match csp.predict(word) {
            Ok(prediction) => {
                let sememes = prediction
                    .ranked
                    .top(top_k)
                    .iter()
                    .map(|&(j, score)| SememeScore {
                        sememe: models.inventory[j as usize].clone(),
                        score,
                    })
                    .collect();
                records.push(PredictionRecord {
                    word: word.clone(),
                    status: "ok",
                    source: Some(prediction.source.label()),
                    sememes,
                });
            }
            Err(EnsembleError::Unpredictable(_)) => records.push(PredictionRecord {
                word: word.clone(),
                status: "unpredictable",
                source: None,
                sememes: Vec::new(),
            }),
            Err(other) => return Err(other.into()),
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Dev,
    Test,
}

impl EvalSplit {
    pub fn parse(name: &str) -> Option<EvalSplit> {
        match name {
            "dev" => Some(EvalSplit::Dev),
            "test" => Some(EvalSplit::Test),
            _ => None,
        }
    }

    pub fn artifact(self) -> &'static str {
        match self {
            EvalSplit::Dev => DEV_FILE,
            EvalSplit::Test => TEST_FILE,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EvalSplit::Dev => "dev",
            EvalSplit::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub name: &'static str,
    pub report: MapReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketBlock {
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
    pub methods: Vec<(&'static str, Vec<Option<f64>>)>,
    pub excluded: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub split: &'static str,
    pub words: usize,
    pub sememes: usize,
    pub methods: Vec<MethodRow>,
    pub buckets: Option<BucketBlock>,
}

pub const METHOD_NAMES: [&str; 7] = [
    "SPWE",
    "SPSE",
    "SPWE+SPSE",
    "SPWCF",
    "SPCSE",
    "SPWCF+SPCSE",
    "CSP",
];

/// Evaluates all seven methods on the chosen split, and adds the
/// frequency-bucket block when a corpus is configured.
pub fn evaluate(
    config: &PipelineConfig,
    base: &Path,
    split: EvalSplit,
) -> Result<EvaluationReport, PipelineError> {
    let paths = resolve_paths(config, base)?;
    let models = load_models(config, base)?;
    let eval_set = load_split_set(&paths.out, split.artifact(), &models.inventory)?;
    let spwe = models.spwe(config)?;
    let csp = CspModels {
        spwe: &spwe,
        spse: &models.spse_csp,
        index: &models.index,
        spcse: &models.spcse,
        words: &models.words,
        chars: &models.chars,
        weights: models.weights(config),
    };

    let spwe_pred = |word: &str| -> Option<RankedPrediction> {
        spwe.score_word(word).ok().map(|v| v.ranked())
    };
    let spse_pred = |word: &str| -> Option<RankedPrediction> {
        let query = models.words.get(word)?;
        models.spse_standalone.score(word, query).ok().map(|v| v.ranked())
    };
    let external_pred = |word: &str| -> Option<RankedPrediction> {
        let query = models.words.get(word)?;
        let a = spwe.score_vector(word, query, Some(word)).ok()?;
        let b = models.spse_standalone.score(word, query).ok()?;
        ensemble(
            &normalize_scores(&a),
            &normalize_scores(&b),
            config.ratio_spwe_spse,
        )
        .ok()
        .map(|v| v.ranked())
    };
    let spwcf_pred = |word: &str| -> Option<RankedPrediction> {
        let scored = models.index.word_score(word).ok()?;
        if scored.all_unseen {
            None
        } else {
            Some(scored.scores.ranked())
        }
    };
    let spcse_pred = |word: &str| -> Option<RankedPrediction> {
        models.spcse.score(word, &models.chars).ok().map(|v| v.ranked())
    };
    let internal_pred = |word: &str| -> Option<RankedPrediction> {
        csp.internal_scores(word).ok().flatten().map(|v| v.ranked())
    };
    let csp_pred = |word: &str| -> Option<RankedPrediction> {
        csp.predict(word).ok().map(|p| p.ranked)
    };

    let mut methods = Vec::new();
    let mut bucket_methods: Vec<(&'static str, Vec<Option<f64>>)> = Vec::new();
    let mut bucket_counts: Vec<usize> = Vec::new();
    let mut bucket_labels: Vec<String> = Vec::new();
    let mut excluded = BTreeMap::new();

    let freqs = match &config.frequency_corpus {
        Some(raw) => {
            let path = base.join(raw);
            Some(with_field(
                "frequency_corpus",
                &path,
                CorpusFrequencies::from_path(&path).map_err(PipelineError::from),
            )?)
        }
        None => None,
    };
    let buckets = FrequencyBuckets::new(config.bucket_bounds.clone())
        .map_err(|_| ConfigError::OutOfRange {
            key: "bucket_bounds".into(),
            msg: "must be non-empty and strictly increasing".into(),
        })?;
    let rules = ExclusionRules {
        numerals: config.exclude_numerals,
        punctuation: config.exclude_punctuation,
        single_char: config.exclude_single_char,
        zero_frequency: config.exclude_zero_freq,
        foreign: config.exclude_foreign,
    };

    macro_rules! run_method {
        ($name:expr, $pred:expr) => {{
            let report = evaluate_map($pred, &eval_set)?;
            methods.push(MethodRow {
                name: $name,
                report,
            });
            if let Some(freqs) = &freqs {
                let bucket_report = evaluate_buckets($pred, &eval_set, freqs, &buckets, &rules)?;
                if bucket_counts.is_empty() {
                    bucket_counts = bucket_report.rows.iter().map(|r| r.words).collect();
                    bucket_labels = bucket_report.rows.iter().map(|r| r.label.clone()).collect();
                    excluded = bucket_report.excluded.clone();
                }
                bucket_methods.push((
                    $name,
                    bucket_report.rows.iter().map(|r| r.map).collect(),
                ));
            }
        }};
    }

    run_method!("SPWE", &spwe_pred);
    run_method!("SPSE", &spse_pred);
    run_method!("SPWE+SPSE", &external_pred);
    run_method!("SPWCF", &spwcf_pred);
    run_method!("SPCSE", &spcse_pred);
    run_method!("SPWCF+SPCSE", &internal_pred);
    run_method!("CSP", &csp_pred);

    let report = EvaluationReport {
        split: split.label(),
        words: eval_set.word_count(),
        sememes: eval_set.sememe_count(),
        methods,
        buckets: freqs.map(|_| BucketBlock {
            labels: bucket_labels,
            counts: bucket_counts,
            methods: bucket_methods,
            excluded,
        }),
    };

    let report_path = paths.out.join(format!("report_{}.txt", split.label()));
    fs::write(&report_path, report.render().as_bytes())?;
    Ok(report)
}

impl EvaluationReport {
    /// Structured text: an overall MAP block, and a per-bucket table when
    /// frequencies were supplied.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        writeln!(w, "# sememe prediction evaluation").unwrap();
        writeln!(w, "split\t{}", self.split).unwrap();
        writeln!(w, "words\t{}", self.words).unwrap();
        writeln!(w, "candidate_sememes\t{}", self.sememes).unwrap();
        writeln!(w).unwrap();
        writeln!(w, "method\tmap\tevaluated\tskipped").unwrap();
        for row in &self.methods {
            writeln!(
                w,
                "{}\t{:.4}\t{}\t{}",
                row.name,
                row.report.map,
                row.report.evaluated,
                row.report.skipped_unpredictable + row.report.skipped_empty_gold
            )
            .unwrap();
        }
        if let Some(block) = &self.buckets {
            writeln!(w).unwrap();
            writeln!(w, "# map by word frequency").unwrap();
            writeln!(w, "frequency\t{}", block.labels.join("\t")).unwrap();
            writeln!(
                w,
                "words\t{}",
                block
                    .counts
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join("\t")
            )
            .unwrap();
            for (name, maps) in &block.methods {
                let cells: Vec<String> = maps
                    .iter()
                    .map(|m| match m {
                        Some(v) => format!("{v:.4}"),
                        None => "-".to_string(),
                    })
                    .collect();
                writeln!(w, "{}\t{}", name, cells.join("\t")).unwrap();
            }
            writeln!(w).unwrap();
            writeln!(w, "# excluded words").unwrap();
            for (reason, count) in &block.excluded {
                writeln!(w, "{reason}\t{count}").unwrap();
            }
        }
        out
    }
}
