//! Pipeline-level behavior on the bundled fixture: loss logs, error
//! context, manifest contents, and prediction records.

use std::path::{Path, PathBuf};

use sememe::config::PipelineConfig;
use sememe::pipeline::{self, EvalSplit, PipelineError, TrainTarget};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture_config(out_dir: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::from_path(&fixture_dir().join("fixture.conf")).unwrap();
    config.output_dir = Some(out_dir.to_string_lossy().into_owned());
    config
}

#[test]
fn missing_annotation_file_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = fixture_config(tmp.path());
    config.annotations = Some("does-not-exist.tsv".into());
    let err = pipeline::prepare(&config, &fixture_dir()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("annotations"), "error lacks the field name: {msg}");
    assert!(msg.contains("does-not-exist.tsv"), "error lacks the path: {msg}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn manifest_records_split_sizes_and_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture_config(tmp.path());
    let summary = pipeline::prepare(&config, &fixture_dir()).unwrap();
    assert_eq!(summary.train_words, 14);
    assert_eq!(summary.dev_words, 3);
    assert_eq!(summary.test_words, 3);
    let manifest = std::fs::read_to_string(tmp.path().join("manifest.tsv")).unwrap();
    assert!(manifest.contains("meta\ttrain_size\t14"));
    assert!(manifest.contains("meta\tdev_size\t3"));
    assert!(manifest.contains("meta\ttest_size\t3"));
    assert!(manifest.contains("meta\tseed\t7"));
    for artifact in [
        "filtered.tsv",
        "sememes.tsv",
        "train.tsv",
        "dev.tsv",
        "test.tsv",
        "pmi.tsv",
        "position_index.tsv",
    ] {
        assert!(
            manifest.contains(&format!("digest\t{artifact}\t")),
            "manifest lacks a digest for {artifact}"
        );
    }
}

#[test]
fn zero_epoch_training_logs_single_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = fixture_config(tmp.path());
    config.spse_epochs = 0;
    pipeline::prepare(&config, &fixture_dir()).unwrap();
    let summary = pipeline::train(&config, &fixture_dir(), TrainTarget::Spse).unwrap();
    assert_eq!(summary.epochs, 0);
    assert_eq!(summary.initial_loss, summary.final_loss);
    let log = std::fs::read_to_string(tmp.path().join("spse.loss.tsv")).unwrap();
    assert_eq!(log.lines().count(), 1);

    // a rerun with zero epochs reproduces the seeded initialization
    let first = std::fs::read(tmp.path().join("spse.ckpt.tsv")).unwrap();
    pipeline::train(&config, &fixture_dir(), TrainTarget::Spse).unwrap();
    let second = std::fs::read(tmp.path().join("spse.ckpt.tsv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn fixture_training_reduces_loss() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture_config(tmp.path());
    pipeline::prepare(&config, &fixture_dir()).unwrap();
    for target in [TrainTarget::Spse, TrainTarget::SpseCsp, TrainTarget::Spcse] {
        let summary = pipeline::train(&config, &fixture_dir(), target).unwrap();
        assert!(
            summary.final_loss < summary.initial_loss,
            "{target:?}: loss {} -> {}",
            summary.initial_loss,
            summary.final_loss
        );
    }
}

#[test]
fn divergent_training_reports_numeric_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = fixture_config(tmp.path());
    config.spse_lr0 = 1e12;
    pipeline::prepare(&config, &fixture_dir()).unwrap();
    let err = pipeline::train(&config, &fixture_dir(), TrainTarget::Spse).unwrap_err();
    assert_eq!(err.exit_code(), 4, "unexpected error class: {err}");
}

#[test]
fn predict_reports_sources_and_unpredictable_words() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture_config(tmp.path());
    pipeline::prepare(&config, &fixture_dir()).unwrap();
    pipeline::train(&config, &fixture_dir(), TrainTarget::Spse).unwrap();
    pipeline::train(&config, &fixture_dir(), TrainTarget::Spcse).unwrap();
    // no spse-csp checkpoint: predict falls back to the standalone one
    let words = vec!["铁匠".into(), "铁炉".into(), "xyz".into()];
    let records = pipeline::predict(&config, &fixture_dir(), &words, 3).unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(records[0].status, "ok");
    assert_eq!(records[0].source, Some("internal+external"));
    assert_eq!(records[0].sememes.len(), 3);
    // 铁炉 is not annotated but all its characters are known
    assert_eq!(records[1].status, "ok");
    assert_eq!(records[2].status, "unpredictable");
    assert!(records[2].sememes.is_empty());

    let json = serde_json::to_string(&records[0]).unwrap();
    assert!(json.contains("\"word\":\"铁匠\""));
    assert!(json.contains("\"sememe\""));
}

#[test]
fn evaluate_requires_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixture_config(tmp.path());
    pipeline::prepare(&config, &fixture_dir()).unwrap();
    let err = pipeline::evaluate(&config, &fixture_dir(), EvalSplit::Test).unwrap_err();
    assert!(matches!(err, PipelineError::MissingArtifact { .. }));
    assert!(err.to_string().contains("train"), "hint missing: {err}");
}

#[test]
fn evaluate_without_corpus_omits_bucket_block() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = fixture_config(tmp.path());
    config.frequency_corpus = None;
    pipeline::prepare(&config, &fixture_dir()).unwrap();
    pipeline::train(&config, &fixture_dir(), TrainTarget::Spse).unwrap();
    pipeline::train(&config, &fixture_dir(), TrainTarget::Spcse).unwrap();
    let report = pipeline::evaluate(&config, &fixture_dir(), EvalSplit::Dev).unwrap();
    assert!(report.buckets.is_none());
    assert_eq!(report.methods.len(), 7);
    assert_eq!(report.split, "dev");
}
