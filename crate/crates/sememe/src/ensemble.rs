//! Score normalization and model ensembling: min-max normalization makes
//! the four predictors' scales commensurable, ratios convert to convex
//! weights, and the CSP predictor combines internal and external evidence
//! with per-word fallbacks when one side is unavailable.

use thiserror::Error;

use crate::embeddings::{CharEmbeddings, WordEmbeddings};
use crate::external::{Spwe, SpseModel};
use crate::internal::{PositionIndex, SpcseModel};
use crate::model::ModelError;
use crate::score::{RankedPrediction, ScoreVector};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("score vectors index different sememe inventories: {0} vs {1}")]
    IndexMismatch(usize, usize),
    #[error("score vectors belong to different words: {0:?} vs {1:?}")]
    WordMismatch(String, String),
    #[error("ensemble ratio must be positive and finite, got {0}")]
    BadRatio(f64),
    #[error("word {0:?} has neither an embedding nor internal evidence")]
    Unpredictable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Min-max normalization to [0, 1]; a constant vector maps to all zeros.
pub fn normalize_scores(v: &ScoreVector) -> ScoreVector {
    let min = v.scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return ScoreVector::zeros(v.word.clone(), v.scores.len());
    }
    let range = max - min;
    ScoreVector::new(
        v.word.clone(),
        v.scores.iter().map(|&x| (x - min) / range).collect(),
    )
}

/// Weighted addition `w_a * a + w_b * b` with `w_a = ratio / (1 + ratio)`
/// and `w_b = 1 / (1 + ratio)`, so the ratio hyperparameter is scale-free.
pub fn ensemble(a: &ScoreVector, b: &ScoreVector, ratio: f64) -> Result<ScoreVector, EnsembleError> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(EnsembleError::BadRatio(ratio));
    }
    if a.scores.len() != b.scores.len() {
        return Err(EnsembleError::IndexMismatch(a.scores.len(), b.scores.len()));
    }
    if a.word != b.word {
        return Err(EnsembleError::WordMismatch(a.word.clone(), b.word.clone()));
    }
    let w_a = ratio / (1.0 + ratio);
    let w_b = 1.0 / (1.0 + ratio);
    Ok(ScoreVector::new(
        a.word.clone(),
        a.scores
            .iter()
            .zip(&b.scores)
            .map(|(&x, &y)| w_a * x + w_b * y)
            .collect(),
    ))
}

/// Ensemble ratios and the SPSE regularization weight used when training
/// the SPSE member of the full ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleWeights {
    /// SPWE : SPSE inside the full ensemble.
    pub ratio_spwe_spse: f64,
    /// SPWCF : SPCSE.
    pub ratio_spwcf_spcse: f64,
    /// internal : external.
    pub ratio_internal_external: f64,
    /// Lambda for the SPSE model feeding the full ensemble.
    pub lambda_spse: f64,
}

impl Default for EnsembleWeights {
    fn default() -> Self {
        EnsembleWeights {
            ratio_spwe_spse: 0.3125,
            ratio_spwcf_spcse: 4.0,
            ratio_internal_external: 1.0,
            lambda_spse: 0.1,
        }
    }
}

impl EnsembleWeights {
    pub fn validate(&self) -> Result<(), EnsembleError> {
        for ratio in [
            self.ratio_spwe_spse,
            self.ratio_spwcf_spcse,
            self.ratio_internal_external,
        ] {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(EnsembleError::BadRatio(ratio));
            }
        }
        Ok(())
    }
}

/// Which evidence sources contributed to a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMix {
    Both,
    InternalOnly,
    ExternalOnly,
}

impl SourceMix {
    pub fn label(self) -> &'static str {
        match self {
            SourceMix::Both => "internal+external",
            SourceMix::InternalOnly => "internal",
            SourceMix::ExternalOnly => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspPrediction {
    pub ranked: RankedPrediction,
    pub source: SourceMix,
}

/// The four trained predictors plus the tables they score against.
pub struct CspModels<'a> {
    pub spwe: &'a Spwe<'a>,
    pub spse: &'a SpseModel,
    pub index: &'a PositionIndex,
    pub spcse: &'a SpcseModel,
    pub words: &'a WordEmbeddings,
    pub chars: &'a CharEmbeddings,
    pub weights: EnsembleWeights,
}

impl<'a> CspModels<'a> {
    /// Normalized internal ensemble, or None when the word has no internal
    /// evidence at all (every position slot unseen and no character has a
    /// prototype). A side without evidence contributes zeros.
    pub fn internal_scores(&self, word: &str) -> Result<Option<ScoreVector>, EnsembleError> {
        let spwcf = self.index.word_score(word)?;
        let spcse = match self.spcse.score(word, self.chars) {
            Ok(v) => Some(v),
            Err(ModelError::NoInternalEvidence(_)) => None,
            Err(e) => return Err(e.into()),
        };
        if spwcf.all_unseen && spcse.is_none() {
            return Ok(None);
        }
        let a = normalize_scores(&spwcf.scores);
        let b = match spcse {
            Some(v) => normalize_scores(&v),
            None => ScoreVector::zeros(word, a.scores.len()),
        };
        Ok(Some(ensemble(&a, &b, self.weights.ratio_spwcf_spcse)?))
    }

    /// Normalized external ensemble, or None when the word has no
    /// embedding.
    pub fn external_scores(&self, word: &str) -> Result<Option<ScoreVector>, EnsembleError> {
        let query = match self.words.get(word) {
            Some(q) => q,
            None => return Ok(None),
        };
        let spwe = self.spwe.score_vector(word, query, Some(word))?;
        let spse = self.spse.score(word, query)?;
        Ok(Some(ensemble(
            &normalize_scores(&spwe),
            &normalize_scores(&spse),
            self.weights.ratio_spwe_spse,
        )?))
    }

    /// Full prediction: internal and external ensembles combined; a word
    /// lacking one side falls back to the other alone.
    pub fn predict(&self, word: &str) -> Result<CspPrediction, EnsembleError> {
        if word.is_empty() {
            return Err(EnsembleError::Model(ModelError::EmptyWord));
        }
        let internal = self.internal_scores(word)?;
        let external = self.external_scores(word)?;
        let (scores, source) = match (internal, external) {
            (Some(i), Some(e)) => (
                ensemble(&i, &e, self.weights.ratio_internal_external)?,
                SourceMix::Both,
            ),
            (Some(i), None) => (i, SourceMix::InternalOnly),
            (None, Some(e)) => (e, SourceMix::ExternalOnly),
            (None, None) => return Err(EnsembleError::Unpredictable(word.to_string())),
        };
        Ok(CspPrediction {
            ranked: scores.ranked(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(word: &str, scores: &[f64]) -> ScoreVector {
        ScoreVector::new(word, scores.to_vec())
    }

    #[test]
    fn normalize_min_max() {
        let v = normalize_scores(&sv("w", &[0.0, 5.0, 10.0]));
        assert_eq!(v.scores, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_to_zeros() {
        let v = normalize_scores(&sv("w", &[3.0, 3.0, 3.0]));
        assert_eq!(v.scores, vec![0.0, 0.0, 0.0]);
        let single = normalize_scores(&sv("w", &[7.0]));
        assert_eq!(single.scores, vec![0.0]);
    }

    #[test]
    fn normalize_is_monotone() {
        let v = sv("w", &[0.1, -3.0, 2.0, 0.1]);
        let n = normalize_scores(&v);
        assert_eq!(v.ranked().order(), n.ranked().order());
    }

    #[test]
    fn ensemble_ratio_four_is_eighty_twenty() {
        let a = sv("w", &[1.0, 0.0]);
        let b = sv("w", &[0.0, 1.0]);
        let e = ensemble(&a, &b, 4.0).unwrap();
        assert!((e.scores[0] - 0.8).abs() < 1e-12);
        assert!((e.scores[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ensemble_with_zero_side_preserves_ranking() {
        let a = sv("w", &[0.9, 0.1, 0.5]);
        let zero = ScoreVector::zeros("w", 3);
        let e = ensemble(&a, &zero, 2.1).unwrap();
        assert_eq!(e.ranked().order(), a.ranked().order());
        let w_a = 2.1 / 3.1;
        for (got, want) in e.scores.iter().zip(&a.scores) {
            assert!((got - w_a * want).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_errors() {
        let a = sv("w", &[1.0]);
        let b = sv("w", &[1.0, 2.0]);
        assert!(matches!(
            ensemble(&a, &b, 1.0),
            Err(EnsembleError::IndexMismatch(1, 2))
        ));
        let c = sv("other", &[1.0]);
        assert!(matches!(
            ensemble(&a, &c, 1.0),
            Err(EnsembleError::WordMismatch(..))
        ));
        assert!(matches!(
            ensemble(&a, &a.clone(), 0.0),
            Err(EnsembleError::BadRatio(_))
        ));
    }

    #[test]
    fn convex_combination_is_idempotent() {
        let a = sv("w", &[0.2, 0.8, 0.5]);
        let e = ensemble(&a, &a, 4.0).unwrap();
        for (got, want) in e.scores.iter().zip(&a.scores) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
