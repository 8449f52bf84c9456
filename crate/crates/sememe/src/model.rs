//! Shared pieces of the two matrix-factorization trainers: error type,
//! training outcome, seeded initialization, the linear learning-rate
//! schedule, and per-epoch sample plans with zero-cell sampling.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no train word has an embedding")]
    NoNeighbors,
    #[error("no train word is usable for training")]
    NoTrainableWords,
    #[error("word {0:?} has no embedding")]
    WordNotEmbedded(String),
    #[error("no character of {0:?} has a prototype vector")]
    NoInternalEvidence(String),
    #[error("empty word string")]
    EmptyWord,
    #[error("query vector is all-zero")]
    ZeroQuery,
    #[error("vector length {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameters became non-finite during epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("checkpoint line {line}: {msg}")]
    MalformedCheckpoint { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A trained model plus its per-epoch loss log. `epoch_losses[0]` is the
/// loss at initialization; entry `e + 1` is the loss after epoch `e`.
#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub epoch_losses: Vec<f64>,
    pub dropped_words: usize,
}

/// One SGD visit: either a word×sememe matrix cell or an ordered
/// sememe-pair correlation cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Sample {
    Cell { word: u32, sememe: u32, target: f64 },
    Pair { j: u32, k: u32, target: f64 },
}

/// Uniform initialization in `[-0.5/dim, +0.5/dim)`.
pub(crate) fn uniform_init<R: Rng>(rng: &mut R, count: usize, dim: usize) -> Vec<f64> {
    (0..count)
        .map(|_| (rng.gen::<f64>() - 0.5) / dim as f64)
        .collect()
}

/// Linear decay from `lr0` at the first epoch to `lr0 / 10` at the last.
pub(crate) fn learning_rate(lr0: f64, epoch: usize, epochs: usize) -> f64 {
    if epochs <= 1 {
        lr0
    } else {
        lr0 * (1.0 - 0.9 * epoch as f64 / (epochs - 1) as f64)
    }
}

/// Pushes `Cell` samples for every annotated cell of every row (target 1)
/// and for each zero cell independently kept with probability `p`
/// (target 0). Rows hold sorted sememe indices.
pub(crate) fn push_cell_samples<R: Rng>(
    plan: &mut Vec<Sample>,
    rows: &[Vec<u32>],
    n_sememes: usize,
    p: f64,
    rng: &mut R,
) {
    for (i, row) in rows.iter().enumerate() {
        let mut next_pos = row.iter().peekable();
        for j in 0..n_sememes as u32 {
            if next_pos.peek() == Some(&&j) {
                next_pos.next();
                plan.push(Sample::Cell {
                    word: i as u32,
                    sememe: j,
                    target: 1.0,
                });
            } else if p > 0.0 && rng.gen::<f64>() < p {
                plan.push(Sample::Cell {
                    word: i as u32,
                    sememe: j,
                    target: 0.0,
                });
            }
        }
    }
}

/// Pushes `Pair` samples: both orders of every stored correlation entry
/// (once for the diagonal), plus zero-target ordered pairs independently
/// kept with probability `p`.
pub(crate) fn push_pair_samples<R: Rng>(
    plan: &mut Vec<Sample>,
    pmi: &crate::kb::SememeCorrelation,
    n_sememes: usize,
    p: f64,
    rng: &mut R,
) {
    for ((j, k), value) in pmi.iter_upper() {
        plan.push(Sample::Pair {
            j,
            k,
            target: value,
        });
        if j != k {
            plan.push(Sample::Pair {
                j: k,
                k: j,
                target: value,
            });
        }
    }
    if p > 0.0 {
        for j in 0..n_sememes as u32 {
            for k in 0..n_sememes as u32 {
                if !pmi.contains(j, k) && rng.gen::<f64>() < p {
                    plan.push(Sample::Pair { j, k, target: 0.0 });
                }
            }
        }
    }
}

pub(crate) fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}
