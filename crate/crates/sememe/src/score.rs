//! Per-word sememe relevance scores: the common output type of every
//! predictor, and score rankings with a deterministic tie-break.

/// A relevance score for every candidate sememe of one word. The vector is
/// indexed by sememe index and always covers the whole inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub word: String,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(word: impl Into<String>, scores: Vec<f64>) -> Self {
        debug_assert!(scores.iter().all(|s| s.is_finite()));
        ScoreVector {
            word: word.into(),
            scores,
        }
    }

    pub fn zeros(word: impl Into<String>, n_sememes: usize) -> Self {
        ScoreVector {
            word: word.into(),
            scores: vec![0.0; n_sememes],
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Ranks all candidate sememes by score descending; equal scores order
    /// by ascending sememe index.
    pub fn ranked(&self) -> RankedPrediction {
        let mut order: Vec<u32> = (0..self.scores.len() as u32).collect();
        order.sort_by(|&a, &b| {
            self.scores[b as usize]
                .total_cmp(&self.scores[a as usize])
                .then(a.cmp(&b))
        });
        RankedPrediction {
            word: self.word.clone(),
            ranking: order
                .into_iter()
                .map(|j| (j, self.scores[j as usize]))
                .collect(),
        }
    }
}

/// A full ordering of the candidate sememes for one word, highest score
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    pub word: String,
    /// `(sememe index, score)` pairs covering every candidate.
    pub ranking: Vec<(u32, f64)>,
}

impl RankedPrediction {
    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// 1-based rank of a sememe index.
    pub fn rank_of(&self, sememe: u32) -> Option<usize> {
        self.ranking.iter().position(|&(j, _)| j == sememe).map(|p| p + 1)
    }

    /// The order of sememe indices alone.
    pub fn order(&self) -> Vec<u32> {
        self.ranking.iter().map(|&(j, _)| j).collect()
    }

    pub fn top(&self, k: usize) -> &[(u32, f64)] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}
