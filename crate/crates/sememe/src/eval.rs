//! Ranking evaluation: average precision per word, mean average precision
//! over a test set, and MAP broken down by corpus-frequency buckets with
//! configurable word-exclusion rules.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::kb::{AnnotationSet, CorpusFrequencies};
use crate::score::RankedPrediction;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("word {0:?} has an empty gold sememe set")]
    EmptyGold(String),
    #[error("gold sememe {sememe} of word {word:?} is not a candidate")]
    InvalidGold { word: String, sememe: u32 },
    #[error("no test word was evaluable")]
    EvaluationEmpty,
}

/// Average precision of the gold set within a full candidate ranking:
/// the mean over gold sememes of precision at each gold sememe's rank.
pub fn average_precision(ranked: &RankedPrediction, gold: &[u32]) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold(ranked.word.clone()));
    }
    for &g in gold {
        if g as usize >= ranked.len() {
            return Err(EvalError::InvalidGold {
                word: ranked.word.clone(),
                sememe: g,
            });
        }
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, &(j, _)) in ranked.ranking.iter().enumerate() {
        if gold.binary_search(&j).is_ok() {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
            if hits == gold.len() {
                break;
            }
        }
    }
    Ok(sum / gold.len() as f64)
}

/// Per-word evaluation outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApOutcome {
    Ap(f64),
    Unpredictable,
    EmptyGold,
}

/// Runs the predictor over every test word in parallel; outcomes are
/// positionally collected, so the result is independent of scheduling.
/// The predictor returns None for words it cannot score.
pub fn word_aps<P>(predict: P, test: &AnnotationSet) -> Result<Vec<ApOutcome>, EvalError>
where
    P: Fn(&str) -> Option<RankedPrediction> + Sync,
{
    (0..test.word_count())
        .into_par_iter()
        .map(|i| {
            let word = test.word(i);
            let gold = test.row(i);
            if gold.is_empty() {
                return Ok(ApOutcome::EmptyGold);
            }
            match predict(word) {
                Some(ranked) => average_precision(&ranked, gold).map(ApOutcome::Ap),
                None => Ok(ApOutcome::Unpredictable),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapReport {
    pub map: f64,
    pub evaluated: usize,
    pub skipped_unpredictable: usize,
    pub skipped_empty_gold: usize,
}

/// Sorts values before summing, so the mean is exactly invariant under
/// permutation of the test-word order.
fn stable_mean(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn aggregate(outcomes: &[ApOutcome]) -> Result<MapReport, EvalError> {
    let mut aps: Vec<f64> = Vec::new();
    let mut unpredictable = 0;
    let mut empty_gold = 0;
    for outcome in outcomes {
        match outcome {
            ApOutcome::Ap(ap) => aps.push(*ap),
            ApOutcome::Unpredictable => unpredictable += 1,
            ApOutcome::EmptyGold => empty_gold += 1,
        }
    }
    if aps.is_empty() {
        return Err(EvalError::EvaluationEmpty);
    }
    let evaluated = aps.len();
    Ok(MapReport {
        map: stable_mean(&mut aps),
        evaluated,
        skipped_unpredictable: unpredictable,
        skipped_empty_gold: empty_gold,
    })
}

/// Unweighted mean AP over the evaluable test words; skip counts reported.
pub fn evaluate_map<P>(predict: P, test: &AnnotationSet) -> Result<MapReport, EvalError>
where
    P: Fn(&str) -> Option<RankedPrediction> + Sync,
{
    aggregate(&word_aps(predict, test)?)
}

/// Corpus-frequency bucket boundaries: inclusive upper bounds, plus one
/// open bucket above the last bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyBuckets {
    bounds: Vec<u64>,
}

impl Default for FrequencyBuckets {
    fn default() -> Self {
        FrequencyBuckets {
            bounds: vec![50, 100, 1000, 5000, 10_000, 30_000],
        }
    }
}

impl FrequencyBuckets {
    pub fn new(bounds: Vec<u64>) -> Result<Self, EvalError> {
        if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::EvaluationEmpty);
        }
        Ok(FrequencyBuckets { bounds })
    }

    pub fn bounds(&self) -> &[u64] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bucket_of(&self, count: u64) -> usize {
        self.bounds
            .iter()
            .position(|&b| count <= b)
            .unwrap_or(self.bounds.len())
    }

    pub fn label(&self, idx: usize) -> String {
        if idx == 0 {
            format!("<={}", self.bounds[0])
        } else if idx < self.bounds.len() {
            format!("{}-{}", self.bounds[idx - 1] + 1, self.bounds[idx])
        } else {
            format!(">{}", self.bounds[self.bounds.len() - 1])
        }
    }
}

/// Toggleable word-exclusion predicates applied before bucketing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExclusionRules {
    pub numerals: bool,
    pub punctuation: bool,
    pub single_char: bool,
    pub zero_frequency: bool,
    pub foreign: bool,
}

impl Default for ExclusionRules {
    fn default() -> Self {
        ExclusionRules {
            numerals: true,
            punctuation: true,
            single_char: true,
            zero_frequency: true,
            foreign: true,
        }
    }
}

const CJK_NUMERALS: &str = "〇一二三四五六七八九十百千万亿兆零两壹贰叁肆伍陆柒捌玖拾佰仟";
const CJK_PUNCTUATION: &str = "。，、；：？！…—·《》〈〉“”‘’（）【】〔〕「」『』";

fn is_numeral_char(c: char) -> bool {
    c.is_numeric() || CJK_NUMERALS.contains(c) || matches!(c, '.' | '%' | '．' | '％')
}

fn is_punctuation_char(c: char) -> bool {
    c.is_ascii_punctuation() || CJK_PUNCTUATION.contains(c)
}

pub fn is_numeral_word(word: &str) -> bool {
    !word.is_empty()
        && word.chars().all(is_numeral_char)
        && word.chars().any(|c| c.is_numeric() || CJK_NUMERALS.contains(c))
}

pub fn is_punctuation_word(word: &str) -> bool {
    !word.is_empty() && word.chars().all(is_punctuation_char)
}

pub fn is_foreign_word(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_alphabetic())
}

impl ExclusionRules {
    /// First matching exclusion reason, if any.
    pub fn reason(&self, word: &str, freq: u64) -> Option<&'static str> {
        if self.numerals && is_numeral_word(word) {
            return Some("numeral");
        }
        if self.punctuation && is_punctuation_word(word) {
            return Some("punctuation");
        }
        if self.single_char && word.chars().count() == 1 {
            return Some("single-character");
        }
        if self.zero_frequency && freq == 0 {
            return Some("zero-frequency");
        }
        if self.foreign && is_foreign_word(word) {
            return Some("foreign");
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketRow {
    pub label: String,
    pub words: usize,
    pub map: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    pub rows: Vec<BucketRow>,
    pub overall: MapReport,
    pub excluded: BTreeMap<&'static str, usize>,
}

/// Per-bucket MAP over the non-excluded test words. Empty buckets report
/// their MAP as absent. The overall block covers the same filtered words.
pub fn evaluate_buckets<P>(
    predict: P,
    test: &AnnotationSet,
    freqs: &CorpusFrequencies,
    buckets: &FrequencyBuckets,
    rules: &ExclusionRules,
) -> Result<BucketReport, EvalError>
where
    P: Fn(&str) -> Option<RankedPrediction> + Sync,
{
    let mut excluded: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut kept_indices: Vec<usize> = Vec::new();
    for i in 0..test.word_count() {
        let word = test.word(i);
        match rules.reason(word, freqs.get(word)) {
            Some(reason) => *excluded.entry(reason).or_insert(0) += 1,
            None => kept_indices.push(i),
        }
    }
    let kept = test.subset(&kept_indices);
    let outcomes = word_aps(predict, &kept)?;
    let overall = aggregate(&outcomes)?;

    let mut per_bucket_aps: Vec<Vec<f64>> = vec![Vec::new(); buckets.len()];
    let mut per_bucket_words: Vec<usize> = vec![0; buckets.len()];
    for (pos, outcome) in outcomes.iter().enumerate() {
        let word = kept.word(pos);
        let bucket = buckets.bucket_of(freqs.get(word));
        per_bucket_words[bucket] += 1;
        if let ApOutcome::Ap(ap) = outcome {
            per_bucket_aps[bucket].push(*ap);
        }
    }
    let rows = (0..buckets.len())
        .map(|b| BucketRow {
            label: buckets.label(b),
            words: per_bucket_words[b],
            map: if per_bucket_aps[b].is_empty() {
                None
            } else {
                Some(stable_mean(&mut per_bucket_aps[b]))
            },
        })
        .collect();
    Ok(BucketReport {
        rows,
        overall,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::ScoreVector;

    fn ranking(word: &str, order: &[u32]) -> RankedPrediction {
        let n = order.len();
        let mut scores = vec![0.0; n];
        for (rank, &j) in order.iter().enumerate() {
            scores[j as usize] = (n - rank) as f64;
        }
        ScoreVector::new(word, scores).ranked()
    }

    #[test]
    fn ap_gold_at_ranks_one_and_three() {
        let r = ranking("w", &[0, 1, 2, 3]);
        let ap = average_precision(&r, &[0, 2]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn ap_perfect_ranking_is_one() {
        let r = ranking("w", &[1, 3, 0, 2]);
        let ap = average_precision(&r, &[1, 3]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn ap_single_gold_rank_four() {
        let r = ranking("w", &[0, 1, 2, 3]);
        let ap = average_precision(&r, &[3]).unwrap();
        assert_eq!(ap, 0.25);
    }

    #[test]
    fn ap_empty_gold_is_error() {
        let r = ranking("w", &[0, 1]);
        assert!(matches!(
            average_precision(&r, &[]),
            Err(EvalError::EmptyGold(_))
        ));
    }

    #[test]
    fn ap_gold_outside_candidates_is_error() {
        let r = ranking("w", &[0, 1]);
        assert!(matches!(
            average_precision(&r, &[5]),
            Err(EvalError::InvalidGold { sememe: 5, .. })
        ));
    }

    #[test]
    fn ap_random_ranking_expectation_matches_harmonic_mean() {
        // single gold over n candidates: averaging AP over the gold sitting
        // at every rank equals (1/n) * sum_k 1/k
        for n in 1..=6u32 {
            let order: Vec<u32> = (0..n).collect();
            let r = ranking("w", &order);
            let mut total = 0.0;
            for g in 0..n {
                total += average_precision(&r, &[g]).unwrap();
            }
            let mean = total / n as f64;
            let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum::<f64>() / n as f64;
            assert!((mean - harmonic).abs() < 1e-12, "n = {n}");
        }
    }

    fn test_set() -> AnnotationSet {
        AnnotationSet::parse("w1\ta,b\nw2\tb\nw3\tc\n").unwrap()
    }

    #[test]
    fn map_of_oracle_predictor_is_one() {
        let test = test_set();
        let n = test.sememe_count();
        let report = evaluate_map(
            |word| {
                let gold = test.sememe_set(word)?;
                let mut scores = vec![0.0; n];
                for &j in gold {
                    scores[j as usize] = 1.0;
                }
                Some(ScoreVector::new(word, scores).ranked())
            },
            &test,
        )
        .unwrap();
        assert_eq!(report.map, 1.0);
        assert_eq!(report.evaluated, 3);
    }

    #[test]
    fn map_averages_word_aps() {
        let test = AnnotationSet::parse("w1\ta\nw2\tb\n").unwrap();
        // w1 gold ranks first (AP 1.0), w2 gold ranks second (AP 0.5)
        let report = evaluate_map(
            |word| Some(ScoreVector::new(word, vec![2.0, 1.0]).ranked()),
            &test,
        )
        .unwrap();
        assert_eq!(report.map, 0.75);
    }

    #[test]
    fn map_counts_unpredictable_words() {
        let test = test_set();
        let n = test.sememe_count();
        let report = evaluate_map(
            |word| {
                if word == "w2" {
                    return None;
                }
                Some(ScoreVector::zeros(word, n).ranked())
            },
            &test,
        )
        .unwrap();
        assert_eq!(report.evaluated, 2);
        assert_eq!(report.skipped_unpredictable, 1);
    }

    #[test]
    fn map_all_skipped_is_error() {
        let test = test_set();
        assert!(matches!(
            evaluate_map(|_| None, &test),
            Err(EvalError::EvaluationEmpty)
        ));
    }

    #[test]
    fn map_invariant_under_word_permutation() {
        let words = ["w1", "w2", "w3"];
        let sets: Vec<AnnotationSet> = [
            [0usize, 1, 2],
            [2, 0, 1],
            [1, 2, 0],
        ]
        .iter()
        .map(|perm| {
            let pairs: Vec<(String, Vec<String>)> = perm
                .iter()
                .map(|&i| {
                    (
                        words[i].to_string(),
                        vec![["a", "b", "c"][i].to_string(), "common".to_string()],
                    )
                })
                .collect();
            AnnotationSet::from_pairs(pairs).unwrap()
        })
        .collect();
        let maps: Vec<f64> = sets
            .iter()
            .map(|set| {
                let n = set.sememe_count();
                evaluate_map(
                    |word| {
                        // fixed arbitrary scores keyed on the word text
                        let seedval = word.bytes().map(u64::from).sum::<u64>();
                        let scores = (0..n)
                            .map(|j| ((seedval + j as u64 * 31) % 97) as f64)
                            .collect();
                        Some(ScoreVector::new(word, scores).ranked())
                    },
                    set,
                )
                .unwrap()
                .map
            })
            .collect();
        assert_eq!(maps[0], maps[1]);
        assert_eq!(maps[0], maps[2]);
    }

    #[test]
    fn bucket_boundaries() {
        let b = FrequencyBuckets::default();
        assert_eq!(b.bucket_of(0), 0);
        assert_eq!(b.bucket_of(50), 0);
        assert_eq!(b.bucket_of(51), 1);
        assert_eq!(b.bucket_of(100), 1);
        assert_eq!(b.bucket_of(101), 2);
        assert_eq!(b.bucket_of(30_000), 5);
        assert_eq!(b.bucket_of(30_001), 6);
        assert_eq!(b.label(0), "<=50");
        assert_eq!(b.label(1), "51-100");
        assert_eq!(b.label(6), ">30000");
        assert_eq!(b.len(), 7);
    }

    #[test]
    fn exclusion_rules_classify() {
        let rules = ExclusionRules::default();
        assert_eq!(rules.reason("123", 5), Some("numeral"));
        assert_eq!(rules.reason("三十五", 5), Some("numeral"));
        assert_eq!(rules.reason("。", 5), Some("punctuation"));
        assert_eq!(rules.reason("火", 5), Some("single-character"));
        assert_eq!(rules.reason("火车", 0), Some("zero-frequency"));
        assert_eq!(rules.reason("CD机", 5), Some("foreign"));
        assert_eq!(rules.reason("火车", 5), None);
        let off = ExclusionRules {
            numerals: false,
            punctuation: false,
            single_char: false,
            zero_frequency: false,
            foreign: false,
        };
        assert_eq!(off.reason("123", 0), None);
    }

    #[test]
    fn buckets_single_bucket_matches_overall() {
        let test = AnnotationSet::parse("火车\ta,b\n铁路\tb\n").unwrap();
        let freqs = CorpusFrequencies::parse("火车 铁路 火车");
        let n = test.sememe_count();
        let predict = |word: &str| {
            let gold = test.sememe_set(word)?;
            let mut scores = vec![0.0; n];
            for (rank, &j) in gold.iter().enumerate() {
                scores[j as usize] = 10.0 - rank as f64;
            }
            Some(ScoreVector::new(word, scores).ranked())
        };
        let report = evaluate_buckets(
            predict,
            &test,
            &freqs,
            &FrequencyBuckets::default(),
            &ExclusionRules::default(),
        )
        .unwrap();
        // every word falls into <=50
        assert_eq!(report.rows[0].words, 2);
        assert_eq!(report.rows[0].map, Some(report.overall.map));
        for row in &report.rows[1..] {
            assert_eq!(row.words, 0);
            assert_eq!(row.map, None);
        }
    }

    #[test]
    fn buckets_straddle_boundary() {
        let test = AnnotationSet::parse("火车\ta\n铁路\ta\n").unwrap();
        let mut corpus = Vec::new();
        for _ in 0..50 {
            corpus.push("火车");
        }
        for _ in 0..51 {
            corpus.push("铁路");
        }
        let freqs = CorpusFrequencies::parse(&corpus.join(" "));
        let report = evaluate_buckets(
            |word| Some(ScoreVector::zeros(word, 1).ranked()),
            &test,
            &freqs,
            &FrequencyBuckets::default(),
            &ExclusionRules::default(),
        )
        .unwrap();
        assert_eq!(report.rows[0].words, 1);
        assert_eq!(report.rows[1].words, 1);
    }

    #[test]
    fn buckets_report_exclusions() {
        let test = AnnotationSet::parse("火车\ta\n火\ta\n123\ta\nzz\ta\n").unwrap();
        let freqs = CorpusFrequencies::parse("火车 火 123 zz");
        let report = evaluate_buckets(
            |word| Some(ScoreVector::zeros(word, 1).ranked()),
            &test,
            &freqs,
            &FrequencyBuckets::default(),
            &ExclusionRules::default(),
        )
        .unwrap();
        assert_eq!(report.excluded.get("numeral"), Some(&1));
        assert_eq!(report.excluded.get("single-character"), Some(&1));
        assert_eq!(report.excluded.get("foreign"), Some(&1));
        assert_eq!(report.overall.evaluated, 1);
    }
}
