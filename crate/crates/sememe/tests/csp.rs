//! Full-ensemble prediction checked against hand-computed weighted sums,
//! plus the per-word fallback behavior.

use sememe::embeddings::{CharEmbeddings, WordEmbeddings};
use sememe::ensemble::{CspModels, EnsembleError, EnsembleWeights, SourceMix};
use sememe::external::{spse_model_from_parts, Spwe, SpweConfig, SpseModel};
use sememe::internal::{spcse_model_from_parts, PositionIndex, SpcseModel};
use sememe::kb::AnnotationSet;

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-12 * want.abs().max(1.0)
}

struct Setup {
    train: AnnotationSet,
    emb: WordEmbeddings,
    chars: CharEmbeddings,
    spse: SpseModel,
    spcse: SpcseModel,
}

/// Three sememes; two train words carry the position evidence, the third
/// has neither an embedding nor known characters and only holds s2 in the
/// inventory. The factorization models are built from explicit tables so
/// every score is hand-checkable.
fn setup() -> Setup {
    let train = AnnotationSet::from_pairs([
        ("甲丙".to_string(), vec!["s0".to_string()]),
        ("丙乙".to_string(), vec!["s1".to_string()]),
        ("己己".to_string(), vec!["s2".to_string()]),
    ])
    .unwrap();
    let emb = WordEmbeddings::parse("甲丙 1 0\n丙乙 0 1\n甲乙 1 0\n戊戊 0 1\n", 2).unwrap();
    let chars = CharEmbeddings::parse("甲 1 1 0\n乙 1 0 1\n", 2, 3).unwrap();
    // embedding sums per sememe: u0 = (1,0), u1 = (0,2), u2 = (0.5,0)
    let spse = spse_model_from_parts(
        2,
        vec![1.0, 0.0, 0.0, 2.0, 0.5, 0.0],
        vec![0.0; 6],
        vec![],
        vec![0.0; 3],
        vec![],
    );
    // u0 = (0.6, 0), u1 = (0, 0.8), u2 = (0.2, 0.2)
    let spcse = spcse_model_from_parts(
        2,
        vec![0.6, 0.0, 0.0, 0.8, 0.2, 0.2],
        vec![0.0; 6],
        chars.chars().map(|c| (c, 0.0)).collect(),
        vec![0.0; 3],
        vec![],
    );
    Setup {
        train,
        emb,
        chars,
        spse,
        spcse,
    }
}

macro_rules! csp_models {
    ($setup:expr, $spwe:expr, $index:expr) => {
        CspModels {
            spwe: &$spwe,
            spse: &$setup.spse,
            index: &$index,
            spcse: &$setup.spcse,
            words: &$setup.emb,
            chars: &$setup.chars,
            weights: EnsembleWeights::default(),
        }
    };
}

#[test]
fn csp_matches_hand_computed_weighted_sums() {
    let s = setup();
    let spwe = Spwe::new(&s.train, &s.emb, SpweConfig::default()).unwrap();
    let index = PositionIndex::build(&s.train);
    let csp = csp_models!(s, spwe, index);

    // raw model outputs for 甲乙, by hand:
    //   SPWE: neighbors 甲丙 (cos 1, rank 1, {s0}), 丙乙 (cos 0, rank 2,
    //         {s1}), 己己 skipped (no embedding)
    //         -> [0.8, 0, 0] -> normalized [1, 0, 0]
    //   SPSE: q = (1,0) -> [1, 0, 0.5] -> normalized [1, 0, 0.5]
    //   SPWCF: Begin(甲) gives s0 at 1/1, End(乙) gives s1 at 1/1
    //         -> [1, 1, 0] -> normalized [1, 1, 0]
    //   SPCSE: candidates 甲 (1,0) and 乙 (0,1):
    //         u0 -> 甲 dot 0.6; u1 -> 乙 dot 0.8; u2 ties -> 甲 dot 0.2
    //         -> [0.6, 0.8, 0.2] -> normalized [2/3, 1, 0]
    // internal = 0.8*[1,1,0] + 0.2*[2/3,1,0]          = [14/15, 1, 0]
    // external = (0.3125*[1,0,0] + [1,0,0.5])/1.3125  = [1, 0, 8/21]
    // csp      = 0.5*internal + 0.5*external          = [29/30, 1/2, 4/21]
    let internal = csp.internal_scores("甲乙").unwrap().unwrap();
    assert!(close(internal.scores[0], 14.0 / 15.0), "{}", internal.scores[0]);
    assert!(close(internal.scores[1], 1.0), "{}", internal.scores[1]);
    assert!(close(internal.scores[2], 0.0), "{}", internal.scores[2]);

    let external = csp.external_scores("甲乙").unwrap().unwrap();
    assert!(close(external.scores[0], 1.0), "{}", external.scores[0]);
    assert!(close(external.scores[1], 0.0), "{}", external.scores[1]);
    assert!(close(external.scores[2], 8.0 / 21.0), "{}", external.scores[2]);

    let prediction = csp.predict("甲乙").unwrap();
    assert_eq!(prediction.source, SourceMix::Both);
    let mut scores = vec![0.0; 3];
    for &(j, score) in &prediction.ranked.ranking {
        scores[j as usize] = score;
    }
    assert!(close(scores[0], 29.0 / 30.0), "{}", scores[0]);
    assert!(close(scores[1], 0.5), "{}", scores[1]);
    assert!(close(scores[2], 4.0 / 21.0), "{}", scores[2]);
    assert_eq!(prediction.ranked.order(), vec![0, 1, 2]);
}

#[test]
fn word_without_embedding_uses_internal_alone() {
    let s = setup();
    let spwe = Spwe::new(&s.train, &s.emb, SpweConfig::default()).unwrap();
    let index = PositionIndex::build(&s.train);
    let csp = csp_models!(s, spwe, index);
    // 乙甲 has no embedding; its position slots are unseen but both
    // characters have prototypes, so internal evidence exists
    let prediction = csp.predict("乙甲").unwrap();
    assert_eq!(prediction.source, SourceMix::InternalOnly);
    let internal = csp.internal_scores("乙甲").unwrap().unwrap();
    assert_eq!(prediction.ranked, internal.ranked());
}

#[test]
fn word_without_internal_evidence_uses_external_alone() {
    let s = setup();
    let spwe = Spwe::new(&s.train, &s.emb, SpweConfig::default()).unwrap();
    let index = PositionIndex::build(&s.train);
    let csp = csp_models!(s, spwe, index);
    // 戊戊 has an embedding but its character is unknown everywhere
    let prediction = csp.predict("戊戊").unwrap();
    assert_eq!(prediction.source, SourceMix::ExternalOnly);
    let external = csp.external_scores("戊戊").unwrap().unwrap();
    assert_eq!(prediction.ranked, external.ranked());
}

#[test]
fn word_with_no_evidence_is_unpredictable() {
    let s = setup();
    let spwe = Spwe::new(&s.train, &s.emb, SpweConfig::default()).unwrap();
    let index = PositionIndex::build(&s.train);
    let csp = csp_models!(s, spwe, index);
    assert!(matches!(
        csp.predict("丁丁"),
        Err(EnsembleError::Unpredictable(_))
    ));
}

#[test]
fn identical_normalized_vectors_pass_through() {
    // convex combination idempotence: if all four models emit the same
    // normalized vector, every ensembling stage returns it unchanged
    use sememe::ensemble::ensemble;
    use sememe::score::ScoreVector;
    let v = ScoreVector::new("w", vec![0.0, 0.25, 1.0]);
    let internal = ensemble(&v, &v, 4.0).unwrap();
    let external = ensemble(&v, &v, 0.3125).unwrap();
    let combined = ensemble(&internal, &external, 1.0).unwrap();
    for (got, want) in combined.scores.iter().zip(&v.scores) {
        assert!(close(*got, *want));
    }
}
