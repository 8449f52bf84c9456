//! Property tests for the text formats and the PMI construction.

use proptest::prelude::*;

use sememe::embeddings::{cosine, WordEmbeddings};
use sememe::kb::AnnotationSet;

/// Identifier without the characters the formats reserve.
fn ident() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[a-z\u{4e00}-\u{4e2f}]{1,4}").unwrap()
}

fn annotation_pairs() -> impl Strategy<Value = Vec<(String, Vec<String>)>> {
    prop::collection::btree_map(ident(), prop::collection::vec(ident(), 1..5), 1..12)
        .prop_map(|m| m.into_iter().collect())
}

proptest! {
    #[test]
    fn annotation_round_trip(pairs in annotation_pairs()) {
        let set = AnnotationSet::from_pairs(pairs).unwrap();
        let reparsed = AnnotationSet::parse(&set.to_tsv()).unwrap();
        prop_assert_eq!(&set, &reparsed);
        // and the round trip is stable
        prop_assert_eq!(reparsed.to_tsv(), set.to_tsv());
    }

    #[test]
    fn filter_idempotent_at_fixed_min_count(
        pairs in annotation_pairs(),
        min_count in 1usize..4,
    ) {
        let set = AnnotationSet::from_pairs(pairs).unwrap();
        if let Ok(once) = set.filter_sememes(min_count) {
            let twice = once.filter_sememes(min_count).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn pmi_entries_symmetric_and_finite(pairs in annotation_pairs()) {
        let set = AnnotationSet::from_pairs(pairs).unwrap();
        let pmi = set.compute_pmi();
        for ((j, k), value) in pmi.iter_upper() {
            prop_assert!(value.is_finite());
            prop_assert_eq!(pmi.get(j, k), pmi.get(k, j));
        }
        let reparsed = sememe::kb::SememeCorrelation::parse(&pmi.to_tsv()).unwrap();
        prop_assert_eq!(pmi, reparsed);
    }

    #[test]
    fn splits_partition_the_word_set(
        pairs in annotation_pairs(),
        seed in any::<u64>(),
    ) {
        let set = AnnotationSet::from_pairs(pairs).unwrap();
        let n = set.word_count();
        let train_n = n / 2;
        let dev_n = (n - train_n) / 2;
        let test_n = n - train_n - dev_n;
        let split = set
            .split(
                sememe::kb::SplitSizes { train: train_n, dev: dev_n, test: test_n },
                seed,
            )
            .unwrap();
        let mut all: Vec<&String> = split
            .train
            .words()
            .iter()
            .chain(split.dev.words())
            .chain(split.test.words())
            .collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), n);
    }

    #[test]
    fn embeddings_write_parse_exact(
        rows in prop::collection::btree_map(
            ident(),
            prop::collection::vec(-1e6f64..1e6, 3),
            1..10,
        ),
    ) {
        let mut text = String::new();
        for (word, vector) in &rows {
            if vector.iter().all(|&x| x == 0.0) {
                continue;
            }
            text.push_str(word);
            for x in vector {
                text.push_str(&format!(" {x}"));
            }
            text.push('\n');
        }
        prop_assume!(!text.is_empty());
        let emb = WordEmbeddings::parse(&text, 3).unwrap();
        let mut buf = Vec::new();
        emb.write(&mut buf).unwrap();
        let reparsed = WordEmbeddings::parse(std::str::from_utf8(&buf).unwrap(), 3).unwrap();
        for (word, vector) in &rows {
            if vector.iter().all(|&x| x == 0.0) {
                continue;
            }
            prop_assert_eq!(reparsed.get(word).unwrap(), emb.get(word).unwrap());
        }
    }

    #[test]
    fn cosine_symmetric_and_bounded(
        u in prop::collection::vec(-1e3f64..1e3, 4),
        v in prop::collection::vec(-1e3f64..1e3, 4),
    ) {
        prop_assume!(u.iter().any(|&x| x != 0.0));
        prop_assume!(v.iter().any(|&x| x != 0.0));
        let ab = cosine(&u, &v).unwrap();
        let ba = cosine(&v, &u).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab.abs() <= 1.0 + 1e-12);
    }
}
