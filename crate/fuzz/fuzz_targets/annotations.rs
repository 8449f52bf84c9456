//! Annotation TSV parsing must never panic; accepted inputs must survive a
//! serialize-then-reparse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::kb::AnnotationSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(set) = AnnotationSet::parse(text) {
        let round = AnnotationSet::parse(&set.to_tsv()).expect("serialized form parses");
        assert_eq!(set, round);
    }
});
