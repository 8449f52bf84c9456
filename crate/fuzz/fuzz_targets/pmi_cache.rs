//! PMI cache TSV decoding; accepted matrices round-trip exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::kb::SememeCorrelation;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pmi) = SememeCorrelation::parse(text) {
        let round = SememeCorrelation::parse(&pmi.to_tsv()).expect("serialized form parses");
        assert_eq!(pmi, round);
    }
});
