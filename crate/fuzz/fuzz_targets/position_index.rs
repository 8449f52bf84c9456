//! Position index artifact decoding; accepted indexes round-trip exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::internal::PositionIndex;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(index) = PositionIndex::parse(text) {
        let round = PositionIndex::parse(&index.to_tsv()).expect("serialized form parses");
        assert_eq!(index, round);
    }
});
