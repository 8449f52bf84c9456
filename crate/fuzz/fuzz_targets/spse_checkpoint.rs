//! SPSE checkpoint decoding; accepted checkpoints round-trip exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::external::SpseModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = SpseModel::parse(text) {
        let round = SpseModel::parse(&model.to_tsv()).expect("serialized form parses");
        assert_eq!(model, round);
    }
});
