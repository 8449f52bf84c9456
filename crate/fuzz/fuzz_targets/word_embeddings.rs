//! Word embedding text loading with a fuzz-chosen dimension; accepted
//! tables must have a stable write/parse/write fixed point.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::embeddings::WordEmbeddings;

fuzz_target!(|data: &[u8]| {
    let Some((&dim_byte, rest)) = data.split_first() else {
        return;
    };
    let dim = (dim_byte % 8) as usize + 1;
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    if let Ok(emb) = WordEmbeddings::parse(text, dim) {
        let mut first = Vec::new();
        emb.write(&mut first).unwrap();
        let reparsed =
            WordEmbeddings::parse(std::str::from_utf8(&first).unwrap(), dim).expect("round trip");
        let mut second = Vec::new();
        reparsed.write(&mut second).unwrap();
        assert_eq!(first, second);
    }
});
