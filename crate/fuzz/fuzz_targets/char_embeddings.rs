//! Multi-prototype character table loading with fuzz-chosen dimension and
//! prototype budget.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::embeddings::CharEmbeddings;

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let dim = (data[0] % 8) as usize + 1;
    let n_protos = (data[1] % 4) as u32 + 1;
    let Ok(text) = std::str::from_utf8(&data[2..]) else {
        return;
    };
    if let Ok(chars) = CharEmbeddings::parse(text, dim, n_protos) {
        let mut first = Vec::new();
        chars.write(&mut first).unwrap();
        let reparsed = CharEmbeddings::parse(std::str::from_utf8(&first).unwrap(), dim, n_protos)
            .expect("round trip");
        let mut second = Vec::new();
        reparsed.write(&mut second).unwrap();
        assert_eq!(first, second);
    }
});
