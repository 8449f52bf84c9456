//! Whitespace token counting accepts any UTF-8 text.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::kb::CorpusFrequencies;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let freqs = CorpusFrequencies::parse(text);
    let total_tokens = text.split_whitespace().count();
    assert!(freqs.distinct_words() <= total_tokens);
});
