//! Pipeline config parsing; accepted configs must survive the
//! serialize/parse round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sememe::config::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = PipelineConfig::parse(text) {
        let round = PipelineConfig::parse(&config.to_text()).expect("serialized form parses");
        assert_eq!(config, round);
    }
});
