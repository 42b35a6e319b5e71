//! key=value run configuration files.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::parse(text) {
            // anything that parses re-parses from its canonical dump
            let canon = cfg.canonical_text();
            let _ = RunConfig::parse(&canon).unwrap();
        }
    }
});
