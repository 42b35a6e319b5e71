//! analysis.tsv drives the plotting stage.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::stats::parse_analysis;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_analysis(text);
    }
});
