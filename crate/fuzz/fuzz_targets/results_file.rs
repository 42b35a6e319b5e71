//! Long-format results files feed the stats stage.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::priming::parse_results;
use primelm::stats::analyze;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(runs) = parse_results(text) {
            let _ = analyze(&runs, 0.05);
        }
    }
});
