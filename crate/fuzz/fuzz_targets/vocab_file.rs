//! Vocabulary files come from disk; parsing must never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::corpus::Vocabulary;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(vocab) = Vocabulary::from_tsv(text) {
            // a parsed vocabulary must round-trip
            let again = Vocabulary::from_tsv(&vocab.to_tsv()).unwrap();
            assert_eq!(vocab.len(), again.len());
        }
    }
});
