//! Kneser-Ney model files are a versioned text format; deserialization must
//! reject malformed input without panicking, and accepted models must score.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::ngram::KnModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = KnModel::from_bytes(data) {
        let probe = vec![model.vocab().unk_id(); 3];
        let s = model.surprisal(&probe);
        assert!(s.is_finite() && s >= 0.0);
    }
});
