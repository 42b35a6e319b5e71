//! Stimulus file plus sidecar metadata; the two parts are separated by a
//! zero byte in the fuzz input.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::stimuli::{stimuli_from_text, Lexicon};

fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let (a, b) = data.split_at(split);
    let sentences = String::from_utf8_lossy(a);
    let meta = String::from_utf8_lossy(b.get(1..).unwrap_or(b""));
    let _ = stimuli_from_text(&sentences, &meta, None);
    let lexicon = Lexicon::builtin();
    let _ = stimuli_from_text(&sentences, &meta, Some(&lexicon));
});
