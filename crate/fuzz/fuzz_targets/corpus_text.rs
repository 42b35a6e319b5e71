//! Raw corpus ingestion must never panic: tokenize, sentence-split, build a
//! vocabulary, and encode arbitrary text.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::corpus::{content_lines, tokenize, Corpus, Vocabulary};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    for line in content_lines(&text) {
        let _ = tokenize(line);
    }
    let vocab = Vocabulary::build(content_lines(&text), 2);
    let corpus = Corpus::from_text("fuzz", &text, &vocab);
    for sentence in corpus.sentences.iter().take(64) {
        assert!(sentence.iter().all(|&id| (id as usize) < vocab.len()));
    }
});
