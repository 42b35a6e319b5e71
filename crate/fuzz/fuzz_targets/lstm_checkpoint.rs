//! LSTM checkpoints: vocabulary TSV and checkpoint bytes separated by a zero
//! byte. Loading must never panic and accepted models must score finitely.

#![no_main]

use libfuzzer_sys::fuzz_target;
use primelm::corpus::Vocabulary;
use primelm::lstm::LstmModel;

fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let (a, b) = data.split_at(split);
    let Ok(vocab_text) = std::str::from_utf8(a) else { return };
    let Ok(vocab) = Vocabulary::from_tsv(vocab_text) else { return };
    let ckpt = b.get(1..).unwrap_or(b"");
    if let Ok(model) = LstmModel::from_bytes(ckpt, &vocab) {
        let s = model.surprisal(&[vocab.unk_id()]);
        assert!(s.is_finite());
    }
});
