use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {what} (line {line}): {msg}")]
    Parse {
        what: &'static str,
        line: usize,
        msg: String,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("cannot split {n_sentences} sentences into {k} disjoint parts")]
    InfeasibleSplit { n_sentences: usize, k: usize },

    #[error("lexicon too small ({pos} class): {msg}")]
    LexiconTooSmall { pos: &'static str, msg: String },

    #[error("unknown lemma `{0}`")]
    UnknownLemma(String),

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("zero variance in paired differences; use the sign test instead")]
    ZeroVariance,

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
