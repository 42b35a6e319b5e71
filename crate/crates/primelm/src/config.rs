//! Flat key=value run configuration. A config file is optional; every key has
//! a default and command-line flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lstm::LstmConfig;
use crate::priming::ModelFamily;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: ModelFamily,
    pub models: usize,
    pub order: usize,
    pub discount: f64,
    pub seed: u64,
    pub scramble_adaptation: bool,
    /// "synthetic" or a path to a WikiText-format plain-text file.
    pub corpus: String,
    pub corpus_tokens: usize,
    pub corpus_seed: u64,
    pub min_count: u32,
    pub n_adapt: usize,
    pub n_test: usize,
    pub p_mod: f64,
    pub overlap_max: f64,
    /// "builtin" or a path to a lexicon TSV.
    pub lexicon: String,
    pub surprisal_base: f64,
    pub alpha: f64,
    pub lstm_embed_dim: usize,
    pub lstm_hidden_dim: usize,
    pub lstm_layers: usize,
    pub lstm_bptt: usize,
    pub lstm_batch: usize,
    pub lstm_epochs: usize,
    pub lstm_train_lr: f64,
    pub lstm_adapt_lr: f64,
    pub lstm_grad_clip: f64,
    pub lstm_carry_hidden: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: ModelFamily::Ngram,
            models: 20,
            order: 4,
            discount: 0.75,
            seed: 0,
            scramble_adaptation: false,
            corpus: "synthetic".into(),
            corpus_tokens: 1_200_000,
            corpus_seed: 1,
            min_count: 2,
            n_adapt: 20,
            n_test: 50,
            p_mod: 0.5,
            overlap_max: 0.2,
            lexicon: "builtin".into(),
            surprisal_base: 2.0,
            alpha: 0.05,
            lstm_embed_dim: 64,
            lstm_hidden_dim: 128,
            lstm_layers: 2,
            lstm_bptt: 32,
            lstm_batch: 16,
            lstm_epochs: 2,
            lstm_train_lr: 1.0,
            lstm_adapt_lr: 1.0,
            lstm_grad_clip: 5.0,
            lstm_carry_hidden: false,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parses `key = value` lines; `#` comments and blank lines are ignored.
    /// Unknown keys are an error so typos do not silently fall back to
    /// defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply_lines(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    fn apply_lines(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got `{line}`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
        }
        fn boolean(key: &str, value: &str) -> Result<bool> {
            match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
            }
        }
        match key {
            "family" => {
                self.family = ModelFamily::from_label(value)
                    .ok_or_else(|| Error::Config(format!("unknown family `{value}`")))?;
            }
            "models" => self.models = num(key, value)?,
            "order" => self.order = num(key, value)?,
            "discount" => self.discount = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "scramble_adaptation" => self.scramble_adaptation = boolean(key, value)?,
            "corpus" => self.corpus = value.to_string(),
            "corpus_tokens" => self.corpus_tokens = num(key, value)?,
            "corpus_seed" => self.corpus_seed = num(key, value)?,
            "min_count" => self.min_count = num(key, value)?,
            "n_adapt" => self.n_adapt = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "p_mod" => self.p_mod = num(key, value)?,
            "overlap_max" => self.overlap_max = num(key, value)?,
            "lexicon" => self.lexicon = value.to_string(),
            "surprisal_base" => self.surprisal_base = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "lstm_embed_dim" => self.lstm_embed_dim = num(key, value)?,
            "lstm_hidden_dim" => self.lstm_hidden_dim = num(key, value)?,
            "lstm_layers" => self.lstm_layers = num(key, value)?,
            "lstm_bptt" => self.lstm_bptt = num(key, value)?,
            "lstm_batch" => self.lstm_batch = num(key, value)?,
            "lstm_epochs" => self.lstm_epochs = num(key, value)?,
            "lstm_train_lr" => self.lstm_train_lr = num(key, value)?,
            "lstm_adapt_lr" => self.lstm_adapt_lr = num(key, value)?,
            "lstm_grad_clip" => self.lstm_grad_clip = num(key, value)?,
            "lstm_carry_hidden" => self.lstm_carry_hidden = boolean(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.models < 2 {
            return Err(Error::Config(format!(
                "models must be >= 2 for paired statistics, got {}",
                self.models
            )));
        }
        if self.order < 1 || self.order > 8 {
            return Err(Error::Config(format!("order must be in 1..=8, got {}", self.order)));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::Config(format!("discount must be in (0,1), got {}", self.discount)));
        }
        if !(0.0..=1.0).contains(&self.p_mod) {
            return Err(Error::Config(format!("p_mod must be in [0,1], got {}", self.p_mod)));
        }
        if !(0.0..=1.0).contains(&self.overlap_max) {
            return Err(Error::Config(format!(
                "overlap_max must be in [0,1], got {}",
                self.overlap_max
            )));
        }
        if !(self.surprisal_base > 1.0) {
            return Err(Error::Config(format!(
                "surprisal_base must be > 1, got {}",
                self.surprisal_base
            )));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if self.min_count < 1 {
            return Err(Error::Config("min_count must be >= 1".into()));
        }
        if self.corpus == "synthetic" && self.corpus_tokens < 1000 {
            return Err(Error::Config(format!(
                "synthetic corpus needs corpus_tokens >= 1000, got {}",
                self.corpus_tokens
            )));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be >= 1".into()));
        }
        self.lstm_config().validate()?;
        Ok(())
    }

    pub fn lstm_config(&self) -> LstmConfig {
        LstmConfig {
            embed_dim: self.lstm_embed_dim,
            hidden_dim: self.lstm_hidden_dim,
            num_layers: self.lstm_layers,
            bptt_len: self.lstm_bptt,
            batch_size: self.lstm_batch,
            epochs: self.lstm_epochs,
            train_lr: self.lstm_train_lr,
            adapt_lr: self.lstm_adapt_lr,
            grad_clip: self.lstm_grad_clip,
            seed: self.seed,
            carry_hidden: self.lstm_carry_hidden,
        }
    }

    /// Canonical sorted dump; also the input to the config fingerprint.
    pub fn canonical_text(&self) -> String {
        let mut map: BTreeMap<&str, String> = BTreeMap::new();
        map.insert("family", self.family.label().to_string());
        map.insert("models", self.models.to_string());
        map.insert("order", self.order.to_string());
        map.insert("discount", self.discount.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert("scramble_adaptation", self.scramble_adaptation.to_string());
        map.insert("corpus", self.corpus.clone());
        map.insert("corpus_tokens", self.corpus_tokens.to_string());
        map.insert("corpus_seed", self.corpus_seed.to_string());
        map.insert("min_count", self.min_count.to_string());
        map.insert("n_adapt", self.n_adapt.to_string());
        map.insert("n_test", self.n_test.to_string());
        map.insert("p_mod", self.p_mod.to_string());
        map.insert("overlap_max", self.overlap_max.to_string());
        map.insert("lexicon", self.lexicon.clone());
        map.insert("surprisal_base", self.surprisal_base.to_string());
        map.insert("alpha", self.alpha.to_string());
        map.insert("lstm_embed_dim", self.lstm_embed_dim.to_string());
        map.insert("lstm_hidden_dim", self.lstm_hidden_dim.to_string());
        map.insert("lstm_layers", self.lstm_layers.to_string());
        map.insert("lstm_bptt", self.lstm_bptt.to_string());
        map.insert("lstm_batch", self.lstm_batch.to_string());
        map.insert("lstm_epochs", self.lstm_epochs.to_string());
        map.insert("lstm_train_lr", self.lstm_train_lr.to_string());
        map.insert("lstm_adapt_lr", self.lstm_adapt_lr.to_string());
        map.insert("lstm_grad_clip", self.lstm_grad_clip.to_string());
        map.insert("lstm_carry_hidden", self.lstm_carry_hidden.to_string());
        let mut out = String::new();
        for (k, v) in map {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}
