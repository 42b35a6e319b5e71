//! Interpolated Kneser-Ney n-gram language model with incremental adaptation
//! by count update.
//!
//! Raw counts are kept for every order 1..=N over sentences padded with N-1
//! `<bos>` tokens and one `<eos>` (windows ending in `<bos>` are skipped, so
//! `<bos>` is never a prediction target). Scoring uses the top-order raw
//! counts and, below that, left-continuation counts derived from the raw
//! table one order up:
//!
//!   p_n(w|c) = (max(c(cw) - D, 0) + D * T(c) * p_{n-1}(w|c')) / c(c.)
//!
//! with a uniform 1/V backstop over the predictive vocabulary after the
//! unigram level. A context unseen at some level skips straight to the
//! shorter context.

use std::collections::HashMap;

use crate::corpus::{Corpus, TokenId, Vocabulary};
use crate::error::{Error, Result};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

type GramMap = HashMap<Vec<TokenId>, u64>;

/// Per-order scoring table: adjusted gram counts plus per-context totals and
/// distinct-extension counts.
#[derive(Debug, Clone, Default)]
struct LevelTable {
    grams: GramMap,
    /// context -> (sum of counts over extensions, number of distinct extensions)
    contexts: HashMap<Vec<TokenId>, (u64, u64)>,
}

impl LevelTable {
    fn from_grams(grams: GramMap) -> LevelTable {
        let mut contexts: HashMap<Vec<TokenId>, (u64, u64)> = HashMap::new();
        for (gram, &count) in &grams {
            let entry = contexts.entry(gram[..gram.len() - 1].to_vec()).or_insert((0, 0));
            entry.0 += count;
            entry.1 += 1;
        }
        LevelTable { grams, contexts }
    }
}

#[derive(Debug, Clone)]
pub struct KnModel {
    order: usize,
    discounts: Vec<f64>,
    vocab: Vocabulary,
    /// raw[i] holds raw counts of order i+1 grams
    raw: Vec<GramMap>,
    levels: Vec<LevelTable>,
}

impl KnModel {
    /// Trains a model of the given order. Every sentence is padded with
    /// order-1 `<bos>` and one `<eos>`.
    pub fn train(corpus: &Corpus, vocab: &Vocabulary, order: usize, discount: f64) -> Result<KnModel> {
        if order < 1 {
            return Err(Error::Invalid("n-gram order must be >= 1".into()));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::Invalid(format!("discount must be in (0,1); got {discount}")));
        }
        if corpus.sentences.is_empty() || corpus.token_count == 0 {
            return Err(Error::EmptyCorpus(corpus.source_name.clone()));
        }
        let mut model = KnModel {
            order,
            discounts: vec![discount; order],
            vocab: vocab.clone(),
            raw: vec![GramMap::new(); order],
            levels: Vec::new(),
        };
        for sentence in &corpus.sentences {
            model.count_sentence(sentence);
        }
        model.rebuild();
        Ok(model)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn padded(&self, sentence: &[TokenId]) -> Vec<TokenId> {
        let bos = self.vocab.bos_id();
        let eos = self.vocab.eos_id();
        let mut padded = Vec::with_capacity(sentence.len() + self.order);
        padded.extend(std::iter::repeat(bos).take(self.order - 1));
        padded.extend_from_slice(sentence);
        padded.push(eos);
        padded
    }

    fn count_sentence(&mut self, sentence: &[TokenId]) {
        let bos = self.vocab.bos_id();
        let padded = self.padded(sentence);
        for n in 1..=self.order {
            let table = &mut self.raw[n - 1];
            for end in (n - 1)..padded.len() {
                if padded[end] == bos {
                    continue;
                }
                *table.entry(padded[end + 1 - n..=end].to_vec()).or_insert(0) += 1;
            }
        }
    }

    /// Rebuilds the scoring tables from the raw counts.
    fn rebuild(&mut self) {
        let mut levels = Vec::with_capacity(self.order);
        for n in 1..=self.order {
            let grams = if n == self.order {
                self.raw[n - 1].clone()
            } else {
                // continuation counts: distinct left extensions one order up
                let mut adj = GramMap::new();
                for gram in self.raw[n].keys() {
                    *adj.entry(gram[1..].to_vec()).or_insert(0) += 1;
                }
                adj
            };
            levels.push(LevelTable::from_grams(grams));
        }
        self.levels = levels;
    }

    /// Raw count of a gram (any order up to N).
    pub fn raw_count(&self, gram: &[TokenId]) -> u64 {
        if gram.is_empty() || gram.len() > self.order {
            return 0;
        }
        self.raw[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }

    /// (total, distinct extensions) of a context at its scoring level.
    pub fn context_stats(&self, context: &[TokenId]) -> Option<(u64, u64)> {
        self.levels.get(context.len())?.contexts.get(context).copied()
    }

    /// Predictive probability of `word` given the last order-1 context ids.
    /// `<bos>` is excluded from the predictive support and scores zero.
    pub fn prob(&self, context: &[TokenId], word: TokenId) -> f64 {
        debug_assert!((word as usize) < self.vocab.len());
        if word == self.vocab.bos_id() {
            return 0.0;
        }
        let keep = context.len().min(self.order - 1);
        self.prob_rec(&context[context.len() - keep..], word)
    }

    fn prob_rec(&self, ctx: &[TokenId], word: TokenId) -> f64 {
        let uniform = 1.0 / self.vocab.predictive_size() as f64;
        let level = &self.levels[ctx.len()];
        match level.contexts.get(ctx) {
            Some(&(total, types)) if total > 0 => {
                let mut gram = Vec::with_capacity(ctx.len() + 1);
                gram.extend_from_slice(ctx);
                gram.push(word);
                let count = level.grams.get(&gram).copied().unwrap_or(0);
                let d = self.discounts[ctx.len()];
                let lower = if ctx.is_empty() { uniform } else { self.prob_rec(&ctx[1..], word) };
                ((count as f64 - d).max(0.0) + d * types as f64 * lower) / total as f64
            }
            // unseen context: skip to the shorter one
            _ if !ctx.is_empty() => self.prob_rec(&ctx[1..], word),
            _ => uniform,
        }
    }

    /// Total surprisal of a sentence in bits, including the `<eos>` transition
    /// and excluding `<bos>` (which is context only).
    pub fn surprisal(&self, sentence: &[TokenId]) -> f64 {
        let padded = self.padded(sentence);
        let ctx_len = self.order - 1;
        let mut bits = 0.0;
        for i in ctx_len..padded.len() {
            let p = self.prob(&padded[i - ctx_len..i], padded[i]);
            bits -= p.ln() * LOG2_E;
        }
        bits
    }

    /// Returns a new model whose raw counts are this model's plus the
    /// stimuli's n-gram counts; this model is unchanged.
    pub fn adapt(&self, stimuli: &[Vec<TokenId>]) -> KnModel {
        let mut adapted = self.clone();
        for sentence in stimuli {
            adapted.count_sentence(sentence);
        }
        adapted.rebuild();
        adapted
    }

    /// Raw-count consistency: the counts of a context's extensions sum to the
    /// context's own count, for contexts that are free of `<bos>` and do not
    /// end in `<eos>` (those can end a padded sentence without extension).
    #[doc(hidden)]
    pub fn check_count_consistency(&self) -> Result<()> {
        let bos = self.vocab.bos_id();
        let eos = self.vocab.eos_id();
        for n in 2..=self.order {
            let mut sums: GramMap = GramMap::new();
            for (gram, &count) in &self.raw[n - 1] {
                *sums.entry(gram[..n - 1].to_vec()).or_insert(0) += count;
            }
            for (prefix, &sum) in &sums {
                if prefix.contains(&bos) || prefix.last() == Some(&eos) {
                    continue;
                }
                let direct = self.raw_count(prefix);
                if direct != sum {
                    return Err(Error::Invalid(format!(
                        "count inconsistency at order {n}: prefix {prefix:?} has {direct}, extensions sum to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    // -- serialization -------------------------------------------------------

    /// Versioned flat-text dump: header, embedded vocabulary, then one
    /// `order<TAB>tokens<TAB>count` line per raw gram, closed by `end`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str("primelm-kn 1\n");
        out.push_str(&format!("order\t{}\n", self.order));
        let discounts: Vec<String> = self.discounts.iter().map(f64::to_string).collect();
        out.push_str(&format!("discounts\t{}\n", discounts.join(" ")));
        out.push_str(&format!("vocab\t{}\n", self.vocab.len()));
        out.push_str(&self.vocab.to_tsv());

        let mut grams: Vec<(usize, &Vec<TokenId>, u64)> = Vec::new();
        for (i, table) in self.raw.iter().enumerate() {
            for (gram, &count) in table {
                grams.push((i + 1, gram, count));
            }
        }
        grams.sort();
        out.push_str(&format!("counts\t{}\n", grams.len()));
        for (n, gram, count) in grams {
            let surfaces: Vec<&str> = gram.iter().map(|&id| self.vocab.surface(id)).collect();
            out.push_str(&format!("{n}\t{}\t{count}\n", surfaces.join(" ")));
        }
        out.push_str("end\n");
        out.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<KnModel> {
        let what = "kn model file";
        let parse_err = |line: usize, msg: String| Error::Parse { what, line, msg };
        let text = std::str::from_utf8(bytes)
            .map_err(|e| parse_err(0, format!("not utf-8: {e}")))?;
        let mut lines = text.lines().enumerate();

        let expect = |pair: Option<(usize, &str)>, name: &str| -> Result<(usize, String)> {
            pair.map(|(i, l)| (i + 1, l.to_string()))
                .ok_or_else(|| parse_err(0, format!("truncated before {name}")))
        };

        let (ln, magic) = expect(lines.next(), "magic")?;
        if magic != "primelm-kn 1" {
            return Err(parse_err(ln, format!("bad magic `{magic}`")));
        }
        let (ln, order_line) = expect(lines.next(), "order")?;
        let order: usize = order_line
            .strip_prefix("order\t")
            .and_then(|s| s.parse().ok())
            .filter(|&n| (1..=8).contains(&n))
            .ok_or_else(|| parse_err(ln, "bad order line".into()))?;
        let (ln, disc_line) = expect(lines.next(), "discounts")?;
        let discounts: Vec<f64> = disc_line
            .strip_prefix("discounts\t")
            .map(|s| s.split(' ').map(|d| d.parse::<f64>()).collect::<std::result::Result<_, _>>())
            .transpose()
            .ok()
            .flatten()
            .ok_or_else(|| parse_err(ln, "bad discounts line".into()))?;
        if discounts.len() != order || discounts.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return Err(parse_err(ln, "discounts must be one per order, each in (0,1)".into()));
        }
        let (ln, vocab_line) = expect(lines.next(), "vocab size")?;
        let vocab_len: usize = vocab_line
            .strip_prefix("vocab\t")
            .and_then(|s| s.parse().ok())
            .filter(|&n| (3..=10_000_000).contains(&n))
            .ok_or_else(|| parse_err(ln, "bad vocab line".into()))?;
        let mut vocab_text = String::new();
        for _ in 0..vocab_len {
            let (_, l) = expect(lines.next(), "vocab entry")?;
            vocab_text.push_str(&l);
            vocab_text.push('\n');
        }
        let vocab = Vocabulary::from_tsv(&vocab_text)?;

        let (ln, counts_line) = expect(lines.next(), "counts size")?;
        let n_grams: usize = counts_line
            .strip_prefix("counts\t")
            .and_then(|s| s.parse().ok())
            .filter(|&n| n <= 500_000_000)
            .ok_or_else(|| parse_err(ln, "bad counts line".into()))?;

        let mut raw = vec![GramMap::new(); order];
        for _ in 0..n_grams {
            let (ln, l) = expect(lines.next(), "gram entry")?;
            let cols: Vec<&str> = l.split('\t').collect();
            if cols.len() != 3 {
                return Err(parse_err(ln, "expected order<TAB>tokens<TAB>count".into()));
            }
            let n: usize = cols[0]
                .parse()
                .ok()
                .filter(|&n| n >= 1 && n <= order)
                .ok_or_else(|| parse_err(ln, format!("bad gram order `{}`", cols[0])))?;
            let mut gram = Vec::with_capacity(n);
            for surf in cols[1].split(' ') {
                let id = vocab
                    .id(surf)
                    .ok_or_else(|| parse_err(ln, format!("token `{surf}` not in vocabulary")))?;
                gram.push(id);
            }
            if gram.len() != n {
                return Err(parse_err(ln, format!("gram has {} tokens, expected {n}", gram.len())));
            }
            let count: u64 = cols[2]
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| parse_err(ln, format!("bad count `{}`", cols[2])))?;
            if raw[n - 1].insert(gram, count).is_some() {
                return Err(parse_err(ln, "duplicate gram".into()));
            }
        }
        let (ln, end) = expect(lines.next(), "end marker")?;
        if end != "end" {
            return Err(parse_err(ln, "missing end marker".into()));
        }
        if let Some((i, extra)) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(parse_err(i + 1, "trailing data after end marker".into()));
            }
        }

        let mut model = KnModel {
            order,
            discounts,
            vocab,
            raw,
            levels: Vec::new(),
        };
        model.rebuild();
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;

    fn build(lines: &[&str], order: usize, discount: f64) -> KnModel {
        let text = lines.join("\n");
        let vocab = Vocabulary::build(text.lines(), 1);
        let corpus = Corpus::from_text("toy", &text, &vocab);
        KnModel::train(&corpus, &vocab, order, discount).unwrap()
    }

    fn ids(model: &KnModel, tokens: &[&str]) -> Vec<TokenId> {
        tokens
            .iter()
            .map(|t| match *t {
                "<bos>" => model.vocab.bos_id(),
                "<eos>" => model.vocab.eos_id(),
                other => model.vocab.id(other).unwrap(),
            })
            .collect()
    }

    #[test]
    fn bigram_counts_match_direct_counting() {
        let m = build(&["a b", "a b"], 2, 0.75);
        assert_eq!(m.raw_count(&ids(&m, &["a", "b"])), 2);
        assert_eq!(m.raw_count(&ids(&m, &["<bos>", "a"])), 2);
        assert_eq!(m.raw_count(&ids(&m, &["b", "<eos>"])), 2);
    }

    #[test]
    fn toy_corpus_counts_and_extensions() {
        let m = build(&["the cat sat .", "the cat ran ."], 2, 0.75);
        assert_eq!(m.raw_count(&ids(&m, &["the", "cat"])), 2);
        let (_, types) = m.context_stats(&ids(&m, &["cat"])).unwrap();
        assert_eq!(types, 2); // sat, ran
        m.check_count_consistency().unwrap();
    }

    #[test]
    fn unigram_model_hand_computed() {
        // corpus "a", order 1: pad [a, eos]; c(a)=c(eos)=1, total=2, T=2,
        // predictive vocab {unk, eos, a} of size 3.
        let m = build(&["a"], 1, 0.75);
        let a = m.vocab.id("a").unwrap();
        let p_a = m.prob(&[], a);
        let p_eos = m.prob(&[], m.vocab.eos_id());
        let p_unk = m.prob(&[], m.vocab.unk_id());
        let third: f64 = 1.0 / 3.0;
        assert!((p_a - ((1.0 - 0.75) / 2.0 + 0.75 * (2.0 / 2.0) * third)).abs() < 1e-15);
        assert!((p_eos - p_a).abs() < 1e-15);
        assert!((p_unk - 0.75 * third).abs() < 1e-15);
        assert!((p_a + p_eos + p_unk - 1.0).abs() < 1e-12);
        assert_eq!(m.prob(&[], m.vocab.bos_id()), 0.0);
    }

    #[test]
    fn interpolated_bigram_hand_computed() {
        // Direct evaluation of the interpolated recursion for p(cat | the).
        let m = build(&["the cat sat .", "the cat ran ."], 2, 0.75);
        let d = 0.75f64;
        let v_pred = m.vocab.predictive_size() as f64; // 7
        assert_eq!(v_pred as usize, 7);
        // unigram continuation counts: one distinct left extension each for
        // the/cat/sat/ran/eos, two for "."
        let p1_cat = ((1.0 - d).max(0.0) + d * 6.0 * (1.0 / v_pred)) / 7.0;
        let want = ((2.0 - d) + d * 1.0 * p1_cat) / 2.0;
        let got = m.prob(&ids(&m, &["the"]), m.vocab.id("cat").unwrap());
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn uniform_toy_corpus_has_equal_seen_bigram_probs() {
        let m = build(&["a b", "c d"], 2, 0.6);
        let p_ab = m.prob(&ids(&m, &["a"]), m.vocab.id("b").unwrap());
        let p_cd = m.prob(&ids(&m, &["c"]), m.vocab.id("d").unwrap());
        assert!((p_ab - p_cd).abs() < 1e-15);
    }

    fn total_prob(m: &KnModel, ctx: &[TokenId]) -> f64 {
        (0..m.vocab.len() as TokenId)
            .filter(|&w| w != m.vocab.bos_id())
            .map(|w| m.prob(ctx, w))
            .sum()
    }

    #[test]
    fn distributions_normalize() {
        let m = build(&["the cat sat .", "the cat ran .", "a dog ran"], 3, 0.75);
        for ctx in [
            vec![],
            ids(&m, &["the"]),
            ids(&m, &["the", "cat"]),
            ids(&m, &["ran", "."]),
            ids(&m, &["dog", "dog"]), // unseen context
            vec![m.vocab.bos_id(), m.vocab.bos_id()],
        ] {
            let total = total_prob(&m, &ctx);
            assert!((total - 1.0).abs() < 1e-9, "ctx {ctx:?}: sum {total}");
        }
    }

    #[test]
    fn empty_model_scores_uniform_surprisal() {
        // A model with no counts falls through to the uniform backstop.
        let vocab = Vocabulary::build(["a b c d e"], 1);
        let mut m = KnModel {
            order: 2,
            discounts: vec![0.75; 2],
            vocab: vocab.clone(),
            raw: vec![GramMap::new(); 2],
            levels: Vec::new(),
        };
        m.rebuild();
        let v_pred = vocab.predictive_size() as f64;
        let sent = vocab.encode(&["a", "b", "c"]);
        let per_token = (v_pred).log2();
        assert!((m.surprisal(&sent) - 4.0 * per_token).abs() < 1e-12); // 3 tokens + eos
    }

    #[test]
    fn empty_sentence_scores_eos_only() {
        let m = build(&["a b", "b a"], 2, 0.75);
        let p_eos = m.prob(&[m.vocab.bos_id()], m.vocab.eos_id());
        let s = m.surprisal(&[]);
        assert!((s + p_eos.log2()).abs() < 1e-12);
        assert!(s >= 0.0 && s.is_finite());
    }

    #[test]
    fn surprisal_is_additive_and_stateless_across_sentences() {
        let m = build(&["the cat sat .", "the cat ran ."], 3, 0.75);
        let s1 = ids(&m, &["the", "cat", "sat", "."]);
        let s2 = ids(&m, &["the", "cat", "ran", "."]);
        // scoring order cannot matter: each sentence is padded independently
        let a1 = m.surprisal(&s1);
        let b = m.surprisal(&s2);
        let a2 = m.surprisal(&s1);
        assert_eq!(a1.to_bits(), a2.to_bits());
        let joint = a1 + b;
        assert!(joint.is_finite() && joint > 0.0);
        // per-token terms of a sentence sum to its surprisal
        let padded = [vec![m.vocab.bos_id(), m.vocab.bos_id()], s1.clone()].concat();
        let mut manual = 0.0;
        for i in 2..padded.len() {
            manual -= m.prob(&padded[i - 2..i], padded[i]).log2();
        }
        manual -= m
            .prob(&[padded[padded.len() - 2], padded[padded.len() - 1]], m.vocab.eos_id())
            .log2();
        assert!((manual - a1).abs() < 1e-12);
    }

    #[test]
    fn adapt_with_empty_list_changes_nothing() {
        let m = build(&["the cat sat .", "the cat ran ."], 4, 0.75);
        let adapted = m.adapt(&[]);
        let sent = ids(&m, &["the", "cat", "sat", "."]);
        assert_eq!(m.surprisal(&sent).to_bits(), adapted.surprisal(&sent).to_bits());
    }

    #[test]
    fn adapt_increments_every_gram_by_its_multiplicity() {
        let m = build(&["the cat sat .", "the cat ran ."], 2, 0.75);
        let stim = ids(&m, &["the", "cat", "the", "cat"]);
        let adapted = m.adapt(&[stim.clone()]);
        let the_cat = ids(&m, &["the", "cat"]);
        assert_eq!(adapted.raw_count(&the_cat), m.raw_count(&the_cat) + 2);
        let cat_the = ids(&m, &["cat", "the"]);
        assert_eq!(adapted.raw_count(&cat_the), m.raw_count(&cat_the) + 1);
        // base model untouched
        assert_eq!(m.raw_count(&the_cat), 2);
        adapted.check_count_consistency().unwrap();
    }

    #[test]
    fn adaptation_lowers_surprisal_of_adapted_material() {
        let m = build(&["the cat sat .", "a dog ran ."], 3, 0.75);
        let probe = ids(&m, &["the", "cat", "ran", "."]);
        let before = m.surprisal(&probe);
        let adapted = m.adapt(&[probe.clone(), probe.clone()]);
        assert!(adapted.surprisal(&probe) < before);
    }

    #[test]
    fn serialization_round_trips_scores_exactly() {
        let m = build(&["the cat sat .", "the cat ran .", "a dog sat ."], 4, 0.75);
        let bytes = m.to_bytes();
        let back = KnModel::from_bytes(&bytes).unwrap();
        for sent in [
            ids(&m, &["the", "cat", "sat", "."]),
            ids(&m, &["a", "dog", "ran", "."]),
            vec![m.vocab.unk_id()],
        ] {
            assert_eq!(m.surprisal(&sent).to_bits(), back.surprisal(&sent).to_bits());
        }
    }

    #[test]
    fn deserialize_rejects_truncated_and_garbage_input() {
        let m = build(&["a b c"], 2, 0.75);
        let bytes = m.to_bytes();
        let text = String::from_utf8(bytes.clone()).unwrap();
        let truncated = &text[..text.len() - 20];
        assert!(KnModel::from_bytes(truncated.as_bytes()).is_err());
        assert!(KnModel::from_bytes(b"nonsense").is_err());
        assert!(KnModel::from_bytes(&[0xff, 0xfe, 0x00]).is_err());
        let tampered = text.replace("end", "enx");
        assert!(KnModel::from_bytes(tampered.as_bytes()).is_err());
    }

    #[test]
    fn train_rejects_degenerate_inputs() {
        let vocab = Vocabulary::build(["a b"], 1);
        let empty = Corpus {
            sentences: vec![],
            source_name: "empty".into(),
            token_count: 0,
        };
        assert!(matches!(
            KnModel::train(&empty, &vocab, 2, 0.75),
            Err(Error::EmptyCorpus(_))
        ));
        let corpus = Corpus::from_text("c", "a b", &vocab);
        assert!(KnModel::train(&corpus, &vocab, 0, 0.75).is_err());
        assert!(KnModel::train(&corpus, &vocab, 2, 0.0).is_err());
        assert!(KnModel::train(&corpus, &vocab, 2, 1.0).is_err());
    }
}
