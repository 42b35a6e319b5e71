//! Text ingestion: tokenization, vocabulary construction with unknown-word
//! handling, and disjoint corpus splitting.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type TokenId = u32;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";

const SPECIALS: [&str; 3] = [UNK, BOS, EOS];

/// Lowercasing whitespace tokenizer. A single trailing `.`, `!` or `?` is
/// detached as its own token so sentence boundaries survive untokenized input.
pub fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in line.split_whitespace() {
        let token = raw.to_lowercase();
        let mut chars = token.chars();
        if let Some(last) = chars.next_back() {
            if is_sentence_terminal(last) && !chars.as_str().is_empty() {
                out.push(chars.as_str().to_string());
                out.push(last.to_string());
                continue;
            }
        }
        if !token.is_empty() {
            out.push(token);
        }
    }
    out
}

pub fn is_sentence_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits a token stream into sentences at terminal punctuation. Trailing
/// tokens without a terminator still form a sentence.
pub fn split_sentences(tokens: &[String]) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for tok in tokens {
        let terminal = tok.chars().count() == 1
            && tok.chars().next().map(is_sentence_terminal).unwrap_or(false);
        current.push(tok.clone());
        if terminal {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

/// Lines of WikiText-format plain text that carry content: section headers
/// (lines starting with `=`) and blank lines are skipped.
pub fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('='))
}

/// Token vocabulary with dense ids. `<unk>`, `<bos>` and `<eos>` are always
/// present, in that order, before any corpus type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id_of: HashMap<String, TokenId>,
    surface_of: Vec<String>,
    min_count: u32,
}

impl Vocabulary {
    /// Builds a vocabulary from raw text lines. Types seen fewer than
    /// `min_count` times are dropped and will encode to `<unk>`.
    pub fn build<'a, I>(lines: I, min_count: u32) -> Vocabulary
    where
        I: IntoIterator<Item = &'a str>,
    {
        assert!(min_count >= 1, "min_count must be >= 1");
        let mut counts: HashMap<String, u64> = HashMap::new();
        for line in lines {
            for tok in tokenize(line) {
                if SPECIALS.contains(&tok.as_str()) {
                    continue;
                }
                *counts.entry(tok).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= u64::from(min_count))
            .collect();
        // Frequency order, ties broken alphabetically, so ids are reproducible.
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut surface_of: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        surface_of.extend(kept.into_iter().map(|(s, _)| s));
        let id_of = surface_of
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as TokenId))
            .collect();
        Vocabulary {
            id_of,
            surface_of,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.surface_of.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    pub fn unk_id(&self) -> TokenId {
        0
    }

    pub fn bos_id(&self) -> TokenId {
        1
    }

    pub fn eos_id(&self) -> TokenId {
        2
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    /// Number of tokens a model may predict: everything except `<bos>`.
    pub fn predictive_size(&self) -> usize {
        self.surface_of.len() - 1
    }

    pub fn id(&self, surface: &str) -> Option<TokenId> {
        self.id_of.get(surface).copied()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.id_of.contains_key(surface)
    }

    pub fn surface(&self, id: TokenId) -> &str {
        &self.surface_of[id as usize]
    }

    /// Total encoding: out-of-vocabulary surfaces map to `<unk>`.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens
            .iter()
            .map(|t| self.id(t.as_ref()).unwrap_or(self.unk_id()))
            .collect()
    }

    /// One `surface<TAB>id` line per type, specials first.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.surface_of.iter().enumerate() {
            out.push_str(s);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Vocabulary> {
        let what = "vocabulary file";
        let mut surfaces = Vec::new();
        let mut seen: HashMap<String, ()> = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (surface, id) = match (parts.next(), parts.next(), parts.next()) {
                (Some(s), Some(id), None) => (s, id),
                _ => {
                    return Err(Error::Parse {
                        what,
                        line: lineno + 1,
                        msg: "expected `surface<TAB>id`".into(),
                    })
                }
            };
            let id: usize = id.parse().map_err(|_| Error::Parse {
                what,
                line: lineno + 1,
                msg: format!("bad id `{id}`"),
            })?;
            if id != surfaces.len() {
                return Err(Error::Parse {
                    what,
                    line: lineno + 1,
                    msg: format!("ids must be dense and ascending; got {id}"),
                });
            }
            if surface.is_empty() || surface.chars().any(char::is_whitespace) {
                return Err(Error::Parse {
                    what,
                    line: lineno + 1,
                    msg: format!("bad surface `{surface}`"),
                });
            }
            if seen.insert(surface.to_string(), ()).is_some() {
                return Err(Error::Parse {
                    what,
                    line: lineno + 1,
                    msg: format!("duplicate surface `{surface}`"),
                });
            }
            surfaces.push(surface.to_string());
        }
        if surfaces.len() < SPECIALS.len() || surfaces[..3] != SPECIALS {
            return Err(Error::Parse {
                what,
                line: 1,
                msg: format!("specials {SPECIALS:?} must come first"),
            });
        }
        let id_of = surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as TokenId))
            .collect();
        Ok(Vocabulary {
            id_of,
            surface_of: surfaces,
            min_count: 1,
        })
    }
}

/// A tokenized, encoded corpus. Sentences are stored without `<bos>`/`<eos>`;
/// models pad at use sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Vec<TokenId>>,
    pub source_name: String,
    pub token_count: usize,
}

impl Corpus {
    pub fn from_text(source_name: &str, text: &str, vocab: &Vocabulary) -> Corpus {
        let mut sentences = Vec::new();
        for line in content_lines(text) {
            for sent in split_sentences(&tokenize(line)) {
                if !sent.is_empty() {
                    sentences.push(vocab.encode(&sent));
                }
            }
        }
        let token_count = sentences.iter().map(Vec::len).sum();
        Corpus {
            sentences,
            source_name: source_name.to_string(),
            token_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.token_count == 0
    }
}

/// Sentence-level partition into `k` pairwise-disjoint corpora whose sizes
/// differ by at most one sentence. Deterministic for a given seed.
pub fn split_disjoint(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Corpus>> {
    if k < 1 || corpus.sentences.len() < k {
        return Err(Error::InfeasibleSplit {
            n_sentences: corpus.sentences.len(),
            k,
        });
    }
    let mut order: Vec<usize> = (0..corpus.sentences.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut parts: Vec<Vec<Vec<TokenId>>> = vec![Vec::new(); k];
    for (i, idx) in order.into_iter().enumerate() {
        parts[i % k].push(corpus.sentences[idx].clone());
    }
    Ok(parts
        .into_iter()
        .enumerate()
        .map(|(i, sentences)| {
            let token_count = sentences.iter().map(Vec::len).sum();
            Corpus {
                sentences,
                source_name: format!("{}[{}/{}]", corpus.source_name, i, k),
                token_count,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_1: &str = "The cake that the baker baked impressed the customers .";

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(tokenize("The cake ."), vec!["the", "cake", "."]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t ").is_empty());
    }

    #[test]
    fn tokenize_example_sentence_has_ten_tokens() {
        assert_eq!(tokenize(EXAMPLE_1).len(), 10);
    }

    #[test]
    fn tokenize_detaches_terminal_punctuation() {
        assert_eq!(tokenize("The cake."), vec!["the", "cake", "."]);
        assert_eq!(tokenize("really?"), vec!["really", "?"]);
        assert_eq!(tokenize("."), vec!["."]);
    }

    #[test]
    fn sentences_split_at_terminals() {
        let toks = tokenize("the cat sat . the dog ran ! and then");
        let sents = split_sentences(&toks);
        assert_eq!(sents.len(), 3);
        assert_eq!(sents[0], vec!["the", "cat", "sat", "."]);
        assert_eq!(sents[1], vec!["the", "dog", "ran", "!"]);
        assert_eq!(sents[2], vec!["and", "then"]);
    }

    #[test]
    fn vocab_count_threshold() {
        let v = Vocabulary::build(["a a b"], 2);
        assert!(v.contains("a"));
        assert!(!v.contains("b"));
        assert_eq!(v.len(), 4); // specials + a
    }

    #[test]
    fn vocab_min_count_one_keeps_all() {
        let v = Vocabulary::build(["a b"], 1);
        assert!(v.contains("a") && v.contains("b"));
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn vocab_empty_stream_is_specials_only() {
        let v = Vocabulary::build([], 2);
        assert_eq!(v.len(), 3);
        assert_eq!(v.surface(0), UNK);
        assert_eq!(v.surface(1), BOS);
        assert_eq!(v.surface(2), EOS);
    }

    #[test]
    fn vocab_from_repeated_example_keeps_all_distinct_surfaces() {
        // Example (1) lowercased has 8 distinct surfaces: the, cake, that,
        // baker, baked, impressed, customers, "." — each seen >= 10 times.
        let lines = vec![EXAMPLE_1; 10];
        let v = Vocabulary::build(lines.iter().copied(), 2);
        for s in [
            "the",
            "cake",
            "that",
            "baker",
            "baked",
            "impressed",
            "customers",
            ".",
        ] {
            assert!(v.contains(s), "missing {s}");
        }
        assert_eq!(v.len(), 3 + 8);
    }

    #[test]
    fn encode_is_total() {
        let v = Vocabulary::build(["the cake"], 1);
        assert_eq!(v.encode(&["zzz"]), vec![v.unk_id()]);
        assert_eq!(v.encode::<&str>(&[]), Vec::<TokenId>::new());
        let ids = v.encode(&["the", "cake"]);
        assert_eq!(ids.len(), 2);
        assert!(ids.iter().all(|&i| (i as usize) < v.len() && i > 2));
    }

    #[test]
    fn specials_are_distinct_and_present() {
        let v = Vocabulary::build(["x"], 1);
        let ids = [v.unk_id(), v.bos_id(), v.eos_id()];
        assert_eq!(ids, [0, 1, 2]);
        assert_eq!(v.surface(0), UNK);
    }

    #[test]
    fn vocab_tsv_round_trip() {
        let v = Vocabulary::build(["the cake that the baker baked"], 1);
        let w = Vocabulary::from_tsv(&v.to_tsv()).unwrap();
        assert_eq!(v.surface_of, w.surface_of);
        assert_eq!(v.id_of, w.id_of);
    }

    #[test]
    fn vocab_tsv_rejects_gaps_and_duplicates() {
        assert!(Vocabulary::from_tsv("<unk>\t0\n<bos>\t1\n<eos>\t2\nx\t4\n").is_err());
        assert!(Vocabulary::from_tsv("<unk>\t0\n<bos>\t1\n<eos>\t2\nx\t3\nx\t4\n").is_err());
        assert!(Vocabulary::from_tsv("a\t0\n").is_err());
    }

    #[test]
    fn corpus_skips_wikitext_headers() {
        let v = Vocabulary::build(["the cat sat ."], 1);
        let c = Corpus::from_text("t", "= heading =\n\nthe cat sat .\n", &v);
        assert_eq!(c.sentences.len(), 1);
        assert_eq!(c.token_count, 4);
    }

    fn toy_corpus(n: usize) -> (Corpus, Vocabulary) {
        let lines: Vec<String> = (0..n).map(|i| format!("w{i} w{i} .")).collect();
        let text = lines.join("\n");
        let v = Vocabulary::build(text.lines(), 1);
        (Corpus::from_text("toy", &text, &v), v)
    }

    #[test]
    fn split_ten_into_two_fives() {
        let (c, _) = toy_corpus(10);
        let parts = split_disjoint(&c, 2, 7).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].sentences.len(), 5);
        assert_eq!(parts[1].sentences.len(), 5);
        for s in &parts[0].sentences {
            assert!(!parts[1].sentences.contains(s));
        }
    }

    #[test]
    fn split_k1_is_permuted_identity() {
        let (c, _) = toy_corpus(6);
        let parts = split_disjoint(&c, 1, 3).unwrap();
        assert_eq!(parts.len(), 1);
        let mut got = parts[0].sentences.clone();
        let mut want = c.sentences.clone();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn split_infeasible_errors() {
        let (c, _) = toy_corpus(3);
        assert!(matches!(
            split_disjoint(&c, 4, 0),
            Err(Error::InfeasibleSplit { .. })
        ));
        assert!(split_disjoint(&c, 0, 0).is_err());
    }

    #[test]
    fn split_partition_property() {
        let (c, _) = toy_corpus(23);
        for k in [1, 2, 3, 5, 20] {
            for seed in [0u64, 1, 99] {
                let parts = split_disjoint(&c, k, seed).unwrap();
                let mut union: Vec<Vec<TokenId>> =
                    parts.iter().flat_map(|p| p.sentences.clone()).collect();
                let mut orig = c.sentences.clone();
                union.sort();
                orig.sort();
                assert_eq!(union, orig, "k={k} seed={seed}");
                let sizes: Vec<usize> = parts.iter().map(|p| p.sentences.len()).collect();
                let (mn, mx) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                assert!(mx - mn <= 1);
            }
        }
    }

    #[test]
    fn split_deterministic() {
        let (c, _) = toy_corpus(17);
        let a = split_disjoint(&c, 4, 42).unwrap();
        let b = split_disjoint(&c, 4, 42).unwrap();
        assert_eq!(a, b);
        let d = split_disjoint(&c, 4, 43).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn unk_surface_in_text_maps_to_unk_id() {
        let v = Vocabulary::build(["the <unk> cat", "the <unk> cat"], 2);
        let ids = v.encode(&["the", "<unk>", "cat"]);
        assert_eq!(ids[1], v.unk_id());
    }
}
