//! Shared test support: an independent, scan-based evaluation of the
//! interpolated Kneser-Ney formula. Every query recounts from the raw
//! sentences with nested loops; nothing is shared with the library's tables.

#![allow(dead_code)]

use primelm::corpus::TokenId;

pub struct KnOracle<'a> {
    pub sentences: &'a [Vec<TokenId>],
    pub order: usize,
    pub discount: f64,
    pub vocab_size: usize,
    pub bos: TokenId,
    pub eos: TokenId,
}

impl<'a> KnOracle<'a> {
    fn padded(&self, sentence: &[TokenId]) -> Vec<TokenId> {
        let mut p = vec![self.bos; self.order - 1];
        p.extend_from_slice(sentence);
        p.push(self.eos);
        p
    }

    /// Raw occurrences of `gram` over all padded sentences, skipping windows
    /// that end in `<bos>`.
    pub fn raw_count(&self, gram: &[TokenId]) -> u64 {
        let n = gram.len();
        let mut count = 0;
        for sentence in self.sentences {
            let padded = self.padded(sentence);
            for end in (n - 1)..padded.len() {
                if padded[end] == self.bos {
                    continue;
                }
                if &padded[end + 1 - n..=end] == gram {
                    count += 1;
                }
            }
        }
        count
    }

    /// Top order: raw count. Lower orders: number of distinct left extensions
    /// with a positive raw count one order up.
    pub fn adjusted_count(&self, gram: &[TokenId]) -> u64 {
        if gram.len() == self.order {
            return self.raw_count(gram);
        }
        let mut extended = vec![0; gram.len() + 1];
        extended[1..].copy_from_slice(gram);
        (0..self.vocab_size as TokenId)
            .filter(|&u| {
                extended[0] = u;
                self.raw_count(&extended) > 0
            })
            .count() as u64
    }

    /// (sum of adjusted counts, distinct extensions) over the predictive
    /// support of a context.
    pub fn context_totals(&self, ctx: &[TokenId]) -> (u64, u64) {
        let mut gram = vec![0; ctx.len() + 1];
        gram[..ctx.len()].copy_from_slice(ctx);
        let mut total = 0;
        let mut types = 0;
        for w in 0..self.vocab_size as TokenId {
            if w == self.bos {
                continue;
            }
            gram[ctx.len()] = w;
            let c = self.adjusted_count(&gram);
            total += c;
            if c > 0 {
                types += 1;
            }
        }
        (total, types)
    }

    pub fn prob(&self, context: &[TokenId], word: TokenId) -> f64 {
        if word == self.bos {
            return 0.0;
        }
        let keep = context.len().min(self.order - 1);
        self.prob_rec(&context[context.len() - keep..], word)
    }

    fn prob_rec(&self, ctx: &[TokenId], word: TokenId) -> f64 {
        let uniform = 1.0 / (self.vocab_size - 1) as f64;
        let (total, types) = self.context_totals(ctx);
        if total == 0 {
            return if ctx.is_empty() { uniform } else { self.prob_rec(&ctx[1..], word) };
        }
        let mut gram = vec![0; ctx.len() + 1];
        gram[..ctx.len()].copy_from_slice(ctx);
        gram[ctx.len()] = word;
        let count = self.adjusted_count(&gram);
        let lower = if ctx.is_empty() { uniform } else { self.prob_rec(&ctx[1..], word) };
        ((count as f64 - self.discount).max(0.0) + self.discount * types as f64 * lower)
            / total as f64
    }

    pub fn surprisal(&self, sentence: &[TokenId]) -> f64 {
        let padded = self.padded(sentence);
        let ctx_len = self.order - 1;
        (ctx_len..padded.len())
            .map(|i| -self.prob(&padded[i - ctx_len..i], padded[i]).log2())
            .sum()
    }

    /// All distinct context windows of length 0..order-1 occurring in the
    /// padded sentences.
    pub fn observed_contexts(&self) -> Vec<Vec<TokenId>> {
        let mut out: Vec<Vec<TokenId>> = vec![vec![]];
        for len in 1..self.order {
            for sentence in self.sentences {
                let padded = self.padded(sentence);
                for start in 0..padded.len() + 1 - len {
                    let ctx = padded[start..start + len].to_vec();
                    if !out.contains(&ctx) {
                        out.push(ctx);
                    }
                }
            }
        }
        out
    }
}
