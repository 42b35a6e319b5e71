//! Experiment orchestration: pre-test, adapt, post-test for every
//! (model instance, adaptation type, test type) triple, adaptation-effect
//! matrices, and the long-format results file.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::lstm::LstmModel;
use crate::ngram::KnModel;
use crate::stimuli::{scramble, SentenceType, Stimulus, StimulusBundle, SENTENCE_TYPES};

/// 7x7 adaptation-type x test-type effect matrix.
pub type Effects = [[f64; 7]; 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    Ngram,
    Lstm,
}

impl ModelFamily {
    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::Ngram => "ngram",
            ModelFamily::Lstm => "lstm",
        }
    }

    pub fn from_label(s: &str) -> Option<ModelFamily> {
        match s {
            "ngram" => Some(ModelFamily::Ngram),
            "lstm" => Some(ModelFamily::Lstm),
            _ => None,
        }
    }
}

/// Top-level experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family: ModelFamily,
    pub k_models: usize,
    /// Where the stimulus bundle lives (directory path or "builtin").
    pub stimuli_ref: String,
    pub scramble_adaptation: bool,
    pub seed: u64,
    /// Logarithm base for surprisal; 2 reports bits.
    pub surprisal_base: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_models < 2 {
            return Err(Error::Config(format!(
                "need at least 2 model instances for paired statistics, got {}",
                self.k_models
            )));
        }
        if !(self.surprisal_base > 1.0) {
            return Err(Error::Config(format!(
                "surprisal base must be > 1, got {}",
                self.surprisal_base
            )));
        }
        Ok(())
    }
}

/// A language model that can score sentences and produce an adapted copy.
pub trait AdaptiveLm: Sized {
    fn vocab(&self) -> &Vocabulary;
    /// Total sentence surprisal in bits, hidden state reset per sentence.
    fn sentence_surprisal(&self, sentence: &[TokenId]) -> f64;
    /// New model adapted on the stimuli, in order; `self` is unchanged.
    fn adapted_on(&self, stimuli: &[Vec<TokenId>]) -> Result<Self>;
}

impl AdaptiveLm for KnModel {
    fn vocab(&self) -> &Vocabulary {
        self.vocab()
    }

    fn sentence_surprisal(&self, sentence: &[TokenId]) -> f64 {
        self.surprisal(sentence)
    }

    fn adapted_on(&self, stimuli: &[Vec<TokenId>]) -> Result<KnModel> {
        Ok(self.adapt(stimuli))
    }
}

impl AdaptiveLm for LstmModel {
    fn vocab(&self) -> &Vocabulary {
        self.vocab()
    }

    fn sentence_surprisal(&self, sentence: &[TokenId]) -> f64 {
        self.surprisal(sentence)
    }

    fn adapted_on(&self, stimuli: &[Vec<TokenId>]) -> Result<LstmModel> {
        self.adapt(stimuli, self.config.adapt_lr)
    }
}

/// Raw per-instance surprisal measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRun {
    /// mean test-set surprisal of the base model, per test type
    pub pre: [f64; 7],
    /// mean test-set surprisal after adapting on type a, indexed [a][t]
    pub post: [[f64; 7]; 7],
}

impl InstanceRun {
    /// effect[a][t] = pre[t] - post[a][t]; positive means adaptation made the
    /// test set less surprising.
    pub fn effects(&self) -> Effects {
        let mut e = [[0.0; 7]; 7];
        for a in 0..7 {
            for t in 0..7 {
                e[a][t] = self.pre[t] - self.post[a][t];
            }
        }
        e
    }
}

fn encode_checked(
    vocab: &Vocabulary,
    stimulus: &Stimulus,
    role: &str,
) -> Result<Vec<TokenId>> {
    for token in &stimulus.tokens {
        if !vocab.contains(token) {
            return Err(Error::VocabMismatch(format!(
                "{role} stimulus token `{token}` ({}) is not in the model vocabulary",
                stimulus.sentence_type.label()
            )));
        }
    }
    Ok(vocab.encode(&stimulus.tokens))
}

/// Runs the full adapt/test grid for one model instance. The base model is
/// reused unchanged across adaptation types; each type adapts a fresh copy.
/// With `scramble_adaptation`, each adaptation stimulus is scrambled with an
/// rng derived from (seed, type, index) before use; test sets stay intact.
pub fn run_instance<M: AdaptiveLm>(
    base: &M,
    bundle: &StimulusBundle,
    scramble_adaptation: bool,
    seed: u64,
) -> Result<InstanceRun> {
    let vocab = base.vocab();

    let mut adapt_ids: Vec<Vec<Vec<TokenId>>> = Vec::with_capacity(7);
    for t in SENTENCE_TYPES {
        let mut ids = Vec::new();
        for (si, stim) in bundle.adaptation_for(t).iter().enumerate() {
            let effective = if scramble_adaptation {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((t.index() as u64) << 32) | si as u64);
                scramble(stim, &mut rng)
            } else {
                stim.clone()
            };
            ids.push(encode_checked(vocab, &effective, "adaptation")?);
        }
        adapt_ids.push(ids);
    }
    let mut test_ids: Vec<Vec<Vec<TokenId>>> = Vec::with_capacity(7);
    for t in SENTENCE_TYPES {
        let ids: Result<Vec<_>> = bundle
            .test_for(t)
            .iter()
            .map(|s| encode_checked(vocab, s, "test"))
            .collect();
        test_ids.push(ids?);
    }

    let mean_surprisal = |model: &M, set: &[Vec<TokenId>]| -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        set.iter().map(|s| model.sentence_surprisal(s)).sum::<f64>() / set.len() as f64
    };

    let mut pre = [0.0; 7];
    for t in 0..7 {
        pre[t] = mean_surprisal(base, &test_ids[t]);
    }
    let mut post = [[0.0; 7]; 7];
    for a in 0..7 {
        let adapted = base.adapted_on(&adapt_ids[a])?;
        for t in 0..7 {
            post[a][t] = mean_surprisal(&adapted, &test_ids[t]);
        }
    }
    Ok(InstanceRun { pre, post })
}

/// Mean effect matrix over instances; the per-instance matrices are retained
/// for the paired statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationMatrix {
    pub mean: Effects,
    pub instances: Vec<Effects>,
}

pub fn aggregate(instances: &[Effects]) -> Result<AdaptationMatrix> {
    if instances.is_empty() {
        return Err(Error::Invalid("cannot aggregate zero instances".into()));
    }
    let mut mean = [[0.0; 7]; 7];
    for m in instances {
        for a in 0..7 {
            for t in 0..7 {
                mean[a][t] += m[a][t];
            }
        }
    }
    let n = instances.len() as f64;
    for row in &mut mean {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Ok(AdaptationMatrix {
        mean,
        instances: instances.to_vec(),
    })
}

/// Per test type: (same-type effect, mean different-type effect).
pub fn contrast_same_vs_diff(matrix: &Effects) -> [(f64, f64); 7] {
    let mut out = [(0.0, 0.0); 7];
    for t in 0..7 {
        let same = matrix[t][t];
        let diff: f64 = (0..7).filter(|&a| a != t).map(|a| matrix[a][t]).sum::<f64>() / 6.0;
        out[t] = (same, diff);
    }
    out
}

/// Mean effects grouped by adaptation class x test class, classes being RC
/// (five types) and coordination (two types). Indexed [adapt_class][test_class]
/// with 0 = RC, 1 = coordination.
pub fn contrast_rc_vs_coord(matrix: &Effects) -> [[f64; 2]; 2] {
    let class = |i: usize| usize::from(!SENTENCE_TYPES[i].is_rc());
    let mut sums = [[0.0; 2]; 2];
    let mut counts = [[0usize; 2]; 2];
    for a in 0..7 {
        for t in 0..7 {
            sums[class(a)][class(t)] += matrix[a][t];
            counts[class(a)][class(t)] += 1;
        }
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = sums[i][j] / counts[i][j] as f64;
        }
    }
    out
}

/// The four RC types crossed as adapt x test (16 pairs), averaged by whether
/// voice and reduction match. Order: [voice+reduction matched,
/// voice matched / reduction mismatched, voice mismatched / reduction matched,
/// both mismatched].
pub fn contrast_voice_reduction(matrix: &Effects) -> [f64; 4] {
    let types = [
        SentenceType::UnreducedObjRc,
        SentenceType::ReducedObjRc,
        SentenceType::UnreducedPassSubjRc,
        SentenceType::ReducedPassSubjRc,
    ];
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for &a in &types {
        for &t in &types {
            let voice_matched = a.voice() == t.voice();
            let reduction_matched = a.is_reduced() == t.is_reduced();
            let cell = match (voice_matched, reduction_matched) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            sums[cell] += matrix[a.index()][t.index()];
            counts[cell] += 1;
        }
    }
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = sums[i] / counts[i] as f64;
    }
    out
}

// ---------------------------------------------------------------------------
// Long-format results file: one row per (instance, adapt_type, test_type),
// tab-separated with a header. The single source for the stats and report
// stages.
// ---------------------------------------------------------------------------

pub const RESULTS_HEADER: &str =
    "instance\tadapt_type\ttest_type\tpre_surprisal\tpost_surprisal\teffect";

pub fn write_results(runs: &[InstanceRun]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for (i, run) in runs.iter().enumerate() {
        for (a, at) in SENTENCE_TYPES.iter().enumerate() {
            for (t, tt) in SENTENCE_TYPES.iter().enumerate() {
                let pre = run.pre[t];
                let post = run.post[a][t];
                out.push_str(&format!(
                    "{i}\t{}\t{}\t{pre}\t{post}\t{}\n",
                    at.label(),
                    tt.label(),
                    pre - post
                ));
            }
        }
    }
    out
}

pub fn parse_results(text: &str) -> Result<Vec<InstanceRun>> {
    let what = "results file";
    let parse_err = |line: usize, msg: String| Error::Parse { what, line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        _ => return Err(parse_err(1, "bad or missing header".into())),
    }

    let mut runs: Vec<InstanceRun> = Vec::new();
    let mut seen: Vec<[[bool; 7]; 7]> = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(parse_err(lineno + 1, format!("expected 6 columns, got {}", cols.len())));
        }
        let instance: usize = cols[0]
            .parse()
            .ok()
            .filter(|&i| i <= 100_000)
            .ok_or_else(|| parse_err(lineno + 1, format!("bad instance `{}`", cols[0])))?;
        let a = SentenceType::from_label(cols[1])
            .ok_or_else(|| parse_err(lineno + 1, format!("unknown adapt type `{}`", cols[1])))?;
        let t = SentenceType::from_label(cols[2])
            .ok_or_else(|| parse_err(lineno + 1, format!("unknown test type `{}`", cols[2])))?;
        let float = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(lineno + 1, format!("bad float `{s}`")))
        };
        let pre = float(cols[3])?;
        let post = float(cols[4])?;
        let effect = float(cols[5])?;
        if (pre - post - effect).abs() > 1e-6 {
            return Err(parse_err(
                lineno + 1,
                format!("effect {effect} inconsistent with pre-post {}", pre - post),
            ));
        }
        if instance > runs.len() {
            return Err(parse_err(lineno + 1, format!("instance {instance} out of order")));
        }
        if instance == runs.len() {
            runs.push(InstanceRun {
                pre: [0.0; 7],
                post: [[0.0; 7]; 7],
            });
            seen.push([[false; 7]; 7]);
        }
        let run = &mut runs[instance];
        run.pre[t.index()] = pre;
        run.post[a.index()][t.index()] = post;
        seen[instance][a.index()][t.index()] = true;
    }
    for (i, flags) in seen.iter().enumerate() {
        if flags.iter().flatten().any(|&f| !f) {
            return Err(parse_err(0, format!("instance {i} is missing cells")));
        }
    }
    if runs.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Vocabulary};
    use crate::lstm::{LstmConfig, LstmModel};
    use crate::stimuli::{builtin_frames, generate, GenOptions, Lexicon};

    fn toy_world() -> (Vocabulary, Corpus, StimulusBundle) {
        let lex = Lexicon::builtin();
        let opts = GenOptions {
            n_adapt: 3,
            n_test: 4,
            seed: 5,
            ..GenOptions::default()
        };
        let bundle = generate(&builtin_frames(), &lex, &opts).unwrap();
        // training text that covers the whole stimulus vocabulary
        let mut lines: Vec<String> = Vec::new();
        for set in bundle.adaptation.iter().chain(bundle.test.iter()) {
            for s in set {
                lines.push(s.tokens.join(" "));
            }
        }
        lines.push("the cake was baked by the baker .".into());
        let text = lines.join("\n");
        let vocab = Vocabulary::build(text.lines(), 1);
        let corpus = Corpus::from_text("toy", &text, &vocab);
        (vocab, corpus, bundle)
    }

    #[test]
    fn zero_adaptation_gives_exactly_zero_effects_for_ngram() {
        let (vocab, corpus, mut bundle) = toy_world();
        for set in bundle.adaptation.iter_mut() {
            set.clear();
        }
        let model = KnModel::train(&corpus, &vocab, 3, 0.75).unwrap();
        let run = run_instance(&model, &bundle, false, 0).unwrap();
        for row in run.effects() {
            for v in row {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn zero_adaptation_gives_exactly_zero_effects_for_lstm() {
        let (vocab, _corpus, mut bundle) = toy_world();
        for set in bundle.adaptation.iter_mut() {
            set.clear();
        }
        let cfg = LstmConfig {
            embed_dim: 4,
            hidden_dim: 5,
            num_layers: 1,
            ..LstmConfig::default()
        };
        let model = LstmModel::init(&cfg, &vocab, 1).unwrap();
        let run = run_instance(&model, &bundle, false, 0).unwrap();
        for row in run.effects() {
            for v in row {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn base_model_is_reused_unchanged() {
        let (vocab, corpus, bundle) = toy_world();
        let model = KnModel::train(&corpus, &vocab, 3, 0.75).unwrap();
        let probe = vocab.encode(&["the", "cake", "."]);
        let before = model.surprisal(&probe);
        let run1 = run_instance(&model, &bundle, false, 0).unwrap();
        let after = model.surprisal(&probe);
        assert_eq!(before.to_bits(), after.to_bits());
        let run2 = run_instance(&model, &bundle, false, 0).unwrap();
        assert_eq!(run1, run2);
    }

    #[test]
    fn scrambled_runs_are_reproducible_and_differ_from_plain() {
        let (vocab, corpus, bundle) = toy_world();
        let model = KnModel::train(&corpus, &vocab, 3, 0.75).unwrap();
        let a = run_instance(&model, &bundle, true, 7).unwrap();
        let b = run_instance(&model, &bundle, true, 7).unwrap();
        assert_eq!(a, b);
        let plain = run_instance(&model, &bundle, false, 7).unwrap();
        assert_ne!(a, plain);
        // test sets are untouched by scrambling: pre-surprisals agree
        for t in 0..7 {
            assert_eq!(a.pre[t].to_bits(), plain.pre[t].to_bits());
        }
    }

    #[test]
    fn vocab_mismatch_is_an_error() {
        let (_, _, bundle) = toy_world();
        let tiny_vocab = Vocabulary::build(["the cake"], 1);
        let tiny_corpus = Corpus::from_text("tiny", "the cake . the cake .", &tiny_vocab);
        let model = KnModel::train(&tiny_corpus, &tiny_vocab, 2, 0.75).unwrap();
        let err = run_instance(&model, &bundle, false, 0).unwrap_err();
        assert!(matches!(err, Error::VocabMismatch(_)), "{err}");
    }

    #[test]
    fn aggregate_means_and_errors() {
        assert!(aggregate(&[]).is_err());
        let mut x: Effects = [[0.0; 7]; 7];
        x[2][3] = 4.0;
        let single = aggregate(std::slice::from_ref(&x)).unwrap();
        assert_eq!(single.mean, x);
        let mut neg = x;
        neg.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = -*v));
        let two = aggregate(&[x, neg]).unwrap();
        assert_eq!(two.mean, [[0.0; 7]; 7]);
        assert_eq!(two.instances.len(), 2);
        // duplicating instances leaves the mean unchanged
        let dup = aggregate(&[x, x, x]).unwrap();
        assert_eq!(dup.mean, x);
    }

    #[test]
    fn same_vs_diff_contrast_trivials() {
        let mut diag: Effects = [[0.0; 7]; 7];
        for i in 0..7 {
            diag[i][i] = 2.0;
        }
        for (same, diff) in contrast_same_vs_diff(&diag) {
            assert_eq!(same, 2.0);
            assert_eq!(diff, 0.0);
        }
        let constant: Effects = [[0.7; 7]; 7];
        for (same, diff) in contrast_same_vs_diff(&constant) {
            assert!((same - diff).abs() < 1e-15);
        }
    }

    #[test]
    fn rc_coord_contrast_trivials() {
        let constant: Effects = [[0.3; 7]; 7];
        let cells = contrast_rc_vs_coord(&constant);
        for row in cells {
            for v in row {
                assert!((v - 0.3).abs() < 1e-15);
            }
        }
        // block-diagonal: effects only within class
        let mut block: Effects = [[0.0; 7]; 7];
        for a in 0..7 {
            for t in 0..7 {
                let rc_a = SENTENCE_TYPES[a].is_rc();
                let rc_t = SENTENCE_TYPES[t].is_rc();
                if rc_a == rc_t {
                    block[a][t] = 1.0;
                }
            }
        }
        let cells = contrast_rc_vs_coord(&block);
        assert!(cells[0][0] > cells[0][1]);
        assert!(cells[1][1] > cells[1][0]);
    }

    #[test]
    fn voice_reduction_contrast_trivials() {
        let constant: Effects = [[0.42; 7]; 7];
        let cells = contrast_voice_reduction(&constant);
        for v in cells {
            assert!((v - 0.42).abs() < 1e-15);
        }
        // diagonal-heavy matrix puts the fully matched cell on top
        let mut m: Effects = [[0.1; 7]; 7];
        for i in 0..4 {
            m[i][i] = 1.0;
        }
        let cells = contrast_voice_reduction(&m);
        assert!(cells[0] > cells[1] && cells[0] > cells[2] && cells[0] > cells[3]);
    }

    #[test]
    fn results_file_round_trips() {
        let (vocab, corpus, bundle) = toy_world();
        let model = KnModel::train(&corpus, &vocab, 2, 0.75).unwrap();
        let runs = vec![
            run_instance(&model, &bundle, false, 0).unwrap(),
            run_instance(&model, &bundle, true, 1).unwrap(),
        ];
        let text = write_results(&runs);
        let parsed = parse_results(&text).unwrap();
        assert_eq!(runs.len(), parsed.len());
        for (orig, back) in runs.iter().zip(&parsed) {
            for t in 0..7 {
                assert_eq!(orig.pre[t].to_bits(), back.pre[t].to_bits());
                for a in 0..7 {
                    assert_eq!(orig.post[a][t].to_bits(), back.post[a][t].to_bits());
                }
            }
        }
    }

    #[test]
    fn results_parser_rejects_malformed_input() {
        assert!(parse_results("").is_err());
        assert!(parse_results("wrong header\n").is_err());
        let ok_header = format!("{RESULTS_HEADER}\n");
        assert!(parse_results(&ok_header).is_err()); // no rows
        let bad_row = format!("{RESULTS_HEADER}\n0\tnope\tactive_subj_rc\t1\t1\t0\n");
        assert!(parse_results(&bad_row).is_err());
        let inconsistent = format!(
            "{RESULTS_HEADER}\n0\tactive_subj_rc\tactive_subj_rc\t2\t1\t5\n"
        );
        assert!(parse_results(&inconsistent).is_err());
        let nan_row = format!("{RESULTS_HEADER}\n0\tactive_subj_rc\tactive_subj_rc\tNaN\t1\t0\n");
        assert!(parse_results(&nan_row).is_err());
    }

    #[test]
    fn experiment_config_validation() {
        let mut cfg = ExperimentConfig {
            family: ModelFamily::Ngram,
            k_models: 2,
            stimuli_ref: "builtin".into(),
            scramble_adaptation: false,
            seed: 0,
            surprisal_base: 2.0,
        };
        assert!(cfg.validate().is_ok());
        cfg.k_models = 1;
        assert!(cfg.validate().is_err());
        cfg.k_models = 5;
        cfg.surprisal_base = 1.0;
        assert!(cfg.validate().is_err());
        assert_eq!(ModelFamily::from_label("lstm"), Some(ModelFamily::Lstm));
        assert_eq!(ModelFamily::from_label("x"), None);
    }
}
