//! Experiment driver: the stage functions behind the CLI subcommands, plus
//! the run manifest. File writes are atomic (write to a temp file, then
//! rename), and every stage is deterministic given the configuration.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::corpus::{content_lines, split_disjoint, Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::lstm::LstmModel;
use crate::ngram::KnModel;
use crate::priming::{run_instance, AdaptiveLm, InstanceRun, ModelFamily};
use crate::stats::{analyze, parse_analysis, write_analysis, AnalysisReport};
use crate::stimuli::{
    builtin_frames, generate, read_bundle, write_bundle, GenOptions, Lexicon, StimulusBundle,
    SENTENCE_TYPES,
};
use crate::svg::{plot_bars, BarSeries};
use crate::synth::synth_corpus_text;
use crate::util::fnv1a64;

pub fn corpus_path(cfg: &RunConfig) -> PathBuf {
    if cfg.corpus == "synthetic" {
        cfg.out.join("corpus.txt")
    } else {
        PathBuf::from(&cfg.corpus)
    }
}

pub fn vocab_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("vocab.tsv")
}

pub fn stimuli_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("stimuli")
}

pub fn models_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("models")
}

pub fn results_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("results.tsv")
}

pub fn analysis_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("analysis.tsv")
}

pub fn figures_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("figures")
}

pub fn manifest_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("manifest.txt")
}

/// Writes via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_lexicon(cfg: &RunConfig) -> Result<Lexicon> {
    if cfg.lexicon == "builtin" {
        Ok(Lexicon::builtin())
    } else {
        Lexicon::parse(&std::fs::read_to_string(&cfg.lexicon)?)
    }
}

/// Returns the corpus text, synthesizing and persisting it first when the
/// config asks for the synthetic corpus.
pub fn ensure_corpus_text(cfg: &RunConfig) -> Result<String> {
    if cfg.corpus == "synthetic" {
        let lexicon = load_lexicon(cfg)?;
        let text = synth_corpus_text(cfg.corpus_tokens, cfg.corpus_seed, &lexicon);
        write_atomic(&corpus_path(cfg), text.as_bytes())?;
        Ok(text)
    } else {
        Ok(std::fs::read_to_string(&cfg.corpus)?)
    }
}

pub fn build_world(cfg: &RunConfig, text: &str) -> Result<(Vocabulary, Corpus)> {
    let vocab = Vocabulary::build(content_lines(text), cfg.min_count);
    let corpus = Corpus::from_text(&cfg.corpus, text, &vocab);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(cfg.corpus.clone()));
    }
    Ok((vocab, corpus))
}

pub fn gen_options(cfg: &RunConfig) -> GenOptions {
    GenOptions {
        n_adapt: cfg.n_adapt,
        n_test: cfg.n_test,
        seed: cfg.seed,
        p_mod: cfg.p_mod,
        overlap_max: cfg.overlap_max,
    }
}

// -- reusable stages (no file IO) --------------------------------------------

pub fn train_ngram_models(
    corpus: &Corpus,
    vocab: &Vocabulary,
    k: usize,
    order: usize,
    discount: f64,
    seed: u64,
) -> Result<Vec<KnModel>> {
    let splits = split_disjoint(corpus, k, seed)?;
    splits
        .par_iter()
        .map(|split| KnModel::train(split, vocab, order, discount))
        .collect()
}

pub fn train_lstm_models(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &RunConfig,
) -> Result<Vec<(LstmModel, Vec<f64>)>> {
    let splits = split_disjoint(corpus, cfg.models, cfg.seed)?;
    splits
        .par_iter()
        .enumerate()
        .map(|(i, split)| {
            let mut lstm_cfg = cfg.lstm_config();
            lstm_cfg.seed = cfg.seed.wrapping_add(1000 + i as u64);
            LstmModel::init(&lstm_cfg, vocab, lstm_cfg.seed)?.trained(split)
        })
        .collect()
}

/// Runs every model instance over the full adaptation/test grid, in parallel,
/// in a fixed order. Surprisals are rescaled from bits when the configured
/// base is not 2.
pub fn run_all_instances<M: AdaptiveLm + Sync>(
    models: &[M],
    bundle: &StimulusBundle,
    scramble: bool,
    seed: u64,
    surprisal_base: f64,
) -> Result<Vec<InstanceRun>> {
    let factor = std::f64::consts::LN_2 / surprisal_base.ln();
    let runs: Result<Vec<InstanceRun>> = models
        .par_iter()
        .enumerate()
        .map(|(i, model)| run_instance(model, bundle, scramble, seed.wrapping_add(i as u64)))
        .collect();
    let mut runs = runs?;
    if factor != 1.0 {
        for run in &mut runs {
            for v in &mut run.pre {
                *v *= factor;
            }
            for row in &mut run.post {
                for v in row {
                    *v *= factor;
                }
            }
        }
    }
    Ok(runs)
}

// -- CLI stages ---------------------------------------------------------------

pub fn cmd_gen_stimuli(cfg: &RunConfig) -> Result<()> {
    let lexicon = load_lexicon(cfg)?;
    let bundle = generate(&builtin_frames(), &lexicon, &gen_options(cfg))?;
    let dir = stimuli_dir(cfg);
    write_bundle(&dir, &bundle)?;
    println!(
        "wrote {} adaptation + {} test stimuli per type to {}",
        cfg.n_adapt,
        cfg.n_test,
        dir.display()
    );
    Ok(())
}

pub fn cmd_train_ngram(cfg: &RunConfig) -> Result<()> {
    let text = ensure_corpus_text(cfg)?;
    let (vocab, corpus) = build_world(cfg, &text)?;
    let models = train_ngram_models(&corpus, &vocab, cfg.models, cfg.order, cfg.discount, cfg.seed)?;
    write_atomic(&vocab_path(cfg), vocab.to_tsv().as_bytes())?;
    let dir = models_dir(cfg);
    for (i, model) in models.iter().enumerate() {
        write_atomic(&dir.join(format!("kn_{i:03}.knm")), &model.to_bytes())?;
    }
    println!(
        "trained {} order-{} models on {} tokens ({} types); wrote {}",
        models.len(),
        cfg.order,
        corpus.token_count,
        vocab.len(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_train_lstm(cfg: &RunConfig) -> Result<()> {
    let text = ensure_corpus_text(cfg)?;
    let (vocab, corpus) = build_world(cfg, &text)?;
    let trained = train_lstm_models(&corpus, &vocab, cfg)?;
    write_atomic(&vocab_path(cfg), vocab.to_tsv().as_bytes())?;
    let dir = models_dir(cfg);
    for (i, (model, curve)) in trained.iter().enumerate() {
        write_atomic(&dir.join(format!("lstm_{i:03}.ckpt")), &model.to_bytes())?;
        let final_loss = curve.last().copied().unwrap_or(f64::NAN);
        println!("lstm {i:03}: final epoch loss {final_loss:.3} bits/token");
    }
    println!(
        "trained {} lstms on {} tokens ({} types); wrote {}",
        trained.len(),
        corpus.token_count,
        vocab.len(),
        dir.display()
    );
    Ok(())
}

fn model_files(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(prefix) && !n.ends_with(".tmp"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn cmd_run_priming(cfg: &RunConfig) -> Result<()> {
    let vocab = Vocabulary::from_tsv(&std::fs::read_to_string(vocab_path(cfg))?)?;
    let lexicon = load_lexicon(cfg)?;
    let bundle = read_bundle(&stimuli_dir(cfg), Some(&lexicon))?;
    let dir = models_dir(cfg);

    let runs = match cfg.family {
        ModelFamily::Ngram => {
            let files = model_files(&dir, "kn_")?;
            check_model_count(files.len(), cfg)?;
            let models: Result<Vec<KnModel>> = files
                .iter()
                .map(|p| KnModel::from_bytes(&std::fs::read(p)?))
                .collect();
            run_all_instances(&models?, &bundle, cfg.scramble_adaptation, cfg.seed, cfg.surprisal_base)?
        }
        ModelFamily::Lstm => {
            let files = model_files(&dir, "lstm_")?;
            check_model_count(files.len(), cfg)?;
            let models: Result<Vec<LstmModel>> = files
                .iter()
                .map(|p| LstmModel::from_bytes(&std::fs::read(p)?, &vocab))
                .collect();
            run_all_instances(&models?, &bundle, cfg.scramble_adaptation, cfg.seed, cfg.surprisal_base)?
        }
    };
    write_atomic(&results_path(cfg), crate::priming::write_results(&runs).as_bytes())?;
    println!(
        "ran {} instances x 7 adaptation types{}; wrote {}",
        runs.len(),
        if cfg.scramble_adaptation { " (scrambled adaptation)" } else { "" },
        results_path(cfg).display()
    );
    Ok(())
}

fn check_model_count(found: usize, cfg: &RunConfig) -> Result<()> {
    if found != cfg.models {
        return Err(Error::Config(format!(
            "{} model files on disk but config expects {}; retrain or fix `models`",
            found, cfg.models
        )));
    }
    Ok(())
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<()> {
    let runs = crate::priming::parse_results(&std::fs::read_to_string(results_path(cfg))?)?;
    let report = analyze(&runs, cfg.alpha)?;
    write_atomic(&analysis_path(cfg), write_analysis(&report).as_bytes())?;
    let significant = report
        .rows
        .iter()
        .filter(|r| r.name.starts_with("same_vs_diff:") && r.significant)
        .count();
    println!(
        "analyzed {} instances; {significant}/7 per-type contrasts significant at alpha={}; wrote {}",
        runs.len(),
        cfg.alpha,
        analysis_path(cfg).display()
    );
    Ok(())
}

fn bar(report: &AnalysisReport, name: &str) -> Result<(f64, (f64, f64))> {
    let row = report
        .find(name)
        .ok_or_else(|| Error::Invalid(format!("analysis is missing row `{name}`")))?;
    Ok((row.mean_diff, (row.ci_low, row.ci_high)))
}

pub fn cmd_plot(cfg: &RunConfig) -> Result<()> {
    let report = parse_analysis(&std::fs::read_to_string(analysis_path(cfg))?)?;
    let dir = figures_dir(cfg);

    // figure 1: per-type same vs different bars
    let groups: Vec<String> =
        SENTENCE_TYPES.iter().map(|t| t.display_name().to_string()).collect();
    let mut same = BarSeries {
        label: "same-type".into(),
        values: Vec::new(),
        errors: Vec::new(),
    };
    let mut diff = BarSeries {
        label: "different-type".into(),
        values: Vec::new(),
        errors: Vec::new(),
    };
    for t in SENTENCE_TYPES {
        let (v, e) = bar(&report, &format!("bar:same:{}", t.label()))?;
        same.values.push(v);
        same.errors.push(e);
        let (v, e) = bar(&report, &format!("bar:diff:{}", t.label()))?;
        diff.values.push(v);
        diff.errors.push(e);
    }
    let fig1 = plot_bars(
        "Adaptation effect by test type (bits)",
        &groups,
        &[same, diff],
    )?;
    write_atomic(&dir.join("same_vs_diff.svg"), fig1.as_bytes())?;

    // figure 2: RC vs coordination class means
    let class_groups = vec!["Adapt on RC".to_string(), "Adapt on coord.".to_string()];
    let mut test_rc = BarSeries {
        label: "test on RC".into(),
        values: Vec::new(),
        errors: Vec::new(),
    };
    let mut test_coord = BarSeries {
        label: "test on coord.".into(),
        values: Vec::new(),
        errors: Vec::new(),
    };
    for a in ["rc", "coord"] {
        let (v, e) = bar(&report, &format!("bar:class:{a}:rc"))?;
        test_rc.values.push(v);
        test_rc.errors.push(e);
        let (v, e) = bar(&report, &format!("bar:class:{a}:coord"))?;
        test_coord.values.push(v);
        test_coord.errors.push(e);
    }
    let fig2 = plot_bars(
        "RC vs coordination adaptation effect (bits)",
        &class_groups,
        &[test_rc, test_coord],
    )?;
    write_atomic(&dir.join("rc_vs_coord.svg"), fig2.as_bytes())?;

    // figure 3: voice/reduction match cells
    let vr_groups: Vec<String> = ["voice+red matched", "voice matched", "reduction matched", "neither"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut vr = BarSeries {
        label: "mean effect".into(),
        values: Vec::new(),
        errors: Vec::new(),
    };
    for cell in crate::stats::VR_CELL_NAMES {
        let (v, e) = bar(&report, &format!("bar:vr:{cell}"))?;
        vr.values.push(v);
        vr.errors.push(e);
    }
    let fig3 = plot_bars(
        "Voice/reduction match adaptation effect (bits)",
        &vr_groups,
        &[vr],
    )?;
    write_atomic(&dir.join("voice_reduction.svg"), fig3.as_bytes())?;

    println!("wrote 3 figures to {}", dir.display());
    Ok(())
}

pub fn cmd_all(cfg: &RunConfig) -> Result<()> {
    cmd_gen_stimuli(cfg)?;
    match cfg.family {
        ModelFamily::Ngram => cmd_train_ngram(cfg)?,
        ModelFamily::Lstm => cmd_train_lstm(cfg)?,
    }
    cmd_run_priming(cfg)?;
    cmd_analyze(cfg)?;
    cmd_plot(cfg)?;
    write_atomic(&cfg.out.join("config.txt"), cfg.canonical_text().as_bytes())?;
    write_manifest(cfg)?;
    println!("wrote {}", manifest_path(cfg).display());
    Ok(())
}

fn file_checksum(path: &Path) -> String {
    match std::fs::read(path) {
        Ok(bytes) => format!("{:016x}", fnv1a64(&bytes)),
        Err(_) => "absent".to_string(),
    }
}

/// Records config fingerprint, seeds and artifact checksums. Re-running with
/// the same config reproduces every numeric artifact checksum.
pub fn write_manifest(cfg: &RunConfig) -> Result<()> {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut out = String::from("primelm-manifest 1\n");
    out.push_str(&format!("created_unix={created}\n"));
    out.push_str(&format!("crate_version={}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!(
        "config_hash={:016x}\n",
        fnv1a64(cfg.canonical_text().as_bytes())
    ));
    out.push_str(&format!("family={}\n", cfg.family.label()));
    out.push_str(&format!("models={}\n", cfg.models));
    out.push_str(&format!("seed={}\n", cfg.seed));
    out.push_str(&format!("corpus_seed={}\n", cfg.corpus_seed));
    out.push_str(&format!("scramble_adaptation={}\n", cfg.scramble_adaptation));
    out.push_str(&format!("corpus_checksum={}\n", file_checksum(&corpus_path(cfg))));
    out.push_str(&format!("vocab_checksum={}\n", file_checksum(&vocab_path(cfg))));
    out.push_str(&format!(
        "stimuli_checksum={}\n",
        file_checksum(&stimuli_dir(cfg).join("test.txt"))
    ));
    out.push_str(&format!("results_checksum={}\n", file_checksum(&results_path(cfg))));
    out.push_str(&format!("analysis_checksum={}\n", file_checksum(&analysis_path(cfg))));
    write_atomic(&manifest_path(cfg), out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(out: &Path) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.models = 3;
        cfg.corpus_tokens = 30_000;
        cfg.n_adapt = 4;
        cfg.n_test = 6;
        cfg.out = out.to_path_buf();
        cfg
    }

    #[test]
    fn ngram_pipeline_end_to_end_produces_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        cmd_all(&cfg).unwrap();
        for file in [
            "corpus.txt",
            "vocab.tsv",
            "stimuli/adapt.txt",
            "stimuli/test.meta.tsv",
            "models/kn_000.knm",
            "results.tsv",
            "analysis.tsv",
            "figures/same_vs_diff.svg",
            "figures/rc_vs_coord.svg",
            "figures/voice_reduction.svg",
            "manifest.txt",
            "config.txt",
        ] {
            assert!(dir.path().join(file).exists(), "missing {file}");
        }
    }

    #[test]
    fn rerunning_reproduces_results_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        cmd_all(&cfg).unwrap();
        let first = std::fs::read(results_path(&cfg)).unwrap();
        let first_analysis = std::fs::read(analysis_path(&cfg)).unwrap();
        // delete everything and re-run from the same config
        std::fs::remove_dir_all(dir.path()).unwrap();
        cmd_all(&cfg).unwrap();
        assert_eq!(first, std::fs::read(results_path(&cfg)).unwrap());
        assert_eq!(first_analysis, std::fs::read(analysis_path(&cfg)).unwrap());
    }

    #[test]
    fn missing_corpus_file_errors_with_io() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.corpus = dir.path().join("no_such.txt").display().to_string();
        assert!(matches!(ensure_corpus_text(&cfg), Err(Error::Io(_))));
    }

    #[test]
    fn model_count_mismatch_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cmd_gen_stimuli(&cfg).unwrap();
        cmd_train_ngram(&cfg).unwrap();
        cfg.models = 5;
        assert!(matches!(cmd_run_priming(&cfg), Err(Error::Config(_))));
    }
}
