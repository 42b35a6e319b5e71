//! Significance testing over per-instance adaptation effects: paired t-test,
//! exact sign test, and Holm correction.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Matched pairs of per-instance measurements (e.g. same-type effect vs. mean
/// different-type effect).
#[derive(Debug, Clone)]
pub struct PairedSample {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedSample {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<PairedSample> {
        if a.len() != b.len() {
            return Err(Error::Invalid(format!(
                "paired sample arms differ in length: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.len() < 2 {
            return Err(Error::Invalid("paired sample needs at least 2 pairs".into()));
        }
        Ok(PairedSample { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub mean_difference: f64,
    pub n: usize,
    pub method: &'static str,
}

/// Two-sided paired t-test on the pair differences.
pub fn paired_t(sample: &PairedSample) -> Result<TestResult> {
    let diffs = sample.differences();
    let n = diffs.len();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| Error::Invalid(format!("t distribution: {e}")))?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(TestResult {
        statistic: t,
        p_value: p,
        mean_difference: mean,
        n,
        method: "paired_t",
    })
}

/// Exact two-sided binomial sign test on the pair differences; ties dropped.
pub fn sign_test(sample: &PairedSample) -> Result<TestResult> {
    let diffs = sample.differences();
    let positives = diffs.iter().filter(|&&d| d > 0.0).count();
    let negatives = diffs.iter().filter(|&&d| d < 0.0).count();
    let m = positives + negatives;
    if m < 2 {
        return Err(Error::Invalid(format!(
            "sign test needs >= 2 non-tied pairs, got {m}"
        )));
    }
    let lower = binom_cdf_half(m, positives);
    let upper = binom_sf_half(m, positives);
    let p = (2.0 * lower.min(upper)).clamp(0.0, 1.0);
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    Ok(TestResult {
        statistic: positives as f64,
        p_value: p,
        mean_difference: mean,
        n: m,
        method: "sign",
    })
}

/// P(X <= k) for X ~ Binomial(n, 1/2).
fn binom_cdf_half(n: usize, k: usize) -> f64 {
    (0..=k).map(|i| binom_pmf_half(n, i)).sum()
}

/// P(X >= k) for X ~ Binomial(n, 1/2).
fn binom_sf_half(n: usize, k: usize) -> f64 {
    (k..=n).map(|i| binom_pmf_half(n, i)).sum()
}

fn binom_pmf_half(n: usize, k: usize) -> f64 {
    // C(n,k) / 2^n in log space to stay finite for large n
    let mut log = -(n as f64) * std::f64::consts::LN_2;
    for i in 0..k {
        log += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    log.exp()
}

/// Holm step-down correction. Returns adjusted p-values in input order.
pub fn holm_correct(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        let scaled = ((m - rank) as f64 * p_values[idx]).min(1.0);
        running = running.max(scaled);
        adjusted[idx] = running;
    }
    adjusted
}

// ---------------------------------------------------------------------------
// Analysis assembly: turns per-instance effect matrices into the analysis.tsv
// rows consumed by the report stage. Test rows carry a significance decision;
// bar rows carry the plotted means with 95% confidence intervals.
// ---------------------------------------------------------------------------

use crate::priming::{
    contrast_rc_vs_coord, contrast_same_vs_diff, contrast_voice_reduction, Effects, InstanceRun,
};
use crate::stimuli::SENTENCE_TYPES;

pub const ANALYSIS_HEADER: &str =
    "name\tmean_diff\tstatistic\tp_raw\tp_holm\tsignificant\tmethod\tn\tci_low\tci_high";

pub const VR_CELL_NAMES: [&str; 4] = [
    "voice_matched_reduction_matched",
    "voice_matched_reduction_mismatched",
    "voice_mismatched_reduction_matched",
    "voice_mismatched_reduction_mismatched",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub name: String,
    pub mean_diff: f64,
    pub statistic: f64,
    pub p_raw: f64,
    pub p_holm: f64,
    pub significant: bool,
    pub method: String,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisReport {
    pub rows: Vec<AnalysisRow>,
}

impl AnalysisReport {
    pub fn find(&self, name: &str) -> Option<&AnalysisRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Sample mean with a 95% t-interval; collapses to a point for n < 2.
pub fn mean_ci95(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    if n < 2 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(2.0);
    (mean, mean - t * se, mean + t * se)
}

fn test_row(name: String, sample: &PairedSample, alpha: f64) -> Result<AnalysisRow> {
    let result = match paired_t(sample) {
        Ok(r) => r,
        Err(Error::ZeroVariance) => sign_test(sample)?,
        Err(e) => return Err(e),
    };
    Ok(AnalysisRow {
        name,
        mean_diff: result.mean_difference,
        statistic: result.statistic,
        p_raw: result.p_value,
        p_holm: result.p_value,
        significant: result.p_value < alpha,
        method: result.method.to_string(),
        n: result.n,
        ci_low: 0.0,
        ci_high: 0.0,
    })
}

fn bar_row(name: String, values: &[f64]) -> AnalysisRow {
    let (mean, lo, hi) = mean_ci95(values);
    AnalysisRow {
        name,
        mean_diff: mean,
        statistic: 0.0,
        p_raw: 1.0,
        p_holm: 1.0,
        significant: false,
        method: "mean".into(),
        n: values.len(),
        ci_low: lo,
        ci_high: hi,
    }
}

/// Builds every contrast and bar row from the per-instance runs. The seven
/// per-type same-vs-different tests form one Holm family at level `alpha`;
/// the class and voice/reduction contrasts are reported uncorrected.
pub fn analyze(runs: &[InstanceRun], alpha: f64) -> Result<AnalysisReport> {
    if runs.is_empty() {
        return Err(Error::Invalid("no instances to analyze".into()));
    }
    let effects: Vec<Effects> = runs.iter().map(InstanceRun::effects).collect();
    let mut rows = Vec::new();

    // per-type same vs mean-different, Holm-corrected as a family
    let per_type: Vec<[(f64, f64); 7]> = effects.iter().map(contrast_same_vs_diff).collect();
    let mut family = Vec::new();
    for (ti, t) in SENTENCE_TYPES.iter().enumerate() {
        let same: Vec<f64> = per_type.iter().map(|c| c[ti].0).collect();
        let diff: Vec<f64> = per_type.iter().map(|c| c[ti].1).collect();
        let sample = PairedSample::new(same, diff)?;
        family.push(test_row(format!("same_vs_diff:{}", t.label()), &sample, alpha)?);
    }
    let holm = holm_correct(&family.iter().map(|r| r.p_raw).collect::<Vec<_>>());
    for (row, p) in family.iter_mut().zip(holm) {
        row.p_holm = p;
        row.significant = p < alpha;
    }
    rows.extend(family);

    // pooled sign test over all (instance, type) same-vs-different pairs
    let pooled_same: Vec<f64> =
        per_type.iter().flat_map(|c| c.iter().map(|p| p.0)).collect();
    let pooled_diff: Vec<f64> =
        per_type.iter().flat_map(|c| c.iter().map(|p| p.1)).collect();
    let pooled = PairedSample::new(pooled_same, pooled_diff)?;
    let pooled_result = sign_test(&pooled)?;
    rows.push(AnalysisRow {
        name: "pooled_sign:same_vs_diff".into(),
        mean_diff: pooled_result.mean_difference,
        statistic: pooled_result.statistic,
        p_raw: pooled_result.p_value,
        p_holm: pooled_result.p_value,
        significant: pooled_result.p_value < alpha,
        method: pooled_result.method.to_string(),
        n: pooled_result.n,
        ci_low: 0.0,
        ci_high: 0.0,
    });

    // RC/coordination class contrasts: within-class vs cross-class effects
    // for each adaptation class
    let class_cells: Vec<[[f64; 2]; 2]> = effects.iter().map(contrast_rc_vs_coord).collect();
    for (ci, class_name) in ["rc", "coord"].iter().enumerate() {
        let within: Vec<f64> = class_cells.iter().map(|c| c[ci][ci]).collect();
        let cross: Vec<f64> = class_cells.iter().map(|c| c[ci][1 - ci]).collect();
        let sample = PairedSample::new(within, cross)?;
        rows.push(test_row(
            format!("class:adapt_{class_name}_within_vs_cross"),
            &sample,
            alpha,
        )?);
    }

    // voice/reduction: fully matched vs fully mismatched cells
    let vr_cells: Vec<[f64; 4]> = effects.iter().map(contrast_voice_reduction).collect();
    let matched: Vec<f64> = vr_cells.iter().map(|c| c[0]).collect();
    let mismatched: Vec<f64> = vr_cells.iter().map(|c| c[3]).collect();
    rows.push(test_row(
        "voice_reduction:matched_vs_mismatched".into(),
        &PairedSample::new(matched, mismatched)?,
        alpha,
    )?);

    // bar rows with confidence intervals, for the figures
    for (ti, t) in SENTENCE_TYPES.iter().enumerate() {
        let same: Vec<f64> = per_type.iter().map(|c| c[ti].0).collect();
        let diff: Vec<f64> = per_type.iter().map(|c| c[ti].1).collect();
        rows.push(bar_row(format!("bar:same:{}", t.label()), &same));
        rows.push(bar_row(format!("bar:diff:{}", t.label()), &diff));
    }
    for (ai, a_name) in ["rc", "coord"].iter().enumerate() {
        for (ti, t_name) in ["rc", "coord"].iter().enumerate() {
            let vals: Vec<f64> = class_cells.iter().map(|c| c[ai][ti]).collect();
            rows.push(bar_row(format!("bar:class:{a_name}:{t_name}"), &vals));
        }
    }
    for (ci, cell) in VR_CELL_NAMES.iter().enumerate() {
        let vals: Vec<f64> = vr_cells.iter().map(|c| c[ci]).collect();
        rows.push(bar_row(format!("bar:vr:{cell}"), &vals));
    }

    Ok(AnalysisReport { rows })
}

pub fn write_analysis(report: &AnalysisReport) -> String {
    let mut out = String::from(ANALYSIS_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.name,
            r.mean_diff,
            r.statistic,
            r.p_raw,
            r.p_holm,
            r.significant,
            r.method,
            r.n,
            r.ci_low,
            r.ci_high
        ));
    }
    out
}

pub fn parse_analysis(text: &str) -> Result<AnalysisReport> {
    let what = "analysis file";
    let parse_err = |line: usize, msg: String| Error::Parse { what, line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == ANALYSIS_HEADER => {}
        _ => return Err(parse_err(1, "bad or missing header".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(parse_err(lineno + 1, format!("expected 10 columns, got {}", cols.len())));
        }
        let float = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(lineno + 1, format!("bad float `{s}`")))
        };
        let significant = match cols[5] {
            "true" => true,
            "false" => false,
            other => return Err(parse_err(lineno + 1, format!("bad boolean `{other}`"))),
        };
        rows.push(AnalysisRow {
            name: cols[0].to_string(),
            mean_diff: float(cols[1])?,
            statistic: float(cols[2])?,
            p_raw: float(cols[3])?,
            p_holm: float(cols[4])?,
            significant,
            method: cols[6].to_string(),
            n: cols[7]
                .parse()
                .map_err(|_| parse_err(lineno + 1, format!("bad n `{}`", cols[7])))?,
            ci_low: float(cols[8])?,
            ci_high: float(cols[9])?,
        });
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no rows".into()));
    }
    Ok(AnalysisReport { rows })
}
