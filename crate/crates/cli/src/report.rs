//! Report records written as JSON, and their text and SVG renderings.

use std::fmt::Write;
use std::path::Path;

use lagsynth::adf::AdfResult;
use lagsynth::baselines::TMap;
use lagsynth::cv::Scheme;
use lagsynth::sgl::{HyperParams, StopReason};
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::io;
use crate::pipeline::{BaselineScores, Comparison};
use crate::svg;

pub const REPORT_FILE: &str = "report.json";
pub const MODELS_FILE: &str = "models.json";
pub const PREDICTIONS_FILE: &str = "predictions.json";
pub const NULL_FILE: &str = "null.json";
pub const BASELINE_FILE: &str = "baseline.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    /// As written in the config.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub inputs: Vec<InputHash>,
    pub seed: u64,
    pub scheme: Scheme,
    pub n_lags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub evaluations: usize,
    /// Validation MSE at the chosen point, smoothed by the surrogate model.
    pub posterior_mean: f64,
    pub posterior_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParcellationReport {
    pub index: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub r: f64,
    pub mse: f64,
    /// Constant prediction or truth; `r` is reported as 0.
    pub degenerate: bool,
    pub lambda: f64,
    pub alpha: f64,
    pub n_nonzero: usize,
    pub solver_iterations: usize,
    pub solver_stop: StopReason,
    /// `None` when the hyperparameters were fixed.
    pub search: Option<SearchSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub name: String,
    pub parcellations: Vec<ParcellationReport>,
    pub mean_r: f64,
    pub mean_mse: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    pub channel_labels: Vec<String>,
    pub freqs: Vec<f64>,
    pub n_lags: usize,
    /// Seconds per sample.
    pub tr: f64,
}

/// Result of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub provenance: Provenance,
    pub subjects: Vec<SubjectReport>,
    pub mean_r: f64,
    pub mean_mse: f64,
    pub any_degenerate: bool,
    pub axes: Axes,
    /// Group t-maps of the coefficients over all parcellation models.
    pub maps: Option<TMap>,
    pub maps_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredModel {
    pub intercept: f64,
    pub hyper: HyperParams,
    /// `[C, F, M]`.
    pub coefficients: Array3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectModels {
    pub name: String,
    pub parcellations: Vec<StoredModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelsFile {
    pub provenance: Provenance,
    pub axes: Axes,
    pub subjects: Vec<SubjectModels>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredPrediction {
    /// Indices into the two sessions' design rows, concatenated.
    pub test_rows: Vec<usize>,
    pub prediction: Vec<f64>,
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectPredictions {
    pub name: String,
    pub parcellations: Vec<StoredPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsFile {
    pub provenance: Provenance,
    pub subjects: Vec<SubjectPredictions>,
}

/// Shape of a null distribution for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolinSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl ViolinSummary {
    /// Quartiles and a Gaussian kernel density (Silverman bandwidth) on 64 points.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
        let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
        let spread = sd.min(iqr / 1.34);
        let spread = if spread > 0.0 { spread } else { sd.max(1e-3) };
        let bandwidth = 0.9 * spread * n.powf(-0.2);
        let (lo, hi) = (s[0] - 3.0 * bandwidth, s[s.len() - 1] + 3.0 * bandwidth);
        let grid: Vec<f64> = (0..64).map(|i| lo + (hi - lo) * i as f64 / 63.0).collect();
        let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
        let density = grid
            .iter()
            .map(|g| norm * s.iter().map(|v| (-0.5 * ((g - v) / bandwidth).powi(2)).exp()).sum::<f64>())
            .collect();
        Some(Self {
            min: s[0],
            q1: quantile(&s, 0.25),
            median: quantile(&s, 0.5),
            q3: quantile(&s, 0.75),
            max: s[s.len() - 1],
            bandwidth,
            grid,
            density,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSubject {
    pub name: String,
    pub observed: f64,
    /// `#{null >= observed} / n`.
    pub p_value: f64,
    /// `(#{null >= observed} + 1) / (n + 1)`.
    pub p_value_conservative: f64,
    pub n_surrogates: usize,
    pub surrogate_stats: Vec<f64>,
    pub adf: Vec<AdfResult>,
    pub failures: Vec<(usize, String)>,
    pub violin: Option<ViolinSummary>,
}

/// Result of `nulltest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullReport {
    pub provenance: Provenance,
    pub requested_surrogates: usize,
    pub subjects: Vec<NullSubject>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSubject {
    pub name: String,
    pub sgl_r: f64,
    pub muc_r: f64,
    pub smr_r: f64,
    pub smr_abs_r: f64,
    pub scores: BaselineScores,
}

/// Result of `baseline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub provenance: Provenance,
    pub fdr_q: f64,
    pub subjects: Vec<BaselineSubject>,
    pub comparisons: Vec<Comparison>,
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::InterSession => "inter-session",
        Scheme::IntraSession => "intra-session",
    }
}

fn provenance_text(out: &mut String, p: &Provenance) {
    writeln!(out, "{} {}", p.tool, p.version).unwrap();
    writeln!(out, "config sha256: {}", p.config_hash).unwrap();
    writeln!(out, "seed: {}   scheme: {}   lags: {}", p.seed, scheme_name(p.scheme), p.n_lags).unwrap();
    for i in &p.inputs {
        writeln!(out, "  input {}  {}", i.sha256, i.path).unwrap();
    }
    out.push('\n');
}

pub fn fit_summary(r: &PredictionReport) -> String {
    let mut s = String::from("Prediction report\n=================\n");
    provenance_text(&mut s, &r.provenance);
    writeln!(s, "{:<16} {:>4} {:>8} {:>10} {:>11} {:>6} {:>5} {:>5}", "subject", "part", "r", "mse", "lambda", "alpha", "nnz", "flag").unwrap();
    for sub in &r.subjects {
        for p in &sub.parcellations {
            writeln!(
                s,
                "{:<16} {:>4} {:>8.4} {:>10.4} {:>11.4e} {:>6.3} {:>5} {:>5}",
                sub.name,
                p.index + 1,
                p.r,
                p.mse,
                p.lambda,
                p.alpha,
                p.n_nonzero,
                if p.degenerate { "DEGEN" } else { "" }
            )
            .unwrap();
        }
        writeln!(s, "{:<16} mean {:>8.4} {:>10.4}", sub.name, sub.mean_r, sub.mean_mse).unwrap();
    }
    writeln!(s, "\nmean test r over subjects: {:.4}", r.mean_r).unwrap();
    writeln!(s, "mean test mse over subjects: {:.4}", r.mean_mse).unwrap();
    if r.any_degenerate {
        writeln!(s, "WARNING: at least one prediction was constant; its r is reported as 0").unwrap();
    }
    if let Some(m) = &r.maps {
        writeln!(s, "\ncoefficient t-maps over {} models (critical |t| {:.3} at alpha {})", m.n_units, m.t_critical, m.alpha).unwrap();
        let fc = m.freq_channel.argmax_abs();
        let fl = m.freq_lag.argmax_abs();
        if let (Some((f1, c)), Some((f2, l))) = (fc, fl) {
            writeln!(
                s,
                "peak |t|: {} at {} Hz (frequency x channel); lag {} at {} Hz (frequency x lag)",
                r.axes.channel_labels[c], r.axes.freqs[f1], l, r.axes.freqs[f2]
            )
            .unwrap();
        }
        writeln!(s, "clusters: {} (frequency x channel), {} (frequency x lag)", m.freq_channel.clusters.len(), m.freq_lag.clusters.len()).unwrap();
    } else if let Some(e) = &r.maps_error {
        writeln!(s, "\nno coefficient maps: {e}").unwrap();
    }
    s
}

fn rows_to_vec(a: &ndarray::Array2<Option<f64>>) -> Vec<Vec<Option<f64>>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn render_fit(out: &Path, report: &PredictionReport, preds: &PredictionsFile) -> CliResult<()> {
    io::atomic_write(&out.join("fit_summary.txt"), fit_summary(report).as_bytes())?;
    for sub in &preds.subjects {
        for (k, p) in sub.parcellations.iter().enumerate() {
            let title = format!("{}: parcellation {} test set", sub.name, k + 1);
            let svg = svg::line_plot(&title, &[("measured", &p.truth), ("predicted", &p.prediction)]);
            io::atomic_write(&out.join(format!("prediction_{}_p{}.svg", file_safe(&sub.name), k + 1)), svg.as_bytes())?;
        }
    }
    if let Some(m) = &report.maps {
        let freqs: Vec<String> = report.axes.freqs.iter().map(|f| format!("{f} Hz")).collect();
        let lags: Vec<String> = (0..report.axes.n_lags).map(|l| format!("{:.1} s", l as f64 * report.axes.tr)).collect();
        let svg = svg::heatmap("t: frequency x channel", &freqs, &report.axes.channel_labels, &rows_to_vec(&m.freq_channel.t), m.t_critical);
        io::atomic_write(&out.join("tmap_frequency_channel.svg"), svg.as_bytes())?;
        let svg = svg::heatmap("t: frequency x lag", &freqs, &lags, &rows_to_vec(&m.freq_lag.t), m.t_critical);
        io::atomic_write(&out.join("tmap_frequency_lag.svg"), svg.as_bytes())?;
    }
    Ok(())
}

pub fn null_summary(r: &NullReport) -> String {
    let mut s = String::from("Surrogate null test\n===================\n");
    provenance_text(&mut s, &r.provenance);
    writeln!(s, "{:<16} {:>9} {:>7} {:>9} {:>11} {:>10}", "subject", "observed", "n", "p", "p (n+1)", "ADF stat").unwrap();
    for sub in &r.subjects {
        let adf = sub.adf.iter().map(|a| format!("{:.2}", a.statistic)).collect::<Vec<_>>().join("/");
        writeln!(
            s,
            "{:<16} {:>9.4} {:>7} {:>9.4} {:>11.4} {:>10}",
            sub.name, sub.observed, sub.n_surrogates, sub.p_value, sub.p_value_conservative, adf
        )
        .unwrap();
        if !sub.failures.is_empty() {
            writeln!(s, "  {} surrogate fits failed", sub.failures.len()).unwrap();
        }
    }
    s
}

pub fn render_null(out: &Path, r: &NullReport) -> CliResult<()> {
    io::atomic_write(&out.join("null_summary.txt"), null_summary(r).as_bytes())?;
    let items: Vec<svg::Violin> = r
        .subjects
        .iter()
        .filter_map(|s| {
            s.violin.as_ref().map(|v| svg::Violin {
                label: &s.name,
                grid: &v.grid,
                density: &v.density,
                observed: s.observed,
            })
        })
        .collect();
    let svg = svg::violins("surrogate test correlations (red: observed)", &items);
    io::atomic_write(&out.join("null_violin.svg"), svg.as_bytes())
}

pub fn baseline_summary(r: &BaselineReport) -> String {
    let mut s = String::from("Baseline comparison\n===================\n");
    provenance_text(&mut s, &r.provenance);
    writeln!(s, "{:<16} {:>8} {:>8} {:>8} {:>8}", "subject", "SGL", "MUC", "SMR", "|SMR|").unwrap();
    for sub in &r.subjects {
        writeln!(s, "{:<16} {:>8.4} {:>8.4} {:>8.4} {:>8.4}", sub.name, sub.sgl_r, sub.muc_r, sub.smr_r, sub.smr_abs_r).unwrap();
    }
    writeln!(s, "\nWilcoxon signed-rank, BH at q = {}", r.fdr_q).unwrap();
    for c in &r.comparisons {
        match (&c.wilcoxon, &c.refused) {
            (Some(w), _) => writeln!(
                s,
                "{:<20} mean diff {:>8.4}  W+ {:>6.1}  n {:>3}  p {:.4e}  p_adj {:.4e}{}",
                c.name,
                c.mean_difference,
                w.w_plus,
                w.n,
                w.p_value,
                c.p_adjusted.unwrap_or(f64::NAN),
                if c.first_better { "  *" } else { "" }
            )
            .unwrap(),
            (None, Some(why)) => writeln!(s, "{:<20} mean diff {:>8.4}  not tested: {why}", c.name, c.mean_difference).unwrap(),
            (None, None) => {}
        }
    }
    s
}

pub fn render_baseline(out: &Path, r: &BaselineReport) -> CliResult<()> {
    io::atomic_write(&out.join("baseline_summary.txt"), baseline_summary(r).as_bytes())?;
    let values: Vec<Vec<f64>> = r.subjects.iter().map(|s| vec![s.sgl_r, s.muc_r, s.smr_abs_r]).collect();
    let svg = svg::paired("mean test r per subject", &["SGL", "MUC", "|SMR|"], &values);
    io::atomic_write(&out.join("baseline_pairs.svg"), svg.as_bytes())
}

pub fn file_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}
