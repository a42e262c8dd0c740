//! Subcommand implementations working on files.

use std::path::{Path, PathBuf};

use lagsynth::synth::{generate, scenario};

use crate::config::{Overrides, RunConfig, Settings, SubjectConfig};
use crate::error::{CliError, CliResult, Stage};
use crate::io;
use crate::pipeline::{self, Subject, SubjectFit};
use crate::report::*;

pub const SPEC_FILE: &str = "spec.json";
pub const CONFIG_FILE: &str = "config.toml";

fn session_file(i: usize, suffix: &str) -> String {
    format!("session{}{suffix}", i + 1)
}

/// Write a synthetic scenario: per session a feature tensor with its sidecar,
/// a target CSV and an onsets CSV, plus the generating spec and a ready-to-run
/// config. Existing files are only replaced with `force`.
pub fn cmd_synth(name: &str, out: &Path, seed: Option<u64>, force: bool) -> CliResult<Vec<PathBuf>> {
    let mut spec = scenario(name).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(seed) = seed {
        spec = spec.with_seed(seed);
    }
    let mut planned = vec![SPEC_FILE.to_string(), CONFIG_FILE.to_string()];
    for i in 0..2 {
        for suffix in [".lgst", ".json", "_target.csv", "_onsets.csv"] {
            planned.push(session_file(i, suffix));
        }
    }
    let existing: Vec<&String> = planned.iter().filter(|f| out.join(f).exists()).collect();
    if !existing.is_empty() && !force {
        return Err(CliError::usage(format!(
            "refusing to overwrite {} in {} (use --force)",
            existing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
            out.display()
        )));
    }
    let ds = generate(&spec).stage("synth")?;
    for (i, s) in ds.sessions.iter().enumerate() {
        io::write_features(&out.join(session_file(i, ".lgst")), &s.features)?;
        io::atomic_write(&out.join(session_file(i, "_target.csv")), &io::encode_target(&s.target))?;
        io::atomic_write(&out.join(session_file(i, "_onsets.csv")), &io::encode_onsets(&s.onsets))?;
    }
    io::write_json(&out.join(SPEC_FILE), &ds.spec)?;
    let config = RunConfig {
        seed: 0,
        scheme: "inter".into(),
        n_lags: ds.spec.n_lags,
        subjects: vec![SubjectConfig {
            name: ds.spec.name.clone(),
            features: [session_file(0, ".lgst").into(), session_file(1, ".lgst").into()],
            targets: [session_file(0, "_target.csv").into(), session_file(1, "_target.csv").into()],
        }],
        solver: Default::default(),
        search: Default::default(),
        nulltest: Default::default(),
        baseline: Default::default(),
    };
    io::atomic_write(&out.join(CONFIG_FILE), config.to_toml().as_bytes())?;
    Ok(planned.into_iter().map(|f| out.join(f)).collect())
}

pub fn provenance(settings: &Settings) -> CliResult<Provenance> {
    let inputs = settings
        .input_files()
        .into_iter()
        .map(|(path, full)| Ok(InputHash { path, sha256: io::sha256_file(&full)? }))
        .collect::<CliResult<_>>()?;
    Ok(Provenance {
        tool: "lagsynth".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: settings.config_hash.clone(),
        inputs,
        seed: settings.seed,
        scheme: settings.scheme,
        n_lags: settings.config.n_lags,
    })
}

fn axes(subject: &Subject, n_lags: usize) -> Axes {
    let t = &subject.features[0];
    Axes {
        channel_labels: t.channel_labels.clone(),
        freqs: t.freqs.clone(),
        n_lags,
        tr: 1.0 / t.sample_rate,
    }
}

fn subject_report(fit: &SubjectFit) -> SubjectReport {
    let parcellations: Vec<ParcellationReport> = fit
        .parcellations
        .iter()
        .enumerate()
        .map(|(index, p)| ParcellationReport {
            index,
            n_train: p.n_train,
            n_test: p.score.n,
            r: p.score.r,
            mse: p.score.mse,
            degenerate: p.score.degenerate,
            lambda: p.model.hyper.lambda,
            alpha: p.model.hyper.alpha,
            n_nonzero: p.model.n_nonzero(),
            solver_iterations: p.model.diag.iterations,
            solver_stop: p.model.diag.stop,
            search: (!p.trace.evaluations.is_empty()).then(|| SearchSummary {
                evaluations: p.trace.evaluations.len(),
                posterior_mean: p.trace.posterior_mean,
                posterior_std: p.trace.posterior_std,
            }),
        })
        .collect();
    SubjectReport {
        name: fit.name.clone(),
        degenerate: parcellations.iter().any(|p| p.degenerate),
        parcellations,
        mean_r: fit.mean_r(),
        mean_mse: fit.mean_mse(),
    }
}

/// Group maps use a 5% two-sided threshold.
pub const MAP_ALPHA: f64 = 0.05;

pub fn build_fit_outputs(provenance: Provenance, axes: Axes, fits: &[SubjectFit]) -> (PredictionReport, ModelsFile, PredictionsFile) {
    let subjects: Vec<SubjectReport> = fits.iter().map(subject_report).collect();
    let n = subjects.len() as f64;
    let (maps, maps_error) = match pipeline::coefficient_maps(fits, MAP_ALPHA) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = PredictionReport {
        provenance: provenance.clone(),
        mean_r: subjects.iter().map(|s| s.mean_r).sum::<f64>() / n,
        mean_mse: subjects.iter().map(|s| s.mean_mse).sum::<f64>() / n,
        any_degenerate: subjects.iter().any(|s| s.degenerate),
        subjects,
        axes: axes.clone(),
        maps,
        maps_error,
    };
    let models = ModelsFile {
        provenance: provenance.clone(),
        axes,
        subjects: fits
            .iter()
            .map(|f| SubjectModels {
                name: f.name.clone(),
                parcellations: f
                    .parcellations
                    .iter()
                    .map(|p| StoredModel {
                        intercept: p.model.intercept,
                        hyper: p.model.hyper,
                        coefficients: p.coeffs.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let preds = PredictionsFile {
        provenance,
        subjects: fits
            .iter()
            .map(|f| SubjectPredictions {
                name: f.name.clone(),
                parcellations: f
                    .parcellations
                    .iter()
                    .map(|p| StoredPrediction {
                        test_rows: p.test_rows.clone(),
                        prediction: p.prediction.clone(),
                        truth: p.truth.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    (report, models, preds)
}

pub fn cmd_fit(config: &Path, out: &Path, o: Overrides) -> CliResult<PredictionReport> {
    let settings = Settings::load(config, o)?;
    let prov = provenance(&settings)?;
    let subjects = pipeline::load_subjects(&settings)?;
    let n_lags = settings.config.n_lags;
    let fits = subjects
        .iter()
        .map(|s| pipeline::fit_subject(s, n_lags, settings.scheme, &settings.nested))
        .collect::<CliResult<Vec<_>>>()?;
    let (report, models, preds) = build_fit_outputs(prov, axes(&subjects[0], n_lags), &fits);
    io::write_json(&out.join(REPORT_FILE), &report)?;
    io::write_json(&out.join(MODELS_FILE), &models)?;
    io::write_json(&out.join(PREDICTIONS_FILE), &preds)?;
    render_fit(out, &report, &preds)?;
    Ok(report)
}

pub fn cmd_nulltest(config: &Path, out: &Path, o: Overrides) -> CliResult<NullReport> {
    let settings = Settings::load(config, o)?;
    let prov = provenance(&settings)?;
    let subjects = pipeline::load_subjects(&settings)?;
    let results = subjects
        .iter()
        .map(|s| {
            let d = pipeline::null_subject(s, settings.config.n_lags, settings.scheme, &settings.nested, &settings.null)?;
            Ok(NullSubject {
                name: s.name.clone(),
                observed: d.observed_stat,
                p_value: d.p_value,
                p_value_conservative: d.p_value_conservative,
                n_surrogates: d.n_surrogates,
                violin: ViolinSummary::from_values(&d.surrogate_stats),
                surrogate_stats: d.surrogate_stats,
                adf: d.stationarity,
                failures: d.failures,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = NullReport {
        provenance: prov,
        requested_surrogates: settings.null.n_surrogates,
        subjects: results,
    };
    io::write_json(&out.join(NULL_FILE), &report)?;
    render_null(out, &report)?;
    Ok(report)
}

/// Fit SGL and the reference predictors for every subject and compare them
/// across subjects. The report is written even when the paired tests are
/// refused (too few subjects); the command then fails.
pub fn cmd_baseline(config: &Path, out: &Path, o: Overrides) -> CliResult<BaselineReport> {
    let settings = Settings::load(config, o)?;
    let prov = provenance(&settings)?;
    let subjects = pipeline::load_subjects(&settings)?;
    let mut rows = Vec::new();
    let mut per_subject = Vec::new();
    for s in &subjects {
        let (_, scores) = pipeline::baseline_subject(s, settings.config.n_lags, settings.scheme, &settings.nested)?;
        per_subject.push(BaselineSubject {
            name: s.name.clone(),
            sgl_r: scores.sgl_r(),
            muc_r: scores.muc_r(),
            smr_r: scores.smr_r(),
            smr_abs_r: scores.smr_abs_r(),
            scores: scores.clone(),
        });
        rows.push(scores);
    }
    let q = settings.config.baseline.fdr_q;
    let comparisons = pipeline::compare_methods(&rows, q).stage("baseline/compare")?;
    let report = BaselineReport {
        provenance: prov,
        fdr_q: q,
        subjects: per_subject,
        comparisons,
    };
    io::write_json(&out.join(BASELINE_FILE), &report)?;
    render_baseline(out, &report)?;
    if let Some(why) = report.comparisons.iter().find_map(|c| c.refused.clone()) {
        return Err(CliError::Refused {
            stage: "baseline/wilcoxon".into(),
            message: why,
        });
    }
    Ok(report)
}

/// Re-render text summaries and plots from the JSON records in `out`.
pub fn cmd_report(out: &Path) -> CliResult<Vec<&'static str>> {
    let mut done = Vec::new();
    if out.join(REPORT_FILE).exists() {
        let report: PredictionReport = io::read_json(&out.join(REPORT_FILE))?;
        let preds: PredictionsFile = io::read_json(&out.join(PREDICTIONS_FILE))?;
        render_fit(out, &report, &preds)?;
        done.push(REPORT_FILE);
    }
    if out.join(NULL_FILE).exists() {
        render_null(out, &io::read_json(&out.join(NULL_FILE))?)?;
        done.push(NULL_FILE);
    }
    if out.join(BASELINE_FILE).exists() {
        render_baseline(out, &io::read_json(&out.join(BASELINE_FILE))?)?;
        done.push(BASELINE_FILE);
    }
    if done.is_empty() {
        return Err(CliError::usage(format!("no result files in {}", out.display())));
    }
    Ok(done)
}

#[derive(serde::Deserialize)]
struct WithProvenance {
    provenance: Provenance,
}

/// Compare the provenance stored in every result file of `out` with the
/// config and input files as they are now.
pub fn cmd_verify(config: &Path, out: &Path) -> CliResult<Vec<&'static str>> {
    let settings = Settings::load(config, Overrides::default())?;
    let now = provenance(&settings)?;
    let mut checked = Vec::new();
    let mut problems = Vec::new();
    for file in [REPORT_FILE, MODELS_FILE, PREDICTIONS_FILE, NULL_FILE, BASELINE_FILE] {
        let path = out.join(file);
        if !path.exists() {
            continue;
        }
        let stored: WithProvenance = io::read_json(&path)?;
        let p = stored.provenance;
        if p.config_hash != now.config_hash {
            problems.push(format!("{file}: config hash {} != {}", p.config_hash, now.config_hash));
        }
        if p.inputs != now.inputs {
            for (a, b) in p.inputs.iter().zip(&now.inputs) {
                if a != b {
                    problems.push(format!("{file}: input {} hash {} != {} ({})", a.path, a.sha256, b.sha256, b.path));
                }
            }
            if p.inputs.len() != now.inputs.len() {
                problems.push(format!("{file}: {} inputs recorded, {} configured", p.inputs.len(), now.inputs.len()));
            }
        }
        checked.push(file);
    }
    if checked.is_empty() {
        return Err(CliError::usage(format!("no result files in {}", out.display())));
    }
    if !problems.is_empty() {
        return Err(CliError::Verify(problems.join("\n")));
    }
    Ok(checked)
}
