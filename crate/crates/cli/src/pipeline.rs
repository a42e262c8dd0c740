//! In-memory pipeline stages shared by the subcommands.

use lagsynth::baselines::{aggregate_coeff_maps, score_fixed_predictor, smr_predict, Muc, TMap};
use lagsynth::bayes_opt::OptimizationTrace;
use lagsynth::cv::{prepare_split, run_split, NestedOptions, NestedSgl, PreparedSplit, Scheme, SessionData, TestScore};
use lagsynth::features::{align_target, build_lagged_design, SpectralFeatureTensor};
use lagsynth::sgl::SglModel;
use lagsynth::stats::{bh_fdr, wilcoxon_signed_rank, WilcoxonResult};
use lagsynth::surrogates::{null_distribution, NullDistribution, NullOptions};
use lagsynth::synth::SyntheticDataset;
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::config::{Settings, SubjectConfig};
use crate::error::{CliError, CliResult, Stage};
use crate::io;

/// Two sessions of features and targets for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub name: String,
    pub features: [SpectralFeatureTensor; 2],
    pub targets: [Vec<f64>; 2],
}

impl Subject {
    pub fn from_dataset(name: &str, ds: &SyntheticDataset) -> Self {
        Self {
            name: name.to_string(),
            features: [ds.sessions[0].features.clone(), ds.sessions[1].features.clone()],
            targets: [ds.sessions[0].target.clone(), ds.sessions[1].target.clone()],
        }
    }

    pub fn load(settings: &Settings, cfg: &SubjectConfig) -> CliResult<Self> {
        let read_f = |i: usize| io::read_features(&settings.resolve_path(&cfg.features[i]));
        let read_t = |i: usize| io::read_target(&settings.resolve_path(&cfg.targets[i]));
        let s = Self {
            name: cfg.name.clone(),
            features: [read_f(0)?, read_f(1)?],
            targets: [read_t(0)?, read_t(1)?],
        };
        for i in 0..2 {
            if s.features[i].n_samples() != s.targets[i].len() {
                return Err(CliError::usage(format!(
                    "subject `{}` session {}: {} feature samples but {} target values",
                    s.name,
                    i + 1,
                    s.features[i].n_samples(),
                    s.targets[i].len()
                )));
            }
        }
        if s.features[0].channel_labels != s.features[1].channel_labels || s.features[0].freqs != s.features[1].freqs {
            return Err(CliError::usage(format!("subject `{}`: sessions have different layouts", s.name)));
        }
        Ok(s)
    }

    pub fn sessions(&self, n_lags: usize) -> CliResult<[SessionData; 2]> {
        let make = |i: usize| -> lagsynth::Result<SessionData> {
            SessionData::new(
                build_lagged_design(&self.features[i], n_lags)?,
                align_target(&self.targets[i], n_lags)?.to_vec(),
            )
        };
        Ok([make(0).stage("design")?, make(1).stage("design")?])
    }

    pub fn split(&self, n_lags: usize, scheme: Scheme) -> CliResult<PreparedSplit> {
        let s = self.sessions(n_lags)?;
        prepare_split([&s[0], &s[1]], scheme).stage("split")
    }
}

pub fn load_subjects(settings: &Settings) -> CliResult<Vec<Subject>> {
    settings.config.subjects.iter().map(|c| Subject::load(settings, c)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParcellationFit {
    pub score: TestScore,
    pub model: SglModel,
    /// `[C, F, M]` view of the coefficients.
    pub coeffs: Array3<f64>,
    pub trace: OptimizationTrace,
    pub test_rows: Vec<usize>,
    pub prediction: Vec<f64>,
    pub truth: Vec<f64>,
    pub n_train: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectFit {
    pub name: String,
    pub parcellations: Vec<ParcellationFit>,
}

impl SubjectFit {
    pub fn mean_r(&self) -> f64 {
        self.parcellations.iter().map(|p| p.score.r).sum::<f64>() / self.parcellations.len() as f64
    }

    pub fn mean_mse(&self) -> f64 {
        self.parcellations.iter().map(|p| p.score.mse).sum::<f64>() / self.parcellations.len() as f64
    }
}

/// Nested fit and test on every parcellation.
pub fn fit_subject(subject: &Subject, n_lags: usize, scheme: Scheme, opts: &NestedOptions) -> CliResult<SubjectFit> {
    let split = subject.split(n_lags, scheme)?;
    fit_split(&subject.name, &split, opts)
}

pub fn fit_split(name: &str, split: &PreparedSplit, opts: &NestedOptions) -> CliResult<SubjectFit> {
    let outcomes = run_split(split, &NestedSgl { opts: *opts }).stage(&format!("fit/{name}"))?;
    let parcellations = outcomes
        .into_iter()
        .zip(&split.partitions)
        .zip(&split.plan.parcellations)
        .map(|((o, part), plan)| {
            let model = o.model.expect("nested fits return a model");
            let coeffs = part.train_x.coeff_tensor(&model.coeffs).stage("fit")?;
            Ok(ParcellationFit {
                score: o.score,
                coeffs,
                model,
                trace: o.trace.expect("nested fits return a trace"),
                test_rows: plan.test.clone(),
                prediction: o.prediction,
                truth: part.test_y.clone(),
                n_train: part.train_y.len(),
            })
        })
        .collect::<CliResult<_>>()?;
    Ok(SubjectFit {
        name: name.to_string(),
        parcellations,
    })
}

/// Group t-maps over every parcellation model of every subject.
pub fn coefficient_maps(fits: &[SubjectFit], alpha: f64) -> lagsynth::Result<TMap> {
    let units: Vec<Array3<f64>> = fits.iter().flat_map(|f| f.parcellations.iter().map(|p| p.coeffs.clone())).collect();
    aggregate_coeff_maps(&units, alpha)
}

pub fn null_subject(subject: &Subject, n_lags: usize, scheme: Scheme, nested: &NestedOptions, null: &NullOptions) -> CliResult<NullDistribution> {
    let split = subject.split(n_lags, scheme)?;
    null_distribution(&split, &NestedSgl { opts: *nested }, null).stage(&format!("nulltest/{}", subject.name))
}

/// Test scores of SGL and both reference predictors on the same split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineScores {
    pub sgl: Vec<TestScore>,
    pub muc: Vec<TestScore>,
    /// Signed correlation of raw SMR power with the target.
    pub smr: Vec<TestScore>,
}

fn mean_r(s: &[TestScore]) -> f64 {
    s.iter().map(|x| x.r).sum::<f64>() / s.len() as f64
}

impl BaselineScores {
    pub fn sgl_r(&self) -> f64 {
        mean_r(&self.sgl)
    }

    pub fn muc_r(&self) -> f64 {
        mean_r(&self.muc)
    }

    pub fn smr_r(&self) -> f64 {
        mean_r(&self.smr)
    }

    /// Mean over parcellations of `|r|`.
    pub fn smr_abs_r(&self) -> f64 {
        self.smr.iter().map(|x| x.r.abs()).sum::<f64>() / self.smr.len() as f64
    }
}

/// SMR predictions for both sessions, aligned to the design rows.
pub fn smr_session_predictions(subject: &Subject, n_lags: usize) -> CliResult<[Vec<f64>; 2]> {
    let one = |i: usize| -> lagsynth::Result<Vec<f64>> {
        let t = &subject.features[i];
        let p = smr_predict(t, 1.0 / t.sample_rate)?;
        Ok(align_target(&p, n_lags)?.to_vec())
    };
    let stage = format!("baseline/smr/{}", subject.name);
    Ok([one(0).stage(&stage)?, one(1).stage(&stage)?])
}

/// Run the reference predictors on a split, reusing SGL scores if given.
pub fn baseline_split(subject: &Subject, split: &PreparedSplit, n_lags: usize, sgl: Vec<TestScore>) -> CliResult<BaselineScores> {
    let muc = run_split(split, &Muc).stage(&format!("baseline/muc/{}", subject.name))?;
    let smr_pred = smr_session_predictions(subject, n_lags)?;
    let smr = score_fixed_predictor(split, [&smr_pred[0], &smr_pred[1]]).stage(&format!("baseline/smr/{}", subject.name))?;
    Ok(BaselineScores {
        sgl,
        muc: muc.into_iter().map(|o| o.score).collect(),
        smr,
    })
}

pub fn baseline_subject(subject: &Subject, n_lags: usize, scheme: Scheme, nested: &NestedOptions) -> CliResult<(SubjectFit, BaselineScores)> {
    let split = subject.split(n_lags, scheme)?;
    let fit = fit_split(&subject.name, &split, nested)?;
    let sgl = fit.parcellations.iter().map(|p| p.score).collect();
    let scores = baseline_split(subject, &split, n_lags, sgl)?;
    Ok((fit, scores))
}

/// One paired comparison across subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    /// Mean over subjects of `first - second`.
    pub mean_difference: f64,
    pub wilcoxon: Option<WilcoxonResult>,
    /// Why the test was not run.
    pub refused: Option<String>,
    pub p_adjusted: Option<f64>,
    /// BH rejection and a positive mean difference.
    pub first_better: bool,
}

pub const COMPARISONS: [&str; 3] = ["sgl_vs_muc", "sgl_vs_smr_abs", "sgl_vs_smr_signed"];

/// Wilcoxon signed-rank tests of SGL against each reference, with BH
/// correction across the comparisons that could be run.
pub fn compare_methods(rows: &[BaselineScores], q: f64) -> lagsynth::Result<Vec<Comparison>> {
    let sgl: Vec<f64> = rows.iter().map(BaselineScores::sgl_r).collect();
    let others: [Vec<f64>; 3] = [
        rows.iter().map(BaselineScores::muc_r).collect(),
        rows.iter().map(BaselineScores::smr_abs_r).collect(),
        rows.iter().map(BaselineScores::smr_r).collect(),
    ];
    let mut out: Vec<Comparison> = COMPARISONS
        .iter()
        .zip(&others)
        .map(|(name, b)| {
            let n = sgl.len().max(1) as f64;
            let mean_difference = sgl.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / n;
            let (wilcoxon, refused) = match wilcoxon_signed_rank(&sgl, b) {
                Ok(w) => (Some(w), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Comparison {
                name: name.to_string(),
                mean_difference,
                wilcoxon,
                refused,
                p_adjusted: None,
                first_better: false,
            }
        })
        .collect();
    let ran: Vec<usize> = (0..out.len()).filter(|&i| out[i].wilcoxon.is_some()).collect();
    if !ran.is_empty() {
        let p: Vec<f64> = ran.iter().map(|&i| out[i].wilcoxon.expect("ran").p_value).collect();
        let bh = bh_fdr(&p, q)?;
        for (k, &i) in ran.iter().enumerate() {
            out[i].p_adjusted = Some(bh.adjusted[k]);
            out[i].first_better = bh.reject[k] && out[i].mean_difference > 0.0;
        }
    }
    Ok(out)
}
