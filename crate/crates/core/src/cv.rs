//! Train/test splitting, block cross-validation and nested model selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes_opt::{gp_ucb_optimize, BoOptions, OptimizationTrace, SearchBounds};
use crate::error::{Error, Result};
use crate::features::LaggedDesign;
use crate::sgl::{self, HyperParams, SglModel, SglProblem, SolverOptions};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Train on one session, test on the other.
    InterSession,
    /// Train and test on complementary halves of both sessions.
    IntraSession,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inter" | "inter_session" | "inter-session" => Ok(Scheme::InterSession),
            "intra" | "intra_session" | "intra-session" => Ok(Scheme::IntraSession),
            other => Err(Error::InvalidInput(format!("unknown split scheme `{other}` (inter|intra)"))),
        }
    }
}

/// Train and test rows, as indices into the two sessions concatenated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parcellation {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub scheme: Scheme,
    pub parcellations: Vec<Parcellation>,
    /// Session (0 or 1) of every sample.
    pub session_ids: Vec<usize>,
    /// First sample of each session.
    pub run_boundaries: Vec<usize>,
}

/// Two 50/50 parcellations of two sessions.
///
/// Inter-session: train on one session and test on the other, both ways.
/// Intra-session: the first parcellation trains on the first half of session 1
/// followed by the second half of session 2 and tests on the rest; the second
/// trains on the first half of session 2 followed by the second half of
/// session 1. Halves split at `floor(n / 2)`.
pub fn make_split(n1: usize, n2: usize, scheme: Scheme) -> Result<SplitPlan> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidInput(format!("sessions need at least 2 samples, got {n1} and {n2}")));
    }
    let s1: Vec<usize> = (0..n1).collect();
    let s2: Vec<usize> = (n1..n1 + n2).collect();
    let (h1, h2) = (n1 / 2, n2 / 2);
    let cat = |a: &[usize], b: &[usize]| a.iter().chain(b).copied().collect::<Vec<_>>();
    let parcellations = match scheme {
        Scheme::InterSession => vec![
            Parcellation {
                train: s1.clone(),
                test: s2.clone(),
            },
            Parcellation { train: s2, test: s1 },
        ],
        Scheme::IntraSession => vec![
            Parcellation {
                train: cat(&s1[..h1], &s2[h2..]),
                test: cat(&s1[h1..], &s2[..h2]),
            },
            Parcellation {
                train: cat(&s2[..h2], &s1[h1..]),
                test: cat(&s1[..h1], &s2[h2..]),
            },
        ],
    };
    let mut session_ids = vec![0; n1];
    session_ids.extend(std::iter::repeat_n(1, n2));
    Ok(SplitPlan {
        scheme,
        parcellations,
        session_ids,
        run_boundaries: vec![0, n1],
    })
}

impl SplitPlan {
    pub fn n_samples(&self) -> usize {
        self.session_ids.len()
    }

    /// Drop the `n_lags - 1` samples that follow every within-session switch
    /// between train and test, from whichever side they fall on. Lagged rows
    /// right after a seam would otherwise see samples of the other partition.
    pub fn guard_seams(&self, n_lags: usize) -> SplitPlan {
        let n = self.n_samples();
        let parcellations = self
            .parcellations
            .iter()
            .map(|p| {
                let mut in_train = vec![false; n];
                for &i in &p.train {
                    in_train[i] = true;
                }
                let mut drop = vec![false; n];
                for i in 1..n {
                    if self.session_ids[i] == self.session_ids[i - 1] && in_train[i] != in_train[i - 1] {
                        let session = self.session_ids[i];
                        for (j, d) in drop.iter_mut().enumerate().skip(i).take(n_lags.saturating_sub(1)) {
                            if self.session_ids[j] == session {
                                *d = true;
                            }
                        }
                    }
                }
                Parcellation {
                    train: p.train.iter().copied().filter(|&i| !drop[i]).collect(),
                    test: p.test.iter().copied().filter(|&i| !drop[i]).collect(),
                }
            })
            .collect();
        SplitPlan {
            parcellations,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: std::ops::Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSet {
    pub folds: Vec<Fold>,
}

/// `k` contiguous validation blocks over `0..n`; the first `n % k` blocks are
/// one sample longer.
pub fn block_kfold(n: usize, k: usize) -> Result<FoldSet> {
    if k < 2 || n < k {
        return Err(Error::InvalidInput(format!("block k-fold needs k >= 2 and n >= k, got n={n}, k={k}")));
    }
    let base = n / k;
    let extra = n % k;
    let mut start = 0;
    let mut folds = Vec::with_capacity(k);
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let validation = start..start + len;
        let train = (0..start).chain(start + len..n).collect();
        folds.push(Fold { train, validation });
        start += len;
    }
    Ok(FoldSet { folds })
}

/// Test-set performance of one parcellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestScore {
    pub r: f64,
    pub mse: f64,
    /// The prediction (or the truth) was constant; `r` is reported as 0.
    pub degenerate: bool,
    pub n: usize,
}

pub fn score(pred: &[f64], truth: &[f64]) -> Result<TestScore> {
    let corr = stats::pearson(pred, truth)?;
    Ok(TestScore {
        r: corr.r,
        mse: stats::mse(pred, truth)?,
        degenerate: corr.degenerate,
        n: truth.len(),
    })
}

/// Predict on a held-out design and score against the truth.
pub fn evaluate(model: &SglModel, design: &LaggedDesign, y: &[f64]) -> Result<TestScore> {
    let pred = sgl::predict(model, design)?;
    score(&pred, y)
}

/// Per-parcellation scores and their average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub parcellations: Vec<TestScore>,
    pub mean_r: f64,
    pub mean_mse: f64,
}

impl ScoreSummary {
    pub fn from_scores(parcellations: Vec<TestScore>) -> Self {
        let n = parcellations.len().max(1) as f64;
        Self {
            mean_r: parcellations.iter().map(|s| s.r).sum::<f64>() / n,
            mean_mse: parcellations.iter().map(|s| s.mse).sum::<f64>() / n,
            parcellations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedOptions {
    pub folds: usize,
    pub bo: BoOptions,
    pub solver: SolverOptions,
    /// Lower end of the lambda search as a fraction of lambda_max.
    pub lambda_floor_ratio: f64,
    /// Skip the search and use these hyperparameters.
    pub fixed: Option<HyperParams>,
}

impl Default for NestedOptions {
    fn default() -> Self {
        Self {
            folds: 3,
            bo: BoOptions::default(),
            solver: SolverOptions::default(),
            lambda_floor_ratio: 1e-4,
            fixed: None,
        }
    }
}

/// Choose `(lambda, alpha)` by block k-fold validation MSE with GP-UCB search,
/// then refit on the whole training set.
///
/// The lambda range is `[lambda_floor_ratio * lambda_max, lambda_max]` where
/// `lambda_max` is taken at `alpha = 1`, which bounds it for every `alpha`.
pub fn nested_fit(design: &LaggedDesign, y: &[f64], opts: &NestedOptions) -> Result<(SglModel, OptimizationTrace)> {
    if design.n_rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "design has {} rows, target has {}",
            design.n_rows(),
            y.len()
        )));
    }
    if let Some(h) = opts.fixed {
        h.validate()?;
        let model = sgl::fit_sgl(design, y, h, &opts.solver)?;
        return Ok((model, OptimizationTrace::fixed(h)));
    }
    let lmax = sgl::lambda_max(design, y, 1.0)?;
    if lmax <= 0.0 {
        // The target is orthogonal to every regressor: only the intercept is fit.
        let h = HyperParams { lambda: 0.0, alpha: 1.0 };
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        return Ok((SglModel::null(mean, design.n_cols(), h), OptimizationTrace::fixed(h)));
    }
    let bounds = SearchBounds::new(opts.lambda_floor_ratio * lmax, lmax)?;
    let folds = block_kfold(design.n_rows(), opts.folds)?;
    let fold_data: Vec<(SglProblem, LaggedDesign, Vec<f64>)> = folds
        .folds
        .iter()
        .map(|f| {
            let val: Vec<usize> = f.validation.clone().collect();
            let y_tr: Vec<f64> = f.train.iter().map(|&i| y[i]).collect();
            let y_val: Vec<f64> = val.iter().map(|&i| y[i]).collect();
            let problem = SglProblem::from_design(&design.select_rows(&f.train), &y_tr)?;
            Ok((problem, design.select_rows(&val), y_val))
        })
        .collect::<Result<_>>()?;

    let objective = |h: HyperParams| -> f64 {
        let errors: Vec<Option<f64>> = fold_data
            .par_iter()
            .map(|(problem, xv, yv)| {
                let m = problem.fit(h, &opts.solver, None).ok()?;
                let pred = sgl::predict(&m, xv).ok()?;
                stats::mse(&pred, yv).ok()
            })
            .collect();
        match errors.iter().copied().collect::<Option<Vec<f64>>>() {
            Some(e) => e.iter().sum::<f64>() / e.len() as f64,
            None => f64::NAN,
        }
    };
    let trace = gp_ucb_optimize(objective, &bounds, &opts.bo)?;
    let model = sgl::fit_sgl(design, y, trace.chosen, &opts.solver)?;
    Ok((model, trace))
}

/// A lagged design with its aligned target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionData {
    pub design: LaggedDesign,
    pub y: Vec<f64>,
}

impl SessionData {
    pub fn new(design: LaggedDesign, y: Vec<f64>) -> Result<Self> {
        if design.n_rows() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "design has {} rows, target has {}",
                design.n_rows(),
                y.len()
            )));
        }
        Ok(Self { design, y })
    }
}

/// Training and test partitions of one parcellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub train_x: LaggedDesign,
    pub train_y: Vec<f64>,
    pub test_x: LaggedDesign,
    pub test_y: Vec<f64>,
}

/// Both sessions cut into parcellations, seams guarded.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplit {
    pub plan: SplitPlan,
    pub partitions: Vec<Partition>,
    /// Per-session targets, as given.
    pub session_targets: Vec<Vec<f64>>,
}

pub fn prepare_split(sessions: [&SessionData; 2], scheme: Scheme) -> Result<PreparedSplit> {
    let all_x = LaggedDesign::concat(&[&sessions[0].design, &sessions[1].design])?;
    let all_y: Vec<f64> = sessions[0].y.iter().chain(&sessions[1].y).copied().collect();
    let plan = make_split(sessions[0].y.len(), sessions[1].y.len(), scheme)?.guard_seams(all_x.n_lags);
    let partitions = plan
        .parcellations
        .iter()
        .map(|p| Partition {
            train_x: all_x.select_rows(&p.train),
            train_y: p.train.iter().map(|&i| all_y[i]).collect(),
            test_x: all_x.select_rows(&p.test),
            test_y: p.test.iter().map(|&i| all_y[i]).collect(),
        })
        .collect();
    Ok(PreparedSplit {
        plan,
        partitions,
        session_targets: vec![sessions[0].y.clone(), sessions[1].y.clone()],
    })
}

/// Outcome of training on one partition and predicting its test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTestOutcome {
    pub score: TestScore,
    pub prediction: Vec<f64>,
    pub model: Option<SglModel>,
    pub trace: Option<OptimizationTrace>,
}

/// An estimation procedure that can be trained and scored on a partition.
pub trait TrainTest: Sync {
    fn train_and_test(
        &self,
        train_x: &LaggedDesign,
        train_y: &[f64],
        test_x: &LaggedDesign,
        test_y: &[f64],
    ) -> Result<TrainTestOutcome>;
}

/// Nested cross-validated sparse group lasso.
#[derive(Debug, Clone, Copy, Default)]
pub struct NestedSgl {
    pub opts: NestedOptions,
}

impl TrainTest for NestedSgl {
    fn train_and_test(
        &self,
        train_x: &LaggedDesign,
        train_y: &[f64],
        test_x: &LaggedDesign,
        test_y: &[f64],
    ) -> Result<TrainTestOutcome> {
        let (model, trace) = nested_fit(train_x, train_y, &self.opts)?;
        let prediction = sgl::predict(&model, test_x)?;
        Ok(TrainTestOutcome {
            score: score(&prediction, test_y)?,
            prediction,
            model: Some(model),
            trace: Some(trace),
        })
    }
}

/// Run a procedure on every parcellation of a prepared split.
pub fn run_split(split: &PreparedSplit, pipeline: &dyn TrainTest) -> Result<Vec<TrainTestOutcome>> {
    split
        .partitions
        .iter()
        .map(|p| pipeline.train_and_test(&p.train_x, &p.train_y, &p.test_x, &p.test_y))
        .collect()
}
