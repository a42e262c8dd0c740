//! Gaussian-process Bayesian optimization over `(lambda, alpha)`.
//!
//! Points live in the unit square: `log(lambda)` is mapped linearly from
//! `[log lambda_min, log lambda_max]` and `alpha` from its bounds. The GP uses
//! an ARD Matérn 5/2 kernel on standardized objective values with a fixed
//! observation jitter; kernel hyperparameters maximize the log marginal
//! likelihood from a fixed set of Nelder–Mead restarts.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sgl::HyperParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl SearchBounds {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        let b = Self {
            lambda_min,
            lambda_max,
            alpha_min: 0.0,
            alpha_max: 1.0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min > 0.0 && self.lambda_max > self.lambda_min && self.lambda_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda bounds [{}, {}] must satisfy 0 < min < max",
                self.lambda_min, self.lambda_max
            )));
        }
        if !(0.0 <= self.alpha_min && self.alpha_min < self.alpha_max && self.alpha_max <= 1.0) {
            return Err(Error::InvalidInput("alpha bounds must satisfy 0 <= min < max <= 1".into()));
        }
        Ok(())
    }

    pub fn from_unit(&self, u: [f64; 2]) -> HyperParams {
        let (lo, hi) = (self.lambda_min.ln(), self.lambda_max.ln());
        HyperParams {
            lambda: (lo + u[0].clamp(0.0, 1.0) * (hi - lo)).exp(),
            alpha: self.alpha_min + u[1].clamp(0.0, 1.0) * (self.alpha_max - self.alpha_min),
        }
    }

    pub fn to_unit(&self, h: HyperParams) -> [f64; 2] {
        let (lo, hi) = (self.lambda_min.ln(), self.lambda_max.ln());
        [
            (h.lambda.ln() - lo) / (hi - lo),
            (h.alpha - self.alpha_min) / (self.alpha_max - self.alpha_min),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoOptions {
    /// Total objective evaluations, including the initial design.
    pub budget: usize,
    pub n_init: usize,
    /// Weight of the posterior standard deviation in the lower confidence bound.
    pub kappa: f64,
    pub seed: u64,
    /// Random candidates scored per acquisition.
    pub n_candidates: usize,
}

impl Default for BoOptions {
    fn default() -> Self {
        Self {
            budget: 40,
            n_init: 8,
            kappa: 0.1,
            seed: 0,
            n_candidates: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub unit: [f64; 2],
    /// `None` when the objective returned a non-finite value.
    pub value: Option<f64>,
    /// True for points chosen by the acquisition function.
    pub acquired: bool,
    /// GP posterior mean at this point after the final fit.
    pub smoothed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub lengthscales: [f64; 2],
    pub signal_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub evaluations: Vec<EvaluatedPoint>,
    pub chosen: HyperParams,
    pub chosen_index: usize,
    pub posterior_mean: f64,
    pub posterior_std: f64,
    pub kernel: KernelParams,
}

impl OptimizationTrace {
    /// Trace for a run that skipped the search.
    pub fn fixed(chosen: HyperParams) -> Self {
        Self {
            evaluations: Vec::new(),
            chosen,
            chosen_index: 0,
            posterior_mean: f64::NAN,
            posterior_std: f64::NAN,
            kernel: KernelParams {
                lengthscales: [f64::NAN; 2],
                signal_var: f64::NAN,
            },
        }
    }
}

const JITTER: f64 = 1e-6;
const LOG_LS_BOUNDS: (f64, f64) = (-4.605_170_185_988_091, 2.302_585_092_994_046); // ln 0.01, ln 10
const LOG_VAR_BOUNDS: (f64, f64) = (-4.605_170_185_988_091, 4.605_170_185_988_091);

fn matern52(a: &[f64; 2], b: &[f64; 2], k: &KernelParams) -> f64 {
    let r2: f64 = (0..2).map(|i| ((a[i] - b[i]) / k.lengthscales[i]).powi(2)).sum();
    let r = (5.0 * r2).sqrt();
    k.signal_var * (1.0 + r + 5.0 * r2 / 3.0) * (-r).exp()
}

/// Gaussian process regression on standardized targets.
pub struct GaussianProcess {
    xs: Vec<[f64; 2]>,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
    pub kernel: KernelParams,
}

impl GaussianProcess {
    /// Fit kernel hyperparameters by marginal likelihood and condition on data.
    pub fn fit(xs: &[[f64; 2]], ys: &[f64]) -> Result<Self> {
        Self::fit_from(xs, ys, None)
    }

    /// Like [`GaussianProcess::fit`], with an extra likelihood search started
    /// from `previous`.
    pub fn fit_from(xs: &[[f64; 2]], ys: &[f64], previous: Option<&KernelParams>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidInput("GP needs matching, non-empty inputs".into()));
        }
        let n = ys.len() as f64;
        let y_mean = ys.iter().sum::<f64>() / n;
        let sd = (ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let y_scale = if sd > 0.0 { sd } else { 1.0 };
        let z: Vec<f64> = ys.iter().map(|y| (y - y_mean) / y_scale).collect();

        let starts = [
            [0.2f64.ln(), 0.2f64.ln(), 0.0],
            [0.5f64.ln(), 0.5f64.ln(), 0.0],
            [1.0f64.ln(), 1.0f64.ln(), 0.0],
            [0.1f64.ln(), 1.0f64.ln(), 0.0],
            [1.0f64.ln(), 0.1f64.ln(), 0.0],
        ];
        let nll = |theta: &[f64; 3]| -> f64 {
            let k = params_from(theta);
            match log_marginal(xs, &z, &k) {
                Some(v) => -v,
                None => f64::INFINITY,
            }
        };
        let mut best = (f64::INFINITY, starts[0]);
        let warm = previous.map(|k| [k.lengthscales[0].ln(), k.lengthscales[1].ln(), k.signal_var.ln()]);
        let all: Vec<[f64; 3]> = match warm {
            Some(w) => std::iter::once(w).chain(starts.iter().copied().take(2)).collect(),
            None => starts.to_vec(),
        };
        for s in &all {
            let (theta, val) = nelder_mead(&nll, *s, 150);
            if val < best.0 {
                best = (val, theta);
            }
        }
        let kernel = params_from(&best.1);
        Self::condition(xs, &z, kernel, y_mean, y_scale)
    }

    fn condition(xs: &[[f64; 2]], z: &[f64], kernel: KernelParams, y_mean: f64, y_scale: f64) -> Result<Self> {
        let chol = gram_cholesky(xs, &kernel)
            .ok_or_else(|| Error::Optimization("GP covariance is not positive definite".into()))?;
        let weights = chol.solve(&DVector::from_column_slice(z));
        Ok(Self {
            xs: xs.to_vec(),
            chol,
            weights,
            y_mean,
            y_scale,
            kernel,
        })
    }

    /// Posterior mean and standard deviation in the original units.
    pub fn predict(&self, x: &[f64; 2]) -> (f64, f64) {
        let kx = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|xi| matern52(xi, x, &self.kernel)));
        let mean = kx.dot(&self.weights);
        let v = self.chol.solve(&kx);
        let var = (self.kernel.signal_var - kx.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }
}

fn params_from(theta: &[f64; 3]) -> KernelParams {
    KernelParams {
        lengthscales: [
            theta[0].clamp(LOG_LS_BOUNDS.0, LOG_LS_BOUNDS.1).exp(),
            theta[1].clamp(LOG_LS_BOUNDS.0, LOG_LS_BOUNDS.1).exp(),
        ],
        signal_var: theta[2].clamp(LOG_VAR_BOUNDS.0, LOG_VAR_BOUNDS.1).exp(),
    }
}

fn gram_cholesky(xs: &[[f64; 2]], k: &KernelParams) -> Option<Cholesky<f64, Dyn>> {
    let n = xs.len();
    let mut jitter = JITTER;
    for _ in 0..6 {
        let m = DMatrix::from_fn(n, n, |i, j| matern52(&xs[i], &xs[j], k) + if i == j { jitter } else { 0.0 });
        if let Some(c) = m.cholesky() {
            return Some(c);
        }
        jitter *= 10.0;
    }
    None
}

fn log_marginal(xs: &[[f64; 2]], z: &[f64], k: &KernelParams) -> Option<f64> {
    let chol = gram_cholesky(xs, k)?;
    let zv = DVector::from_column_slice(z);
    let alpha = chol.solve(&zv);
    let logdet: f64 = chol.l_dirty().diagonal().iter().take(z.len()).map(|d| d.ln()).sum::<f64>() * 2.0;
    Some(-0.5 * zv.dot(&alpha) - 0.5 * logdet - 0.5 * z.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Minimize `f` over R^3 with the Nelder–Mead simplex method.
fn nelder_mead(f: &dyn Fn(&[f64; 3]) -> f64, start: [f64; 3], max_iter: usize) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(&start)));
    for i in 0..3 {
        let mut p = start;
        p[i] += 0.5;
        simplex.push((p, f(&p)));
    }
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[3].1 - simplex[0].1).abs() <= 1e-8 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = [0.0; 3];
        for (p, _) in &simplex[..3] {
            for d in 0..3 {
                centroid[d] += p[d] / 3.0;
            }
        }
        let worst = simplex[3];
        let refl = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&exp);
            simplex[3] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (refl, fr);
        } else {
            let con = if fr < worst.1 {
                lerp(&centroid, &refl, 0.5)
            } else {
                lerp(&centroid, &worst.0, 0.5)
            };
            let fc = f(&con);
            if fc < worst.1.min(fr) {
                simplex[3] = (con, fc);
            } else {
                let best = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    let p = lerp(&best, &s.0, 0.5);
                    *s = (p, f(&p));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Halton points (bases 2 and 3) with a seeded Cranley–Patterson rotation.
pub fn initial_design(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = [rng.random::<f64>(), rng.random::<f64>()];
    (1..=n)
        .map(|i| {
            [
                (radical_inverse(i, 2) + shift[0]).fract(),
                (radical_inverse(i, 3) + shift[1]).fract(),
            ]
        })
        .collect()
}

/// Minimize `objective` over `bounds` with GP lower-confidence-bound acquisition.
///
/// The first `n_init` evaluations follow [`initial_design`]; each later point
/// minimizes `mu - kappa * sigma` over seeded random candidates plus local
/// perturbations of the incumbent. The returned choice minimizes the GP
/// posterior mean over successfully evaluated points. Non-finite objective
/// values are recorded and left out of the GP.
pub fn gp_ucb_optimize<F>(mut objective: F, bounds: &SearchBounds, opts: &BoOptions) -> Result<OptimizationTrace>
where
    F: FnMut(HyperParams) -> f64,
{
    bounds.validate()?;
    if opts.n_init == 0 || opts.budget < opts.n_init {
        return Err(Error::InvalidInput(format!(
            "budget {} must be at least the initial design size {} (> 0)",
            opts.budget, opts.n_init
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5EED_0F_B0);
    let mut evals: Vec<EvaluatedPoint> = Vec::with_capacity(opts.budget);
    let mut run = |u: [f64; 2], acquired: bool, evals: &mut Vec<EvaluatedPoint>| {
        let h = bounds.from_unit(u);
        let v = objective(h);
        evals.push(EvaluatedPoint {
            lambda: h.lambda,
            alpha: h.alpha,
            unit: u,
            value: v.is_finite().then_some(v),
            acquired,
            smoothed: None,
        });
    };

    for u in initial_design(opts.n_init, opts.seed) {
        run(u, false, &mut evals);
    }
    let mut spare = initial_design(opts.budget, opts.seed).into_iter().skip(opts.n_init);
    let mut kernel: Option<KernelParams> = None;

    while evals.len() < opts.budget {
        let (xs, ys) = successful(&evals);
        let next = if xs.len() < 2 {
            spare.next().unwrap_or([rng.random(), rng.random()])
        } else {
            let gp = GaussianProcess::fit_from(&xs, &ys, kernel.as_ref())?;
            kernel = Some(gp.kernel);
            let best = xs[argmin(&ys)];
            let mut candidates: Vec<[f64; 2]> = (0..opts.n_candidates).map(|_| [rng.random(), rng.random()]).collect();
            for _ in 0..opts.n_candidates / 8 {
                let d: [f64; 2] = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
                candidates.push([
                    (best[0] + 0.1 * d[0]).clamp(0.0, 1.0),
                    (best[1] + 0.1 * d[1]).clamp(0.0, 1.0),
                ]);
            }
            let taken: Vec<[f64; 2]> = evals.iter().map(|e| e.unit).collect();
            let fresh = |c: &[f64; 2]| taken.iter().all(|t| (t[0] - c[0]).abs() + (t[1] - c[1]).abs() > 1e-3);
            candidates
                .iter()
                .filter(|c| fresh(c))
                .map(|c| {
                    let (m, s) = gp.predict(c);
                    (m - opts.kappa * s, *c)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, c)| c)
                .unwrap_or([rng.random(), rng.random()])
        };
        run(next, true, &mut evals);
    }

    let (xs, ys) = successful(&evals);
    if xs.is_empty() {
        return Err(Error::Optimization("every objective evaluation failed".into()));
    }
    let gp = GaussianProcess::fit(&xs, &ys)?;
    let mut chosen_index = 0;
    let mut best_mean = f64::INFINITY;
    for (i, e) in evals.iter_mut().enumerate() {
        if e.value.is_some() {
            let (m, _) = gp.predict(&e.unit);
            e.smoothed = Some(m);
            if m < best_mean {
                best_mean = m;
                chosen_index = i;
            }
        }
    }
    let (posterior_mean, posterior_std) = gp.predict(&evals[chosen_index].unit);
    Ok(OptimizationTrace {
        chosen: HyperParams {
            lambda: evals[chosen_index].lambda,
            alpha: evals[chosen_index].alpha,
        },
        chosen_index,
        posterior_mean,
        posterior_std,
        kernel: gp.kernel,
        evaluations: evals,
    })
}

fn successful(evals: &[EvaluatedPoint]) -> (Vec<[f64; 2]>, Vec<f64>) {
    evals.iter().filter_map(|e| e.value.map(|v| (e.unit, v))).unzip()
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
