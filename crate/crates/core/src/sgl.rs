//! Sparse group lasso estimation by monotone FISTA.
//!
//! The objective is
//!
//! ```text
//! (1/2n) ||y - b0 - X b||^2 + lambda (1 - alpha) sum_c sqrt(p_c) ||b_c||_2 + lambda alpha ||b||_1
//! ```
//!
//! with an unpenalized intercept `b0`, handled by centering `y` and the
//! columns of `X`. Groups are given as one id per column.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::LaggedDesign;

/// Penalty strength `lambda >= 0` and l1/l2 mix `alpha` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub lambda: f64,
    pub alpha: f64,
}

impl HyperParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        let h = Self { lambda, alpha };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda {} must be finite and >= 0", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidInput(format!("alpha {} must lie in [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stop once the KKT residual drops to this value.
    pub tol: f64,
    /// Stop once an accepted step changes the objective by less than this
    /// relative amount.
    pub rel_obj_tol: f64,
    /// Accepted iterations between KKT checks.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-6,
            rel_obj_tol: 1e-10,
            check_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Kkt,
    ObjectiveStall,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub kkt_residual: f64,
    pub stop: StopReason,
    pub converged: bool,
    pub restarts: usize,
}

/// Fitted distributed-lag model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SglModel {
    pub intercept: f64,
    /// Indexed like the design columns.
    pub coeffs: Vec<f64>,
    pub hyper: HyperParams,
    pub diag: FitDiagnostics,
}

impl SglModel {
    /// Model with all coefficients zero.
    pub fn null(intercept: f64, n_cols: usize, hyper: HyperParams) -> Self {
        Self {
            intercept,
            coeffs: vec![0.0; n_cols],
            hyper,
            diag: FitDiagnostics {
                iterations: 0,
                objective: f64::NAN,
                kkt_residual: f64::NAN,
                stop: StopReason::Kkt,
                converged: true,
                restarts: 0,
            },
        }
    }

    pub fn n_nonzero(&self) -> usize {
        self.coeffs.iter().filter(|b| **b != 0.0).count()
    }
}

/// Column partition into penalty groups.
#[derive(Debug, Clone)]
pub struct Groups {
    members: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl Groups {
    pub fn from_index(index: &[usize]) -> Self {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (col, &g) in index.iter().enumerate() {
            map.entry(g).or_default().push(col);
        }
        let members: Vec<Vec<usize>> = map.into_values().collect();
        let weights = members.iter().map(|m| (m.len() as f64).sqrt()).collect();
        Self { members, weights }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    fn penalty(&self, beta: &[f64], hyper: &HyperParams) -> f64 {
        if hyper.lambda == 0.0 {
            return 0.0;
        }
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        let l2: f64 = self
            .members
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * m.iter().map(|&j| beta[j] * beta[j]).sum::<f64>().sqrt())
            .sum();
        hyper.lambda * (hyper.alpha * l1 + (1.0 - hyper.alpha) * l2)
    }

    fn prox_into(&self, v: &[f64], step: f64, hyper: &HyperParams, out: &mut [f64]) {
        let l1 = step * hyper.lambda * hyper.alpha;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = soft_threshold(x, l1);
        }
        let l2 = step * hyper.lambda * (1.0 - hyper.alpha);
        if l2 == 0.0 {
            return;
        }
        for (m, w) in self.members.iter().zip(&self.weights) {
            let norm = m.iter().map(|&j| out[j] * out[j]).sum::<f64>().sqrt();
            let thresh = l2 * w;
            if norm <= thresh {
                for &j in m {
                    out[j] = 0.0;
                }
            } else {
                let scale = 1.0 - thresh / norm;
                for &j in m {
                    out[j] *= scale;
                }
            }
        }
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Proximal operator of `step * penalty`: coordinatewise soft-thresholding at
/// `step * lambda * alpha` followed by groupwise shrinkage at
/// `step * lambda * (1 - alpha) * sqrt(p_c)`. Zeroed groups are exact zeros.
pub fn sgl_prox(v: &[f64], step: f64, hyper: &HyperParams, groups: &[usize]) -> Result<Vec<f64>> {
    if groups.len() != v.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} group ids for {} coordinates",
            groups.len(),
            v.len()
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("prox step {step} must be positive")));
    }
    hyper.validate()?;
    let mut out = vec![0.0; v.len()];
    Groups::from_index(groups).prox_into(v, step, hyper, &mut out);
    Ok(out)
}

/// The penalty term of the objective.
pub fn sgl_penalty(beta: &[f64], hyper: &HyperParams, groups: &[usize]) -> f64 {
    Groups::from_index(groups).penalty(beta, hyper)
}

/// Centered copy of a regression problem.
struct Centered {
    x: Array2<f64>,
    y: Array1<f64>,
    x_mean: Array1<f64>,
    y_mean: f64,
    n: f64,
}

impl Centered {
    fn new(x: ArrayView2<f64>, y: &[f64]) -> Result<Self> {
        let (n, p) = x.dim();
        if n != y.len() {
            return Err(Error::ShapeMismatch(format!("design has {n} rows, target has {}", y.len())));
        }
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput("design must be non-empty".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design".into()));
        }
        let x_mean = x.mean_axis(Axis(0)).expect("non-empty");
        let xc = &x - &x_mean;
        let y = Array1::from(y.to_vec());
        let y_mean = y.mean().expect("non-empty");
        Ok(Self {
            x: xc,
            y: y - y_mean,
            x_mean,
            y_mean,
            n: n as f64,
        })
    }

    /// Largest eigenvalue of `X^T X / n` by power iteration from a fixed start.
    fn lipschitz(&self) -> f64 {
        let p = self.x.ncols();
        let mut v = Array1::from_elem(p, 1.0 / (p as f64).sqrt());
        let mut est = 0.0;
        for _ in 0..200 {
            let xv = self.x.dot(&v);
            let w = self.x.t().dot(&xv) / self.n;
            let norm = w.dot(&w).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let next = v.dot(&w);
            v = w / norm;
            if (next - est).abs() <= 1e-10 * next.abs() {
                est = next;
                break;
            }
            est = next;
        }
        est
    }

    fn intercept(&self, beta: &[f64]) -> f64 {
        self.y_mean - self.x_mean.iter().zip(beta).map(|(m, b)| m * b).sum::<f64>()
    }
}

/// Smooth part of the objective, either through the data matrix or through
/// its Gram matrix when there are no more columns than rows.
enum Smooth {
    /// `xt` is the transposed centered design, `p x n`.
    Data { xt: Array2<f64>, y: Array1<f64>, n: f64 },
    Gram { g: Array2<f64>, b: Array1<f64>, yy: f64 },
}

impl Smooth {
    fn new(c: &Centered) -> Self {
        let (n, p) = c.x.dim();
        if p <= n {
            let g = c.x.t().dot(&c.x) / c.n;
            let b = c.x.t().dot(&c.y) / c.n;
            let yy = c.y.dot(&c.y) / c.n;
            Smooth::Gram { g, b, yy }
        } else {
            Smooth::Data {
                xt: c.x.t().as_standard_layout().into_owned(),
                y: c.y.clone(),
                n: c.n,
            }
        }
    }

    /// Linear image of `beta` that the loss and gradient are computed from.
    fn aux(&self, beta: &Array1<f64>) -> Array1<f64> {
        let nnz = beta.iter().filter(|b| **b != 0.0).count();
        match self {
            Smooth::Data { xt, .. } if 3 * nnz < beta.len() => {
                let mut out = Array1::zeros(xt.ncols());
                for (j, &b) in beta.iter().enumerate() {
                    if b != 0.0 {
                        out.scaled_add(b, &xt.row(j));
                    }
                }
                out
            }
            Smooth::Data { xt, .. } => xt.t().dot(beta),
            Smooth::Gram { g, .. } if 3 * nnz < beta.len() => {
                let mut out = Array1::zeros(g.nrows());
                for (j, &b) in beta.iter().enumerate() {
                    if b != 0.0 {
                        out.scaled_add(b, &g.row(j));
                    }
                }
                out
            }
            Smooth::Gram { g, .. } => g.dot(beta),
        }
    }

    fn loss(&self, beta: &Array1<f64>, aux: &Array1<f64>) -> f64 {
        match self {
            Smooth::Data { y, n, .. } => {
                let r = aux - y;
                r.dot(&r) / (2.0 * n)
            }
            Smooth::Gram { b, yy, .. } => (0.5 * beta.dot(aux) - b.dot(beta) + 0.5 * yy).max(0.0),
        }
    }

    fn grad(&self, aux: &Array1<f64>) -> Array1<f64> {
        match self {
            Smooth::Data { xt, y, n } => xt.dot(&(aux - y)) / *n,
            Smooth::Gram { b, .. } => aux - b,
        }
    }
}

fn gradient_mapping_residual(
    beta: &Array1<f64>,
    grad: &Array1<f64>,
    lip: f64,
    hyper: &HyperParams,
    groups: &Groups,
) -> f64 {
    let lip = if lip > 0.0 { lip } else { 1.0 };
    let v: Vec<f64> = beta.iter().zip(grad).map(|(b, g)| b - g / lip).collect();
    let mut p = vec![0.0; v.len()];
    groups.prox_into(&v, 1.0 / lip, hyper, &mut p);
    beta.iter()
        .zip(&p)
        .map(|(b, q)| lip * (b - q).abs())
        .fold(0.0, f64::max)
}

/// A centered least-squares problem with its groups and step-size bound,
/// ready to be fit repeatedly for different hyperparameters.
pub struct SglProblem {
    centered: Centered,
    groups: Groups,
    lip: f64,
    smooth: Smooth,
}

impl SglProblem {
    pub fn new(x: ArrayView2<f64>, groups: &[usize], y: &[f64]) -> Result<Self> {
        if groups.len() != x.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} group ids for {} columns",
                groups.len(),
                x.ncols()
            )));
        }
        let centered = Centered::new(x, y)?;
        let lip = centered.lipschitz();
        let smooth = Smooth::new(&centered);
        Ok(Self {
            groups: Groups::from_index(groups),
            centered,
            lip,
            smooth,
        })
    }

    pub fn from_design(design: &LaggedDesign, y: &[f64]) -> Result<Self> {
        Self::new(design.matrix.view(), &design.group_index, y)
    }

    pub fn n_cols(&self) -> usize {
        self.centered.x.ncols()
    }

    pub fn fit(&self, hyper: HyperParams, opts: &SolverOptions, init: Option<&[f64]>) -> Result<SglModel> {
        hyper.validate()?;
        let p = self.n_cols();
        let beta0 = match init {
            Some(b) if b.len() != p => {
                return Err(Error::ShapeMismatch(format!(
                    "initial point has {} entries, expected {p}",
                    b.len()
                )))
            }
            Some(b) => Array1::from(b.to_vec()),
            None => Array1::zeros(p),
        };
        let direct = if hyper.lambda == 0.0 { self.least_squares() } else { None };
        let (beta, diag) = match direct {
            Some(beta) => {
                let aux = self.smooth.aux(&beta);
                let kkt = gradient_mapping_residual(&beta, &self.smooth.grad(&aux), self.lip, &hyper, &self.groups);
                let diag = FitDiagnostics {
                    iterations: 0,
                    objective: self.smooth.loss(&beta, &aux),
                    kkt_residual: kkt,
                    stop: StopReason::Kkt,
                    converged: true,
                    restarts: 0,
                };
                (beta, diag)
            }
            None => monotone_fista(&self.smooth, &self.groups, hyper, opts, beta0, self.lip),
        };
        let coeffs = beta.to_vec();
        Ok(SglModel {
            intercept: self.centered.intercept(&coeffs),
            coeffs,
            hyper,
            diag,
        })
    }
}

impl SglProblem {
    /// Unpenalized solution through a Cholesky factorization of the Gram
    /// matrix, when it is numerically positive definite.
    fn least_squares(&self) -> Option<Array1<f64>> {
        let Smooth::Gram { g, b, .. } = &self.smooth else { return None };
        let p = g.nrows();
        let m = nalgebra::DMatrix::from_fn(p, p, |i, j| g[[i, j]]);
        let chol = m.cholesky()?;
        let diag_min = chol.l_dirty().diagonal().iter().take(p).fold(f64::INFINITY, |a, v| a.min(*v));
        let scale = (0..p).map(|i| g[[i, i]]).fold(0.0f64, f64::max);
        if !(diag_min * diag_min > 1e-12 * scale) {
            return None;
        }
        let sol = chol.solve(&nalgebra::DVector::from_iterator(p, b.iter().copied()));
        Some(Array1::from_iter(sol.iter().copied()))
    }
}

/// Fit on a raw matrix with one group id per column.
pub fn fit_matrix(
    x: ArrayView2<f64>,
    groups: &[usize],
    y: &[f64],
    hyper: HyperParams,
    opts: &SolverOptions,
    init: Option<&[f64]>,
) -> Result<SglModel> {
    hyper.validate()?;
    SglProblem::new(x, groups, y)?.fit(hyper, opts, init)
}

fn monotone_fista(
    smooth: &Smooth,
    groups: &Groups,
    hyper: HyperParams,
    opts: &SolverOptions,
    beta0: Array1<f64>,
    lip_ref: f64,
) -> (Array1<f64>, FitDiagnostics) {
    let p = beta0.len();
    let mut x = beta0;
    let mut ax = smooth.aux(&x);
    let mut obj = smooth.loss(&x, &ax) + groups.penalty(x.as_slice().unwrap(), &hyper);
    let mut z = x.clone();
    let mut az = ax.clone();
    let mut t = 1.0f64;
    let mut lip = if lip_ref > 0.0 { lip_ref } else { 1.0 };
    let mut restarts = 0;
    let mut accepted = 0usize;
    let mut momentum = false;
    let mut v = vec![0.0; p];
    let mut xn_buf = vec![0.0; p];

    let kkt_at = |beta: &Array1<f64>, aux: &Array1<f64>| {
        gradient_mapping_residual(beta, &smooth.grad(aux), lip_ref, &hyper, groups)
    };

    let mut kkt = kkt_at(&x, &ax);
    if kkt <= opts.tol {
        return (
            x,
            FitDiagnostics {
                iterations: 0,
                objective: obj,
                kkt_residual: kkt,
                stop: StopReason::Kkt,
                converged: true,
                restarts,
            },
        );
    }

    let mut stop = StopReason::MaxIter;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let gz = smooth.grad(&az);
        let fz = smooth.loss(&z, &az);
        let (xn, axn, fxn) = loop {
            for ((vi, zi), gi) in v.iter_mut().zip(z.iter()).zip(gz.iter()) {
                *vi = zi - gi / lip;
            }
            groups.prox_into(&v, 1.0 / lip, &hyper, &mut xn_buf);
            let xn = Array1::from(xn_buf.clone());
            let axn = smooth.aux(&xn);
            let fxn = smooth.loss(&xn, &axn);
            let d = &xn - &z;
            let model = fz + gz.dot(&d) + 0.5 * lip * d.dot(&d);
            if fxn <= model + 1e-12 * fz.abs().max(1e-300) || lip > 1e300 {
                break (xn, axn, fxn);
            }
            lip *= 2.0;
        };
        let obj_n = fxn + groups.penalty(xn.as_slice().unwrap(), &hyper);

        if obj_n > obj {
            if momentum {
                // Monotone restart: drop the momentum and retry from x.
                restarts += 1;
                t = 1.0;
                z.assign(&x);
                az.assign(&ax);
                momentum = false;
                continue;
            }
            // A plain proximal step failed to descend: numerical floor.
            stop = StopReason::ObjectiveStall;
            break;
        }
        debug_assert!(obj_n <= obj);

        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let w = (t - 1.0) / tn;
        z = &xn + &((&xn - &x) * w);
        az = &axn + &((&axn - &ax) * w);
        momentum = w != 0.0;
        let rel = (obj - obj_n) / obj.abs().max(1e-300);
        x = xn;
        ax = axn;
        obj = obj_n;
        t = tn;
        accepted += 1;

        if rel <= opts.rel_obj_tol {
            kkt = kkt_at(&x, &ax);
            stop = if kkt <= opts.tol { StopReason::Kkt } else { StopReason::ObjectiveStall };
            break;
        }
        if accepted % opts.check_every.max(1) == 0 {
            kkt = kkt_at(&x, &ax);
            if kkt <= opts.tol {
                stop = StopReason::Kkt;
                break;
            }
        }
    }
    if stop == StopReason::MaxIter {
        kkt = kkt_at(&x, &ax);
    }
    (
        x,
        FitDiagnostics {
            iterations,
            objective: obj,
            kkt_residual: kkt,
            stop,
            converged: stop != StopReason::MaxIter,
            restarts,
        },
    )
}

/// Fit the sparse group lasso with one penalty group per channel.
pub fn fit_sgl(design: &LaggedDesign, y: &[f64], hyper: HyperParams, opts: &SolverOptions) -> Result<SglModel> {
    fit_matrix(design.matrix.view(), &design.group_index, y, hyper, opts, None)
}

/// Like [`fit_sgl`], starting the iterations from `init`.
pub fn fit_sgl_warm(
    design: &LaggedDesign,
    y: &[f64],
    hyper: HyperParams,
    opts: &SolverOptions,
    init: &[f64],
) -> Result<SglModel> {
    fit_matrix(design.matrix.view(), &design.group_index, y, hyper, opts, Some(init))
}

/// Smallest `lambda` for which all penalized coefficients are zero.
///
/// With `g = X_c^T y_c / n`, a zero solution is optimal iff for every group
/// `||S(g_c, lambda alpha)||_2 <= lambda (1 - alpha) sqrt(p_c)`. The per-group
/// threshold is found by bisection; the result is nudged up by a relative
/// `1e-12` so fitting at exactly this value gives exact zeros.
pub fn lambda_max_matrix(x: ArrayView2<f64>, groups: &[usize], y: &[f64], alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha {alpha} must lie in [0, 1]")));
    }
    if groups.len() != x.ncols() {
        return Err(Error::ShapeMismatch("group index length differs from column count".into()));
    }
    let c = Centered::new(x, y)?;
    let g = c.x.t().dot(&c.y) / c.n;
    let groups = Groups::from_index(groups);
    let mut best = 0.0f64;
    for (members, w) in groups.members.iter().zip(&groups.weights) {
        let gc: Vec<f64> = members.iter().map(|&j| g[j]).collect();
        let gmax = gc.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let gnorm = gc.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lam = if gmax == 0.0 {
            0.0
        } else if alpha == 1.0 {
            gmax
        } else if alpha == 0.0 {
            gnorm / w
        } else {
            let excess = |lam: f64| {
                let s = gc
                    .iter()
                    .map(|v| soft_threshold(*v, lam * alpha).powi(2))
                    .sum::<f64>()
                    .sqrt();
                s - lam * (1.0 - alpha) * w
            };
            let mut lo = 0.0;
            let mut hi = (gmax / alpha).min(gnorm / ((1.0 - alpha) * w));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if excess(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        best = best.max(lam);
    }
    Ok(best * (1.0 + 1e-12))
}

pub fn lambda_max(design: &LaggedDesign, y: &[f64], alpha: f64) -> Result<f64> {
    lambda_max_matrix(design.matrix.view(), &design.group_index, y, alpha)
}

/// `intercept + X beta`.
pub fn predict_matrix(model: &SglModel, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.coeffs.len() {
        return Err(Error::ShapeMismatch(format!(
            "design has {} columns, model has {} coefficients",
            x.ncols(),
            model.coeffs.len()
        )));
    }
    let beta = ndarray::ArrayView1::from(&model.coeffs);
    Ok((x.dot(&beta) + model.intercept).to_vec())
}

pub fn predict(model: &SglModel, design: &LaggedDesign) -> Result<Vec<f64>> {
    predict_matrix(model, design.matrix.view())
}

/// Value of the penalized objective at the model's coefficients.
pub fn objective(model: &SglModel, design: &LaggedDesign, y: &[f64], hyper: &HyperParams) -> Result<f64> {
    let pred = predict(model, design)?;
    if pred.len() != y.len() {
        return Err(Error::ShapeMismatch("target length differs from design rows".into()));
    }
    let n = y.len() as f64;
    let loss = pred.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * n);
    Ok(loss + sgl_penalty(&model.coeffs, hyper, &design.group_index))
}

/// First-order optimality residual of a model.
///
/// The coefficient part is the infinity norm of the proximal gradient mapping
/// `L (b - prox_{1/L}(b - grad f(b) / L))` with `L` the largest eigenvalue of
/// the centered `X^T X / n`; the intercept part is `|mean(y - prediction)|`.
/// Zero exactly at a minimizer and continuous in the coefficients.
pub fn kkt_residual(model: &SglModel, design: &LaggedDesign, y: &[f64], hyper: &HyperParams) -> Result<f64> {
    hyper.validate()?;
    let c = Centered::new(design.matrix.view(), y)?;
    if model.coeffs.len() != design.n_cols() {
        return Err(Error::ShapeMismatch("coefficient count differs from design width".into()));
    }
    let beta = Array1::from(model.coeffs.clone());
    let grad = c.x.t().dot(&(c.x.dot(&beta) - &c.y)) / c.n;
    let groups = Groups::from_index(&design.group_index);
    let coef_part = gradient_mapping_residual(&beta, &grad, c.lipschitz(), hyper, &groups);
    let pred = predict(model, design)?;
    let intercept_part = (y.iter().zip(&pred).map(|(a, b)| a - b).sum::<f64>() / y.len() as f64).abs();
    Ok(coef_part.max(intercept_part))
}
