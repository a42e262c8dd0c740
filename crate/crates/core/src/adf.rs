//! Augmented Dickey–Fuller unit-root test with a constant term.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfOptions {
    /// Largest number of lagged differences considered.
    pub max_lag: usize,
    /// The unit root is rejected when the p-value is below this.
    pub threshold: f64,
}

impl Default for AdfOptions {
    fn default() -> Self {
        Self {
            max_lag: 12,
            threshold: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    pub n_obs: usize,
    /// `p_value < threshold`.
    pub rejected: bool,
}

struct Ols {
    coef: DVector<f64>,
    se: DVector<f64>,
    rss: f64,
    n: usize,
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<Ols> {
    let (n, k) = x.shape();
    if n <= k {
        return None;
    }
    let xtx = x.transpose() * x;
    let inv = xtx.clone().cholesky()?.inverse();
    let coef = &inv * (x.transpose() * y);
    let resid = y - x * &coef;
    let rss = resid.dot(&resid);
    let s2 = rss / (n - k) as f64;
    let se = DVector::from_iterator(k, (0..k).map(|i| (s2 * inv[(i, i)]).max(0.0).sqrt()));
    // Reject numerically rank-deficient systems.
    let scale = xtx.diagonal().iter().fold(0.0f64, |a, v| a.max(*v));
    let min_pivot = xtx.clone().cholesky()?.l().diagonal().iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if min_pivot * min_pivot <= 1e-12 * scale {
        return None;
    }
    Some(Ols { coef, se, rss, n })
}

/// Regression of `dy[i]` on `[1, y[i], dy[i-1], ..., dy[i-lags]]` for `i` in `start..`.
fn adf_regression(y: &[f64], dy: &[f64], lags: usize, start: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = dy.len() - start;
    let x = DMatrix::from_fn(rows, 2 + lags, |r, c| {
        let i = start + r;
        match c {
            0 => 1.0,
            1 => y[i],
            j => dy[i - (j - 1)],
        }
    });
    let t = DVector::from_iterator(rows, dy[start..].iter().copied());
    (x, t)
}

/// ADF test with a constant. The lag order minimizes AIC over `0..=max_lag`
/// on a common sample, then the chosen regression is refit on all available
/// rows. The p-value uses MacKinnon's response-surface approximation for one
/// series with a constant.
pub fn adf_test(y: &[f64], opts: &AdfOptions) -> Result<AdfResult> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ADF input".into()));
    }
    let max_lag = opts.max_lag;
    if y.len() < max_lag + 2 + 4 || y.len() <= 2 * max_lag + 4 {
        return Err(Error::InvalidInput(format!(
            "ADF with up to {max_lag} lags needs more than {} samples, got {}",
            (2 * max_lag + 4).max(max_lag + 5),
            y.len()
        )));
    }
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();

    let mut best: Option<(f64, usize)> = None;
    for lags in 0..=max_lag {
        let (x, t) = adf_regression(y, &dy, lags, max_lag);
        let Some(fit) = ols(&x, &t) else { continue };
        let n = fit.n as f64;
        let k = x.ncols() as f64;
        let aic = n * (fit.rss / n).ln() + 2.0 * k;
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, lags));
        }
    }
    let (_, lags) = best.ok_or_else(|| Error::Singular("every ADF regression was singular".into()))?;
    let (x, t) = adf_regression(y, &dy, lags, lags);
    let fit = ols(&x, &t).ok_or_else(|| Error::Singular("ADF regression is singular".into()))?;
    if fit.se[1] == 0.0 {
        return Err(Error::Singular("zero standard error on the lagged level".into()));
    }
    let statistic = fit.coef[1] / fit.se[1];
    let p_value = mackinnon_p_constant(statistic);
    Ok(AdfResult {
        statistic,
        p_value,
        lags_used: lags,
        n_obs: fit.n,
        rejected: p_value < opts.threshold,
    })
}

/// Approximate p-value of an ADF statistic (constant, one series).
pub fn mackinnon_p_constant(tau: f64) -> f64 {
    const TAU_MAX: f64 = 2.74;
    const TAU_MIN: f64 = -18.83;
    const TAU_STAR: f64 = -1.61;
    const SMALL: [f64; 3] = [2.1659, 1.4412, 0.038269];
    const LARGE: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];
    if tau > TAU_MAX {
        return 1.0;
    }
    if tau < TAU_MIN {
        return 0.0;
    }
    let z = if tau <= TAU_STAR {
        SMALL[0] + SMALL[1] * tau + SMALL[2] * tau * tau
    } else {
        LARGE[0] + LARGE[1] * tau + LARGE[2] * tau * tau + LARGE[3] * tau * tau * tau
    };
    Normal::new(0.0, 1.0).expect("standard normal").cdf(z)
}
