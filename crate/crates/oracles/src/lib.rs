//! Slow, direct reference implementations for checking the optimized code.
//! Nothing here is shared with the library under test.

use nalgebra::{DMatrix, DVector};

/// Least squares with an intercept via the normal equations.
/// Returns `(intercept, coefficients)`.
pub fn ols_normal_equations(x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
    let n = x.len();
    let p = x[0].len();
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let b = DVector::from_column_slice(y);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    let sol = ata.lu().solve(&atb).expect("full-rank design");
    (sol[0], sol.iter().skip(1).copied().collect())
}

/// Objective `(1/2n)||y - b0 - X b||^2 + lambda ||b||_1` with `b0` profiled out.
pub fn lasso_objective(x: &[Vec<f64>], y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = x.len() as f64;
    let fit: Vec<f64> = x.iter().map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum()).collect();
    let resid: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let mean = resid.iter().sum::<f64>() / n;
    let rss: f64 = resid.iter().map(|r| (r - mean).powi(2)).sum();
    rss / (2.0 * n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Cyclic coordinate descent for the lasso with an unpenalized intercept.
pub fn lasso_cd(x: &[Vec<f64>], y: &[f64], lambda: f64, sweeps: usize) -> Vec<f64> {
    let n = x.len();
    let p = x[0].len();
    let nf = n as f64;
    let xm: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let ym = y.iter().sum::<f64>() / nf;
    let xc: Vec<Vec<f64>> = x.iter().map(|r| r.iter().zip(&xm).map(|(a, m)| a - m).collect()).collect();
    let mut resid: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let norms: Vec<f64> = (0..p).map(|j| xc.iter().map(|r| r[j] * r[j]).sum::<f64>() / nf).collect();
    let mut beta = vec![0.0; p];
    for _ in 0..sweeps {
        let mut delta = 0.0f64;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let rho: f64 = xc.iter().zip(&resid).map(|(r, e)| r[j] * e).sum::<f64>() / nf + norms[j] * beta[j];
            let new = rho.signum() * (rho.abs() - lambda).max(0.0) / norms[j];
            let d = new - beta[j];
            if d != 0.0 {
                for (e, r) in resid.iter_mut().zip(&xc) {
                    *e -= d * r[j];
                }
                beta[j] = new;
            }
            delta = delta.max(d.abs());
        }
        if delta < 1e-15 {
            break;
        }
    }
    beta
}

/// Objective of the sparse group lasso proximal problem
/// `(1/2)||b - v||^2 + step * lambda * ((1-alpha) sum_g sqrt(p_g)||b_g|| + alpha ||b||_1)`.
pub fn prox_objective(b: &[f64], v: &[f64], step: f64, lambda: f64, alpha: f64, groups: &[usize]) -> f64 {
    let quad: f64 = b.iter().zip(v).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / 2.0;
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut group_pen = 0.0;
    for g in ids {
        let members: Vec<f64> = b.iter().zip(groups).filter(|(_, gg)| **gg == g).map(|(x, _)| *x).collect();
        let norm = members.iter().map(|x| x * x).sum::<f64>().sqrt();
        group_pen += (members.len() as f64).sqrt() * norm;
    }
    let l1: f64 = b.iter().map(|x| x.abs()).sum();
    quad + step * lambda * ((1.0 - alpha) * group_pen + alpha * l1)
}

/// Smallest prox objective over a grid of spacing `h` spanning `center ± radius`
/// in every coordinate.
pub fn grid_min(
    center: &[f64],
    radius: f64,
    h: f64,
    f: &dyn Fn(&[f64]) -> f64,
) -> f64 {
    let k = (radius / h).round() as i64;
    let d = center.len();
    let mut idx = vec![-k; d];
    let mut best = f64::INFINITY;
    let mut point = vec![0.0; d];
    loop {
        for i in 0..d {
            point[i] = center[i] + idx[i] as f64 * h;
        }
        best = best.min(f(&point));
        let mut i = 0;
        loop {
            if i == d {
                return best;
            }
            idx[i] += 1;
            if idx[i] <= k {
                break;
            }
            idx[i] = -k;
            i += 1;
        }
    }
}

/// Largest violation of the optimality conditions of the SGL prox at `b`.
pub fn prox_subgradient_violation(b: &[f64], v: &[f64], step: f64, lambda: f64, alpha: f64, groups: &[usize]) -> f64 {
    let l1 = step * lambda * alpha;
    let lg = step * lambda * (1.0 - alpha);
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut worst = 0.0f64;
    for g in ids {
        let m: Vec<usize> = (0..b.len()).filter(|&i| groups[i] == g).collect();
        let w = (m.len() as f64).sqrt();
        let norm = m.iter().map(|&i| b[i] * b[i]).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Need s in [-1, 1]^m with ||v_g - l1 s|| <= lg * w.
            let soft = m
                .iter()
                .map(|&i| (v[i].abs() - l1).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(soft - lg * w);
        } else {
            for &i in &m {
                let r = v[i] - b[i] - lg * w * b[i] / norm;
                let viol = if b[i] != 0.0 {
                    (r - l1 * b[i].signum()).abs()
                } else {
                    r.abs() - l1
                };
                worst = worst.max(viol);
            }
        }
    }
    worst
}

/// Two-sided signed-rank p-value by listing all `2^n` sign patterns.
/// `ranks` are the (mid-)ranks of the absolute differences and `w_plus` the
/// observed positive rank sum.
pub fn wilcoxon_enumeration_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let total = 1u64 << n;
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0..total {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= w_plus + 1e-9 {
            le += 1;
        }
        if w >= w_plus - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

/// Benjamini–Hochberg rejections by the textbook rule: find the largest `k`
/// with `p_(k) <= k q / m` and reject the `k` smallest.
pub fn bh_step_up(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    let mut sorted: Vec<(f64, usize)> = p.iter().copied().zip(0..).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut k = 0;
    for (i, (pv, _)) in sorted.iter().enumerate() {
        if *pv <= (i + 1) as f64 * q / m as f64 {
            k = i + 1;
        }
    }
    let mut out = vec![false; m];
    for (_, idx) in &sorted[..k] {
        out[*idx] = true;
    }
    out
}

/// Pearson correlation from the textbook sum formula.
pub fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Complex Morlet power by direct time-domain summation, zero outside the
/// signal. Envelope `exp(-t^2 / 2 sigma^2)` truncated at `trunc * sigma`,
/// normalized to unit sum.
pub fn morlet_power_direct(x: &[f64], fs: f64, freq: f64, sigma: f64, trunc: f64) -> Vec<f64> {
    let h = (trunc * sigma * fs).ceil() as i64;
    let env: Vec<f64> = (-h..=h)
        .map(|j| {
            let t = j as f64 / fs;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = env.iter().sum();
    (0..x.len() as i64)
        .map(|t| {
            let (mut re, mut im) = (0.0, 0.0);
            for j in -h..=h {
                let k = t + j;
                if k < 0 || k >= x.len() as i64 {
                    continue;
                }
                let tau = j as f64 / fs;
                let w = env[(j + h) as usize] / norm;
                let ph = -2.0 * std::f64::consts::PI * freq * tau;
                re += x[k as usize] * w * ph.cos();
                im += x[k as usize] * w * ph.sin();
            }
            re * re + im * im
        })
        .collect()
}
