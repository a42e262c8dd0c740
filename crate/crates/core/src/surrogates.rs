//! Surrogate target series and surrogate-based significance tests.
//!
//! FT surrogates randomize Fourier phases while keeping every spectral
//! magnitude. IAAFT surrogates alternate between imposing the original
//! magnitudes and the original value distribution, ending on the value
//! distribution so the output is an exact permutation of the input.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::adf::{adf_test, AdfOptions, AdfResult};
use crate::cv::{PreparedSplit, TrainTest};
use crate::error::{Error, Result};

fn spectrum(y: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse_real(mut spec: Vec<Complex64>) -> Vec<f64> {
    let n = spec.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}

/// Magnitude of every DFT bin.
pub fn amplitude_spectrum(y: &[f64]) -> Vec<f64> {
    spectrum(y).iter().map(|c| c.norm()).collect()
}

fn check_len(y: &[f64]) -> Result<()> {
    if y.len() < 4 {
        return Err(Error::InvalidInput(format!("surrogates need at least 4 samples, got {}", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series".into()));
    }
    Ok(())
}

/// Phase-randomized surrogate with the same amplitude spectrum.
///
/// Bins `1..ceil(n/2)` get independent uniform phases and their mirror bins
/// the conjugate; the DC bin and (for even `n`) the Nyquist bin are kept.
pub fn ft_surrogate(y: &[f64], seed: u64) -> Result<Vec<f64>> {
    ft_surrogate_with_rng(y, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn ft_surrogate_with_rng(y: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_len(y)?;
    let n = y.len();
    let mut spec = spectrum(y);
    for k in 1..n.div_ceil(2) {
        let phase = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
        let c = Complex64::from_polar(spec[k].norm(), phase);
        spec[k] = c;
        spec[n - k] = c.conj();
    }
    Ok(inverse_real(spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IaaftOptions {
    pub max_iter: usize,
    /// Target relative RMS error of the amplitude spectrum.
    pub spectrum_tol: f64,
}

impl Default for IaaftOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            spectrum_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaftResult {
    pub series: Vec<f64>,
    /// Iterations whose result was kept.
    pub iterations: usize,
    /// Spectral error after the initial shuffle and after each kept iteration.
    pub spectral_errors: Vec<f64>,
    pub converged: bool,
}

/// Relative RMS difference between the amplitude spectrum of `s` and `target`.
pub fn spectral_error(s: &[f64], target: &[f64]) -> f64 {
    let amps = amplitude_spectrum(s);
    let num: f64 = amps.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = target.iter().map(|b| b * b).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Iterative amplitude-adjusted Fourier transform surrogate.
///
/// Starts from a random permutation of `y`. Each iteration imposes the
/// original amplitude spectrum, then rank-remaps onto the sorted values of
/// `y`. Iteration stops at `spectrum_tol`, at `max_iter`, or as soon as an
/// iteration fails to lower the spectral error (that iteration is discarded),
/// so the recorded errors are strictly decreasing.
pub fn iaaft_surrogate(y: &[f64], seed: u64, opts: &IaaftOptions) -> Result<IaaftResult> {
    iaaft_with_rng(y, &mut ChaCha8Rng::seed_from_u64(seed), opts)
}

pub fn iaaft_with_rng(y: &[f64], rng: &mut impl RngCore, opts: &IaaftOptions) -> Result<IaaftResult> {
    check_len(y)?;
    let n = y.len();
    let target = amplitude_spectrum(y);
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));

    let mut current = y.to_vec();
    current.shuffle(rng);
    let mut err = spectral_error(&current, &target);
    let mut errors = vec![err];
    let mut iterations = 0;
    let mut order: Vec<usize> = (0..n).collect();

    while err > opts.spectrum_tol && iterations < opts.max_iter {
        let mut spec = spectrum(&current);
        for (c, &a) in spec.iter_mut().zip(&target) {
            let m = c.norm();
            *c = if m > 0.0 { *c * (a / m) } else { Complex64::new(a, 0.0) };
        }
        let shaped = inverse_real(spec);
        order.sort_by(|&i, &j| shaped[i].total_cmp(&shaped[j]).then(i.cmp(&j)));
        let mut next = vec![0.0; n];
        for (rank, &idx) in order.iter().enumerate() {
            next[idx] = sorted[rank];
        }
        let next_err = spectral_error(&next, &target);
        if next_err >= err {
            break;
        }
        debug_assert!(next_err < err);
        current = next;
        err = next_err;
        errors.push(err);
        iterations += 1;
    }
    Ok(IaaftResult {
        series: current,
        iterations,
        converged: err <= opts.spectrum_tol,
        spectral_errors: errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullOptions {
    pub n_surrogates: usize,
    pub base_seed: u64,
    pub iaaft: IaaftOptions,
    pub adf: AdfOptions,
}

impl Default for NullOptions {
    fn default() -> Self {
        Self {
            n_surrogates: 100,
            base_seed: 0,
            iaaft: IaaftOptions::default(),
            adf: AdfOptions::default(),
        }
    }
}

/// Null distribution of the averaged test correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    /// One averaged test correlation per successful surrogate, in seed order.
    pub surrogate_stats: Vec<f64>,
    pub observed_stat: f64,
    /// Successful surrogates.
    pub n_surrogates: usize,
    /// `#{stat >= observed} / n`.
    pub p_value: f64,
    /// `(#{stat >= observed} + 1) / (n + 1)`.
    pub p_value_conservative: f64,
    pub stationarity: Vec<AdfResult>,
    /// Surrogate index and message for every failed surrogate fit.
    pub failures: Vec<(usize, String)>,
}

/// Tie-inclusive empirical p-values `(k / n, (k + 1) / (n + 1))`.
pub fn empirical_p_values(null: &[f64], observed: f64) -> (f64, f64) {
    let k = null.iter().filter(|&&s| s >= observed).count() as f64;
    let n = null.len() as f64;
    (k / n, (k + 1.0) / (n + 1.0))
}

/// Run the estimation pipeline on the true targets and on IAAFT surrogates
/// of the targets, features unchanged.
///
/// Each session target must pass the ADF pre-test first. Surrogate `i` draws
/// from a generator seeded with `base_seed + i`; parcellation `p` uses stream
/// `2p` for its training target and `2p + 1` for its test target. The
/// statistic is the test correlation averaged over parcellations.
pub fn null_distribution(split: &PreparedSplit, pipeline: &dyn TrainTest, opts: &NullOptions) -> Result<NullDistribution> {
    let stationarity = stationarity_check(split, opts)?;
    let observed = observed_statistic(split, pipeline)?;
    surrogate_loop(split, pipeline, opts, observed, stationarity)
}

/// Like [`null_distribution`] with an already computed observed statistic.
pub fn null_distribution_with_observed(
    split: &PreparedSplit,
    pipeline: &dyn TrainTest,
    opts: &NullOptions,
    observed: f64,
) -> Result<NullDistribution> {
    let stationarity = stationarity_check(split, opts)?;
    surrogate_loop(split, pipeline, opts, observed, stationarity)
}

fn stationarity_check(split: &PreparedSplit, opts: &NullOptions) -> Result<Vec<AdfResult>> {
    if opts.n_surrogates == 0 {
        return Err(Error::InvalidInput("at least one surrogate is required".into()));
    }
    let mut out = Vec::new();
    for y in &split.session_targets {
        let res = adf_test(y, &opts.adf)?;
        if !res.rejected {
            return Err(Error::NonStationary {
                statistic: res.statistic,
                p_value: res.p_value,
                threshold: opts.adf.threshold,
            });
        }
        out.push(res);
    }
    Ok(out)
}

/// Mean test correlation of the pipeline on the true targets.
pub fn observed_statistic(split: &PreparedSplit, pipeline: &dyn TrainTest) -> Result<f64> {
    let mut total = 0.0;
    for p in &split.partitions {
        total += pipeline.train_and_test(&p.train_x, &p.train_y, &p.test_x, &p.test_y)?.score.r;
    }
    Ok(total / split.partitions.len() as f64)
}

fn surrogate_loop(
    split: &PreparedSplit,
    pipeline: &dyn TrainTest,
    opts: &NullOptions,
    observed: f64,
    stationarity: Vec<AdfResult>,
) -> Result<NullDistribution> {
    let results: Vec<Result<f64>> = (0..opts.n_surrogates)
        .into_par_iter()
        .map(|i| {
            let mut total = 0.0;
            for (p, part) in split.partitions.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.base_seed.wrapping_add(i as u64));
                rng.set_stream(2 * p as u64);
                let y_train = iaaft_with_rng(&part.train_y, &mut rng, &opts.iaaft)?.series;
                rng.set_stream(2 * p as u64 + 1);
                let y_test = iaaft_with_rng(&part.test_y, &mut rng, &opts.iaaft)?.series;
                total += pipeline
                    .train_and_test(&part.train_x, &y_train, &part.test_x, &y_test)?
                    .score
                    .r;
            }
            Ok(total / split.partitions.len() as f64)
        })
        .collect();

    let mut stats = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => stats.push(v),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if stats.is_empty() {
        return Err(Error::Optimization("every surrogate fit failed".into()));
    }
    let (p_value, p_value_conservative) = empirical_p_values(&stats, observed);
    Ok(NullDistribution {
        n_surrogates: stats.len(),
        surrogate_stats: stats,
        observed_stat: observed,
        p_value,
        p_value_conservative,
        stationarity,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    #[test]
    fn ft_preserves_spectrum_and_mean() {
        for n in [16, 17, 64] {
            let y = noise(n, n as u64);
            let s = ft_surrogate(&y, 7).unwrap();
            for (a, b) in amplitude_spectrum(&y).iter().zip(amplitude_spectrum(&s)) {
                assert!((a - b).abs() < 1e-9);
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            assert!((mean(&y) - mean(&s)).abs() < 1e-9);
            assert_ne!(s, y);
        }
    }

    #[test]
    fn ft_of_constant_is_constant() {
        let s = ft_surrogate(&[2.5; 10], 1).unwrap();
        assert!(s.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn surrogates_are_seed_deterministic() {
        let y = noise(50, 1);
        assert_eq!(ft_surrogate(&y, 3).unwrap(), ft_surrogate(&y, 3).unwrap());
        let o = IaaftOptions::default();
        assert_eq!(iaaft_surrogate(&y, 3, &o).unwrap(), iaaft_surrogate(&y, 3, &o).unwrap());
        assert_ne!(ft_surrogate(&y, 3).unwrap(), ft_surrogate(&y, 4).unwrap());
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(ft_surrogate(&[1.0, 2.0, 3.0], 0).is_err());
        assert!(iaaft_surrogate(&[1.0, 2.0], 0, &IaaftOptions::default()).is_err());
    }

    #[test]
    fn iaaft_is_a_permutation() {
        let y: Vec<f64> = noise(128, 2).iter().map(|v| (3.0 * v).exp()).collect();
        let r = iaaft_surrogate(&y, 11, &IaaftOptions::default()).unwrap();
        let mut a = y.clone();
        let mut b = r.series.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        assert!(r.spectral_errors.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn p_values_count_ties() {
        let null = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(empirical_p_values(&null, 0.3), (0.5, 0.6));
        assert_eq!(empirical_p_values(&null, 0.9), (0.0, 0.2));
        assert_eq!(empirical_p_values(&null, 0.0), (1.0, 1.0));
    }
}
