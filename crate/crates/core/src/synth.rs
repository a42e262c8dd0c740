//! Synthetic paired feature/BOLD datasets with known coupling.

use ndarray::{Array1, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Gamma};

use crate::cv::SessionData;
use crate::error::{Error, Result};
use crate::features::{align_target, build_lagged_design, standardize_runs, Side, SpectralFeatureTensor, Trial};

/// Double-gamma kernel: a gamma density peaking at `peak_s` minus `ratio`
/// times one peaking at `undershoot_s`, both with unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrfParams {
    pub peak_s: f64,
    pub undershoot_s: f64,
    pub ratio: f64,
}

impl Default for HrfParams {
    fn default() -> Self {
        Self {
            peak_s: 6.0,
            undershoot_s: 16.0,
            ratio: 1.0 / 6.0,
        }
    }
}

impl HrfParams {
    /// Continuous-time response, before normalization.
    pub fn response(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let g1 = Gamma::new(self.peak_s + 1.0, 1.0).expect("valid gamma");
        let g2 = Gamma::new(self.undershoot_s + 1.0, 1.0).expect("valid gamma");
        g1.pdf(t) - self.ratio * g2.pdf(t)
    }

    /// Sampled at `0, tr, 2 tr, ...` up to `duration` and scaled so the
    /// largest sample is 1.
    pub fn kernel(&self, tr: f64, duration: f64) -> Result<Vec<f64>> {
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::InvalidInput(format!("tr {tr} must be positive")));
        }
        if !(duration >= 20.0 && duration.is_finite()) {
            return Err(Error::InvalidInput(format!("duration {duration} s must be at least 20 s")));
        }
        if !(self.peak_s > 0.0 && self.undershoot_s > self.peak_s && self.ratio >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid HRF parameters {self:?}")));
        }
        let n = (duration / tr).floor() as usize + 1;
        let raw: Vec<f64> = (0..n).map(|k| self.response(k as f64 * tr)).collect();
        let peak = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(raw.into_iter().map(|v| v / peak).collect())
    }
}

/// Unit-peak double-gamma HRF with its peak at 6 s and undershoot at 16 s.
pub fn double_gamma_hrf(tr: f64, duration: f64) -> Result<Vec<f64>> {
    HrfParams::default().kernel(tr, duration)
}

/// Trials every `period_s` seconds (plus uniform jitter), each lasting
/// `duration_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskDesign {
    pub first_onset_s: f64,
    pub period_s: f64,
    pub duration_s: f64,
    pub jitter_s: f64,
}

impl Default for TaskDesign {
    fn default() -> Self {
        Self {
            first_onset_s: 10.0,
            period_s: 20.0,
            duration_s: 5.0,
            jitter_s: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub name: String,
    /// Samples per session.
    pub n_samples: usize,
    pub tr: f64,
    pub channel_labels: Vec<String>,
    pub freqs: Vec<f64>,
    pub n_lags: usize,
    /// `[C, F, M]` coupling from standardized features to the target. Every
    /// (channel, frequency) with a nonzero entry also carries the task latent.
    pub true_coeffs: Array3<f64>,
    pub task: TaskDesign,
    /// Amplitude of the task boxcar in active latents (entered with a minus sign).
    pub task_gain: f64,
    pub latent_ar: f64,
    /// Standard deviation of the independent noise added to active features.
    pub feature_noise: f64,
    pub feature_ar: f64,
    /// Variance ratio of noiseless target to noise; `None` adds no noise.
    pub snr: Option<f64>,
    pub noise_ar: f64,
    /// Amplitude of the per-session drift shared by features and target, as a
    /// fraction of the coupled signal's standard deviation.
    pub session_confound: f64,
    /// Scale of the drift in the features relative to its scale in the target.
    pub confound_feature_gain: f64,
    pub drift_ar: f64,
    pub hrf: HrfParams,
    pub seed: u64,
}

fn check_ar(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {v} must lie in (-1, 1)")))
    }
}

impl SyntheticSpec {
    pub fn n_channels(&self) -> usize {
        self.channel_labels.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (c, f, m) = self.true_coeffs.dim();
        if c != self.n_channels() || f != self.n_freqs() || m != self.n_lags {
            return Err(Error::ShapeMismatch(format!(
                "coefficients are {c}x{f}x{m}, expected {}x{}x{}",
                self.n_channels(),
                self.n_freqs(),
                self.n_lags
            )));
        }
        if self.n_lags == 0 || self.n_samples < 4 * self.n_lags.max(4) {
            return Err(Error::InvalidInput(format!(
                "{} samples are too few for {} lags",
                self.n_samples, self.n_lags
            )));
        }
        if !(self.tr.is_finite() && self.tr > 0.0) {
            return Err(Error::InvalidInput(format!("tr {} must be positive", self.tr)));
        }
        if let Some(snr) = self.snr {
            if !(snr.is_finite() && snr > 0.0) {
                return Err(Error::InvalidInput(format!("snr {snr} must be positive")));
            }
        }
        check_ar("latent_ar", self.latent_ar)?;
        check_ar("feature_ar", self.feature_ar)?;
        check_ar("noise_ar", self.noise_ar)?;
        check_ar("drift_ar", self.drift_ar)?;
        for (name, v) in [
            ("task_gain", self.task_gain),
            ("feature_noise", self.feature_noise),
            ("session_confound", self.session_confound),
            ("confound_feature_gain", self.confound_feature_gain),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be non-negative")));
            }
        }
        let t = self.task;
        if !(t.period_s > 0.0 && t.duration_s >= 0.0 && t.jitter_s >= 0.0 && t.first_onset_s >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid task design {t:?}")));
        }
        if self.true_coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("true coefficients".into()));
        }
        Ok(())
    }

    /// Channel groups with at least one nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n_channels())
            .filter(|&c| self.true_coeffs.index_axis(ndarray::Axis(0), c).iter().any(|v| *v != 0.0))
            .collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn active_pairs(&self) -> Vec<(usize, usize)> {
        let (c, f, _) = self.true_coeffs.dim();
        let mut out = Vec::new();
        for ci in 0..c {
            for fi in 0..f {
                if (0..self.n_lags).any(|m| self.true_coeffs[[ci, fi, m]] != 0.0) {
                    out.push((ci, fi));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSession {
    /// Standardized features.
    pub features: SpectralFeatureTensor,
    pub target: Vec<f64>,
    pub onsets: Vec<Trial>,
    /// Target before noise was added.
    pub noiseless: Vec<f64>,
    pub noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    pub sessions: [SyntheticSession; 2],
}

impl SyntheticDataset {
    /// Lag-stacked designs with aligned targets, one per session.
    pub fn session_data(&self) -> Result<[SessionData; 2]> {
        let m = self.spec.n_lags;
        let make = |s: &SyntheticSession| -> Result<SessionData> {
            SessionData::new(build_lagged_design(&s.features, m)?, align_target(&s.target, m)?.to_vec())
        };
        Ok([make(&self.sessions[0])?, make(&self.sessions[1])?])
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Zero-mean stationary AR(1) with unit marginal variance.
fn ar1(rng: &mut impl Rng, n: usize, phi: f64) -> Vec<f64> {
    let innov = (1.0 - phi * phi).sqrt();
    let mut x: f64 = StandardNormal.sample(rng);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x);
        let e: f64 = StandardNormal.sample(rng);
        x = phi * x + innov * e;
    }
    out
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n)
}

fn standardized(v: Vec<f64>) -> Vec<f64> {
    let (m, var) = mean_var(&v);
    let sd = var.sqrt();
    if sd == 0.0 {
        return vec![0.0; v.len()];
    }
    v.into_iter().map(|x| (x - m) / sd).collect()
}

fn onsets(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<Trial> {
    let total = spec.n_samples as f64 * spec.tr;
    let t = spec.task;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let base = t.first_onset_s + k as f64 * t.period_s;
        let jitter = if t.jitter_s > 0.0 {
            rng.random_range(-0.5..0.5) * t.jitter_s
        } else {
            0.0
        };
        let side = if rng.random_bool(0.5) { Side::Left } else { Side::Right };
        let time = (base + jitter).max(0.0);
        if time + t.duration_s > total {
            break;
        }
        out.push(Trial { time, side });
        k += 1;
    }
    out
}

fn boxcar(spec: &SyntheticSpec, trials: &[Trial]) -> Vec<f64> {
    (0..spec.n_samples)
        .map(|i| {
            let t = i as f64 * spec.tr;
            let on = trials
                .iter()
                .any(|tr| t >= tr.time && t < tr.time + spec.task.duration_s);
            if on {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn session(spec: &SyntheticSpec, index: u64) -> Result<SyntheticSession> {
    let (c, f, m) = spec.true_coeffs.dim();
    let t = spec.n_samples;
    let base = index * 16;
    let trials = onsets(spec, &mut stream(spec.seed, base));
    let task = boxcar(spec, &trials);

    let mut rng_latent = stream(spec.seed, base + 1);
    let mut rng_feat = stream(spec.seed, base + 2);
    let mut rng_conf = stream(spec.seed, base + 3);
    let mut rng_noise = stream(spec.seed, base + 4);

    let active = spec.active_pairs();
    let drift = standardized(ar1(&mut rng_conf, t, spec.drift_ar));
    let loading: Vec<f64> = (0..c * f).map(|_| StandardNormal.sample(&mut rng_conf)).collect();

    let mut raw = Array3::<f64>::zeros((t, c, f));
    for ci in 0..c {
        for fi in 0..f {
            let noise = ar1(&mut rng_feat, t, spec.feature_ar);
            let is_active = active.contains(&(ci, fi));
            let latent = if is_active {
                Some(ar1(&mut rng_latent, t, spec.latent_ar))
            } else {
                None
            };
            for ti in 0..t {
                let mut v = match &latent {
                    Some(l) => -spec.task_gain * task[ti] + l[ti] + spec.feature_noise * noise[ti],
                    None => noise[ti],
                };
                v += spec.session_confound * spec.confound_feature_gain * loading[ci * f + fi] * drift[ti];
                raw[[ti, ci, fi]] = v;
            }
        }
    }
    let features = standardize_runs(&SpectralFeatureTensor::new(
        raw,
        1.0 / spec.tr,
        spec.channel_labels.clone(),
        spec.freqs.clone(),
        vec![0],
    )?)?;

    let x = &features.data;
    let signal: Vec<f64> = (0..t)
        .map(|ti| {
            let mut s = 0.0;
            for &(ci, fi) in &active {
                for lag in 0..m.min(ti + 1) {
                    s += spec.true_coeffs[[ci, fi, lag]] * x[[ti - lag, ci, fi]];
                }
            }
            s
        })
        .collect();
    let signal_sd = mean_var(&signal).1.sqrt();
    let noiseless: Vec<f64> = signal
        .iter()
        .zip(&drift)
        .map(|(s, d)| s + spec.session_confound * signal_sd * d)
        .collect();
    let clean_var = mean_var(&noiseless).1;
    let raw_noise = standardized(ar1(&mut rng_noise, t, spec.noise_ar));
    let noise_sd = if clean_var == 0.0 {
        1.0
    } else {
        spec.snr.map_or(0.0, |snr| (clean_var / snr).sqrt())
    };
    let noise: Vec<f64> = raw_noise.iter().map(|e| noise_sd * e).collect();
    let target = noiseless.iter().zip(&noise).map(|(a, b)| a + b).collect();
    Ok(SyntheticSession {
        features,
        target,
        onsets: trials,
        noiseless,
        noise,
    })
}

/// Generate both sessions. Identical specs give bit-identical datasets.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    Ok(SyntheticDataset {
        spec: spec.clone(),
        sessions: [session(spec, 0)?, session(spec, 1)?],
    })
}

pub const SCENARIOS: [&str; 4] = ["S1", "S2", "S3", "NULL"];

const LABELS_16: [&str; 16] = [
    "Fp1", "Fp2", "F3", "F4", "Fz", "FCz", "C3", "C4", "Cz", "T7", "T8", "P3", "P4", "Pz", "O1", "O2",
];

fn labels(n: usize) -> Vec<String> {
    LABELS_16.iter().take(n).map(|s| s.to_string()).collect()
}

fn freq_grid(step: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 * step).collect()
}

fn hrf_weights(hrf: &HrfParams, tr: f64, m: usize) -> Array1<f64> {
    Array1::from_iter((0..m).map(|k| hrf.response(k as f64 * tr)))
        / hrf.response(hrf.peak_s)
}

fn base_spec(name: &str, t: usize, c: usize, f_step: f64, f: usize, m: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        name: name.into(),
        n_samples: t,
        tr: 1.26,
        channel_labels: labels(c),
        freqs: freq_grid(f_step, f),
        n_lags: m,
        true_coeffs: Array3::zeros((c, f, m)),
        task: TaskDesign::default(),
        task_gain: 1.0,
        latent_ar: 0.5,
        feature_noise: 0.5,
        feature_ar: 0.3,
        snr: Some(4.0),
        noise_ar: 0.3,
        session_confound: 0.0,
        confound_feature_gain: 1.0,
        drift_ar: 0.97,
        hrf: HrfParams::default(),
        seed,
    }
}

fn set_band(spec: &mut SyntheticSpec, channel: &str, band: (f64, f64), weight: f64) {
    let ci = spec.channel_labels.iter().position(|l| l == channel).expect("known label");
    let w = hrf_weights(&spec.hrf, spec.tr, spec.n_lags);
    for (fi, &freq) in spec.freqs.clone().iter().enumerate() {
        if freq >= band.0 && freq <= band.1 {
            for (lag, wl) in w.iter().enumerate() {
                spec.true_coeffs[[ci, fi, lag]] = weight * wl;
            }
        }
    }
}

/// Named reference scenarios.
///
/// * `S1`: group-sparse recovery. 16 channels, 2..40 Hz in 2 Hz steps,
///   5 lags, 400 samples per session; C3 and C4 couple over 8–30 Hz and Pz
///   over 16–24 Hz with HRF-shaped lag profiles and negative sign.
/// * `S2`: a single planted coefficient at (C3, 10 Hz, lag 5) with 7 lags.
/// * `S3`: like a reduced S1 with a per-session drift in features and target
///   at 0.75 times the signal standard deviation.
/// * `NULL`: independent AR(1) features and target, 200 samples, 4 channels,
///   5 frequencies, 3 lags.
pub fn scenario(name: &str) -> Result<SyntheticSpec> {
    let spec = match name.to_ascii_uppercase().as_str() {
        "S1" => {
            let mut s = base_spec("S1", 400, 16, 2.0, 20, 5, 101);
            set_band(&mut s, "C3", (8.0, 30.0), -0.12);
            set_band(&mut s, "C4", (8.0, 30.0), -0.12);
            set_band(&mut s, "Pz", (16.0, 24.0), -0.15);
            s
        }
        "S2" => {
            let mut s = base_spec("S2", 300, 8, 2.0, 10, 7, 202);
            s.true_coeffs[[6, 4, 5]] = -1.0;
            s.latent_ar = 0.0;
            s.feature_ar = 0.0;
            s.snr = Some(1.0);
            s
        }
        "S3" => {
            let mut s = base_spec("S3", 300, 8, 4.0, 8, 3, 303);
            set_band(&mut s, "C3", (8.0, 24.0), -0.3);
            s.session_confound = 0.75;
            s
        }
        "NULL" => {
            let mut s = base_spec("NULL", 200, 4, 4.0, 5, 3, 404);
            s.feature_ar = 0.5;
            s.noise_ar = 0.5;
            s.snr = None;
            s
        }
        _ => {
            return Err(Error::UnknownScenario(format!(
                "unknown scenario '{name}'; valid: {}",
                SCENARIOS.join(", ")
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hrf_peak_and_undershoot() {
        let h = double_gamma_hrf(1.26, 30.0).unwrap();
        let (imax, vmax) = h
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |a, (i, v)| if *v > a.1 { (i, *v) } else { a });
        assert_eq!(imax, 5);
        assert_eq!(vmax, 1.0);
        let vmin = h.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(vmin < 0.0 && vmin > -0.3, "{vmin}");
        assert!(h.iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn hrf_rejects_short_duration() {
        assert!(double_gamma_hrf(1.0, 10.0).is_err());
        assert!(double_gamma_hrf(0.0, 30.0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = scenario("S3").unwrap();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = generate(&spec.clone().with_seed(9)).unwrap();
        assert_ne!(generate(&spec).unwrap().sessions[0].target, other.sessions[0].target);
    }

    #[test]
    fn snr_is_met() {
        let d = generate(&scenario("S1").unwrap()).unwrap();
        for s in &d.sessions {
            let ratio = mean_var(&s.noiseless).1 / mean_var(&s.noise).1;
            assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
        }
    }

    #[test]
    fn unknown_scenario_lists_valid() {
        let msg = scenario("S9").unwrap_err().to_string();
        assert!(msg.contains("S1") && msg.contains("S3"), "{msg}");
    }

    #[test]
    fn support_of_s1() {
        let s = scenario("S1").unwrap();
        let names: Vec<&str> = s.support().iter().map(|&c| s.channel_labels[c].as_str()).collect();
        assert_eq!(names, ["C3", "C4", "Pz"]);
    }

    #[test]
    fn s2_planted_cell() {
        let s = scenario("S2").unwrap();
        assert_eq!(s.channel_labels[6], "C3");
        assert_eq!(s.freqs[4], 10.0);
        assert_eq!(s.support(), vec![6]);
    }

    #[test]
    fn null_has_unit_noise_only() {
        let d = generate(&scenario("NULL").unwrap()).unwrap();
        assert!(d.sessions[0].noiseless.iter().all(|v| *v == 0.0));
        let (_, v) = mean_var(&d.sessions[0].target);
        assert!((v - 1.0).abs() < 1e-9);
    }
}
