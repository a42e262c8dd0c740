//! Spectral feature extraction and the lag-stacked regressor design.
//!
//! The pipeline is: [`morlet_relative_power`] on raw multichannel signals,
//! optional [`remove_trial_average`], [`resample_to_tr`] to the BOLD sampling
//! grid, [`standardize_runs`], and finally [`build_lagged_design`].

use std::ops::Range;

use ndarray::{s, Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time × channel × frequency relative-power features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatureTensor {
    /// Shape `[T, C, F]`.
    pub data: Array3<f64>,
    /// Samples per second.
    pub sample_rate: f64,
    pub channel_labels: Vec<String>,
    pub freqs: Vec<f64>,
    /// Sample indices where runs start. The first entry is always 0.
    pub run_boundaries: Vec<usize>,
}

impl SpectralFeatureTensor {
    pub fn new(
        data: Array3<f64>,
        sample_rate: f64,
        channel_labels: Vec<String>,
        freqs: Vec<f64>,
        run_boundaries: Vec<usize>,
    ) -> Result<Self> {
        let (t, c, f) = data.dim();
        if t == 0 || c == 0 || f == 0 {
            return Err(Error::InvalidInput(format!(
                "feature tensor must be non-empty, got {t}x{c}x{f}"
            )));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidInput(format!("sample rate {sample_rate} must be positive")));
        }
        if channel_labels.len() != c {
            return Err(Error::ShapeMismatch(format!(
                "{} channel labels for {c} channels",
                channel_labels.len()
            )));
        }
        if freqs.len() != f {
            return Err(Error::ShapeMismatch(format!("{} frequencies for {f} bins", freqs.len())));
        }
        if run_boundaries.first() != Some(&0) {
            return Err(Error::InvalidInput("run boundaries must start at 0".into()));
        }
        if run_boundaries.windows(2).any(|w| w[0] >= w[1]) || run_boundaries.iter().any(|&b| b >= t) {
            return Err(Error::InvalidInput(
                "run boundaries must be strictly increasing and inside the series".into(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature tensor".into()));
        }
        Ok(Self {
            data,
            sample_rate,
            channel_labels,
            freqs,
            run_boundaries,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.data.dim().0
    }

    pub fn n_channels(&self) -> usize {
        self.data.dim().1
    }

    pub fn n_freqs(&self) -> usize {
        self.data.dim().2
    }

    /// Sample ranges of each run, in order.
    pub fn runs(&self) -> Vec<Range<usize>> {
        let t = self.n_samples();
        self.run_boundaries
            .iter()
            .enumerate()
            .map(|(i, &start)| start..self.run_boundaries.get(i + 1).copied().unwrap_or(t))
            .collect()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channel_labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }

    pub fn with_channel_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_channels() {
            return Err(Error::ShapeMismatch(format!(
                "{} channel labels for {} channels",
                labels.len(),
                self.n_channels()
            )));
        }
        self.channel_labels = labels;
        Ok(self)
    }

    fn with_data(&self, data: Array3<f64>) -> Self {
        Self {
            data,
            sample_rate: self.sample_rate,
            channel_labels: self.channel_labels.clone(),
            freqs: self.freqs.clone(),
            run_boundaries: self.run_boundaries.clone(),
        }
    }
}

/// Complex Morlet wavelet family.
///
/// At frequency `f` the Gaussian envelope has standard deviation
/// `sigma_f = time_res / sqrt(8 ln 2) * central_freq / f`, i.e. `time_res` is
/// the full width at half maximum of the envelope at `central_freq`. The
/// kernel is truncated at `±truncation * sigma_f` and scaled so that the
/// envelope sums to one: a complex exponential at `f` has unit gain, so
/// equal-amplitude tones produce equal power at their own bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorletParams {
    pub central_freq: f64,
    pub time_res: f64,
    pub truncation: f64,
}

impl Default for MorletParams {
    fn default() -> Self {
        Self {
            central_freq: 1.0,
            time_res: 3.0,
            truncation: 5.0,
        }
    }
}

impl MorletParams {
    pub fn sigma(&self, freq: f64) -> f64 {
        self.time_res / (8.0 * std::f64::consts::LN_2).sqrt() * self.central_freq / freq
    }

    /// Kernel taps for offsets `-h..=h` samples, as `(h, taps)`.
    ///
    /// The wavelet coefficient at sample `t` is `sum_j x[t + j] * taps[j + h]`.
    pub fn kernel(&self, freq: f64, fs: f64) -> (usize, Vec<Complex64>) {
        let sigma = self.sigma(freq);
        let h = (self.truncation * sigma * fs).ceil() as usize;
        let env: Vec<f64> = (-(h as isize)..=h as isize)
            .map(|j| {
                let t = j as f64 / fs;
                (-t * t / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let norm: f64 = env.iter().sum();
        let taps = env
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let t = (i as f64 - h as f64) / fs;
                Complex64::from_polar(e / norm, -2.0 * std::f64::consts::PI * freq * t)
            })
            .collect();
        (h, taps)
    }
}

/// Time-varying relative power from a complex Morlet transform.
///
/// `signal` is `[N samples, C channels]`. Wavelet coefficients are computed by
/// FFT-based linear convolution (zero padding outside the signal), squared,
/// and divided by the total power across `freqs` at each sample. Samples with
/// zero total power get a flat `1/F` distribution.
pub fn morlet_relative_power(
    signal: ArrayView2<f64>,
    fs: f64,
    freqs: &[f64],
    params: &MorletParams,
) -> Result<SpectralFeatureTensor> {
    let (n, c) = signal.dim();
    if n == 0 || c == 0 {
        return Err(Error::InvalidInput("signal must be non-empty".into()));
    }
    if freqs.is_empty() || freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::InvalidInput("frequencies must be positive and finite".into()));
    }
    if !(params.central_freq > 0.0 && params.time_res > 0.0 && params.truncation > 0.0) {
        return Err(Error::InvalidInput("Morlet parameters must be positive".into()));
    }
    if let Some((t, ch)) = signal
        .indexed_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(idx, _)| idx)
    {
        return Err(Error::NonFinite(format!("signal at sample {t}, channel {ch}")));
    }
    let fmax = freqs.iter().cloned().fold(0.0, f64::max);
    if !(fs > 2.0 * fmax) {
        return Err(Error::InvalidInput(format!(
            "sampling rate {fs} Hz must exceed twice the highest frequency {fmax} Hz"
        )));
    }

    let kernels: Vec<(usize, Vec<Complex64>)> = freqs.iter().map(|&f| params.kernel(f, fs)).collect();
    let hmax = kernels.iter().map(|(h, _)| *h).max().unwrap_or(0);
    let len = (n + 2 * hmax + 1).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    // Convolution kernel g[m] = taps[h - m], stored circularly.
    let kernel_spectra: Vec<Vec<Complex64>> = kernels
        .iter()
        .map(|(h, taps)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); len];
            for (i, tap) in taps.iter().enumerate() {
                let m = *h as isize - i as isize;
                buf[m.rem_euclid(len as isize) as usize] = *tap;
            }
            fwd.process(&mut buf);
            buf
        })
        .collect();

    let nf = freqs.len();
    let mut power = Array3::<f64>::zeros((n, c, nf));
    let scale = 1.0 / len as f64;
    for ch in 0..c {
        let mut spec: Vec<Complex64> = (0..len)
            .map(|t| Complex64::new(if t < n { signal[[t, ch]] } else { 0.0 }, 0.0))
            .collect();
        fwd.process(&mut spec);
        for (fi, kspec) in kernel_spectra.iter().enumerate() {
            let mut buf: Vec<Complex64> = spec.iter().zip(kspec).map(|(a, b)| a * b).collect();
            inv.process(&mut buf);
            for t in 0..n {
                power[[t, ch, fi]] = (buf[t] * scale).norm_sqr();
            }
        }
    }

    for mut lane in power.lanes_mut(Axis(2)) {
        let total: f64 = lane.sum();
        if total > 0.0 {
            lane.mapv_inplace(|p| p / total);
        } else {
            lane.fill(1.0 / nf as f64);
        }
    }

    let labels = (0..c).map(|i| format!("E{}", i + 1)).collect();
    SpectralFeatureTensor::new(power, fs, labels, freqs.to_vec(), vec![0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// Onset in seconds from the first sample.
    pub time: f64,
    pub side: Side,
}

/// Trial onsets and the epoch window around each onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialParadigm {
    pub onsets: Vec<Trial>,
    /// Seconds before and after each onset.
    pub window: (f64, f64),
}

impl TrialParadigm {
    /// 10 s windows centered on each onset.
    pub fn centered(onsets: Vec<Trial>) -> Result<Self> {
        let p = Self {
            onsets,
            window: (5.0, 5.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.onsets.windows(2).any(|w| !(w[0].time < w[1].time)) {
            return Err(Error::InvalidInput("trial onsets must be strictly increasing".into()));
        }
        if !(self.window.0 >= 0.0 && self.window.1 >= 0.0 && self.window.0 + self.window.1 > 0.0) {
            return Err(Error::InvalidInput("trial window must be non-negative and non-empty".into()));
        }
        Ok(())
    }
}

/// Subtract the per-run, per-side across-trial mean epoch from every trial
/// window. Samples outside trial windows are untouched.
///
/// Windows are `round((onset - pre) * fs)` for `round((pre + post) * fs)`
/// samples. Every window must lie inside a single run and windows must not
/// overlap, which makes the operation an orthogonal projection.
pub fn remove_trial_average(
    tensor: &SpectralFeatureTensor,
    paradigm: &TrialParadigm,
) -> Result<SpectralFeatureTensor> {
    paradigm.validate()?;
    let fs = tensor.sample_rate;
    let len = ((paradigm.window.0 + paradigm.window.1) * fs).round() as usize;
    if len == 0 {
        return Err(Error::InvalidInput("trial window shorter than one sample".into()));
    }
    let runs = tensor.runs();

    // (run, side, start)
    let mut epochs = Vec::with_capacity(paradigm.onsets.len());
    for trial in &paradigm.onsets {
        let start = ((trial.time - paradigm.window.0) * fs).round();
        let run = runs
            .iter()
            .position(|r| start >= r.start as f64 && start < r.end as f64)
            .ok_or_else(|| {
                Error::InvalidInput(format!("trial at {:.3} s starts outside the recording", trial.time))
            })?;
        let start = start as usize;
        if start + len > runs[run].end {
            return Err(Error::InvalidInput(format!(
                "trial window at {:.3} s crosses the end of run {run}",
                trial.time
            )));
        }
        epochs.push((run, trial.side, start));
    }
    let mut order: Vec<usize> = (0..epochs.len()).collect();
    order.sort_by_key(|&i| epochs[i].2);
    for w in order.windows(2) {
        if epochs[w[0]].2 + len > epochs[w[1]].2 {
            return Err(Error::InvalidInput("trial windows overlap".into()));
        }
    }

    let (_, c, f) = tensor.data.dim();
    let mut out = tensor.data.clone();
    for run in 0..runs.len() {
        for side in [Side::Left, Side::Right] {
            let members: Vec<usize> = epochs
                .iter()
                .filter(|e| e.0 == run && e.1 == side)
                .map(|e| e.2)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut mean = Array3::<f64>::zeros((len, c, f));
            for &start in &members {
                mean += &tensor.data.slice(s![start..start + len, .., ..]);
            }
            mean /= members.len() as f64;
            for &start in &members {
                let mut win = out.slice_mut(s![start..start + len, .., ..]);
                win -= &mean;
            }
        }
    }
    Ok(tensor.with_data(out))
}

/// Taps of the anti-aliasing low-pass filter, in input-sample units.
///
/// Windowed sinc with cutoff `cutoff` cycles per input sample and a Blackman
/// window spanning `±half_len` samples.
pub fn lowpass_tap(offset: f64, cutoff: f64, half_len: f64) -> f64 {
    if offset.abs() >= half_len {
        return 0.0;
    }
    let x = 2.0 * cutoff * offset;
    let sinc = if x.abs() < 1e-12 {
        1.0
    } else {
        (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
    };
    let u = (offset + half_len) / (2.0 * half_len);
    let w = 0.42 - 0.5 * (2.0 * std::f64::consts::PI * u).cos() + 0.08 * (4.0 * std::f64::consts::PI * u).cos();
    2.0 * cutoff * sinc * w
}

/// Anti-aliasing filter settings used by [`resample_to_tr`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleFilter {
    /// Cutoff as a fraction of the output Nyquist frequency.
    pub cutoff_fraction: f64,
    /// Filter half-length in output samples.
    pub half_len_out: f64,
}

impl Default for ResampleFilter {
    fn default() -> Self {
        Self {
            cutoff_fraction: 0.9,
            half_len_out: 8.0,
        }
    }
}

impl ResampleFilter {
    /// Half-length of the filter in input samples for an input/output rate ratio.
    pub fn half_len_in(&self, ratio: f64) -> f64 {
        (self.half_len_out * ratio).ceil()
    }

    pub fn cutoff_in(&self, ratio: f64) -> f64 {
        self.cutoff_fraction * 0.5 / ratio
    }
}

/// Low-pass filter and resample each run to one sample every `tr` seconds.
///
/// Each run of `T` input samples yields `floor(T * f_out / f_in)` outputs;
/// output `j` is the filtered signal evaluated at input position `j * fs * tr`.
/// Near the run edges the taps are renormalized over the available samples,
/// so constant series stay constant everywhere.
pub fn resample_to_tr(tensor: &SpectralFeatureTensor, tr: f64) -> Result<SpectralFeatureTensor> {
    resample_with_filter(tensor, tr, &ResampleFilter::default())
}

pub fn resample_with_filter(
    tensor: &SpectralFeatureTensor,
    tr: f64,
    filter: &ResampleFilter,
) -> Result<SpectralFeatureTensor> {
    let fs = tensor.sample_rate;
    if !(tr.is_finite() && tr > 1.0 / fs) {
        return Err(Error::InvalidInput(format!(
            "TR {tr} s must exceed the input sample period {} s",
            1.0 / fs
        )));
    }
    let ratio = fs * tr;
    let half = filter.half_len_in(ratio);
    let cutoff = filter.cutoff_in(ratio);
    let (_, c, f) = tensor.data.dim();

    let mut blocks = Vec::new();
    let mut boundaries = Vec::new();
    let mut total = 0usize;
    for run in tensor.runs() {
        let t_in = run.len();
        let t_out = ((t_in as f64) / ratio + 1e-9).floor() as usize;
        if t_out == 0 {
            return Err(Error::InvalidInput(format!(
                "run of {t_in} samples is shorter than one TR"
            )));
        }
        let src = tensor.data.slice(s![run.clone(), .., ..]);
        let src = src.to_shape((t_in, c * f)).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut dst = Array2::<f64>::zeros((t_out, c * f));
        for j in 0..t_out {
            let pos = j as f64 * ratio;
            let lo = ((pos - half).ceil().max(0.0)) as usize;
            let hi = ((pos + half).floor() as usize).min(t_in - 1);
            let taps: Vec<f64> = (lo..=hi).map(|k| lowpass_tap(k as f64 - pos, cutoff, half)).collect();
            let norm: f64 = taps.iter().sum();
            let mut row = dst.row_mut(j);
            for (k, w) in (lo..=hi).zip(&taps) {
                row.scaled_add(*w / norm, &src.row(k));
            }
        }
        boundaries.push(total);
        total += t_out;
        blocks.push(dst);
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let stacked = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let data = stacked
        .into_shape_with_order((total, c, f))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    SpectralFeatureTensor::new(
        data,
        1.0 / tr,
        tensor.channel_labels.clone(),
        tensor.freqs.clone(),
        boundaries,
    )
}

/// Z-score every (channel, frequency) series within each run using the
/// population standard deviation. Zero-variance series become all zeros.
pub fn standardize_runs(tensor: &SpectralFeatureTensor) -> Result<SpectralFeatureTensor> {
    let mut out = tensor.data.clone();
    for run in tensor.runs() {
        if run.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "run starting at sample {} has fewer than 2 samples",
                run.start
            )));
        }
        let mut block = out.slice_mut(s![run, .., ..]);
        for lane in block.lanes_mut(Axis(0)) {
            standardize_lane(lane);
        }
    }
    Ok(tensor.with_data(out))
}

fn standardize_lane(mut lane: ndarray::ArrayViewMut1<f64>) {
    let n = lane.len() as f64;
    let mean = lane.sum() / n;
    let var = lane.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= 1e-12 * mean.abs().max(1.0) {
        lane.fill(0.0);
    } else {
        lane.mapv_inplace(|v| (v - mean) / sd);
    }
}

/// Which design column holds a given regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub channel: usize,
    pub freq: usize,
    pub lag: usize,
}

/// Flattened distributed-lag design: one column per (channel, frequency, lag),
/// ordered lexicographically, with the first `n_lags - 1` samples dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedDesign {
    pub matrix: Array2<f64>,
    pub n_lags: usize,
    pub n_channels: usize,
    pub n_freqs: usize,
    /// Channel group of every column.
    pub group_index: Vec<usize>,
    pub column_meta: Vec<ColumnMeta>,
}

impl LaggedDesign {
    /// Build the lagged design from a `[T, C, F]` array.
    pub fn from_array(data: ArrayView3<f64>, n_lags: usize) -> Result<Self> {
        let (t, c, f) = data.dim();
        if n_lags == 0 {
            return Err(Error::InvalidInput("lag count must be at least 1".into()));
        }
        if n_lags >= t {
            return Err(Error::InvalidInput(format!(
                "lag count {n_lags} must be smaller than the series length {t}"
            )));
        }
        let rows = t - n_lags + 1;
        let cols = c * f * n_lags;
        let mut matrix = Array2::<f64>::zeros((rows, cols));
        for (r, mut row) in matrix.rows_mut().into_iter().enumerate() {
            let t_now = r + n_lags - 1;
            let mut col = 0;
            for ch in 0..c {
                for fr in 0..f {
                    for lag in 0..n_lags {
                        row[col] = data[[t_now - lag, ch, fr]];
                        col += 1;
                    }
                }
            }
        }
        let mut column_meta = Vec::with_capacity(cols);
        for channel in 0..c {
            for freq in 0..f {
                for lag in 0..n_lags {
                    column_meta.push(ColumnMeta { channel, freq, lag });
                }
            }
        }
        let group_index = column_meta.iter().map(|m| m.channel).collect();
        Ok(Self {
            matrix,
            n_lags,
            n_channels: c,
            n_freqs: f,
            group_index,
            column_meta,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_groups(&self) -> usize {
        self.n_channels
    }

    pub fn column_index(&self, channel: usize, freq: usize, lag: usize) -> usize {
        (channel * self.n_freqs + freq) * self.n_lags + lag
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> LaggedDesign {
        LaggedDesign {
            matrix: self.matrix.select(Axis(0), rows),
            n_lags: self.n_lags,
            n_channels: self.n_channels,
            n_freqs: self.n_freqs,
            group_index: self.group_index.clone(),
            column_meta: self.column_meta.clone(),
        }
    }

    /// Stack designs with identical column layout row-wise.
    pub fn concat(parts: &[&LaggedDesign]) -> Result<LaggedDesign> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("nothing to concatenate".into()))?;
        if parts.iter().any(|p| p.column_meta != first.column_meta) {
            return Err(Error::ShapeMismatch("designs have different column layouts".into()));
        }
        let views: Vec<_> = parts.iter().map(|p| p.matrix.view()).collect();
        let matrix = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Ok(LaggedDesign {
            matrix,
            ..(*first).clone()
        })
    }

    /// Reshape a coefficient vector into `[C, F, M]`.
    pub fn coeff_tensor(&self, coeffs: &[f64]) -> Result<Array3<f64>> {
        if coeffs.len() != self.n_cols() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {} columns",
                coeffs.len(),
                self.n_cols()
            )));
        }
        Array3::from_shape_vec((self.n_channels, self.n_freqs, self.n_lags), coeffs.to_vec())
            .map_err(|e| Error::ShapeMismatch(e.to_string()))
    }
}

/// Lag-stack a standardized feature tensor. Rows `0..n_lags-1` of the series
/// are dropped; trim the target with [`align_target`].
pub fn build_lagged_design(tensor: &SpectralFeatureTensor, n_lags: usize) -> Result<LaggedDesign> {
    LaggedDesign::from_array(tensor.data.view(), n_lags)
}

/// Drop the leading samples of a target series so it lines up with the rows
/// of a design built with `n_lags` lags.
pub fn align_target(y: &[f64], n_lags: usize) -> Result<&[f64]> {
    if n_lags == 0 || n_lags > y.len() {
        return Err(Error::InvalidInput(format!(
            "cannot align a series of {} samples to {n_lags} lags",
            y.len()
        )));
    }
    Ok(&y[n_lags - 1..])
}

/// Mean of the `[T, C, F]` features over a channel subset and a frequency
/// band, per sample.
pub fn band_mean(tensor: &SpectralFeatureTensor, channels: &[usize], band: (f64, f64)) -> Array1<f64> {
    let bins: Vec<usize> = tensor
        .freqs
        .iter()
        .enumerate()
        .filter(|(_, f)| **f >= band.0 && **f <= band.1)
        .map(|(i, _)| i)
        .collect();
    let count = (bins.len() * channels.len()).max(1) as f64;
    Array1::from_iter(tensor.data.outer_iter().map(|slab| {
        channels
            .iter()
            .flat_map(|&c| bins.iter().map(move |&f| slab[[c, f]]))
            .sum::<f64>()
            / count
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array;

    fn tensor_from(data: Array3<f64>, fs: f64, runs: Vec<usize>) -> SpectralFeatureTensor {
        let (_, c, f) = data.dim();
        SpectralFeatureTensor::new(
            data,
            fs,
            (0..c).map(|i| format!("E{i}")).collect(),
            (1..=f).map(|v| v as f64).collect(),
            runs,
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_finite_signal() {
        let mut sig = Array2::<f64>::zeros((100, 1));
        sig[[10, 0]] = f64::NAN;
        let err = morlet_relative_power(sig.view(), 100.0, &[5.0], &MorletParams::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn rejects_low_sampling_rate() {
        let sig = Array2::<f64>::zeros((100, 1));
        let err = morlet_relative_power(sig.view(), 60.0, &[10.0, 40.0], &MorletParams::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn single_tone_concentrates_at_its_bin() {
        let fs = 200.0;
        let n = 4000;
        let sig = Array2::from_shape_fn((n, 1), |(t, _)| (2.0 * std::f64::consts::PI * 10.0 * t as f64 / fs).sin());
        let freqs: Vec<f64> = (1..=40).map(|f| f as f64).collect();
        let p = MorletParams::default();
        let out = morlet_relative_power(sig.view(), fs, &freqs, &p).unwrap();
        let edge = p.kernel(1.0, fs).0;
        for t in edge..n - edge {
            let lane = out.data.slice(s![t, 0, ..]);
            let argmax = lane
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(freqs[argmax], 10.0, "sample {t}");
        }
        for lane in out.data.lanes(Axis(2)) {
            assert_abs_diff_eq!(lane.sum(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn trial_removal_single_trial_zeroes_window() {
        let data = Array::from_shape_fn((40, 1, 2), |(t, _, f)| (t * 3 + f) as f64 * 0.1);
        let tensor = tensor_from(data, 1.0, vec![0]);
        let paradigm = TrialParadigm {
            onsets: vec![
                Trial { time: 10.0, side: Side::Left },
                Trial { time: 25.0, side: Side::Right },
            ],
            window: (2.0, 3.0),
        };
        let out = remove_trial_average(&tensor, &paradigm).unwrap();
        for t in 8..13 {
            assert_eq!(out.data[[t, 0, 0]], 0.0);
        }
        for t in 23..28 {
            assert_eq!(out.data[[t, 0, 1]], 0.0);
        }
        assert_eq!(out.data[[5, 0, 0]], tensor.data[[5, 0, 0]]);
        assert_eq!(out.data[[30, 0, 1]], tensor.data[[30, 0, 1]]);
    }

    #[test]
    fn trial_removal_three_constant_trials() {
        // Three left trials with window constants 1, 2, 6: mean 3, residuals -2, -1, 3.
        let mut data = Array3::<f64>::zeros((60, 1, 1));
        for (start, v) in [(5usize, 1.0), (20, 2.0), (40, 6.0)] {
            data.slice_mut(s![start..start + 4, .., ..]).fill(v);
        }
        let tensor = tensor_from(data, 1.0, vec![0]);
        let paradigm = TrialParadigm {
            onsets: [7.0, 22.0, 42.0]
                .iter()
                .map(|&time| Trial { time, side: Side::Left })
                .collect(),
            window: (2.0, 2.0),
        };
        let out = remove_trial_average(&tensor, &paradigm).unwrap();
        for (start, v) in [(5usize, -2.0), (20, -1.0), (40, 3.0)] {
            for t in start..start + 4 {
                assert_abs_diff_eq!(out.data[[t, 0, 0]], v, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn trial_window_crossing_run_is_rejected() {
        let tensor = tensor_from(Array3::zeros((40, 1, 1)), 1.0, vec![0, 20]);
        let paradigm = TrialParadigm {
            onsets: vec![Trial { time: 19.0, side: Side::Left }],
            window: (2.0, 3.0),
        };
        assert!(remove_trial_average(&tensor, &paradigm).is_err());
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let tensor = tensor_from(Array3::zeros((40, 1, 1)), 1.0, vec![0]);
        let paradigm = TrialParadigm {
            onsets: vec![
                Trial { time: 10.0, side: Side::Left },
                Trial { time: 12.0, side: Side::Right },
            ],
            window: (2.0, 3.0),
        };
        assert!(remove_trial_average(&tensor, &paradigm).is_err());
    }

    #[test]
    fn resample_preserves_constants() {
        let tensor = tensor_from(Array3::from_elem((1000, 2, 3), 0.7), 100.0, vec![0]);
        let out = resample_to_tr(&tensor, 0.5).unwrap();
        assert_eq!(out.n_samples(), 20);
        assert_eq!(out.sample_rate, 2.0);
        for v in out.data.iter() {
            assert_abs_diff_eq!(*v, 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_is_run_local() {
        let tensor = tensor_from(Array3::from_elem((1050, 1, 1), 1.0), 100.0, vec![0, 500]);
        let out = resample_to_tr(&tensor, 0.5).unwrap();
        assert_eq!(out.run_boundaries, vec![0, 10]);
        assert_eq!(out.n_samples(), 10 + 11);
    }

    #[test]
    fn resample_rejects_short_tr() {
        let tensor = tensor_from(Array3::zeros((100, 1, 1)), 10.0, vec![0]);
        assert!(resample_to_tr(&tensor, 0.05).is_err());
    }

    #[test]
    fn standardize_matches_population_formula() {
        let data = Array3::from_shape_vec((3, 1, 1), vec![1.0, 2.0, 3.0]).unwrap();
        let out = standardize_runs(&tensor_from(data, 1.0, vec![0])).unwrap();
        let z = 1.5f64.sqrt();
        assert_abs_diff_eq!(out.data[[0, 0, 0]], -z, epsilon = 1e-12);
        assert_abs_diff_eq!(out.data[[1, 0, 0]], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.data[[2, 0, 0]], z, epsilon = 1e-12);
        assert_abs_diff_eq!(out.data[[2, 0, 0]], 1.2247, epsilon = 1e-4);
    }

    #[test]
    fn standardize_constant_run_is_zero() {
        let out = standardize_runs(&tensor_from(Array3::from_elem((5, 1, 2), 0.3), 1.0, vec![0])).unwrap();
        assert!(out.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_rejects_single_sample_run() {
        let tensor = tensor_from(Array3::zeros((5, 1, 1)), 1.0, vec![0, 4]);
        assert!(standardize_runs(&tensor).is_err());
    }

    #[test]
    fn lagged_design_small_example() {
        let data = Array3::from_shape_vec((5, 1, 1), vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let d = LaggedDesign::from_array(data.view(), 2).unwrap();
        assert_eq!(
            d.matrix,
            ndarray::arr2(&[[2.0, 1.0], [3.0, 2.0], [4.0, 3.0], [5.0, 4.0]])
        );
        assert_eq!(d.group_index, vec![0, 0]);
    }

    #[test]
    fn lagged_design_identity_lag() {
        let data = Array::from_shape_fn((6, 2, 3), |(t, c, f)| (t * 100 + c * 10 + f) as f64);
        let d = LaggedDesign::from_array(data.view(), 1).unwrap();
        let flat = data.to_shape((6, 6)).unwrap();
        assert_eq!(d.matrix, flat);
    }

    #[test]
    fn lagged_design_rejects_too_many_lags() {
        let data = Array3::<f64>::zeros((4, 1, 1));
        assert!(LaggedDesign::from_array(data.view(), 4).is_err());
        assert!(LaggedDesign::from_array(data.view(), 0).is_err());
    }

    #[test]
    fn align_target_drops_leading_samples() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(align_target(&y, 3).unwrap(), &[3.0, 4.0]);
    }
}
