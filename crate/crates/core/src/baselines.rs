//! Reference predictors (sensorimotor rhythm, massive univariate correlation)
//! and group-level coefficient maps.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::cv::{score, PreparedSplit, TestScore, TrainTest, TrainTestOutcome};
use crate::error::{Error, Result};
use crate::features::{band_mean, ColumnMeta, LaggedDesign, SpectralFeatureTensor};
use crate::stats;

pub const SMR_CHANNELS: [&str; 2] = ["C3", "C4"];
pub const SMR_BAND: (f64, f64) = (8.0, 30.0);
/// Hemodynamic delay applied to the SMR predictor, in seconds.
pub const SMR_DELAY_S: f64 = 6.3;

/// Number of samples the SMR predictor is delayed by.
pub fn smr_shift(tr: f64) -> Result<usize> {
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::InvalidInput(format!("tr {tr} must be positive")));
    }
    Ok((SMR_DELAY_S / tr).round() as usize)
}

/// Mean C3/C4 relative power over 8–30 Hz, delayed by `round(6.3 / tr)`
/// samples. The first samples of each run repeat the run's first value.
///
/// The output is raw power. Under event-related desynchronization it is
/// negatively correlated with activation, so compare it by `|r|` as well as
/// by signed `r`.
pub fn smr_predict(tensor: &SpectralFeatureTensor, tr: f64) -> Result<Vec<f64>> {
    let shift = smr_shift(tr)?;
    let missing: Vec<&str> = SMR_CHANNELS
        .iter()
        .copied()
        .filter(|l| tensor.channel_index(l).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!("missing channels: {}", missing.join(", "))));
    }
    let lo = tensor.freqs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = tensor.freqs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo > SMR_BAND.0 || hi < SMR_BAND.1 {
        return Err(Error::InvalidInput(format!(
            "frequencies {lo}..{hi} Hz do not cover {}..{} Hz",
            SMR_BAND.0, SMR_BAND.1
        )));
    }
    let channels: Vec<usize> = SMR_CHANNELS.iter().filter_map(|l| tensor.channel_index(l)).collect();
    let bm = band_mean(tensor, &channels, SMR_BAND);
    let mut out = vec![0.0; bm.len()];
    for run in tensor.runs() {
        for t in run.clone() {
            let src = if t >= run.start + shift { t - shift } else { run.start };
            out[t] = bm[src];
        }
    }
    Ok(out)
}

/// Score a predictor that needs no training (such as SMR) on the test rows of
/// every parcellation. `session_preds` must already be aligned to the design
/// rows of each session.
pub fn score_fixed_predictor(split: &PreparedSplit, session_preds: [&[f64]; 2]) -> Result<Vec<TestScore>> {
    for (s, (p, y)) in session_preds.iter().zip(&split.session_targets).enumerate() {
        if p.len() != y.len() {
            return Err(Error::ShapeMismatch(format!(
                "session {}: {} predictions for {} targets",
                s + 1,
                p.len(),
                y.len()
            )));
        }
    }
    let all_p: Vec<f64> = session_preds[0].iter().chain(session_preds[1]).copied().collect();
    let all_y: Vec<f64> = split.session_targets.concat();
    split
        .plan
        .parcellations
        .iter()
        .map(|p| {
            let pred: Vec<f64> = p.test.iter().map(|&i| all_p[i]).collect();
            let truth: Vec<f64> = p.test.iter().map(|&i| all_y[i]).collect();
            score(&pred, &truth)
        })
        .collect()
}

/// Per-regressor correlations and the univariate fit on the best one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MucModel {
    /// `[C, F, M]`.
    pub corr: Array3<f64>,
    pub selected: ColumnMeta,
    pub column: usize,
    pub slope: f64,
    pub intercept: f64,
}

/// Correlate every design column with `y` and keep the one with the largest
/// `|r|` (lowest column index on ties). Constant columns get `r = 0`.
pub fn muc_fit(design: &LaggedDesign, y: &[f64]) -> Result<MucModel> {
    if design.n_rows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "design has {} rows, target has {}",
            design.n_rows(),
            y.len()
        )));
    }
    let mut corr = Vec::with_capacity(design.n_cols());
    let mut best = 0;
    for (j, col) in design.matrix.columns().into_iter().enumerate() {
        let x = col.to_vec();
        let r = stats::pearson(&x, y)?.r;
        if r.abs() > corr.get(best).map_or(-1.0, |b: &f64| b.abs()) {
            best = j;
        }
        corr.push(r);
    }
    let x = design.matrix.column(best);
    let n = y.len() as f64;
    let mx = x.sum() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 && corr[best] != 0.0 { sxy / sxx } else { 0.0 };
    Ok(MucModel {
        corr: design.coeff_tensor(&corr)?,
        selected: design.column_meta[best],
        column: best,
        slope,
        intercept: my - slope * mx,
    })
}

pub fn muc_predict(model: &MucModel, design: &LaggedDesign) -> Result<Vec<f64>> {
    if model.column >= design.n_cols() || design.column_meta[model.column] != model.selected {
        return Err(Error::ShapeMismatch("design layout differs from the fitted one".into()));
    }
    Ok(design
        .matrix
        .column(model.column)
        .iter()
        .map(|v| model.intercept + model.slope * v)
        .collect())
}

/// MUC as a train/test procedure.
#[derive(Debug, Clone, Copy, Default)]
pub struct Muc;

impl TrainTest for Muc {
    fn train_and_test(
        &self,
        train_x: &LaggedDesign,
        train_y: &[f64],
        test_x: &LaggedDesign,
        test_y: &[f64],
    ) -> Result<TrainTestOutcome> {
        let model = muc_fit(train_x, train_y)?;
        let prediction = muc_predict(&model, test_x)?;
        Ok(TrainTestOutcome {
            score: score(&prediction, test_y)?,
            prediction,
            model: None,
            trace: None,
        })
    }
}

/// Signed value of the largest magnitude; the first one wins ties.
pub fn signed_max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut best = 0.0f64;
    let mut first = true;
    for v in values {
        if first || v.abs() > best.abs() {
            best = v;
            first = false;
        }
    }
    best
}

/// A 4-connected set of supra-threshold cells of one sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub positive: bool,
    /// `(row, col)` cells in row-major order.
    pub cells: Vec<(usize, usize)>,
}

/// t-statistics over a 2-D view; `None` marks cells with zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TView {
    pub row_axis: String,
    pub col_axis: String,
    pub t: Array2<Option<f64>>,
    /// Mean over units of the aggregated values.
    pub mean: Array2<f64>,
    pub clusters: Vec<Cluster>,
}

impl TView {
    /// Cell with the largest `|t|`, lowest index on ties.
    pub fn argmax_abs(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for ((i, j), v) in self.t.indexed_iter() {
            if let Some(v) = v {
                if best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some(((i, j), v.abs()));
                }
            }
        }
        best.map(|(ix, _)| ix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TMap {
    /// Rows are frequencies, columns channels.
    pub freq_channel: TView,
    /// Rows are frequencies, columns lags.
    pub freq_lag: TView,
    /// Per frequency, the mean of `freq_channel` t over unmasked channels.
    pub channel_mean_curve: Vec<Option<f64>>,
    pub n_units: usize,
    pub alpha: f64,
    pub t_critical: f64,
}

fn clusters(t: &Array2<Option<f64>>, crit: f64) -> Vec<Cluster> {
    let (rows, cols) = t.dim();
    let mut seen = Array2::from_elem((rows, cols), false);
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let Some(v) = t[[i, j]] else { continue };
            if seen[[i, j]] || v.abs() <= crit {
                continue;
            }
            let positive = v > 0.0;
            let mut cells = Vec::new();
            let mut stack = vec![(i, j)];
            seen[[i, j]] = true;
            while let Some((a, b)) = stack.pop() {
                cells.push((a, b));
                let nbrs = [
                    (a.wrapping_sub(1), b),
                    (a + 1, b),
                    (a, b.wrapping_sub(1)),
                    (a, b + 1),
                ];
                for (x, y) in nbrs {
                    if x >= rows || y >= cols || seen[[x, y]] {
                        continue;
                    }
                    if let Some(w) = t[[x, y]] {
                        if w.abs() > crit && (w > 0.0) == positive {
                            seen[[x, y]] = true;
                            stack.push((x, y));
                        }
                    }
                }
            }
            cells.sort_unstable();
            out.push(Cluster { positive, cells });
        }
    }
    out
}

fn t_view(per_unit: &[Array2<f64>], row_axis: &str, col_axis: &str, crit: f64) -> TView {
    let (rows, cols) = per_unit[0].dim();
    let n = per_unit.len() as f64;
    let mut t = Array2::from_elem((rows, cols), None);
    let mut mean = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let vals: Vec<f64> = per_unit.iter().map(|u| u[[i, j]]).collect();
            t[[i, j]] = stats::one_sample_t(&vals);
            mean[[i, j]] = vals.iter().sum::<f64>() / n;
        }
    }
    let clusters = clusters(&t, crit);
    TView {
        row_axis: row_axis.into(),
        col_axis: col_axis.into(),
        t,
        mean,
        clusters,
    }
}

/// Aggregate `[C, F, M]` coefficient (or correlation) tensors from several
/// units into t-maps.
///
/// Each unit is first collapsed to a frequency × channel view (signed max-abs
/// over lags) and a frequency × lag view (signed max-abs over channels). A
/// one-sample t-test against zero is run per cell across units, and clusters
/// are the 4-connected regions where `|t|` exceeds the two-sided critical
/// value at `alpha`.
pub fn aggregate_coeff_maps(units: &[Array3<f64>], alpha: f64) -> Result<TMap> {
    if units.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 units, got {}", units.len())));
    }
    let shape = units[0].dim();
    if let Some(bad) = units.iter().position(|u| u.dim() != shape) {
        return Err(Error::ShapeMismatch(format!(
            "unit {bad} has shape {:?}, expected {shape:?}",
            units[bad].dim()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} must lie in (0, 1)")));
    }
    let (c, f, m) = shape;
    let fc: Vec<Array2<f64>> = units
        .iter()
        .map(|u| Array2::from_shape_fn((f, c), |(fi, ci)| signed_max_abs((0..m).map(|l| u[[ci, fi, l]]))))
        .collect();
    let fl: Vec<Array2<f64>> = units
        .iter()
        .map(|u| Array2::from_shape_fn((f, m), |(fi, l)| signed_max_abs((0..c).map(|ci| u[[ci, fi, l]]))))
        .collect();
    let crit = stats::t_critical((units.len() - 1) as f64, alpha)?;
    let freq_channel = t_view(&fc, "frequency", "channel", crit);
    let freq_lag = t_view(&fl, "frequency", "lag", crit);
    let channel_mean_curve = freq_channel
        .t
        .rows()
        .into_iter()
        .map(|row| {
            let vals: Vec<f64> = row.iter().flatten().copied().collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    Ok(TMap {
        freq_channel,
        freq_lag,
        channel_mean_curve,
        n_units: units.len(),
        alpha,
        t_critical: crit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    fn two_channel(values_c3: f64, values_c4: f64) -> SpectralFeatureTensor {
        let t = 10;
        let freqs: Vec<f64> = vec![4.0, 10.0, 20.0, 30.0, 40.0];
        let data = Array::from_shape_fn((t, 2, 5), |(ti, c, f)| {
            let base = if c == 0 { values_c3 } else { values_c4 };
            base + ti as f64 + 0.1 * f as f64
        });
        SpectralFeatureTensor::new(data, 1.0 / 1.26, vec!["C3".into(), "C4".into()], freqs, vec![0]).unwrap()
    }

    #[test]
    fn shift_at_standard_tr() {
        assert_eq!(smr_shift(1.26).unwrap(), 5);
    }

    #[test]
    fn smr_constant_input() {
        let data = Array3::from_elem((12, 2, 5), 0.3);
        let t = SpectralFeatureTensor::new(
            data,
            0.8,
            vec!["C4".into(), "C3".into()],
            vec![4.0, 10.0, 20.0, 30.0, 40.0],
            vec![0, 6],
        )
        .unwrap();
        assert!(smr_predict(&t, 1.26).unwrap().iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn smr_hand_arithmetic() {
        let t = two_channel(1.0, 3.0);
        let out = smr_predict(&t, 1.26).unwrap();
        // band bins 10, 20, 30 Hz -> offsets 0.1, 0.2, 0.3; channel mean 2.0
        let bm = |ti: usize| 2.0 + ti as f64 + 0.2;
        for (i, v) in out.iter().enumerate() {
            let src = i.saturating_sub(5);
            assert!((v - bm(src)).abs() < 1e-12, "{i}: {v}");
        }
    }

    #[test]
    fn smr_missing_channel_named() {
        let t = two_channel(0.0, 0.0).with_channel_labels(vec!["C3".into(), "Cz".into()]).unwrap();
        let msg = smr_predict(&t, 1.26).unwrap_err().to_string();
        assert!(msg.contains("C4") && !msg.contains("C3"), "{msg}");
    }

    fn design(cols: Vec<Vec<f64>>) -> LaggedDesign {
        let t = cols[0].len();
        let data = Array3::from_shape_fn((t, cols.len(), 1), |(ti, c, _)| cols[c][ti]);
        LaggedDesign::from_array(data.view(), 1).unwrap()
    }

    #[test]
    fn muc_selects_exact_column() {
        let a = vec![1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let b = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let d = design(vec![a.clone(), b.clone(), vec![2.0; 6]]);
        let m = muc_fit(&d, &b).unwrap();
        assert_eq!(m.column, 1);
        assert!((m.corr[[1, 0, 0]] - 1.0).abs() < 1e-12);
        assert_eq!(m.corr[[2, 0, 0]], 0.0);
        let pred = muc_predict(&m, &d).unwrap();
        for (p, t) in pred.iter().zip(&b) {
            assert!((p - t).abs() < 1e-12);
        }
    }

    #[test]
    fn muc_tie_goes_to_lowest_index() {
        let a = vec![1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let y = vec![0.5, 3.0, 2.5, 6.0, 6.5, 6.0];
        let d = design(vec![vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0], a.clone(), a]);
        assert_eq!(muc_fit(&d, &y).unwrap().column, 1);
    }

    #[test]
    fn max_abs_keeps_sign() {
        assert_eq!(signed_max_abs([0.5, -2.0, 1.0]), -2.0);
        assert_eq!(signed_max_abs([2.0, -2.0]), 2.0);
    }

    #[test]
    fn constant_units_are_masked() {
        let units = vec![Array3::from_elem((2, 3, 2), 0.7); 4];
        let map = aggregate_coeff_maps(&units, 0.05).unwrap();
        assert!(map.freq_channel.t.iter().all(|v| v.is_none()));
        assert!(map.freq_lag.t.iter().all(|v| v.is_none()));
        assert!(map.channel_mean_curve.iter().all(|v| v.is_none()));
        assert!(map.freq_channel.argmax_abs().is_none());
    }

    #[test]
    fn symmetric_signs_cancel() {
        let units: Vec<Array3<f64>> = (0..6)
            .map(|i| {
                let mut u = Array3::zeros((2, 2, 2));
                u[[0, 0, 0]] = if i % 2 == 0 { 1.0 } else { -1.0 };
                u[[1, 1, 1]] = 0.1 * i as f64;
                u
            })
            .collect();
        let map = aggregate_coeff_maps(&units, 0.05).unwrap();
        assert!(map.freq_channel.t[[0, 0]].unwrap().abs() < 1e-12);
    }

    #[test]
    fn clusters_are_connected_by_sign() {
        let t = Array2::from_shape_vec(
            (3, 3),
            vec![Some(5.0), Some(6.0), Some(-5.0), None, Some(0.1), Some(-7.0), Some(4.0), None, Some(1.0)],
        )
        .unwrap();
        let cl = clusters(&t, 3.0);
        assert_eq!(cl.len(), 3);
        assert_eq!(cl[0], Cluster { positive: true, cells: vec![(0, 0), (0, 1)] });
        assert_eq!(cl[1], Cluster { positive: false, cells: vec![(0, 2), (1, 2)] });
        assert_eq!(cl[2].cells, vec![(2, 0)]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let units = vec![Array3::zeros((2, 2, 2)), Array3::zeros((2, 2, 3))];
        assert!(matches!(aggregate_coeff_maps(&units, 0.05), Err(Error::ShapeMismatch(_))));
    }
}
