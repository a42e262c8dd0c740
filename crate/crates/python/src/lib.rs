//! Python bindings: synthetic scenarios, the sparse group lasso fit, nested
//! cross-validated evaluation, surrogates and the statistics helpers.
//! Arrays cross the boundary as plain (nested) lists.

use lagsynth::cv::{prepare_split, run_split, NestedOptions, NestedSgl, Scheme};
use lagsynth::sgl::{self, HyperParams, SolverOptions};
use lagsynth::{adf, stats, surrogates, synth};
use ndarray::Array2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: lagsynth::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(x: &[Vec<f64>]) -> PyResult<Array2<f64>> {
    let cols = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows of x have different lengths"));
    }
    Ok(Array2::from_shape_fn((x.len(), cols), |(i, j)| x[i][j]))
}

fn parse_scheme(s: &str) -> PyResult<Scheme> {
    match s {
        "inter" => Ok(Scheme::InterSession),
        "intra" => Ok(Scheme::IntraSession),
        _ => Err(PyValueError::new_err(format!("scheme must be 'inter' or 'intra', got '{s}'"))),
    }
}

/// Synthetic scenario parameters.
#[pyclass(name = "Scenario", module = "lagsynth_py", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    spec: synth::SyntheticSpec,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (name, seed=None))]
    fn new(name: &str, seed: Option<u64>) -> PyResult<Self> {
        let spec = synth::scenario(name).map_err(err)?;
        let spec = match seed {
            Some(s) => spec.with_seed(s),
            None => spec,
        };
        Ok(Self { spec })
    }

    #[getter]
    fn name(&self) -> String {
        self.spec.name.clone()
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.spec.seed
    }
    #[getter]
    fn tr(&self) -> f64 {
        self.spec.tr
    }
    #[getter]
    fn n_lags(&self) -> usize {
        self.spec.n_lags
    }
    #[getter]
    fn channel_labels(&self) -> Vec<String> {
        self.spec.channel_labels.clone()
    }
    #[getter]
    fn freqs(&self) -> Vec<f64> {
        self.spec.freqs.clone()
    }
    /// Channels that carry nonzero true coefficients.
    #[getter]
    fn support(&self) -> Vec<usize> {
        self.spec.support()
    }
    /// True coefficients as `[channel][freq][lag]`.
    #[getter]
    fn true_coeffs(&self) -> Vec<Vec<Vec<f64>>> {
        let t = &self.spec.true_coeffs;
        let (c, f, l) = t.dim();
        (0..c).map(|i| (0..f).map(|j| (0..l).map(|k| t[[i, j, k]]).collect()).collect()).collect()
    }

    fn generate(&self) -> PyResult<PyDataset> {
        Ok(PyDataset {
            data: synth::generate(&self.spec).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Scenario('{}', seed={})", self.spec.name, self.spec.seed)
    }
}

/// Two generated sessions.
#[pyclass(name = "Dataset", module = "lagsynth_py")]
struct PyDataset {
    data: synth::SyntheticDataset,
}

#[pymethods]
impl PyDataset {
    fn target(&self, session: usize) -> PyResult<Vec<f64>> {
        Ok(self.session(session)?.target.clone())
    }

    /// Features as `[time][channel][freq]`.
    fn features(&self, session: usize) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let d = &self.session(session)?.features.data;
        let (t, c, f) = d.dim();
        Ok((0..t).map(|i| (0..c).map(|j| (0..f).map(|k| d[[i, j, k]]).collect()).collect()).collect())
    }

    /// Nested cross-validated fit and test scores for every parcellation.
    #[pyo3(signature = (scheme="inter", budget=40, seed=0))]
    fn evaluate<'py>(&self, py: Python<'py>, scheme: &str, budget: usize, seed: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let scheme = parse_scheme(scheme)?;
        let mut opts = NestedOptions::default();
        opts.bo.budget = budget;
        opts.bo.seed = seed;
        let sessions = self.data.session_data().map_err(err)?;
        let outcomes = py
            .detach(|| {
                let split = prepare_split([&sessions[0], &sessions[1]], scheme)?;
                run_split(&split, &NestedSgl { opts })
            })
            .map_err(err)?;
        outcomes
            .into_iter()
            .map(|o| {
                let d = PyDict::new(py);
                d.set_item("r", o.score.r)?;
                d.set_item("mse", o.score.mse)?;
                d.set_item("degenerate", o.score.degenerate)?;
                if let Some(m) = &o.model {
                    d.set_item("lambda", m.hyper.lambda)?;
                    d.set_item("alpha", m.hyper.alpha)?;
                    d.set_item("n_nonzero", m.n_nonzero())?;
                }
                d.set_item("prediction", o.prediction)?;
                Ok(d)
            })
            .collect()
    }
}

impl PyDataset {
    fn session(&self, i: usize) -> PyResult<&synth::SyntheticSession> {
        self.data
            .sessions
            .get(i)
            .ok_or_else(|| PyValueError::new_err(format!("session must be 0 or 1, got {i}")))
    }
}

/// Fitted sparse group lasso.
#[pyclass(name = "SglModel", module = "lagsynth_py")]
struct PySglModel {
    model: sgl::SglModel,
}

#[pymethods]
impl PySglModel {
    #[getter]
    fn intercept(&self) -> f64 {
        self.model.intercept
    }
    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.model.coeffs.clone()
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.model.diag.iterations
    }
    #[getter]
    fn converged(&self) -> bool {
        self.model.diag.converged
    }

    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        sgl::predict_matrix(&self.model, matrix(&x)?.view()).map_err(err)
    }
}

/// Fit `min 1/(2n)|y - b0 - Xb|^2 + penalty` for fixed hyperparameters.
#[pyfunction]
#[pyo3(signature = (x, groups, y, lam, alpha, max_iter=None, tol=None))]
fn fit_sgl(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    groups: Vec<usize>,
    y: Vec<f64>,
    lam: f64,
    alpha: f64,
    max_iter: Option<usize>,
    tol: Option<f64>,
) -> PyResult<PySglModel> {
    let x = matrix(&x)?;
    let hyper = HyperParams::new(lam, alpha).map_err(err)?;
    let mut opts = SolverOptions::default();
    if let Some(m) = max_iter {
        opts.max_iter = m;
    }
    if let Some(t) = tol {
        opts.tol = t;
    }
    let model = py.detach(|| sgl::fit_matrix(x.view(), &groups, &y, hyper, &opts, None)).map_err(err)?;
    Ok(PySglModel { model })
}

#[pyfunction]
fn lambda_max(x: Vec<Vec<f64>>, groups: Vec<usize>, y: Vec<f64>, alpha: f64) -> PyResult<f64> {
    sgl::lambda_max_matrix(matrix(&x)?.view(), &groups, &y, alpha).map_err(err)
}

#[pyfunction]
fn sgl_prox(v: Vec<f64>, step: f64, lam: f64, alpha: f64, groups: Vec<usize>) -> PyResult<Vec<f64>> {
    let hyper = HyperParams::new(lam, alpha).map_err(err)?;
    sgl::sgl_prox(&v, step, &hyper, &groups).map_err(err)
}

#[pyfunction]
fn ft_surrogate(y: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
    surrogates::ft_surrogate(&y, seed).map_err(err)
}

/// Returns `(series, spectral_errors)`.
#[pyfunction]
#[pyo3(signature = (y, seed, max_iter=None))]
fn iaaft_surrogate(y: Vec<f64>, seed: u64, max_iter: Option<usize>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let mut opts = surrogates::IaaftOptions::default();
    if let Some(m) = max_iter {
        opts.max_iter = m;
    }
    let r = surrogates::iaaft_surrogate(&y, seed, &opts).map_err(err)?;
    Ok((r.series, r.spectral_errors))
}

#[pyfunction]
fn amplitude_spectrum(y: Vec<f64>) -> Vec<f64> {
    surrogates::amplitude_spectrum(&y)
}

#[pyfunction]
#[pyo3(signature = (y, max_lag=12, threshold=1e-5))]
fn adf_test<'py>(py: Python<'py>, y: Vec<f64>, max_lag: usize, threshold: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = adf::adf_test(&y, &adf::AdfOptions { max_lag, threshold }).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("statistic", r.statistic)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("lags_used", r.lags_used)?;
    d.set_item("n_obs", r.n_obs)?;
    d.set_item("rejected", r.rejected)?;
    Ok(d)
}

#[pyfunction]
fn wilcoxon<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = stats::wilcoxon_signed_rank(&a, &b).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("statistic", r.statistic)?;
    d.set_item("w_plus", r.w_plus)?;
    d.set_item("w_minus", r.w_minus)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("n", r.n)?;
    d.set_item("exact", r.exact)?;
    Ok(d)
}

/// Returns `(reject, adjusted)`.
#[pyfunction]
fn bh_fdr(pvals: Vec<f64>, q: f64) -> PyResult<(Vec<bool>, Vec<f64>)> {
    let r = stats::bh_fdr(&pvals, q).map_err(err)?;
    Ok((r.reject, r.adjusted))
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    Ok(stats::pearson(&x, &y).map_err(err)?.r)
}

#[pyfunction]
#[pyo3(signature = (tr, duration=32.0))]
fn double_gamma_hrf(tr: f64, duration: f64) -> PyResult<Vec<f64>> {
    synth::double_gamma_hrf(tr, duration).map_err(err)
}

#[pymodule]
fn lagsynth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PySglModel>()?;
    m.add_function(wrap_pyfunction!(fit_sgl, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_max, m)?)?;
    m.add_function(wrap_pyfunction!(sgl_prox, m)?)?;
    m.add_function(wrap_pyfunction!(ft_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(iaaft_surrogate, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(adf_test, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(bh_fdr, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(double_gamma_hrf, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
