//! Run configuration, read from a TOML file.
//!
//! ```toml
//! seed = 0
//! scheme = "inter"            # inter | intra
//! n_lags = 5
//!
//! [[subjects]]
//! name = "S1"
//! features = ["session1.lgst", "session2.lgst"]
//! targets = ["session1_target.csv", "session2_target.csv"]
//!
//! [solver]                    # all optional
//! max_iter = 5000
//! tol = 1e-6
//! rel_obj_tol = 1e-10
//!
//! [search]                    # all optional
//! budget = 40
//! n_init = 8
//! kappa = 0.1
//! n_candidates = 512
//! folds = 3
//! lambda_floor_ratio = 1e-4
//! # lambda = 0.1              # fixing both skips the search
//! # alpha = 0.5
//!
//! [nulltest]                  # all optional
//! surrogates = 100
//! iaaft_max_iter = 200
//! iaaft_tol = 1e-4
//! adf_max_lag = 12
//! adf_threshold = 1e-5
//!
//! [baseline]
//! fdr_q = 0.05
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.
//! Unknown keys are errors.

use std::path::{Path, PathBuf};

use lagsynth::adf::AdfOptions;
use lagsynth::bayes_opt::BoOptions;
use lagsynth::cv::{NestedOptions, Scheme};
use lagsynth::sgl::{HyperParams, SolverOptions};
use lagsynth::surrogates::{IaaftOptions, NullOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    pub n_lags: usize,
    pub subjects: Vec<SubjectConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub nulltest: NullConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
}

fn default_scheme() -> String {
    "inter".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectConfig {
    pub name: String,
    pub features: [PathBuf; 2],
    pub targets: [PathBuf; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub rel_obj_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            max_iter: d.max_iter,
            tol: d.tol,
            rel_obj_tol: d.rel_obj_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub budget: usize,
    pub n_init: usize,
    pub kappa: f64,
    pub n_candidates: usize,
    pub folds: usize,
    pub lambda_floor_ratio: f64,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let bo = BoOptions::default();
        let n = NestedOptions::default();
        Self {
            budget: bo.budget,
            n_init: bo.n_init,
            kappa: bo.kappa,
            n_candidates: bo.n_candidates,
            folds: n.folds,
            lambda_floor_ratio: n.lambda_floor_ratio,
            lambda: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NullConfig {
    pub surrogates: usize,
    pub iaaft_max_iter: usize,
    pub iaaft_tol: f64,
    pub adf_max_lag: usize,
    pub adf_threshold: f64,
}

impl Default for NullConfig {
    fn default() -> Self {
        let n = NullOptions::default();
        Self {
            surrogates: n.n_surrogates,
            iaaft_max_iter: n.iaaft.max_iter,
            iaaft_tol: n.iaaft.spectrum_tol,
            adf_max_lag: n.adf.max_lag,
            adf_threshold: n.adf.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub fdr_q: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { fdr_q: 0.05 }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
    pub surrogates: Option<usize>,
}

/// A validated configuration with everything resolved.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    pub seed: u64,
    pub scheme: Scheme,
    pub nested: NestedOptions,
    pub null: NullOptions,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!("config: {}", msg())))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serializable config")
    }
}

impl Settings {
    pub fn load(path: &Path, overrides: Overrides) -> CliResult<Self> {
        let bytes = io::read_bytes(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::usage("config: not valid UTF-8"))?;
        let config = RunConfig::parse(text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::resolve(config, base_dir, io::sha256_hex(&bytes), overrides)
    }

    pub fn resolve(config: RunConfig, base_dir: PathBuf, config_hash: String, o: Overrides) -> CliResult<Self> {
        let scheme = match o.scheme {
            Some(s) => s,
            None => config.scheme.parse().map_err(|e: lagsynth::Error| CliError::usage(format!("config: {e}")))?,
        };
        let seed = o.seed.unwrap_or(config.seed);
        let s = &config.search;
        let sv = &config.solver;
        let nc = &config.nulltest;
        check(config.n_lags >= 1, || "n_lags must be at least 1".into())?;
        check(!config.subjects.is_empty(), || "at least one subject is required".into())?;
        let mut names: Vec<&str> = config.subjects.iter().map(|x| x.name.as_str()).collect();
        names.sort_unstable();
        check(names.windows(2).all(|w| w[0] != w[1]), || "subject names must be unique".into())?;
        check(config.subjects.iter().all(|x| !x.name.is_empty()), || "subject names must be non-empty".into())?;
        check(sv.max_iter >= 1, || "solver.max_iter must be at least 1".into())?;
        check(sv.tol > 0.0 && sv.tol.is_finite(), || "solver.tol must be positive".into())?;
        check(sv.rel_obj_tol >= 0.0 && sv.rel_obj_tol.is_finite(), || "solver.rel_obj_tol must be non-negative".into())?;
        check(s.n_init >= 1 && s.budget >= s.n_init, || {
            format!("search needs 1 <= n_init <= budget, got n_init={} budget={}", s.n_init, s.budget)
        })?;
        check(s.n_candidates >= 1, || "search.n_candidates must be at least 1".into())?;
        check(s.kappa >= 0.0 && s.kappa.is_finite(), || "search.kappa must be non-negative".into())?;
        check(s.folds >= 2, || "search.folds must be at least 2".into())?;
        check(s.lambda_floor_ratio > 0.0 && s.lambda_floor_ratio < 1.0, || {
            "search.lambda_floor_ratio must lie in (0, 1)".into()
        })?;
        let fixed = match (s.lambda, s.alpha) {
            (None, None) => None,
            (Some(lambda), Some(alpha)) => {
                let h = HyperParams { lambda, alpha };
                h.validate().map_err(|e| CliError::usage(format!("config: search: {e}")))?;
                Some(h)
            }
            _ => return Err(CliError::usage("config: search.lambda and search.alpha must be set together")),
        };
        let surrogates = o.surrogates.unwrap_or(nc.surrogates);
        check(surrogates >= 1, || "nulltest.surrogates must be at least 1".into())?;
        check(nc.iaaft_max_iter >= 1, || "nulltest.iaaft_max_iter must be at least 1".into())?;
        check(nc.iaaft_tol > 0.0, || "nulltest.iaaft_tol must be positive".into())?;
        check(nc.adf_threshold > 0.0 && nc.adf_threshold < 1.0, || {
            "nulltest.adf_threshold must lie in (0, 1)".into()
        })?;
        check(config.baseline.fdr_q > 0.0 && config.baseline.fdr_q <= 1.0, || {
            "baseline.fdr_q must lie in (0, 1]".into()
        })?;

        let nested = NestedOptions {
            folds: s.folds,
            bo: BoOptions {
                budget: s.budget,
                n_init: s.n_init,
                kappa: s.kappa,
                seed,
                n_candidates: s.n_candidates,
            },
            solver: SolverOptions {
                max_iter: sv.max_iter,
                tol: sv.tol,
                rel_obj_tol: sv.rel_obj_tol,
                ..SolverOptions::default()
            },
            lambda_floor_ratio: s.lambda_floor_ratio,
            fixed,
        };
        let null = NullOptions {
            n_surrogates: surrogates,
            base_seed: seed,
            iaaft: IaaftOptions {
                max_iter: nc.iaaft_max_iter,
                spectrum_tol: nc.iaaft_tol,
            },
            adf: AdfOptions {
                max_lag: nc.adf_max_lag,
                threshold: nc.adf_threshold,
            },
        };
        Ok(Settings {
            config,
            base_dir,
            config_hash,
            seed,
            scheme,
            nested,
            null,
        })
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Every input file with the path as written in the config.
    pub fn input_files(&self) -> Vec<(String, PathBuf)> {
        let mut out = Vec::new();
        for s in &self.config.subjects {
            for p in s.features.iter().chain(&s.targets) {
                out.push((p.display().to_string(), self.resolve_path(p)));
                if s.features.contains(p) {
                    let side = io::sidecar_path(p);
                    out.push((side.display().to_string(), self.resolve_path(&side)));
                }
            }
        }
        out
    }
}
