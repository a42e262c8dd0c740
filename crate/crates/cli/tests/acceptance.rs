//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. `ACCEPTANCE_ONLY=4,9` runs a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use lagsynth::bayes_opt::BoOptions;
use lagsynth::cv::{prepare_split, NestedOptions, Scheme};
use lagsynth::sgl::{fit_matrix, lambda_max_matrix, sgl_prox, HyperParams, SolverOptions};
use lagsynth::stats::{bh_fdr, midranks, pearson, wilcoxon_signed_rank};
use lagsynth::surrogates::{amplitude_spectrum, ft_surrogate, iaaft_surrogate, null_distribution, IaaftOptions, NullOptions};
use lagsynth::synth::{double_gamma_hrf, generate, scenario};
use lagsynth_cli::pipeline::{baseline_split, compare_methods, fit_split, BaselineScores, Subject, SubjectFit};
use lagsynth_cli::report::PredictionReport;
use lagsynth_oracles as oracle;
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and thresholds.
const OLS_TOL: f64 = 1e-6;
const LASSO_OBJ_TOL: f64 = 1e-5;
const SOLVER_SECONDS: f64 = 5.0;
const PROX_GRID_STEP: f64 = 1e-3;
const PROX_SUBGRAD_TOL: f64 = 1e-6;
const FT_MAGNITUDE_TOL: f64 = 1e-9;
const SURROGATE_CASES: usize = 1000;
const SURROGATE_SECONDS: f64 = 30.0;
const NULL_REPLICATES: usize = 50;
const NULL_SURROGATES: usize = 50;
const NULL_ALPHA: f64 = 0.05;
const NULL_FPR_BAND: (f64, f64) = (0.01, 0.13);
const NULL_BO_BUDGET: usize = 20;
const NULL_MAX_SEEDS: u64 = 200;
const NULL_SECONDS: f64 = 1800.0;
const S1_SEEDS: usize = 10;
const S1_MIN_R: f64 = 0.7;
const S1_MIN_SUPPORT_MASS: f64 = 0.8;
const S3_SEEDS: usize = 20;
const S3_MIN_GAP: f64 = 0.1;
const TEST_ALPHA: f64 = 0.05;
const COHORT_SIZE: usize = 15;
const FDR_Q: f64 = 0.05;
const WILCOXON_TOL: f64 = 1e-12;
const BH_CASES: usize = 1000;
const PEARSON_TOL: f64 = 1e-12;
const S2_UNITS: usize = 10;
const HRF_TRS: [f64; 3] = [0.5, 1.26, 2.0];
const HRF_PEAK_S: f64 = 6.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

fn to_array(x: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((x.len(), x[0].len()), |(i, j)| x[i][j])
}

fn regression(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| normal(&mut rng)).collect()).collect();
    let beta: Vec<f64> = (0..p).map(|j| if j % 3 == 0 { 1.2 } else { -0.3 }).collect();
    let y = x
        .iter()
        .map(|r| 0.5 + r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + 0.4 * normal(&mut rng))
        .collect();
    (x, y)
}

fn solver_correctness() -> Outcome {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let (x, y) = regression(50, 5, 1);
    let groups = [0, 0, 1, 1, 2];
    let m = fit_matrix(to_array(&x).view(), &groups, &y, HyperParams { lambda: 0.0, alpha: 0.5 }, &opts, None).unwrap();
    let (b0, b) = oracle::ols_normal_equations(&x, &y);
    let ols_err = m.coeffs.iter().zip(&b).map(|(g, w)| (g - w).abs()).fold((m.intercept - b0).abs(), f64::max);

    let (x, y) = regression(20, 8, 2);
    let groups: Vec<usize> = (0..8).map(|j| j / 2).collect();
    let xa = to_array(&x);
    let lmax1 = lambda_max_matrix(xa.view(), &groups, &y, 1.0).unwrap();
    let mut obj_gap = 0.0f64;
    for frac in [0.5, 0.2, 0.05, 0.01] {
        let lambda = frac * lmax1;
        let m = fit_matrix(xa.view(), &groups, &y, HyperParams { lambda, alpha: 1.0 }, &opts, None).unwrap();
        let cd = oracle::lasso_cd(&x, &y, lambda, 200_000);
        obj_gap = obj_gap.max(oracle::lasso_objective(&x, &y, &m.coeffs, lambda) - oracle::lasso_objective(&x, &y, &cd, lambda));
    }
    let mut zeros = true;
    for alpha in [0.0, 0.3, 0.7, 1.0] {
        let lmax = lambda_max_matrix(xa.view(), &groups, &y, alpha).unwrap();
        for scale in [1.0, 2.0] {
            let m = fit_matrix(xa.view(), &groups, &y, HyperParams { lambda: lmax * scale, alpha }, &opts, None).unwrap();
            zeros &= m.coeffs.iter().all(|b| *b == 0.0);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ols_err < OLS_TOL && obj_gap.abs() < LASSO_OBJ_TOL && zeros && secs < SOLVER_SECONDS,
        format!("OLS max err {ols_err:.1e}; LASSO objective gap {obj_gap:.1e}; exact zeros at lambda_max: {zeros}; {secs:.2} s"),
    )
}

fn prox_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_viol = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(2..=4);
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let groups: Vec<usize> = (0..d).map(|_| rng.random_range(0..2)).collect();
        let step = rng.random_range(0.2..1.5);
        let h = HyperParams { lambda: rng.random_range(0.0..1.5), alpha: rng.random_range(0.0..=1.0) };
        let p = sgl_prox(&v, step, &h, &groups).unwrap();
        let f = |b: &[f64]| oracle::prox_objective(b, &v, step, h.lambda, h.alpha, &groups);
        // A 1e-3 grid in a box around the answer plus a coarse grid over the
        // region that must contain the minimizer (|b_j| <= |v_j| <= 2).
        let local = oracle::grid_min(&p, if d == 4 { 0.006 } else { 0.02 }, PROX_GRID_STEP, &f);
        let global = oracle::grid_min(&vec![0.0; d], 2.0, if d == 4 { 0.1 } else { 0.05 }, &f);
        worst_excess = worst_excess.max(f(&p) - local.min(global));
        worst_viol = worst_viol.max(oracle::prox_subgradient_violation(&p, &v, step, h.lambda, h.alpha, &groups));
    }
    outcome(
        worst_excess <= 1e-12 && worst_viol <= PROX_SUBGRAD_TOL,
        format!("100 instances; max objective excess over grid {worst_excess:.1e}; max subgradient violation {worst_viol:.1e}"),
    )
}

fn surrogate_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let (mut ft_err, mut multiset_ok, mut monotone_ok) = (0.0f64, true, true);
    for case in 0..SURROGATE_CASES {
        let n = rng.random_range(8..=256);
        let phi = rng.random_range(-0.9..0.9);
        let mut x = 0.0;
        let y: Vec<f64> = (0..n)
            .map(|_| {
                x = phi * x + normal(&mut rng);
                if case % 2 == 0 { x } else { x.exp() }
            })
            .collect();
        let s = ft_surrogate(&y, case as u64).unwrap();
        for (a, b) in amplitude_spectrum(&y).iter().zip(amplitude_spectrum(&s)) {
            ft_err = ft_err.max((a - b).abs());
        }
        let r = iaaft_surrogate(&y, case as u64, &IaaftOptions::default()).unwrap();
        let mut a = y.clone();
        let mut b = r.series.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        multiset_ok &= a == b;
        monotone_ok &= r.spectral_errors.windows(2).all(|w| w[1] <= w[0]);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ft_err <= FT_MAGNITUDE_TOL && multiset_ok && monotone_ok && secs < SURROGATE_SECONDS,
        format!("{SURROGATE_CASES} cases; FT max magnitude err {ft_err:.1e}; IAAFT multiset exact: {multiset_ok}; error non-increasing: {monotone_ok}; {secs:.1} s"),
    )
}

fn null_calibration() -> Outcome {
    let start = Instant::now();
    let spec = scenario("NULL").unwrap();
    let nested = NestedOptions {
        bo: BoOptions { budget: NULL_BO_BUDGET, ..BoOptions::default() },
        ..NestedOptions::default()
    };
    let pipeline = lagsynth::cv::NestedSgl { opts: nested };
    // Only series that pass the ADF gate are eligible for the surrogate test,
    // so replicate seeds are drawn until enough datasets pass it.
    let (mut rejections, mut rejections_kn, mut skipped, mut other_errors) = (0, 0, 0, 0);
    let mut pvals = Vec::new();
    let mut k = 0u64;
    while pvals.len() < NULL_REPLICATES && k < NULL_MAX_SEEDS {
        let ds = generate(&spec.clone().with_seed(spec.seed + k)).unwrap();
        let s = ds.session_data().unwrap();
        let split = prepare_split([&s[0], &s[1]], Scheme::InterSession).unwrap();
        let opts = NullOptions { n_surrogates: NULL_SURROGATES, base_seed: 1000 + k, ..NullOptions::default() };
        k += 1;
        match null_distribution(&split, &pipeline, &opts) {
            Ok(d) => {
                pvals.push(d.p_value_conservative);
                rejections += usize::from(d.p_value_conservative <= NULL_ALPHA);
                rejections_kn += usize::from(d.p_value <= NULL_ALPHA);
            }
            Err(lagsynth::Error::NonStationary { .. }) => skipped += 1,
            Err(_) => other_errors += 1,
        }
    }
    let n = pvals.len();
    let rate = rejections as f64 / n.max(1) as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        n == NULL_REPLICATES && other_errors == 0 && rate >= NULL_FPR_BAND.0 && rate <= NULL_FPR_BAND.1 && secs < NULL_SECONDS,
        format!(
            "{rejections}/{n} replicates with (k+1)/(n+1) <= {NULL_ALPHA} (rate {rate:.2}, band [{}, {}]); k/n convention {rejections_kn}/{n}; mean p {:.3}; {skipped} seeds refused by ADF, {other_errors} errors; {secs:.0} s",
            NULL_FPR_BAND.0,
            NULL_FPR_BAND.1,
            mean(&pvals)
        ),
    )
}

/// SGL fits and reference scores for the S1 cohort, inter-session scheme.
struct Cohort {
    fits: Vec<SubjectFit>,
    scores: Vec<BaselineScores>,
    support: Vec<usize>,
    n_freqs: usize,
    n_lags: usize,
}

fn s1_cohort() -> &'static Cohort {
    static COHORT: OnceLock<Cohort> = OnceLock::new();
    COHORT.get_or_init(|| {
        let spec = scenario("S1").unwrap();
        let nested = NestedOptions::default();
        let mut fits = Vec::new();
        let mut scores = Vec::new();
        for k in 0..COHORT_SIZE as u64 {
            let ds = generate(&spec.clone().with_seed(spec.seed + k)).unwrap();
            let subject = Subject::from_dataset(&format!("S1-{k}"), &ds);
            let split = subject.split(spec.n_lags, Scheme::InterSession).unwrap();
            let fit = fit_split(&subject.name, &split, &nested).unwrap();
            let sgl = fit.parcellations.iter().map(|p| p.score).collect();
            scores.push(baseline_split(&subject, &split, spec.n_lags, sgl).unwrap());
            fits.push(fit);
        }
        Cohort {
            fits,
            scores,
            support: spec.support(),
            n_freqs: spec.n_freqs(),
            n_lags: spec.n_lags,
        }
    })
}

fn support_mass(coeffs: &Array3<f64>, support: &[usize]) -> f64 {
    let total: f64 = coeffs.iter().map(|b| b * b).sum();
    if total == 0.0 {
        return 0.0;
    }
    let on: f64 = support.iter().map(|&c| coeffs.index_axis(ndarray::Axis(0), c).iter().map(|b| b * b).sum::<f64>()).sum();
    on / total
}

fn signal_recovery() -> Outcome {
    let c = s1_cohort();
    let fits = &c.fits[..S1_SEEDS];
    let r: Vec<f64> = fits.iter().map(SubjectFit::mean_r).collect();
    let mass: Vec<f64> = fits
        .iter()
        .flat_map(|f| f.parcellations.iter().map(|p| support_mass(&p.coeffs, &c.support)))
        .collect();
    assert!(fits.iter().all(|f| f.parcellations.iter().all(|p| p.coeffs.dim() == (16, c.n_freqs, c.n_lags))));
    let (mr, mm) = (mean(&r), mean(&mass));
    outcome(
        mr >= S1_MIN_R && mm >= S1_MIN_SUPPORT_MASS,
        format!(
            "{S1_SEEDS} seeds; mean test r {mr:.3} (min {:.3}); mean support mass {mm:.3} (min {:.3})",
            r.iter().copied().fold(f64::INFINITY, f64::min),
            mass.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn leakage() -> Outcome {
    let spec = scenario("S3").unwrap();
    let nested = NestedOptions::default();
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for k in 0..S3_SEEDS as u64 {
        let ds = generate(&spec.clone().with_seed(spec.seed + k)).unwrap();
        let subject = Subject::from_dataset("S3", &ds);
        for (scheme, out) in [(Scheme::IntraSession, &mut intra), (Scheme::InterSession, &mut inter)] {
            let split = subject.split(spec.n_lags, scheme).unwrap();
            out.push(fit_split("S3", &split, &nested).unwrap().mean_r());
        }
    }
    let gap = mean(&intra) - mean(&inter);
    let w = wilcoxon_signed_rank(&intra, &inter).unwrap();
    let positive = intra.iter().zip(&inter).filter(|(a, b)| a > b).count();
    outcome(
        gap > S3_MIN_GAP && w.p_value < TEST_ALPHA && w.w_plus > w.w_minus,
        format!(
            "{S3_SEEDS} seeds; intra r {:.3}, inter r {:.3}, gap {gap:.3}; intra higher in {positive}/{S3_SEEDS}; Wilcoxon p {:.2e}",
            mean(&intra),
            mean(&inter),
            w.p_value
        ),
    )
}

fn baseline_ordering() -> Outcome {
    let c = s1_cohort();
    let cmp = compare_methods(&c.scores, FDR_Q).unwrap();
    let get = |name: &str| cmp.iter().find(|x| x.name == name).expect("comparison present");
    let (muc, smr) = (get("sgl_vs_muc"), get("sgl_vs_smr_abs"));
    let sgl: Vec<f64> = c.scores.iter().map(BaselineScores::sgl_r).collect();
    let m: Vec<f64> = c.scores.iter().map(BaselineScores::muc_r).collect();
    let s: Vec<f64> = c.scores.iter().map(BaselineScores::smr_abs_r).collect();
    let p = |x: &lagsynth_cli::pipeline::Comparison| x.p_adjusted.unwrap_or(f64::NAN);
    outcome(
        muc.first_better && smr.first_better && p(muc) < TEST_ALPHA && p(smr) < TEST_ALPHA,
        format!(
            "{COHORT_SIZE} subjects; mean r SGL {:.3}, MUC {:.3}, |SMR| {:.3}; BH-adjusted p vs MUC {:.2e}, vs SMR {:.2e}",
            mean(&sgl),
            mean(&m),
            mean(&s),
            p(muc),
            p(smr)
        ),
    )
}

fn statistics_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut w_err = 0.0f64;
    let mut w_cases = 0;
    for n in 5..=12 {
        for _ in 0..50 {
            let a: Vec<f64> = (0..n).map(|_| (rng.random_range(-3.0..3.0f64) * 2.0).round() / 2.0 + 0.25).collect();
            let b: Vec<f64> = (0..n).map(|_| (rng.random_range(-3.0..3.0f64) * 2.0).round() / 2.0).collect();
            let res = wilcoxon_signed_rank(&a, &b).unwrap();
            let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
            let ranks = midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
            let w_plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
            w_err = w_err.max((res.p_value - oracle::wilcoxon_enumeration_p(&ranks, w_plus)).abs()).max((res.w_plus - w_plus).abs());
            w_cases += 1;
        }
    }
    let small_refused = (1..5).all(|n| wilcoxon_signed_rank(&vec![1.0; n], &vec![0.0; n]).is_err());
    let mut bh_ok = 0;
    for case in 0..BH_CASES {
        let m = rng.random_range(1..50);
        let p: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.3) { rng.random::<f64>() * 0.01 } else { rng.random::<f64>() }).collect();
        let q = [0.01, 0.05, 0.1, 0.25][case % 4];
        bh_ok += usize::from(bh_fdr(&p, q).unwrap().reject == oracle::bh_step_up(&p, q));
    }
    let mut r_err = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(3..200);
        let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.6 * v + normal(&mut rng)).collect();
        r_err = r_err.max((pearson(&x, &y).unwrap().r - oracle::pearson_direct(&x, &y)).abs());
    }
    outcome(
        w_err <= WILCOXON_TOL && small_refused && bh_ok == BH_CASES && r_err <= PEARSON_TOL,
        format!("Wilcoxon {w_cases} cases n=5..12 max err {w_err:.1e}, n<5 refused: {small_refused}; BH {bh_ok}/{BH_CASES} match; Pearson max err {r_err:.1e}"),
    )
}

fn interpretability() -> Outcome {
    let spec = scenario("S2").unwrap();
    let c3 = spec.channel_labels.iter().position(|l| l == "C3").unwrap();
    let f10 = spec.freqs.iter().position(|f| (*f - 10.0).abs() < 1e-9).unwrap();
    let lag = spec
        .true_coeffs
        .indexed_iter()
        .find(|(_, v)| **v != 0.0)
        .map(|((_, _, l), _)| l)
        .unwrap();
    let nested = NestedOptions::default();
    let mut units = Vec::new();
    for k in 0..S2_UNITS as u64 {
        let ds = generate(&spec.clone().with_seed(spec.seed + k)).unwrap();
        let subject = Subject::from_dataset("S2", &ds);
        let split = subject.split(spec.n_lags, Scheme::InterSession).unwrap();
        let fit = fit_split("S2", &split, &nested).unwrap();
        let avg = fit.parcellations.iter().fold(Array3::zeros(spec.true_coeffs.dim()), |a, p| a + &p.coeffs) / fit.parcellations.len() as f64;
        units.push(avg);
    }
    let map = lagsynth::baselines::aggregate_coeff_maps(&units, 0.05).unwrap();
    let fc = map.freq_channel.argmax_abs();
    let fl = map.freq_lag.argmax_abs();
    let t_at = map.freq_channel.t[[f10, c3]].unwrap_or(f64::NAN);
    outcome(
        fc == Some((f10, c3)) && fl == Some((f10, lag)),
        format!(
            "{S2_UNITS} units; planted (C3, 10 Hz, lag {lag} = {:.1} s); max |t| at freq x channel {fc:?}, freq x lag {fl:?}; t = {t_at:.1}",
            lag as f64 * spec.tr
        ),
    )
}

fn hrf_check() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for tr in HRF_TRS {
        let h = double_gamma_hrf(tr, 30.0).unwrap();
        let imax = h.iter().enumerate().fold(0, |b, (i, v)| if *v > h[b] { i } else { b });
        let t = imax as f64 * tr;
        ok &= (t - HRF_PEAK_S).abs() <= tr / 2.0;
        parts.push(format!("tr {tr}: {t:.2} s"));
    }
    outcome(ok, format!("argmax {}", parts.join(", ")))
}

fn run_cli(args: &[&str]) -> i32 {
    lagsynth_cli::run(std::iter::once("lagsynth").chain(args.iter().copied()))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("data");
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    let s = |p: &Path| p.to_str().unwrap().to_string();
    assert_eq!(run_cli(&["synth", "S1", "--out", &s(&data)]), 0);
    let cfg = s(&data.join("config.toml"));
    let codes = [run_cli(&["fit", "--config", &cfg, "--out", &s(&a)]), run_cli(&["fit", "--config", &cfg, "--out", &s(&b)])];
    let (fa, fb) = (files(&a), files(&b));
    let identical = codes == [0, 0] && !fa.is_empty() && fa == fb;
    let report: PredictionReport = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    outcome(
        identical,
        format!("{} output files byte-identical across two runs: {identical}; S1 mean test r {:.3}", fa.len(), report.mean_r),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 11] = [
        (1, "solver correctness", solver_correctness),
        (2, "prox oracle", prox_oracle),
        (3, "surrogate invariants", surrogate_invariants),
        (4, "null-test calibration", null_calibration),
        (5, "signal recovery (S1)", signal_recovery),
        (6, "leakage reproduction (S3)", leakage),
        (7, "baseline ordering (S1 cohort)", baseline_ordering),
        (8, "statistics oracles", statistics_oracles),
        (9, "interpretability maps (S2)", interpretability),
        (10, "HRF peak", hrf_check),
        (11, "end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!res.pass);
        println!(
            "ACCEPTANCE {id:>2} {name:<30} {}  {} [{:.1} s]",
            if res.pass { "PASS" } else { "FAIL" },
            res.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
