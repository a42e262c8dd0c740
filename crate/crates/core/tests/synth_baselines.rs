use lagsynth::baselines::{muc_fit, muc_predict};
use lagsynth::bayes_opt::BoOptions;
use lagsynth::cv::{prepare_split, run_split, NestedOptions, NestedSgl, Scheme};
use lagsynth::sgl::{fit_sgl, predict, HyperParams, SolverOptions};
use lagsynth::stats::pearson;
use lagsynth::synth::{generate, scenario, SyntheticSpec};
use ndarray::Array3;

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

fn single_regressor(beta: f64) -> SyntheticSpec {
    let mut spec = scenario("NULL").unwrap();
    spec.channel_labels = vec!["C3".into()];
    spec.freqs = vec![10.0];
    spec.n_lags = 1;
    spec.n_samples = 300;
    spec.true_coeffs = Array3::from_elem((1, 1, 1), beta);
    spec.snr = None;
    spec.session_confound = 0.0;
    spec
}

#[test]
fn noiseless_single_regressor_is_recovered_by_ols() {
    for beta in [-0.8, 0.35] {
        let ds = generate(&single_regressor(beta)).unwrap();
        let s = ds.session_data().unwrap();
        let h = HyperParams { lambda: 0.0, alpha: 1.0 };
        let model = fit_sgl(&s[0].design, &s[0].y, h, &SolverOptions::default()).unwrap();
        assert!((model.coeffs[0] - beta).abs() < 1e-3, "{} vs {beta}", model.coeffs[0]);
        let pred = predict(&model, &s[1].design).unwrap();
        assert!(pearson(&pred, &s[1].y).unwrap().r > 0.999);
    }
}

#[test]
fn snr_is_honoured() {
    for name in ["S1", "S2", "S3"] {
        let spec = scenario(name).unwrap();
        for seed in 0..5 {
            let ds = generate(&spec.clone().with_seed(1000 + seed)).unwrap();
            for s in &ds.sessions {
                let ratio = variance(&s.noiseless) / variance(&s.noise);
                let want = spec.snr.unwrap();
                assert!((ratio / want - 1.0).abs() < 0.1, "{name}: {ratio} vs {want}");
            }
        }
    }
}

#[test]
fn null_scenario_has_no_coupling() {
    let ds = generate(&scenario("NULL").unwrap()).unwrap();
    assert!(ds.spec.true_coeffs.iter().all(|v| *v == 0.0));
    for s in &ds.sessions {
        assert!(s.noiseless.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn regeneration_is_bit_exact() {
    for name in ["S1", "S2", "S3", "NULL"] {
        let a = generate(&scenario(name).unwrap()).unwrap();
        let b = generate(&a.spec).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn muc_selection_is_optimistic_on_average() {
    let spec = scenario("NULL").unwrap();
    let reps = 100;
    let mut gaps = Vec::with_capacity(reps);
    for seed in 0..reps as u64 {
        let ds = generate(&spec.clone().with_seed(5000 + seed)).unwrap();
        let s = ds.session_data().unwrap();
        let model = muc_fit(&s[0].design, &s[0].y).unwrap();
        let train = model.corr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let pred = muc_predict(&model, &s[1].design).unwrap();
        let test = pearson(&pred, &s[1].y).unwrap().r;
        gaps.push(train - test);
    }
    let mean_gap = gaps.iter().sum::<f64>() / reps as f64;
    assert!(mean_gap > 0.1, "mean optimism {mean_gap}");
    let positive = gaps.iter().filter(|g| **g > 0.0).count();
    assert!(positive >= 90, "{positive} of {reps}");
}

#[test]
fn no_confound_means_no_scheme_gap() {
    let mut spec = scenario("S3").unwrap();
    spec.session_confound = 0.0;
    let pipeline = NestedSgl {
        opts: NestedOptions {
            bo: BoOptions { budget: 20, ..BoOptions::default() },
            ..NestedOptions::default()
        },
    };
    let mut gap = 0.0;
    let seeds = 20;
    for seed in 0..seeds {
        let ds = generate(&spec.clone().with_seed(7000 + seed)).unwrap();
        let s = ds.session_data().unwrap();
        let mean_r = |scheme| {
            let split = prepare_split([&s[0], &s[1]], scheme).unwrap();
            let out = run_split(&split, &pipeline).unwrap();
            out.iter().map(|o| o.score.r).sum::<f64>() / out.len() as f64
        };
        gap += mean_r(Scheme::IntraSession) - mean_r(Scheme::InterSession);
    }
    gap /= seeds as f64;
    assert!(gap.abs() < 0.05, "gap {gap}");
}
