use lagsynth::sgl::{
    fit_matrix, kkt_residual, lambda_max_matrix, sgl_penalty, sgl_prox, HyperParams, SolverOptions,
};
use lagsynth_oracles as oracle;
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn problem(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let beta: Vec<f64> = (0..p).map(|j| if j % 3 == 0 { 1.5 } else { -0.4 * j as f64 / p as f64 }).collect();
    let y = x
        .iter()
        .map(|r| 0.7 + r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + 0.3 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

fn to_array(x: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((x.len(), x[0].len()), |(i, j)| x[i][j])
}

#[test]
fn unpenalized_fit_matches_normal_equations() {
    for seed in 0..5 {
        let (x, y) = problem(50, 5, seed);
        let groups = [0, 0, 1, 1, 2];
        let m = fit_matrix(to_array(&x).view(), &groups, &y, HyperParams::new(0.0, 0.5).unwrap(), &SolverOptions::default(), None)
            .unwrap();
        let (b0, b) = oracle::ols_normal_equations(&x, &y);
        for (got, want) in m.coeffs.iter().zip(&b) {
            assert!((got - want).abs() < 1e-6, "seed {seed}: {got} vs {want}");
        }
        assert!((m.intercept - b0).abs() < 1e-6);
    }
}

#[test]
fn pure_lasso_matches_coordinate_descent_objective() {
    for seed in 0..5 {
        let (x, y) = problem(60, 12, 100 + seed);
        let groups: Vec<usize> = (0..12).map(|j| j / 4).collect();
        let xa = to_array(&x);
        let lmax = lambda_max_matrix(xa.view(), &groups, &y, 1.0).unwrap();
        for frac in [0.5, 0.1, 0.01] {
            let lambda = frac * lmax;
            let m = fit_matrix(xa.view(), &groups, &y, HyperParams::new(lambda, 1.0).unwrap(), &SolverOptions::default(), None)
                .unwrap();
            let cd = oracle::lasso_cd(&x, &y, lambda, 100_000);
            let f_sgl = oracle::lasso_objective(&x, &y, &m.coeffs, lambda);
            let f_cd = oracle::lasso_objective(&x, &y, &cd, lambda);
            assert!((f_sgl - f_cd).abs() < 1e-5, "seed {seed} frac {frac}: {f_sgl} vs {f_cd}");
        }
    }
}

#[test]
fn lambda_max_gives_exact_zeros_for_any_alpha() {
    let (x, y) = problem(40, 9, 7);
    let groups: Vec<usize> = (0..9).map(|j| j / 3).collect();
    let xa = to_array(&x);
    for alpha in [0.0, 0.2, 0.5, 0.9, 1.0] {
        let lmax = lambda_max_matrix(xa.view(), &groups, &y, alpha).unwrap();
        for scale in [1.0, 1.5, 10.0] {
            let h = HyperParams::new(lmax * scale, alpha).unwrap();
            let m = fit_matrix(xa.view(), &groups, &y, h, &SolverOptions::default(), None).unwrap();
            assert!(m.coeffs.iter().all(|b| *b == 0.0), "alpha {alpha}");
        }
        // Just below the threshold something enters.
        let h = HyperParams::new(lmax * 0.9, alpha).unwrap();
        let m = fit_matrix(xa.view(), &groups, &y, h, &SolverOptions::default(), None).unwrap();
        assert!(m.coeffs.iter().any(|b| *b != 0.0), "alpha {alpha}");
    }
}

#[test]
fn fitted_models_satisfy_kkt() {
    use lagsynth::features::LaggedDesign;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data = ndarray::Array3::from_shape_fn((80, 3, 2), |_| rng.sample::<f64, _>(StandardNormal));
    let d = LaggedDesign::from_array(data.view(), 3).unwrap();
    let y: Vec<f64> = (0..d.n_rows()).map(|i| d.matrix[[i, 0]] - 0.5 * d.matrix[[i, 7]] + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let lmax = lagsynth::sgl::lambda_max(&d, &y, 0.5).unwrap();
    let h = HyperParams::new(0.05 * lmax, 0.5).unwrap();
    let m = lagsynth::sgl::fit_sgl(&d, &y, h, &SolverOptions::default()).unwrap();
    assert!(m.diag.converged);
    assert!(kkt_residual(&m, &d, &y, &h).unwrap() < 1e-5);
}

fn random_prox_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<usize>, f64, HyperParams) {
    let d = rng.random_range(2..=4);
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let groups: Vec<usize> = (0..d).map(|_| rng.random_range(0..2)).collect();
    let step = rng.random_range(0.2..1.5);
    let h = HyperParams::new(rng.random_range(0.0..1.5), rng.random_range(0.0..=1.0)).unwrap();
    (v, groups, step, h)
}

#[test]
fn prox_beats_grid_and_meets_subgradient_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let (v, groups, step, h) = random_prox_instance(&mut rng);
        let p = sgl_prox(&v, step, &h, &groups).unwrap();
        let f = |b: &[f64]| oracle::prox_objective(b, &v, step, h.lambda, h.alpha, &groups);
        let fp = f(&p);
        // Fine grid around the answer, coarse grid over the whole region.
        let local = oracle::grid_min(&p, if v.len() == 4 { 0.006 } else { 0.02 }, 1e-3, &f);
        let global = oracle::grid_min(&vec![0.0; v.len()], 2.0, if v.len() == 4 { 0.1 } else { 0.05 }, &f);
        assert!(fp <= local + 1e-12 && fp <= global + 1e-12, "case {case}: {fp} vs {local}/{global}");
        let viol = oracle::prox_subgradient_violation(&p, &v, step, h.lambda, h.alpha, &groups);
        assert!(viol <= 1e-6, "case {case}: violation {viol}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn prox_is_nonexpansive(
        u in prop::collection::vec(-5.0f64..5.0, 6),
        w in prop::collection::vec(-5.0f64..5.0, 6),
        lambda in 0.0f64..3.0,
        alpha in 0.0f64..=1.0,
        step in 0.01f64..2.0,
    ) {
        let groups = [0, 0, 1, 1, 1, 2];
        let h = HyperParams::new(lambda, alpha).unwrap();
        let pu = sgl_prox(&u, step, &h, &groups).unwrap();
        let pw = sgl_prox(&w, step, &h, &groups).unwrap();
        let d_out: f64 = pu.iter().zip(&pw).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let d_in: f64 = u.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d_out <= d_in + 1e-12);
    }

    #[test]
    fn prox_never_increases_penalty_over_input(
        u in prop::collection::vec(-5.0f64..5.0, 5),
        lambda in 0.0f64..3.0,
        alpha in 0.0f64..=1.0,
    ) {
        let groups = [0, 1, 1, 2, 2];
        let h = HyperParams::new(lambda, alpha).unwrap();
        let p = sgl_prox(&u, 1.0, &h, &groups).unwrap();
        prop_assert!(sgl_penalty(&p, &h, &groups) <= sgl_penalty(&u, &h, &groups) + 1e-12);
        for (a, b) in p.iter().zip(&u) {
            prop_assert!(a.abs() <= b.abs() + 1e-12 && a * b >= 0.0);
        }
    }
}
