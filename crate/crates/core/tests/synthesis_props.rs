use std::time::Instant;

use mrhydro::linalg::{fro, max_real_part};
use mrhydro::plant::{build_state_space, PlantParams};
use mrhydro::synthesis::{
    closed_loop, kalman_gain, kalman_gain_raw, lqi_gains, solve_care, synthesize, CostWeights, GainSet,
    NoiseCovariances,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random `(A, B, Q, R)` with `Q = CᵀC + εI` and diagonal-dominant `R`.
fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> [DMatrix<f64>; 4] {
    let mut g = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let a = g(n, n) * 2.0;
    let b = g(n, m);
    let c = g(n, n);
    let q = c.transpose() * c + DMatrix::identity(n, n) * 1e-3;
    let w = g(m, m);
    let r = &w * w.transpose() + DMatrix::identity(m, m);
    [a, b, q, r]
}

/// Independent residual check: relative Frobenius residual, symmetry and stability.
///
/// The quadratic term is evaluated as `(PB) R⁻¹ (PB)ᵀ`.
fn certify(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> (f64, f64, f64) {
    let r_inv = r.clone().try_inverse().unwrap();
    let pb = p * b;
    let res = a.transpose() * p + p * a - &pb * &r_inv * pb.transpose() + q;
    let rel = fro(&res) / fro(p).max(1e-300);
    let asym = fro(&(p - p.transpose())) / fro(p);
    (rel, asym, max_real_part(&(a - b * &r_inv * pb.transpose())))
}

#[test]
fn nearly_uncontrollable_unstable_mode_certifies() {
    let mut rng = ChaCha8Rng::seed_from_u64(16429274679105779133);
    let [a, b, q, r] = random_problem(&mut rng, 10, 1);
    let sol = solve_care(&a, &b, &q, &r).unwrap();
    let (rel, asym, max_re) = certify(&a, &b, &q, &r, &sol.p);
    assert!(fro(&sol.p) > 1e9);
    assert!(
        rel <= 1e-8 && asym <= 1e-10 && max_re < 0.0,
        "{rel:e} {asym:e} {max_re}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn care_solution_is_certified(seed in any::<u64>(), n in 1usize..=10, m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a, b, q, r] = random_problem(&mut rng, n, m.min(n));
        let sol = solve_care(&a, &b, &q, &r).unwrap();
        let (rel, asym, max_re) = certify(&a, &b, &q, &r, &sol.p);
        prop_assert!(rel <= 1e-8, "residual {:e}", rel);
        prop_assert!(asym <= 1e-10, "asymmetry {:e}", asym);
        prop_assert!(max_re < 0.0, "closed loop not Hurwitz: {}", max_re);
    }

    #[test]
    fn kalman_gain_is_dual_regulator(seed in any::<u64>(), n in 1usize..=7, p in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [a, bt, q, _] = random_problem(&mut rng, n, p);
        let c = bt.transpose();
        let r: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..10.0)).collect();
        let l = kalman_gain_raw(&a, &c, &q, &r).unwrap().l;
        let r_m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(r.clone()));
        let dual = solve_care(&a.transpose(), &c.transpose(), &q, &r_m).unwrap();
        let k = r_m.try_inverse().unwrap() * &c * &dual.p;
        prop_assert!(fro(&(&l - k.transpose())) <= 1e-8 * fro(&l).max(1.0));
    }

    #[test]
    fn lqgi_loop_is_stable_with_unit_dc_gain(log_rho in -6.0f64..-2.0, log_rho_i in 0.0f64..4.0) {
        let p = PlantParams::default();
        let w = CostWeights { rho: 10f64.powf(log_rho), rho_i: 10f64.powf(log_rho_i), ..CostWeights::default() };
        let (gains, report) = synthesize(&p, &w, &NoiseCovariances::default()).unwrap();
        prop_assert!(report.loop_max_re < 0.0);
        let dc = closed_loop(&build_state_space(&p), &gains).dc_gain();
        prop_assert!((dc - 1.0).abs() <= 1e-6, "dc gain {}", dc);
    }
}

#[test]
fn hundred_random_problems_within_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    for k in 0..100 {
        let n = 1 + k % 10;
        let [a, b, q, r] = random_problem(&mut rng, n, 1 + k % 3.min(n));
        let sol = solve_care(&a, &b, &q, &r).unwrap();
        assert!(certify(&a, &b, &q, &r, &sol.p).0 <= 1e-8);
    }
    assert!(start.elapsed().as_secs_f64() < 5.0, "{:?}", start.elapsed());
}

#[test]
fn scalar_riccati_matches_quadratic_root() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let sol = solve_care(&DMatrix::from_element(1, 1, -1.0), &one, &one, &one).unwrap();
    assert!((sol.p[(0, 0)] - (2f64.sqrt() - 1.0)).abs() <= 1e-10);
}

#[test]
fn heavier_input_penalty_shrinks_regulator() {
    let ss = build_state_space(&PlantParams::default());
    let w = CostWeights::default();
    let k = lqi_gains(&ss, &w).unwrap().k.norm();
    let k_heavy = lqi_gains(
        &ss,
        &CostWeights {
            rho: 100.0 * w.rho,
            ..w
        },
    )
    .unwrap()
    .k
    .norm();
    assert!(k_heavy < k, "{k_heavy} vs {k}");
}

#[test]
fn trusting_the_model_silences_the_estimator() {
    let ss = build_state_space(&PlantParams::default());
    let norms: Vec<f64> = [3e-5, 3e-9, 3e-13]
        .iter()
        .map(|&rho_l| {
            kalman_gain(
                &ss,
                &NoiseCovariances {
                    rho_l,
                    ..NoiseCovariances::default()
                },
            )
            .unwrap()
            .l
            .norm()
        })
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
    assert!(norms[2] < 1e-3 * norms[0], "{norms:?}");
}

#[test]
fn default_design_certificates() {
    let p = PlantParams::default();
    let (gains, report) = synthesize(&p, &CostWeights::default(), &NoiseCovariances::default()).unwrap();
    assert_eq!(gains.k.len(), 8);
    assert_eq!((gains.l.len(), gains.l[0].len()), (7, 4));
    assert!(report.regulator_eigs.iter().all(|z| z.re < 0.0));
    assert!(report.estimator_eigs.iter().all(|z| z.re < 0.0));
    assert_eq!(report.loop_eigs.len(), 15);
    assert!(report.loop_max_re < 0.0);
    assert!(report.regulator_residual <= 1e-8 && report.estimator_residual <= 1e-8);
}

#[test]
fn gain_file_round_trip_keeps_provenance() {
    let p = PlantParams::default();
    let (w, nc) = (CostWeights::default(), NoiseCovariances::default());
    let (gains, _) = synthesize(&p, &w, &nc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gains.toml");
    gains.save(&path).unwrap();
    let back = GainSet::load(&path).unwrap();
    assert_eq!(back, gains);
    assert!(back.matches(&p, &w, &nc));
    assert!(!back.matches(&p, &CostWeights { rho: 2e-4, ..w }, &nc));
    let (again, _) = synthesize(&p, &w, &nc).unwrap();
    assert_eq!(again.to_toml().unwrap(), gains.to_toml().unwrap());
}
