use mrhydro::linalg::zoh;
use mrhydro::plant::dynamics::{F_MR, V1, X3};
use mrhydro::plant::{
    build_state_space, current_from_torque, equilibrium, friction_pressure, mechanical_energy, mr_torque_from_current,
    plant_derivative, FrictionMode, FrictionParams, OutputCondition, Plant, PlantParams, PrescribedMotion, StateVec,
    N_STATES,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn linear_params() -> PlantParams {
    let mut p = PlantParams::default().with_friction_mode(FrictionMode::Off);
    p.clutch.tau_delay = 0.0;
    p
}

fn state_strategy() -> impl Strategy<Value = StateVec> {
    prop::array::uniform7(-1.0f64..1.0).prop_map(|u| {
        let scale = [2e-3, 0.1, 2e-3, 0.1, 2e-3, 0.1, 1500.0];
        std::array::from_fn(|i| u[i] * scale[i])
    })
}

proptest! {
    #[test]
    fn clutch_polynomial_is_increasing(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        prop_assume!((a - b).abs() > 1e-9);
        let c = PlantParams::default().clutch;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(c.poly(hi) > c.poly(lo));
        prop_assert!(c.poly_slope(lo) > 0.0);
    }

    #[test]
    fn friction_is_odd_in_speed(p in 0.0f64..2.5e6, v in -0.05f64..0.05) {
        for mode in [FrictionMode::SmoothTanh, FrictionMode::StickSlipSign, FrictionMode::Off] {
            let f = FrictionParams { mode, ..FrictionParams::default() };
            prop_assert_eq!(friction_pressure(p, -v, &f), -friction_pressure(p, v, &f));
        }
    }

    #[test]
    fn linearization_matches_state_space(x in state_strategy(), u in 0.0f64..1500.0) {
        let p = linear_params();
        let ss = build_state_space(&p);
        let dx = plant_derivative(&p, &x, u, &OutputCondition::Blocked, 0.0).unwrap();
        let lin = &ss.a * DVector::from_column_slice(&x) + &ss.b * u;
        for i in 0..N_STATES {
            let scale = lin[i].abs().max(1.0);
            prop_assert!((dx[i] - lin[i]).abs() <= 1e-12 * scale, "row {}: {} vs {}", i, dx[i], lin[i]);
        }
    }

    #[test]
    fn unforced_chain_dissipates_energy(x in state_strategy()) {
        let p = linear_params();
        let mut x = x;
        x[F_MR] = 0.0;
        let mut plant = Plant::new(p, 1e-4, OutputCondition::Blocked, 0.0).unwrap();
        plant.set_state(x);
        let mut e = mechanical_energy(&p, plant.state());
        for _ in 0..2000 {
            plant.step(0.0).unwrap();
            let e_next = mechanical_energy(&p, plant.state());
            prop_assert!(e_next <= e * (1.0 + 1e-12) + 1e-15, "{} -> {}", e, e_next);
            e = e_next;
        }
    }
}

#[test]
fn clutch_inverse_round_trip_on_dense_grid() {
    let c = PlantParams::default().clutch;
    for k in 0..1000 {
        let i = 3.0 * k as f64 / 999.0;
        let t = mr_torque_from_current(i, &c).unwrap();
        let (i_back, _) = current_from_torque(t, &c);
        let t_back = mr_torque_from_current(i_back, &c).unwrap();
        assert!((t_back - t).abs() <= 1e-6, "i = {i}: {t} vs {t_back}");
    }
}

#[test]
fn geometry_reaches_max_torque_at_max_pressure() {
    let g = PlantParams::default().geometry;
    let torque = g.area_slave * g.r_pulley * 2.31e6;
    assert!((torque - 29.0).abs() <= 0.29, "{torque}");
}

fn command(k: usize, dt: f64) -> f64 {
    let t = k as f64 * dt;
    200.0 + 300.0 * (t / 0.25).floor() + 100.0 * (2.0 * std::f64::consts::PI * 7.0 * t).sin()
}

/// Largest per-state error over 1 s, relative to each state's peak.
fn worst_relative(dt: f64, mut oracle: impl FnMut(&DVector<f64>, f64) -> DVector<f64>) -> [f64; N_STATES] {
    let p = linear_params();
    let mut plant = Plant::new(p, dt, OutputCondition::Blocked, 200.0).unwrap();
    let mut z = DVector::from_column_slice(&equilibrium(&p, 200.0));
    let mut err = [0.0f64; N_STATES];
    let mut peak = [0.0f64; N_STATES];
    for k in 0..(1.0 / dt).round() as usize {
        let u = command(k, dt);
        plant.step(u).unwrap();
        z = oracle(&z, u);
        for i in 0..N_STATES {
            err[i] = err[i].max((plant.state()[i] - z[i]).abs());
            peak[i] = peak[i].max(z[i].abs());
        }
    }
    std::array::from_fn(|i| err[i] / peak[i])
}

#[test]
fn nonlinear_plant_matches_linear_model_without_friction_and_delay() {
    let ss = build_state_space(&linear_params());
    let dt = 1e-4;
    let f = |z: &DVector<f64>, u: f64| &ss.a * z + &ss.b * DVector::from_element(1, u);
    let rel = worst_relative(dt, |z, u| {
        let k1 = f(z, u);
        let k2 = f(&(z + &k1 * (0.5 * dt)), u);
        let k3 = f(&(z + &k2 * (0.5 * dt)), u);
        let k4 = f(&(z + &k3 * dt), u);
        z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
    });
    assert!(rel.iter().all(|&e| e <= 1e-9), "{rel:?}");
}

#[test]
fn nonlinear_plant_converges_to_exact_linear_solution() {
    let ss = build_state_space(&linear_params());
    let dt = 2.5e-5;
    let (ad, bd) = zoh(&ss.a, &ss.b, dt);
    let rel = worst_relative(dt, |z, u| &ad * z + &bd * DMatrix::from_element(1, 1, u));
    assert!(rel.iter().all(|&e| e <= 1e-9), "{rel:?}");
}

#[test]
fn delay_line_realizes_clutch_dead_time() {
    let mut p = PlantParams::default().with_friction_mode(FrictionMode::Off);
    p.clutch.omega_c = 2e4;
    let dt = 1e-4;
    let mut plant = Plant::new(p, dt, OutputCondition::Blocked, 500.0).unwrap();
    let mut state: u64 = 0x9e3779b97f4a7c15;
    let mut cmd = Vec::new();
    let mut out = Vec::new();
    for _ in 0..20_000 {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let u = 500.0 + 400.0 * ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
        plant.step(u).unwrap();
        cmd.push(u - 500.0);
        out.push(plant.state()[F_MR] - 500.0);
    }
    let xcorr = |lag: usize| -> f64 { cmd.iter().zip(&out[lag..]).map(|(a, b)| a * b).sum() };
    let best = (0..60).max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b))).unwrap();
    let expected = (p.clutch.tau_delay / dt).round() as usize;
    assert_eq!(best, expected);
}

#[test]
fn prescribed_output_follows_trajectory_exactly() {
    let p = PlantParams::default().with_friction_mode(FrictionMode::StickSlipSign);
    let m = PrescribedMotion {
        amplitude_m: 1.2e-3,
        frequency_hz: 5.0,
        offset_m: 4e-3,
    };
    let mut plant = Plant::new(p, 1e-4, OutputCondition::Prescribed(m), 800.0).unwrap();
    for k in 1..=10_000 {
        plant.step(800.0).unwrap();
        let (x3, _, _) = m.eval(k as f64 * 1e-4);
        assert_eq!(plant.time(), k as f64 * 1e-4);
        assert!((plant.state()[X3] - x3).abs() <= 1e-15, "step {k}");
    }
}

#[test]
fn stick_phase_holds_nut_inside_coulomb_bound() {
    let p = PlantParams::default().with_friction_mode(FrictionMode::StickSlipSign);
    let m = PrescribedMotion {
        amplitude_m: 1.1e-3,
        frequency_hz: 1.0,
        offset_m: 0.0,
    };
    let f = 1200.0;
    let mut plant = Plant::new(
        p,
        1e-4,
        OutputCondition::Prescribed(PrescribedMotion {
            offset_m: f / p.transmission.k3,
            ..m
        }),
        f,
    )
    .unwrap();
    let mut stuck_steps = 0;
    for _ in 0..20_000 {
        let was = plant.is_stuck();
        plant.step(f).unwrap();
        if was && plant.is_stuck() {
            stuck_steps += 1;
            assert_eq!(plant.state()[V1], 0.0);
        }
    }
    assert!(stuck_steps > 100, "{stuck_steps}");
}
