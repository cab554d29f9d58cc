use mrhydro::analysis::{default_dwell_grid, moving_average};
use mrhydro::controllers::{
    build_controller, calibrate_pid, pid_loop_metrics, ControlInput, Controller, ControllerKind, ControllerSettings,
    DitherConfig, FeedbackTap, Lqgi, LqgiConfig, Measurements, Pid, PidConfig, KI_MASTER_DEFAULT, KI_SLAVE_DEFAULT,
    MASTER_BANDWIDTH_TARGET, MIN_GAIN_MARGIN_DB, SLAVE_BANDWIDTH_TARGET,
};
use mrhydro::plant::dynamics::{V1, X1, X3};
use mrhydro::plant::{equilibrium, FrictionMode, OutputCondition, Plant, PlantParams};
use mrhydro::sim::{run_scenario, Reference, Scenario, CONTROL_DT};
use mrhydro::synthesis::{synthesize, CostWeights, GainSet, NoiseCovariances};
use proptest::prelude::*;

fn gains(p: &PlantParams) -> GainSet {
    synthesize(p, &CostWeights::default(), &NoiseCovariances::default())
        .unwrap()
        .0
}

fn frictionless() -> PlantParams {
    PlantParams::default().with_friction_mode(FrictionMode::Off)
}

fn undithered() -> ControllerSettings {
    let mut s = ControllerSettings::default();
    s.friction_compensation.dither = DitherConfig::disabled();
    s.master_pid.dither = DitherConfig::disabled();
    s.slave_pid.dither = DitherConfig::disabled();
    s.lqgi.dither = DitherConfig::disabled();
    s
}

fn blocked(kind: ControllerKind, reference: Reference, duration_s: f64) -> Scenario {
    Scenario {
        reference,
        duration_s,
        friction_mode: Some(FrictionMode::Off),
        ..Scenario::step(kind)
    }
}

fn measurements() -> impl Strategy<Value = Vec<(f64, Measurements)>> {
    prop::collection::vec(
        (
            2e5f64..2e6,
            -1e-3f64..1e-3,
            -0.01f64..0.01,
            0.0f64..5e-3,
            2e5f64..2e6,
            2e5f64..2e6,
        ),
        1..200,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(pd, x1, v1, x3, pm, ps)| {
                (
                    pd,
                    Measurements {
                        x1,
                        v1,
                        x3,
                        p_master: pm,
                        p_slave: ps,
                    },
                )
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn controllers_are_deterministic(seq in measurements()) {
        let p = PlantParams::default();
        let g = gains(&p);
        for kind in ControllerKind::ALL {
            let run = || -> Vec<(u64, u64)> {
                let mut c = build_controller(kind, &ControllerSettings::default(), &p, &g, CONTROL_DT).unwrap();
                c.reset(seq[0].0, &seq[0].1);
                seq.iter()
                    .enumerate()
                    .map(|(k, (pd, m))| {
                        let input = ControlInput { t: k as f64 * CONTROL_DT, p_desired: *pd, meas: *m };
                        c.step(&input).map(|o| (o.current.to_bits(), o.force.to_bits())).unwrap_or((u64::MAX, 0))
                    })
                    .collect()
            };
            prop_assert_eq!(run(), run());
        }
    }
}

#[test]
fn calibration_reproduces_shipped_integral_gains() {
    let p = PlantParams::default();
    let grid = default_dwell_grid();
    let master = calibrate_pid(
        &p,
        FeedbackTap::MasterPressure,
        MASTER_BANDWIDTH_TARGET,
        MIN_GAIN_MARGIN_DB,
        CONTROL_DT,
        &grid,
    );
    let slave = calibrate_pid(
        &p,
        FeedbackTap::SlavePressure,
        SLAVE_BANDWIDTH_TARGET,
        MIN_GAIN_MARGIN_DB,
        CONTROL_DT,
        &grid,
    );
    assert!(!master.target_reached);
    assert!(
        KI_MASTER_DEFAULT <= master.ki_margin_limit && master.ki_margin_limit - KI_MASTER_DEFAULT < 0.1,
        "{master:?}"
    );
    assert!(slave.target_reached);
    assert!(
        (slave.ki - KI_SLAVE_DEFAULT).abs() <= 0.01 * KI_SLAVE_DEFAULT,
        "{slave:?}"
    );
}

#[test]
fn shipped_pid_gains_keep_six_db_margin() {
    let p = PlantParams::default();
    let delay = p.clutch.tau_delay + 0.5 * CONTROL_DT;
    for cfg in [PidConfig::master_default(), PidConfig::slave_default()] {
        let m = pid_loop_metrics(&p, &cfg, delay, &[1.0, 2.0, 5.0, 10.0, 20.0]);
        assert!(m.gain_margin_db >= 6.0, "{:?}: {} dB", cfg.tap, m.gain_margin_db);
    }
}

#[test]
fn closed_loops_remove_steady_state_error() {
    let p = frictionless();
    let g = gains(&p);
    let reference = Reference::Step {
        initial_nm: 2.0,
        final_nm: 12.0,
        t_step_s: 0.1,
    };
    for kind in [
        ControllerKind::MasterPid,
        ControllerKind::SlavePid,
        ControllerKind::Lqgi,
    ] {
        let sc = blocked(kind, reference, 3.0);
        let mut c = build_controller(kind, &undithered(), &p, &g, sc.control_dt).unwrap();
        let tr = run_scenario(&sc, &p, c.as_mut()).unwrap();
        let (pd, ps) = (*tr.p_desired.last().unwrap(), *tr.p_slave.last().unwrap());
        let tol = if kind == ControllerKind::Lqgi { 1e-6 } else { 1e-3 };
        assert!((ps - pd).abs() <= tol * pd, "{kind}: {ps} vs {pd}");
    }
}

#[test]
fn pid_integrator_is_bounded_and_recovers() {
    let p = frictionless();
    let reference = Reference::Step {
        initial_nm: 60.0,
        final_nm: 10.0,
        t_step_s: 1.0,
    };
    for cfg in [PidConfig::master_default(), PidConfig::slave_default()] {
        let cfg = PidConfig {
            dither: DitherConfig::disabled(),
            ..cfg
        };
        let sc = blocked(ControllerKind::MasterPid, reference, 1.0 + 10.0 / cfg.ki);
        let mut pid = Pid::new(cfg, p, sc.control_dt).unwrap();
        let mut bound = 0.0f64;
        let mut probe = Probe {
            inner: &mut pid,
            worst: &mut bound,
        };
        let tr = run_scenario(&sc, &p, &mut probe).unwrap();
        assert!(bound <= cfg.integrator_limit, "{:?}: {bound}", cfg.tap);
        let k1 = tr.window_start(1.0);
        assert!(tr.saturation[..k1].iter().any(|s| s.is_saturated()));
        let (pd, ps) = (*tr.p_desired.last().unwrap(), *tr.p_slave.last().unwrap());
        assert!(!tr.saturation.last().unwrap().is_saturated());
        assert!((ps - pd).abs() <= 0.05 * pd, "{:?}: {ps} vs {pd}", cfg.tap);
    }
}

struct Probe<'a> {
    inner: &'a mut Pid,
    worst: &'a mut f64,
}

impl Controller for Probe<'_> {
    fn name(&self) -> &'static str {
        "probe"
    }

    fn reset(&mut self, p_desired: f64, meas: &Measurements) {
        self.inner.reset(p_desired, meas);
    }

    fn step(&mut self, input: &ControlInput) -> mrhydro::Result<mrhydro::controllers::ControlOutput> {
        let out = self.inner.step(input);
        *self.worst = self.worst.max(self.inner.integrator().abs());
        out
    }
}

#[test]
fn lqgi_integral_state_is_clamped_under_saturation() {
    let p = frictionless();
    let cfg = LqgiConfig {
        dither: DitherConfig::disabled(),
        ..LqgiConfig::default()
    };
    let sc = blocked(
        ControllerKind::Lqgi,
        Reference::Step {
            initial_nm: 10.0,
            final_nm: 80.0,
            t_step_s: 0.1,
        },
        2.0,
    );
    let mut c = Lqgi::new(cfg, p, gains(&p), sc.control_dt).unwrap();
    let tr = run_scenario(&sc, &p, &mut c).unwrap();
    assert!(tr.saturation.iter().any(|s| s.is_saturated()));
    assert!(tr.internal.iter().all(|z| z[7].abs() <= c.x_i_limit()));
}

#[test]
fn estimator_forgets_wrong_initial_estimate() {
    let p = frictionless();
    let dt = CONTROL_DT;
    let cfg = LqgiConfig {
        dither: DitherConfig::disabled(),
        ..LqgiConfig::default()
    };
    let mut c = Lqgi::new(cfg, p, gains(&p), dt).unwrap();
    let f_true = 900.0;
    let mut plant = Plant::new(p, 1e-4, OutputCondition::Blocked, f_true).unwrap();
    let p_d = f_true / p.geometry.area_slave;
    let meas = |pl: &Plant| {
        let x = pl.state();
        Measurements {
            x1: x[X1],
            v1: x[V1],
            x3: x[X3],
            p_master: pl.p_master(),
            p_slave: pl.p_slave(),
        }
    };
    c.reset(0.5 * p_d, &meas(&plant));
    let x0 = equilibrium(&p, f_true);
    let scale: Vec<f64> = x0.iter().map(|v| v.abs().max(1e-3)).collect();
    let mut err = Vec::new();
    for k in 0..1000 {
        let out = c
            .step(&ControlInput {
                t: k as f64 * dt,
                p_desired: p_d,
                meas: meas(&plant),
            })
            .unwrap();
        for _ in 0..10 {
            plant.step(out.force).unwrap();
        }
        let e: f64 = c
            .estimate()
            .iter()
            .zip(plant.state())
            .zip(&scale)
            .map(|((a, b), s)| ((a - b) / s).powi(2))
            .sum();
        err.push(e.sqrt());
    }
    let envelope: Vec<f64> = err
        .chunks(100)
        .map(|w| w.iter().fold(0.0f64, |m, v| m.max(*v)))
        .collect();
    assert!(envelope.windows(2).skip(1).all(|w| w[1] <= w[0]), "{envelope:?}");
    assert!(envelope[9] < 1e-3 * envelope[0], "{envelope:?}");
}

#[test]
fn dither_leaves_low_frequency_command_unchanged() {
    let p = frictionless();
    let g = gains(&p);
    let window = (3.0 / 150.0 / CONTROL_DT).round() as usize;
    for kind in [
        ControllerKind::OpenLoop,
        ControllerKind::MasterPid,
        ControllerKind::SlavePid,
        ControllerKind::Lqgi,
    ] {
        let run = |dither: DitherConfig| {
            let mut s = ControllerSettings::default();
            s.open_loop.dither = dither;
            s.master_pid.dither = dither;
            s.slave_pid.dither = dither;
            s.lqgi.dither = dither;
            let sc = blocked(kind, Reference::Constant { torque_nm: 10.0 }, 1.0);
            let mut c = build_controller(kind, &s, &p, &g, sc.control_dt).unwrap();
            moving_average(&run_scenario(&sc, &p, c.as_mut()).unwrap().force_cmd, window)
        };
        let (off, on) = (run(DitherConfig::disabled()), run(DitherConfig::default()));
        let (lo, hi) = (window, off.len() - window);
        let worst = (lo..hi)
            .map(|k| (on[k] - off[k]).abs() / off[k].abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 0.01, "{kind}: {worst}");
    }
}
