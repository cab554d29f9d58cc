//! `mrhydro`: gain synthesis, single runs, FRF sweeps and the controller
//! comparison report.
//!
//! Settings are layered: built-in defaults, then `--config`, then flags.
//! Every output file name carries the hash of the final configuration and
//! the seed, and a manifest holding that configuration is written alongside.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use mrhydro::analysis::{bandwidth, step_metrics, torque_deviation, Bandwidth, FrfPoint};
use mrhydro::config::RunConfig;
use mrhydro::controllers::{pid_loop_metrics, ControllerKind};
use mrhydro::sim::{scenario_label, simulate, Reference, Scenario, ScenarioKind, SimTrace};
use mrhydro::synthesis::{synthesize, GainSet};

#[derive(Parser, Debug)]
#[command(
    name = "mrhydro",
    version,
    about = "MR-clutch hydrostatic actuator simulation and control synthesis"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Configuration file layered over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sensor noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving all output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Gain file to use instead of synthesizing.
    #[arg(long, global = true)]
    gains: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the regulator and estimator Riccati equations and write the gains.
    Synth,
    /// Simulate one scenario and write its trace.
    Run(RunArgs),
    /// Sweep sine dwells and write the frequency response.
    Frf(FrfArgs),
    /// Run the full experiment matrix and write the comparison table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_parser = parse_controller)]
    controller: Option<ControllerKind>,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<ScenarioKind>,
    /// Dwell or backdrive frequency (Hz).
    #[arg(long)]
    freq: Option<f64>,
    /// Torque command (N·m): final step value, dwell offset or backdrive hold.
    #[arg(long)]
    cmd: Option<f64>,
}

#[derive(Args, Debug)]
struct FrfArgs {
    #[arg(long, value_parser = parse_controller)]
    controller: Option<ControllerKind>,
    /// Dwell frequencies (Hz), comma separated; defaults to the configured grid.
    #[arg(long, value_delimiter = ',')]
    freq: Vec<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Controllers to include, comma separated; defaults to all five.
    #[arg(long, value_delimiter = ',', value_parser = parse_controller)]
    only: Vec<ControllerKind>,
}

fn parse_controller(s: &str) -> Result<ControllerKind, String> {
    ControllerKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = ControllerKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("unknown controller `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    ScenarioKind::parse(s)
        .ok_or_else(|| format!("unknown scenario `{s}`; expected step, chirp, sine_dwell or backdrive"))
}

/// Defaults, then the file, then flags; every layer is logged.
fn layered_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            info!("config: loading {}", path.display());
            RunConfig::load(path)?
        }
        None => {
            info!("config: built-in defaults");
            RunConfig::default()
        }
    };
    if let Some(seed) = common.seed {
        info!("config: flag --seed {seed} (was {})", cfg.seed);
        cfg.seed = seed;
    }
    if let Some(dir) = &common.out_dir {
        info!(
            "config: flag --out-dir {} (was {})",
            dir.display(),
            cfg.output.dir.display()
        );
        cfg.output.dir = dir.clone();
    }
    Ok(cfg)
}

fn current_frequency(sc: &Scenario) -> Option<f64> {
    match (sc.backdrive, sc.reference) {
        (Some(b), _) => Some(b.frequency_hz),
        (None, Reference::Sine { frequency_hz, .. }) => Some(frequency_hz),
        _ => None,
    }
}

fn apply_run_flags(cfg: &mut RunConfig, args: &RunArgs) {
    let old = cfg.scenario;
    let controller = args.controller.unwrap_or(old.controller);
    if let Some(c) = args.controller {
        info!("config: flag --controller {c} (was {})", old.controller);
    }
    if args.scenario.is_none() && args.freq.is_none() && args.cmd.is_none() {
        cfg.scenario.controller = controller;
        return;
    }
    let kind = args.scenario.unwrap_or(old.kind);
    let freq = args.freq.or_else(|| current_frequency(&old)).unwrap_or(1.0);
    let mut sc = match kind {
        ScenarioKind::Step => Scenario::step(controller),
        ScenarioKind::Chirp => Scenario::chirp(controller),
        ScenarioKind::SineDwell => Scenario::sine_dwell(controller, freq),
        ScenarioKind::Backdrive => Scenario::backdrive(
            controller,
            freq,
            args.cmd.unwrap_or(10.0),
            cfg.experiment.backdrive_amplitude_m,
        ),
    };
    if let Some(cmd) = args.cmd {
        sc.reference = match sc.reference {
            Reference::Step {
                initial_nm, t_step_s, ..
            } => Reference::Step {
                initial_nm,
                final_nm: cmd,
                t_step_s,
            },
            Reference::Sine {
                amplitude_nm,
                frequency_hz,
                ..
            } => Reference::Sine {
                offset_nm: cmd,
                amplitude_nm,
                frequency_hz,
            },
            Reference::Chirp {
                amplitude_nm,
                f_start_hz,
                f_end_hz,
                sweep_s,
                ..
            } => Reference::Chirp {
                offset_nm: cmd,
                amplitude_nm,
                f_start_hz,
                f_end_hz,
                sweep_s,
            },
            other => other,
        };
    }
    if old.friction_mode.is_some() {
        sc.friction_mode = old.friction_mode;
    }
    info!(
        "config: scenario {} for {controller} from flags (freq {:?}, cmd {:?})",
        kind.as_str(),
        args.freq,
        args.cmd
    );
    cfg.scenario = sc;
}

/// Output stem `<name>_<hash>_seed<seed>`.
fn stem(cfg: &RunConfig, name: &str) -> String {
    format!("{name}_{}_seed{}", &cfg.hash()[..12], cfg.seed)
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Writes the configuration that produced `stem` so the run can be repeated with `--config`.
fn write_manifest(cfg: &RunConfig, dir: &Path, stem: &str) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.manifest.toml"));
    let body = format!("# config hash {}\n{}", cfg.hash(), cfg.to_toml()?);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn obtain_gains(cfg: &RunConfig, common: &Common) -> Result<GainSet> {
    match &common.gains {
        Some(path) => {
            let g = GainSet::load(path)?;
            if !g.matches(&cfg.plant, &cfg.weights, &cfg.noise) {
                bail!(
                    "gain file {} was synthesized for different plant, weights or noise settings",
                    path.display()
                );
            }
            info!("gains: loaded {}", path.display());
            Ok(g)
        }
        None => {
            info!("gains: synthesizing from configured weights");
            Ok(synthesize(&cfg.plant, &cfg.weights, &cfg.noise)?.0)
        }
    }
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let (gains, report) = synthesize(&cfg.plant, &cfg.weights, &cfg.noise)?;
    let dir = prepare_out_dir(cfg)?;
    let stem = stem(cfg, "gains");
    gains.save(&dir.join(format!("{stem}.toml")))?;
    info!("wrote {}", dir.join(format!("{stem}.toml")).display());
    let mut log = report.to_text();
    let delay = cfg.plant.clutch.tau_delay + 0.5 * cfg.scenario.control_dt;
    for pid in [&cfg.controllers.master_pid, &cfg.controllers.slave_pid] {
        let m = pid_loop_metrics(&cfg.plant, pid, delay, &[1.0]);
        let _ = writeln!(
            log,
            "{:?} PID ki = {:.4}: gain margin {:.2} dB at {:.2} Hz",
            pid.tap, pid.ki, m.gain_margin_db, m.phase_crossover_hz
        );
    }
    write_text(&dir.join(format!("{stem}.log")), &log)?;
    write_manifest(cfg, &dir, &stem)?;
    print!("{log}");
    Ok(())
}

fn summarize(sc: &Scenario, trace: &SimTrace) -> Result<String> {
    Ok(match (sc.kind, sc.reference) {
        (ScenarioKind::Step, Reference::Step { t_step_s, .. }) => {
            let m = step_metrics(&trace.time, &trace.torque, t_step_s)?;
            format!(
                "rise time (63%) {:.2} ms, overshoot {:.2} %{}",
                m.rise_time_63_ms,
                m.overshoot_pct,
                if m.reliable { "" } else { " (response did not settle)" }
            )
        }
        (ScenarioKind::Backdrive, reference) => {
            let b = sc
                .backdrive
                .ok_or_else(|| anyhow!("backdrive scenario without a motion profile"))?;
            let cmd = reference.torque(0.0);
            let dev = torque_deviation(&trace.time, &trace.torque, cmd, 1.0 / b.frequency_hz)?;
            format!("peak torque deviation {dev:.3} N·m")
        }
        _ => format!("{} samples", trace.len()),
    })
}

fn cmd_run(cfg: &RunConfig, common: &Common) -> Result<()> {
    let gains = obtain_gains(cfg, common)?;
    let sc = cfg.resolved_scenario();
    let dir = prepare_out_dir(cfg)?;
    let stem = stem(cfg, &format!("trace_{}_{}", scenario_label(&sc), sc.controller));
    write_manifest(cfg, &dir, &stem)?;
    let path = dir.join(format!("{stem}.csv"));
    match simulate(&sc, &cfg.plant, &cfg.controllers, &gains) {
        Ok(trace) => {
            trace.write_csv(&path)?;
            info!("wrote {}", path.display());
            println!("{} {}: {}", sc.controller, scenario_label(&sc), summarize(&sc, &trace)?);
            Ok(())
        }
        Err(abort) => {
            abort.trace.write_csv(&path)?;
            warn!(
                "partial trace ({} samples) written to {}",
                abort.trace.len(),
                path.display()
            );
            Err(abort.error.into())
        }
    }
}

fn frf_csv(frf: &[FrfPoint]) -> String {
    let mut s = String::from("frequency_hz,magnitude_db,phase_deg,flagged\n");
    for p in frf {
        let _ = writeln!(s, "{},{},{},{}", p.frequency_hz, p.magnitude_db, p.phase_deg, p.flagged);
    }
    s
}

fn cmd_frf(cfg: &RunConfig, common: &Common, args: &FrfArgs) -> Result<()> {
    let mut cfg = cfg.clone();
    if let Some(c) = args.controller {
        info!("config: flag --controller {c} (was {})", cfg.scenario.controller);
        cfg.scenario.controller = c;
    }
    if !args.freq.is_empty() {
        info!("config: flag --freq with {} frequencies", args.freq.len());
        cfg.experiment.dwell_frequencies_hz = args.freq.clone();
    }
    cfg.validate()?;
    let kind = cfg.scenario.controller;
    let bench = cfg.bench(obtain_gains(&cfg, common)?);
    let frf = bench.frf(kind, &cfg.dwell_grid())?;
    let dir = prepare_out_dir(&cfg)?;
    let stem = stem(&cfg, &format!("frf_{kind}"));
    write_text(&dir.join(format!("{stem}.csv")), &frf_csv(&frf))?;
    write_manifest(&cfg, &dir, &stem)?;
    let flagged = frf.iter().filter(|p| p.flagged).count();
    match bandwidth(&frf) {
        Bandwidth::Found { hz, criterion } => println!("{kind}: bandwidth {hz:.2} Hz ({criterion:?} criterion)"),
        Bandwidth::RangeExceeded { max_hz } => println!("{kind}: no bandwidth crossing below {max_hz} Hz"),
    }
    if flagged > 0 {
        warn!("{flagged} dwell points flagged as distorted");
    }
    Ok(())
}

fn cmd_report(cfg: &RunConfig, common: &Common, args: &ReportArgs) -> Result<bool> {
    let kinds = if args.only.is_empty() {
        ControllerKind::ALL.to_vec()
    } else {
        args.only.clone()
    };
    info!(
        "report: {} controllers, {} dwell frequencies",
        kinds.len(),
        cfg.dwell_grid().len()
    );
    let bench = cfg.bench(obtain_gains(cfg, common)?);
    let start = std::time::Instant::now();
    let (report, notes) = bench.comparison(&kinds, &cfg.dwell_grid());
    info!("report: matrix finished in {:.1} s", start.elapsed().as_secs_f64());
    let dir = prepare_out_dir(cfg)?;
    let names: Vec<_> = kinds.iter().map(|k| k.as_str()).collect();
    let stem = stem(cfg, &format!("report_{}", names.join("-")));
    let mut text = report.to_text();
    for n in &notes {
        let _ = writeln!(text, "note: {n}");
    }
    write_text(&dir.join(format!("{stem}.txt")), &text)?;
    write_text(&dir.join(format!("{stem}.csv")), &report.to_csv())?;
    write_manifest(cfg, &dir, &stem)?;
    print!("{text}");
    let missing = report
        .rows
        .iter()
        .flat_map(|r| r.metrics.map_or([None; 6], |m| m.cells()))
        .filter(Option::is_none)
        .count();
    if missing > 0 {
        warn!("{missing} cells could not be computed");
    }
    Ok(missing == 0)
}

fn execute(cli: &Cli) -> Result<bool> {
    let mut cfg = layered_config(&cli.common)?;
    match &cli.command {
        Command::Synth => cmd_synth(&cfg).map(|_| true),
        Command::Run(args) => {
            apply_run_flags(&mut cfg, args);
            cfg.validate()?;
            cmd_run(&cfg, &cli.common).map(|_| true)
        }
        Command::Frf(args) => cmd_frf(&cfg, &cli.common, args).map(|_| true),
        Command::Report(args) => cmd_report(&cfg, &cli.common, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrhydro::controllers::PidConfig;

    #[test]
    fn flags_override_file_layer() {
        let mut cfg = RunConfig::default();
        let args = RunArgs {
            controller: Some(ControllerKind::Lqgi),
            scenario: Some(ScenarioKind::Backdrive),
            freq: Some(5.0),
            cmd: Some(3.0),
        };
        apply_run_flags(&mut cfg, &args);
        let sc = cfg.scenario;
        assert_eq!(
            (sc.kind, sc.controller),
            (ScenarioKind::Backdrive, ControllerKind::Lqgi)
        );
        assert_eq!(sc.backdrive.unwrap().frequency_hz, 5.0);
        assert_eq!(sc.reference.torque(0.0), 3.0);
    }

    #[test]
    fn controller_flag_alone_keeps_scenario() {
        let mut cfg = RunConfig::default();
        let args = RunArgs {
            controller: Some(ControllerKind::SlavePid),
            scenario: None,
            freq: None,
            cmd: None,
        };
        apply_run_flags(&mut cfg, &args);
        assert_eq!(cfg.scenario, Scenario::step(ControllerKind::SlavePid));
    }

    #[test]
    fn stem_carries_hash_and_seed() {
        let cfg = RunConfig {
            seed: 5,
            ..RunConfig::default()
        };
        let s = stem(&cfg, "x");
        assert!(s.starts_with(&format!("x_{}", &cfg.hash()[..12])) && s.ends_with("_seed5"));
    }

    #[test]
    fn unknown_controller_names_choices() {
        assert!(parse_controller("lqr").unwrap_err().contains("lqgi"));
    }

    #[test]
    fn shipped_pid_configs_are_used() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.controllers.master_pid, PidConfig::master_default());
    }
}
