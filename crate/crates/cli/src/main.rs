//! `pullin-lab`: command-line driver for the micro-cantilever solvers.
//!
//! Parameters resolve as flag, then `--config` JSON, then the reference
//! beam. Stdout gets one summary line; files go under `--out` if given.
//! Exit status: 0 success, 1 physics outcome (pull-in, no equilibrium),
//! 2 bad usage, config or I/O.

mod config;
mod units;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use pullin_core::dynamic::{self, Drive, DynamicOptions};
use pullin_core::lumped::LumpedModel;
use pullin_core::modal::{assemble_modal_system, lowest_modes, MAX_MODES};
use pullin_core::pullin::{compare_stability, find_pullin, lumped_estimate, sweep_voltage};
use pullin_core::static_solver::{build_grid, solve_static, DEFAULT_GRID_NODES};
use pullin_core::study::{self, ExportFormat, StudySpec, VaryParam, VoltageGrid};
use pullin_core::model::nondimensionalize;
use pullin_core::{BeamParams, SolverOptions};

use config::RunConfig;
use units::parse_length;

const THREADS_ENV: &str = "PULLIN_LAB_THREADS";
const DYNAMIC_GRID_NODES: usize = 21;

#[derive(Parser, Debug)]
#[command(name = "pullin-lab", version, about = "Static, pull-in, modal and transient analysis of an electrostatic micro-cantilever")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for machine-readable output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    beam: BeamArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct BeamArgs {
    /// Beam length (m, or with um/nm/mm suffix).
    #[arg(long, global = true, value_parser = parse_length)]
    length: Option<f64>,
    #[arg(long, global = true, value_parser = parse_length)]
    width: Option<f64>,
    #[arg(long, global = true, value_parser = parse_length)]
    thickness: Option<f64>,
    #[arg(long, global = true, value_parser = parse_length)]
    gap: Option<f64>,
    /// Young's modulus (Pa).
    #[arg(long, global = true)]
    youngs: Option<f64>,
    /// Density (kg/m^3).
    #[arg(long, global = true)]
    density: Option<f64>,
    /// Tip mass (kg).
    #[arg(long, global = true)]
    tip_mass: Option<f64>,
    /// Physical grid nodes.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Static deflection at one voltage.
    Static {
        #[arg(long)]
        voltage: Option<f64>,
        /// Picard relative tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Tip deflection over a list of voltages.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        voltages: Option<Vec<f64>>,
        /// Sweep 0..v_max in `steps` equal steps instead of a list.
        #[arg(long)]
        v_max: Option<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Bracket the pull-in voltage.
    Pullin {
        /// Bracket width (V).
        #[arg(long)]
        tol: Option<f64>,
        /// Search ceiling (V); defaults to twice the lumped estimate.
        #[arg(long)]
        v_max: Option<f64>,
    },
    /// Natural frequencies about the equilibrium at a bias voltage.
    Modal {
        #[arg(long)]
        voltage: Option<f64>,
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Transient response to a DC + AC drive.
    Dynamic {
        #[arg(long)]
        dc: Option<f64>,
        #[arg(long)]
        ac_amplitude: Option<f64>,
        /// rad/s
        #[arg(long)]
        ac_frequency: Option<f64>,
        /// rad
        #[arg(long)]
        ac_phase: Option<f64>,
        /// Simulated time (s).
        #[arg(long)]
        duration: Option<f64>,
        /// Time step (s).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// One-degree-of-freedom spring/capacitor model.
    Lumped {
        /// Spring constant (N/m); defaults to 8EI/L^3 of the beam.
        #[arg(long)]
        km: Option<f64>,
        /// Plate area (m^2); defaults to width x length.
        #[arg(long)]
        area: Option<f64>,
        /// Also solve the equilibrium at this voltage.
        #[arg(long)]
        voltage: Option<f64>,
    },
    /// Parametric study over one geometric parameter.
    Study {
        #[arg(long)]
        vary: Option<VaryParam>,
        #[arg(long, value_delimiter = ',', value_parser = parse_length)]
        values: Option<Vec<f64>>,
        /// Explicit voltage grid; default runs each value up to pull-in.
        #[arg(long, value_delimiter = ',')]
        voltages: Option<Vec<f64>>,
        /// Pull-in bracket width (V).
        #[arg(long)]
        tol: Option<f64>,
        /// Also record profiles at this voltage.
        #[arg(long)]
        profile_voltage: Option<f64>,
    },
}

/// A physics outcome reported as failure (exit 1).
#[derive(Debug)]
struct Domain(String);

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Domain {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Domain>() {
            return 1;
        }
        if let Some(core) = cause.downcast_ref::<pullin_core::Error>() {
            return if core.is_domain() { 1 } else { 2 };
        }
    }
    2
}

fn run(cli: &Cli) -> anyhow::Result<String> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let params = resolve_beam(&cli.beam, &cfg);
    params.validate()?;
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let out = cli.out.as_deref();
    let nodes = cli.beam.grid_n.or(cfg.grid_n);
    let solver = |tol: Option<f64>| SolverOptions {
        rel_tolerance: tol.unwrap_or(cfg.solver.unwrap_or_default().rel_tolerance),
        ..cfg.solver.unwrap_or_default()
    };

    match &cli.command {
        Command::Static { voltage, tol } => {
            let v = voltage.or(cfg.voltage).unwrap_or(10.0);
            let grid = build_grid(nodes.unwrap_or(DEFAULT_GRID_NODES), &params)?;
            let sol = solve_static(&params, v, &grid, &solver(*tol))?;
            if let Some(dir) = out {
                let mut csv = String::from("x_m,deflection_m\n");
                for (x, y) in grid.positions().iter().zip(&sol.deflection) {
                    writeln!(csv, "{x},{y}").unwrap();
                }
                write(dir, "profile.csv", csv)?;
                write(dir, "static.json", serde_json::to_string_pretty(&sol)?)?;
            }
            if !sol.converged {
                return Err(Domain(format!(
                    "no static equilibrium at {v} V ({:?} after {} iterations); past pull-in",
                    sol.termination, sol.iterations
                ))
                .into());
            }
            Ok(format!(
                "static: V = {v} V, tip = {:.6e} m, tip/G = {:.5}, {} iterations",
                sol.tip(),
                sol.tip() / params.gap,
                sol.iterations
            ))
        }
        Command::Sweep {
            voltages,
            v_max,
            steps,
            tol,
        } => {
            let vs = match (voltages.clone().or(cfg.voltages.clone()), v_max) {
                (_, Some(top)) => {
                    if *steps == 0 {
                        bail!("--steps must be >= 1");
                    }
                    (0..=*steps).map(|i| top * i as f64 / *steps as f64).collect()
                }
                (Some(list), None) => list,
                (None, None) => (0..=20).map(|i| i as f64).collect(),
            };
            let grid = build_grid(nodes.unwrap_or(DEFAULT_GRID_NODES), &params)?;
            let curve = sweep_voltage(&params, &vs, &grid, &solver(*tol))?;
            if let Some(dir) = out {
                let mut csv = String::from("voltage_V,tip_deflection_m,converged\n");
                for p in &curve.points {
                    writeln!(csv, "{},{},{}", p.voltage, p.tip_deflection, p.converged).unwrap();
                }
                write(dir, "sweep.csv", csv)?;
            }
            let ok: Vec<_> = curve.converged().collect();
            let top = ok.iter().map(|p| p.tip_deflection).fold(0.0, f64::max);
            Ok(format!(
                "sweep: {} voltages, {} converged, max tip = {top:.6e} m",
                curve.points.len(),
                ok.len()
            ))
        }
        Command::Pullin { tol, v_max } => {
            let tol = tol.or(cfg.pullin_tol).unwrap_or(1e-3);
            let hint = match v_max {
                Some(v) => *v,
                None => 2.0 * lumped_estimate(&params)?,
            };
            let grid = build_grid(nodes.unwrap_or(DEFAULT_GRID_NODES), &params)?;
            let r = find_pullin(&params, hint, tol, &grid, &solver(None))?;
            let cmp = compare_stability(&r, &params)?;
            if let Some(dir) = out {
                write(dir, "pullin.json", serde_json::to_string_pretty(&r)?)?;
            }
            Ok(format!(
                "pullin: V_PI in [{:.6}, {:.6}] V, tip_over_gap = {:.4} (single-DOF limit {:.4})",
                r.v_lower, r.v_upper, cmp.tip_over_gap, cmp.sdof_ratio
            ))
        }
        Command::Modal { voltage, modes } => {
            let v = voltage.or(cfg.voltage).unwrap_or(0.0);
            let n = modes.or(cfg.modes).unwrap_or(3);
            if n == 0 || n > MAX_MODES {
                bail!("--modes must be in 1..={MAX_MODES}");
            }
            let grid = build_grid(nodes.unwrap_or(DEFAULT_GRID_NODES), &params)?;
            let mut opts = solver(None);
            opts.rel_tolerance = opts.rel_tolerance.min(1e-10);
            opts.max_iterations = opts.max_iterations.max(10_000);
            let sol = solve_static(&params, v, &grid, &opts)?;
            if !sol.converged {
                return Err(Domain(format!("no static equilibrium at {v} V; past pull-in")).into());
            }
            let res = lowest_modes(&assemble_modal_system(&sol, &params, &grid)?, n)?;
            if let Some(dir) = out {
                write(dir, "modal.json", serde_json::to_string_pretty(&res)?)?;
            }
            let list: Vec<String> = res.frequencies.iter().map(|w| format!("{w:.6e}")).collect();
            Ok(format!(
                "modal: bias {v} V, f1 = {:.3} Hz, omega = [{}] rad/s",
                res.fundamental() / std::f64::consts::TAU,
                list.join(", ")
            ))
        }
        Command::Dynamic {
            dc,
            ac_amplitude,
            ac_frequency,
            ac_phase,
            duration,
            dt,
        } => {
            let base = cfg.drive.unwrap_or(Drive::dc(1.0));
            let drive = Drive {
                dc: dc.unwrap_or(base.dc),
                ac_amplitude: ac_amplitude.unwrap_or(base.ac_amplitude),
                ac_frequency: ac_frequency.unwrap_or(base.ac_frequency),
                ac_phase: ac_phase.unwrap_or(base.ac_phase),
            };
            let grid = build_grid(nodes.unwrap_or(DYNAMIC_GRID_NODES), &params)?;
            let t_star = nondimensionalize(&params, 0.0)?.t_star;
            let dt = match dt.or(cfg.dt) {
                Some(v) => v,
                None => dynamic::default_time_step(&params)?
                    .min(dynamic::stable_time_step(&params, &grid)?),
            };
            let duration = duration.or(cfg.duration).unwrap_or(4.0 * t_star);
            let opts = DynamicOptions {
                ghost_scheme: solver(None).ghost_scheme,
                ..Default::default()
            };
            let trace = dynamic::simulate(&params, &drive, duration, dt, &grid, &opts)?;
            if let Some(dir) = out {
                let mut csv = String::from("step,time_s,voltage_V,tip_deflection_m\n");
                for (j, (t, y)) in trace.times.iter().zip(&trace.tip_history).enumerate() {
                    writeln!(csv, "{j},{t},{},{y}", drive.voltage_at(*t)).unwrap();
                }
                write(dir, "trace.csv", csv)?;
            }
            let peak = trace.tip_history.iter().cloned().fold(0.0, f64::max);
            let summary = format!(
                "dynamic: {} steps of {dt:.4e} s, peak tip = {peak:.6e} m, final tip = {:.6e} m",
                trace.tip_history.len(),
                trace.tip_history.last().copied().unwrap_or(0.0)
            );
            match trace.diverged_at {
                Some(j) => Err(Domain(format!(
                    "{summary}; dynamic pull-in at step {j} (t = {:.6e} s)",
                    j as f64 * dt
                ))
                .into()),
                None => Ok(summary),
            }
        }
        Command::Lumped { km, area, voltage } => {
            let s = pullin_core::model::derived_properties(&params)?;
            let spring = km
                .or(cfg.lumped.spring)
                .unwrap_or(8.0 * s.bending_stiffness / params.length.powi(3));
            let area = area.or(cfg.lumped.area).unwrap_or(params.width * params.length);
            let model = LumpedModel::new(spring, area, params.gap, params.permittivity)?;
            let v_pi = model.pullin_voltage_1d();
            let y_pi = model.pullin_position()?;
            let mut summary = format!("lumped: V_PI = {v_pi:.4} V, pull-in at y = G/3 = {y_pi:.6e} m");
            let eq = match voltage.or(cfg.voltage) {
                Some(v) => {
                    let y = model.equilibrium_1d(v)?;
                    write!(summary, ", y({v} V) = {y:.6e} m").unwrap();
                    Some(y)
                }
                None => None,
            };
            if let Some(dir) = out {
                let doc = serde_json::json!({
                    "model": model,
                    "pullin_voltage_V": v_pi,
                    "pullin_position_m": y_pi,
                    "equilibrium_m": eq,
                });
                write(dir, "lumped.json", serde_json::to_string_pretty(&doc)?)?;
            }
            Ok(summary)
        }
        Command::Study {
            vary,
            values,
            voltages,
            tol,
            profile_voltage,
        } => {
            let sc = &cfg.study;
            let vary = vary.or(sc.vary).unwrap_or(VaryParam::Length);
            let values = values
                .clone()
                .or(sc.values.clone())
                .unwrap_or_else(|| default_values(vary));
            let grid = match voltages.clone().or(sc.voltages.clone()) {
                Some(v) => VoltageGrid::Explicit(v),
                None => VoltageGrid::AutoToPullIn,
            };
            let mut spec = StudySpec::new(params, vary, values, grid);
            spec.grid_nodes = nodes.unwrap_or(DEFAULT_GRID_NODES);
            spec.solver = solver(None);
            spec.pullin_tol = tol.or(cfg.pullin_tol).unwrap_or(spec.pullin_tol);
            if let Some(o) = sc.outputs {
                spec.outputs = o;
            }
            spec.profile_voltage = profile_voltage.or(sc.profile_voltage);
            if spec.profile_voltage.is_some() {
                spec.outputs.profile = true;
            }
            spec.max_threads = thread_cap(sc.max_threads)?;
            let result = study::run_study(&spec)?;
            if let Some(dir) = out {
                study::export(&result, ExportFormat::Csv, dir)?;
                study::export(&result, ExportFormat::Svg, &dir.join("curves.svg"))?;
                study::export(&result, ExportFormat::Json, &dir.join("study.json"))?;
            }
            let failed = result.entries.iter().filter(|e| e.error.is_some()).count();
            let brackets: Vec<String> = result
                .entries
                .iter()
                .filter_map(|e| e.pullin.map(|p| format!("{:.4}", p.v_lower)))
                .collect();
            let summary = format!(
                "study: {} values of {vary}, V_PI lower bounds [{}] V, {failed} failed",
                result.entries.len(),
                brackets.join(", ")
            );
            if failed == result.entries.len() {
                return Err(anyhow!("{summary}"));
            }
            Ok(summary)
        }
    }
}

fn resolve_beam(flags: &BeamArgs, cfg: &RunConfig) -> BeamParams {
    let d = BeamParams::reference();
    let c = &cfg.beam;
    BeamParams {
        length: flags.length.or(c.length).unwrap_or(d.length),
        width: flags.width.or(c.width).unwrap_or(d.width),
        thickness: flags.thickness.or(c.thickness).unwrap_or(d.thickness),
        gap: flags.gap.or(c.gap).unwrap_or(d.gap),
        youngs: flags.youngs.or(c.youngs).unwrap_or(d.youngs),
        density: flags.density.or(c.density).unwrap_or(d.density),
        permittivity: c.permittivity.unwrap_or(d.permittivity),
        tip_mass: flags.tip_mass.or(c.tip_mass).unwrap_or(d.tip_mass),
    }
}

fn default_values(vary: VaryParam) -> Vec<f64> {
    let um = |v: &[f64]| v.iter().map(|x| x / 1e6).collect();
    match vary {
        VaryParam::Length => um(&[200.0, 225.0, 250.0, 275.0, 300.0]),
        VaryParam::Thickness => um(&[2.0, 2.5, 3.0, 3.5, 4.0]),
        VaryParam::Gap => um(&[2.0, 2.5, 3.0, 3.5, 4.0]),
        VaryParam::Width => um(&[25.0, 50.0, 100.0]),
    }
}

/// Lower of the config value and `PULLIN_LAB_THREADS`.
fn thread_cap(cfg: Option<usize>) -> anyhow::Result<Option<usize>> {
    let env = match std::env::var(THREADS_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| anyhow!("{THREADS_ENV} must be a positive integer, got `{s}`"))?,
        ),
        Err(_) => None,
    };
    Ok(match (cfg, env) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    })
}

fn write(dir: &Path, name: &str, text: String) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
