//! Parametric studies: vary one geometric parameter, trace tip deflection
//! against voltage up to pull-in, and write CSV, SVG and JSON artifacts.

mod export;
mod svg;

pub use export::{curves_csv, export, load, profile_csv, pullin_csv, ExportFormat};
pub use svg::render_svg;

use std::fmt;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::model::BeamParams;
use crate::pullin::{
    find_pullin, lumped_estimate, sdof_stability_limit, sweep_voltage, CurvePoint,
    DeflectionCurve, PullInResult,
};
use crate::static_solver::{build_grid, solve_static, SolverOptions, DEFAULT_GRID_NODES};

pub const SCHEMA_VERSION: u32 = 1;

/// Points in an automatic voltage grid, including 0 and `v_lower`.
pub const AUTO_POINTS: usize = 40;

/// Ratio between successive voltage increments of an automatic grid.
const AUTO_SHRINK: f64 = 0.92;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VaryParam {
    Length,
    Thickness,
    Gap,
    Width,
}

impl VaryParam {
    pub fn name(self) -> &'static str {
        match self {
            VaryParam::Length => "length",
            VaryParam::Thickness => "thickness",
            VaryParam::Gap => "gap",
            VaryParam::Width => "width",
        }
    }

    pub fn apply(self, base: &BeamParams, value: f64) -> BeamParams {
        match self {
            VaryParam::Length => base.with_length(value),
            VaryParam::Thickness => base.with_thickness(value),
            VaryParam::Gap => base.with_gap(value),
            VaryParam::Width => base.with_width(value),
        }
    }
}

impl fmt::Display for VaryParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VaryParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "length" | "l" => Ok(VaryParam::Length),
            "thickness" | "h" | "t" => Ok(VaryParam::Thickness),
            "gap" | "g" => Ok(VaryParam::Gap),
            "width" | "b" | "w" => Ok(VaryParam::Width),
            other => Err(format!("unknown parameter `{other}` (length, thickness, gap, width)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoltageGrid {
    Explicit(Vec<f64>),
    AutoToPullIn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Outputs {
    pub curves: bool,
    pub pullin: bool,
    pub profile: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            curves: true,
            pullin: true,
            profile: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub base: BeamParams,
    pub vary: VaryParam,
    /// Values of the varied parameter (m), ascending.
    pub values: Vec<f64>,
    pub voltage_grid: VoltageGrid,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default = "default_nodes")]
    pub grid_nodes: usize,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Pull-in bracket width (V).
    #[serde(default = "default_pullin_tol")]
    pub pullin_tol: f64,
    /// Voltage for deflection profiles; defaults to 10 V.
    #[serde(default)]
    pub profile_voltage: Option<f64>,
    /// Worker threads; `None` lets the pool decide.
    #[serde(default)]
    pub max_threads: Option<usize>,
}

fn default_nodes() -> usize {
    DEFAULT_GRID_NODES
}

fn default_pullin_tol() -> f64 {
    1e-3
}

impl StudySpec {
    pub fn new(base: BeamParams, vary: VaryParam, values: Vec<f64>, voltage_grid: VoltageGrid) -> Self {
        StudySpec {
            base,
            vary,
            values,
            voltage_grid,
            outputs: Outputs::default(),
            grid_nodes: DEFAULT_GRID_NODES,
            solver: SolverOptions::default(),
            pullin_tol: default_pullin_tol(),
            profile_voltage: None,
            max_threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.solver.validate()?;
        positive("pullin_tol", self.pullin_tol)?;
        if self.values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "values",
                value: 0.0,
                reason: "must not be empty",
            });
        }
        for v in &self.values {
            positive("values", *v)?;
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "values",
                value: self.values[0],
                reason: "must be strictly ascending",
            });
        }
        if let VoltageGrid::Explicit(vs) = &self.voltage_grid {
            if vs.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "voltage_grid",
                    value: 0.0,
                    reason: "must not be empty",
                });
            }
            for v in vs {
                crate::error::non_negative("voltage_grid", *v)?;
            }
        }
        if let Some(v) = self.profile_voltage {
            crate::error::non_negative("profile_voltage", v)?;
        }
        if self.max_threads == Some(0) {
            return Err(Error::InvalidParameter {
                name: "max_threads",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub voltage: f64,
    /// Node positions (m), clamp first.
    pub positions: Vec<f64>,
    pub deflection: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub value: f64,
    pub params: BeamParams,
    pub curve: Option<DeflectionCurve>,
    pub pullin: Option<PullInResult>,
    /// `G / 3` for this entry.
    pub stability_limit: f64,
    pub profile: Option<Profile>,
    /// Failure message for this value; other values still run.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub grid_nodes: usize,
    pub solver: SolverOptions,
    pub pullin_tol: f64,
    pub crate_version: String,
    /// Seconds since the Unix epoch when the run started.
    pub started_unix: u64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub schema_version: u32,
    pub spec: StudySpec,
    pub entries: Vec<StudyEntry>,
    pub metadata: StudyMetadata,
}

pub fn run_study(spec: &StudySpec) -> Result<StudyResult> {
    spec.validate()?;
    let started = SystemTime::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.max_threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Format(format!("thread pool: {e}")))?;
    let entries: Vec<StudyEntry> = pool.install(|| {
        spec.values
            .par_iter()
            .map(|&value| run_entry(spec, value))
            .collect()
    });
    Ok(StudyResult {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        entries,
        metadata: StudyMetadata {
            grid_nodes: spec.grid_nodes,
            solver: spec.solver,
            pullin_tol: spec.pullin_tol,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_seconds: started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0),
        },
    })
}

fn run_entry(spec: &StudySpec, value: f64) -> StudyEntry {
    let params = spec.vary.apply(&spec.base, value);
    let mut entry = StudyEntry {
        value,
        params,
        curve: None,
        pullin: None,
        stability_limit: params.gap / 3.0,
        profile: None,
        error: None,
    };
    if let Err(e) = fill_entry(spec, &mut entry) {
        log::warn!("{} = {value:e}: {e}", spec.vary);
        entry.error = Some(e.to_string());
    }
    entry
}

fn fill_entry(spec: &StudySpec, entry: &mut StudyEntry) -> Result<()> {
    let params = entry.params;
    entry.stability_limit = sdof_stability_limit(params.gap)?;
    let grid = build_grid(spec.grid_nodes, &params)?;
    let auto = spec.voltage_grid == VoltageGrid::AutoToPullIn;
    if spec.outputs.pullin || (spec.outputs.curves && auto) {
        let hint = 2.0 * lumped_estimate(&params)?;
        entry.pullin = Some(find_pullin(&params, hint, spec.pullin_tol, &grid, &spec.solver)?);
    }
    if spec.outputs.curves {
        let voltages = match &spec.voltage_grid {
            VoltageGrid::Explicit(v) => v.clone(),
            VoltageGrid::AutoToPullIn => {
                let p = entry.pullin.expect("pull-in computed above");
                let mut v = auto_voltages(p.v_lower);
                v.push(p.v_upper);
                v
            }
        };
        entry.curve = Some(sweep_voltage(&params, &voltages, &grid, &spec.solver)?);
    }
    if spec.outputs.profile {
        let v = spec.profile_voltage.unwrap_or(10.0);
        let sol = solve_static(&params, v, &grid, &spec.solver)?;
        entry.profile = Some(Profile {
            voltage: v,
            positions: grid.positions(),
            deflection: sol.deflection,
            converged: sol.converged,
        });
    }
    Ok(())
}

/// `AUTO_POINTS` voltages from 0 to `v_top`, increments shrinking
/// geometrically toward the top.
pub fn auto_voltages(v_top: f64) -> Vec<f64> {
    let steps = AUTO_POINTS - 1;
    let total: f64 = (0..steps).map(|k| AUTO_SHRINK.powi(k as i32)).sum();
    let mut out = Vec::with_capacity(AUTO_POINTS);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..steps - 1 {
        acc += AUTO_SHRINK.powi(k as i32);
        out.push(v_top * acc / total);
    }
    out.push(v_top);
    out
}

impl StudyResult {
    /// Converged curve points of each entry, in entry order.
    pub fn converged_points(&self) -> impl Iterator<Item = (&StudyEntry, &CurvePoint)> {
        self.entries.iter().flat_map(|e| {
            e.curve
                .iter()
                .flat_map(|c| c.converged())
                .map(move |p| (e, p))
        })
    }
}
