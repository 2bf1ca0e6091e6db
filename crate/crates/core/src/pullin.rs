//! Pull-in voltage: sweeps of tip deflection against voltage and bisection
//! of the boundary between converged and diverging static solves.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::lumped::LumpedModel;
use crate::model::{derived_properties, BeamParams};
use crate::static_solver::{Grid, SolverOptions, StaticSolution, StaticSolver};

/// Upward doublings past the caller's ceiling before giving up.
pub const MAX_DOUBLINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub voltage: f64,
    pub tip_deflection: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeflectionCurve {
    pub points: Vec<CurvePoint>,
}

impl DeflectionCurve {
    pub fn converged(&self) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(|p| p.converged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullInResult {
    /// Highest voltage with a converged static solution.
    pub v_lower: f64,
    /// Lowest voltage found without one.
    pub v_upper: f64,
    /// Tip deflection at `v_lower` (m).
    pub tip_at_lower: f64,
    pub bracket_width: f64,
}

impl PullInResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.v_lower + self.v_upper)
    }
}

/// Solves at each voltage in order, warm-starting from the highest converged
/// solution below the current voltage.
pub fn sweep_voltage(
    params: &BeamParams,
    voltages: &[f64],
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<DeflectionCurve> {
    if voltages.is_empty() {
        return Err(Error::InvalidParameter {
            name: "voltages",
            value: 0.0,
            reason: "must not be empty",
        });
    }
    for v in voltages {
        non_negative("voltage", *v)?;
    }
    let solver = StaticSolver::new(params, grid, opts)?;
    let mut below: Option<StaticSolution> = None;
    let mut points = Vec::with_capacity(voltages.len());
    for &v in voltages {
        let start = below
            .as_ref()
            .filter(|s| s.voltage <= v)
            .map(|s| s.deflection.as_slice());
        let sol = solver.solve(v, start)?;
        points.push(CurvePoint {
            voltage: v,
            tip_deflection: sol.tip(),
            converged: sol.converged,
        });
        if sol.converged && below.as_ref().is_none_or(|b| b.voltage <= v) {
            below = Some(sol);
        }
    }
    Ok(DeflectionCurve { points })
}

/// One-degree-of-freedom estimate with spring `8 EI / L^3` and plate `b L`.
pub fn lumped_estimate(params: &BeamParams) -> Result<f64> {
    let s = derived_properties(params)?;
    let model = LumpedModel::new(
        8.0 * s.bending_stiffness / params.length.powi(3),
        params.width * params.length,
        params.gap,
        params.permittivity,
    )?;
    Ok(model.pullin_voltage_1d())
}

/// Brackets pull-in to within `tol` volts.
///
/// The first probe is the lower of [`lumped_estimate`] and `v_max_hint`.
/// Probes double until a solve fails; past `v_max_hint` at most
/// [`MAX_DOUBLINGS`] doublings are tried before [`Error::NoPullIn`].
pub fn find_pullin(
    params: &BeamParams,
    v_max_hint: f64,
    tol: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<PullInResult> {
    find_pullin_with_solution(params, v_max_hint, tol, grid, opts).map(|(r, _)| r)
}

/// As [`find_pullin`], also returning the converged solution at `v_lower`.
pub fn find_pullin_with_solution(
    params: &BeamParams,
    v_max_hint: f64,
    tol: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<(PullInResult, StaticSolution)> {
    positive("v_max_hint", v_max_hint)?;
    positive("tol", tol)?;
    let solver = StaticSolver::new(params, grid, opts)?;

    let mut lower = solver.solve(0.0, None)?;
    let mut probe = lumped_estimate(params)?.min(v_max_hint);
    let mut doublings = 0;
    let mut upper = loop {
        let sol = solver.solve(probe, Some(&lower.deflection))?;
        if !sol.converged {
            break probe;
        }
        lower = sol;
        if probe >= v_max_hint {
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::NoPullIn { ceiling: probe });
            }
        }
        probe = if probe < v_max_hint {
            (2.0 * probe).min(v_max_hint)
        } else {
            2.0 * probe
        };
    };

    while upper - lower.voltage > tol {
        let mid = 0.5 * (lower.voltage + upper);
        let sol = solver.solve(mid, Some(&lower.deflection))?;
        if sol.converged {
            lower = sol;
        } else {
            upper = mid;
        }
    }

    let result = PullInResult {
        v_lower: lower.voltage,
        v_upper: upper,
        tip_at_lower: lower.tip(),
        bracket_width: upper - lower.voltage,
    };
    Ok((result, lower))
}

/// Tip closure predicted by the one-degree-of-freedom model: `G / 3`.
pub fn sdof_stability_limit(gap: f64) -> Result<f64> {
    positive("gap", gap)?;
    Ok(gap / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityComparison {
    /// Tip deflection at the last stable point over the gap.
    pub tip_over_gap: f64,
    /// The lumped-model value, 1/3.
    pub sdof_ratio: f64,
}

pub fn compare_stability(result: &PullInResult, params: &BeamParams) -> Result<StabilityComparison> {
    positive("gap", params.gap)?;
    Ok(StabilityComparison {
        tip_over_gap: result.tip_at_lower / params.gap,
        sdof_ratio: 1.0 / 3.0,
    })
}
