//! Static deflection under a DC voltage.
//!
//! Solves `EI y'''' = eps b V^2 / (2 (G - y)^2)` with a clamped root and a
//! free tip by successive substitution: the load is frozen at the previous
//! iterate, the linear banded bending system is solved exactly, repeat.
//! Failure to converge is returned as data, since it is how pull-in shows up.

mod grid;

pub use grid::{
    apply_bending_operator, build_grid, eliminate_ghosts, eliminate_ghosts_with_shear,
    with_ghosts, GhostScheme, GhostValues, Grid, GHOSTS_PER_END, MIN_NODES,
};
pub(crate) use grid::unit_bending_matrix;

use serde::{Deserialize, Serialize};

use crate::banded::BandedLu;
use crate::error::{non_negative, Error, Result};
use crate::model::{nondimensionalize, BeamParams};

pub const DEFAULT_GRID_NODES: usize = 201;

/// Iterates at or beyond this fraction of the gap count as contact.
pub const CONTACT_FRACTION: f64 = 0.99;

/// Consecutive growing updates that mark a run as diverging.
pub const GROWTH_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when `max|dy| / max|y|` drops below this.
    pub rel_tolerance: f64,
    pub max_iterations: usize,
    /// Under-relaxation factor in `(0, 1]`.
    pub relaxation: f64,
    pub ghost_scheme: GhostScheme,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tolerance: 1e-3,
            max_iterations: 500,
            relaxation: 1.0,
            ghost_scheme: GhostScheme::Mirror,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance.is_finite() && self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rel_tolerance",
                value: self.rel_tolerance,
                reason: "must be > 0",
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "relaxation",
                value: self.relaxation,
                reason: "must lie in (0, 1]",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// An iterate reached [`CONTACT_FRACTION`] of the gap.
    GapCrossed,
    /// The update grew for [`GROWTH_LIMIT`] consecutive iterations.
    Diverging,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSolution {
    /// Deflection at each physical node (m), clamp first.
    pub deflection: Vec<f64>,
    pub voltage: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_relative_change: f64,
    pub termination: Termination,
    pub ghost_scheme: GhostScheme,
}

impl StaticSolution {
    pub fn tip(&self) -> f64 {
        *self.deflection.last().unwrap_or(&0.0)
    }
}

/// Cold start from the undeflected beam.
pub fn solve_static(
    params: &BeamParams,
    voltage: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<StaticSolution> {
    solve_static_from(params, voltage, grid, opts, None)
}

/// Starts from `initial` (meters at physical nodes) when given. A converged
/// solution at a lower voltage keeps the iteration on the stable branch.
pub fn solve_static_from(
    params: &BeamParams,
    voltage: f64,
    grid: &Grid,
    opts: &SolverOptions,
    initial: Option<&[f64]>,
) -> Result<StaticSolution> {
    let solver = StaticSolver::new(params, grid, opts)?;
    solver.solve(voltage, initial)
}

/// Factorized bending operator for repeated solves on one beam and grid.
#[derive(Debug, Clone)]
pub struct StaticSolver {
    params: BeamParams,
    grid: Grid,
    opts: SolverOptions,
    lu: BandedLu,
}

impl StaticSolver {
    pub fn new(params: &BeamParams, grid: &Grid, opts: &SolverOptions) -> Result<Self> {
        params.validate()?;
        opts.validate()?;
        if (grid.length() - params.length).abs() > 1e-12 * params.length {
            return Err(Error::InvalidParameter {
                name: "grid.length",
                value: grid.length(),
                reason: "must equal the beam length",
            });
        }
        let (a, _) = unit_bending_matrix(grid.nodes(), opts.ghost_scheme);
        Ok(StaticSolver {
            params: *params,
            grid: *grid,
            opts: *opts,
            lu: a.factor()?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &BeamParams {
        &self.params
    }

    pub fn solve(&self, voltage: f64, initial: Option<&[f64]>) -> Result<StaticSolution> {
        let lambda = nondimensionalize(&self.params, voltage)?.lambda;
        let n = self.grid.nodes() - 1;
        let gap = self.params.gap;

        let mut w = match initial {
            Some(y) if y.len() == self.grid.nodes() => y[1..].iter().map(|v| v / gap).collect(),
            Some(y) => {
                return Err(Error::LengthMismatch {
                    expected: self.grid.nodes(),
                    got: y.len(),
                })
            }
            None => vec![0.0; n],
        };
        if w.iter().any(|v: &f64| !v.is_finite() || *v >= CONTACT_FRACTION) {
            return Err(Error::InvalidParameter {
                name: "initial",
                value: w.iter().cloned().fold(f64::NAN, f64::max),
                reason: "initial guess must lie inside the gap",
            });
        }

        let omega = self.opts.relaxation;
        let mut change = f64::INFINITY;
        let mut growing = 0usize;
        let mut next = vec![0.0; n];
        let mut termination = Termination::MaxIterations;
        let mut iterations = 0;

        for it in 1..=self.opts.max_iterations {
            iterations = it;
            for (r, wi) in next.iter_mut().zip(&w) {
                let d = 1.0 - wi;
                *r = lambda / (d * d);
            }
            self.lu.solve_in_place(&mut next);
            if omega < 1.0 {
                for (r, wi) in next.iter_mut().zip(&w) {
                    *r = omega * *r + (1.0 - omega) * wi;
                }
            }

            let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = next
                .iter()
                .zip(&w)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let new_change = if scale > 0.0 { diff / scale } else { diff };
            let crossed = next
                .iter()
                .any(|v| !v.is_finite() || *v >= CONTACT_FRACTION);

            growing = if new_change > change { growing + 1 } else { 0 };
            change = new_change;
            std::mem::swap(&mut w, &mut next);

            if crossed {
                termination = Termination::GapCrossed;
                break;
            }
            if change < self.opts.rel_tolerance {
                termination = Termination::Converged;
                break;
            }
            if growing >= GROWTH_LIMIT {
                termination = Termination::Diverging;
                break;
            }
        }

        let mut deflection = Vec::with_capacity(n + 1);
        deflection.push(0.0);
        deflection.extend(w.iter().map(|v| v * gap));
        Ok(StaticSolution {
            deflection,
            voltage,
            iterations,
            converged: termination == Termination::Converged,
            final_relative_change: change,
            termination,
            ghost_scheme: self.opts.ghost_scheme,
        })
    }
}

/// Max-norm imbalance of the discrete nondimensional equation
/// `w'''' - lambda / (1 - w)^2` over the unknown nodes.
pub fn residual_norm(sol: &StaticSolution, params: &BeamParams, grid: &Grid) -> Result<f64> {
    if sol.deflection.len() != grid.nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.nodes(),
            got: sol.deflection.len(),
        });
    }
    non_negative("gap", params.gap)?;
    let lambda = nondimensionalize(params, sol.voltage)?.lambda;
    let w: Vec<f64> = sol.deflection.iter().map(|y| y / params.gap).collect();
    if w.iter().any(|v| *v >= 1.0) {
        return Ok(f64::INFINITY);
    }
    let (a, _) = unit_bending_matrix(grid.nodes(), sol.ghost_scheme);
    let bent = a.matvec(&w[1..]);
    Ok(bent
        .iter()
        .zip(&w[1..])
        .map(|(b, wi)| (b - lambda / ((1.0 - wi) * (1.0 - wi))).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derived_properties;
    use approx::assert_relative_eq;

    const P: BeamParams = BeamParams::reference();

    fn grid(n: usize) -> Grid {
        build_grid(n, &P).unwrap()
    }

    #[test]
    fn zero_voltage_gives_zero_in_one_iteration() {
        let s = solve_static(&P, 0.0, &grid(201), &SolverOptions::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        assert!(s.deflection.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_volt_matches_uniform_load_formula() {
        let sec = derived_properties(&P).unwrap();
        let q = P.permittivity * P.width / (2.0 * P.gap * P.gap);
        let expected = q * P.length.powi(4) / (8.0 * sec.bending_stiffness);
        assert_relative_eq!(expected, 1.384e-9, max_relative = 1e-3);
        let s = solve_static(&P, 1.0, &grid(201), &SolverOptions::default()).unwrap();
        assert!(s.converged);
        assert_relative_eq!(s.tip(), expected, max_relative = 0.02);
    }

    #[test]
    fn profile_at_ten_volts_is_monotone_from_clamp() {
        let g = grid(201);
        let s = solve_static(&P, 10.0, &g, &SolverOptions::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.deflection[0], 0.0);
        assert!(s.deflection.windows(2).all(|w| w[1] > w[0]));
        assert!(s.tip() < P.gap);
        let r = residual_norm(&s, &P, &g).unwrap();
        assert!(r <= 10.0 * 1e-3, "residual {r}");
    }

    #[test]
    fn residual_of_zero_field() {
        let g = grid(51);
        let zero = StaticSolution {
            deflection: vec![0.0; 51],
            voltage: 10.0,
            iterations: 0,
            converged: false,
            final_relative_change: 0.0,
            termination: Termination::MaxIterations,
            ghost_scheme: GhostScheme::Mirror,
        };
        let lambda = nondimensionalize(&P, 10.0).unwrap().lambda;
        assert_relative_eq!(residual_norm(&zero, &P, &g).unwrap(), lambda, max_relative = 1e-14);
        let idle = StaticSolution { voltage: 0.0, ..zero };
        assert_eq!(residual_norm(&idle, &P, &g).unwrap(), 0.0);
    }

    #[test]
    fn far_above_pull_in_does_not_converge() {
        let s = solve_static(&P, 60.0, &grid(101), &SolverOptions::default()).unwrap();
        assert!(!s.converged);
        assert_ne!(s.termination, Termination::Converged);
    }

    #[test]
    fn negative_voltage_is_symmetric() {
        let g = grid(101);
        let o = SolverOptions::default();
        let a = solve_static(&P, 12.0, &g, &o).unwrap();
        let b = solve_static(&P, -12.0, &g, &o).unwrap();
        assert_eq!(a.deflection, b.deflection);
    }

    #[test]
    fn width_does_not_change_solution() {
        let o = SolverOptions::default();
        let a = solve_static(&P, 15.0, &grid(101), &o).unwrap();
        for b in [25e-6, 100e-6] {
            let q = P.with_width(b);
            let s = solve_static(&q, 15.0, &build_grid(101, &q).unwrap(), &o).unwrap();
            for (u, v) in a.deflection.iter().zip(&s.deflection) {
                assert!((u - v).abs() <= 1e-10 * u.abs().max(1e-30));
            }
        }
    }

    #[test]
    fn warm_start_reaches_same_solution() {
        let g = grid(101);
        let o = SolverOptions {
            rel_tolerance: 1e-10,
            max_iterations: 5000,
            ..Default::default()
        };
        let lo = solve_static(&P, 15.99, &g, &o).unwrap();
        let cold = solve_static(&P, 16.0, &g, &o).unwrap();
        let warm = solve_static_from(&P, 16.0, &g, &o, Some(&lo.deflection)).unwrap();
        assert!(warm.iterations < cold.iterations, "{} vs {}", warm.iterations, cold.iterations);
        assert_relative_eq!(warm.tip(), cold.tip(), max_relative = 1e-8);
    }

    #[test]
    fn relaxation_still_converges() {
        let g = grid(101);
        let o = SolverOptions {
            relaxation: 0.5,
            rel_tolerance: 1e-9,
            max_iterations: 5000,
            ..Default::default()
        };
        let full = SolverOptions {
            rel_tolerance: 1e-9,
            ..o
        };
        let full = SolverOptions { relaxation: 1.0, ..full };
        let a = solve_static(&P, 10.0, &g, &o).unwrap();
        let b = solve_static(&P, 10.0, &g, &full).unwrap();
        assert!(a.converged && b.converged);
        assert_relative_eq!(a.tip(), b.tip(), max_relative = 1e-7);
    }

    #[test]
    fn extrapolated_scheme_agrees_on_fine_grid() {
        let o = SolverOptions {
            rel_tolerance: 1e-9,
            ..Default::default()
        };
        let e = SolverOptions {
            ghost_scheme: GhostScheme::Extrapolated,
            ..o
        };
        let g = grid(401);
        let a = solve_static(&P, 10.0, &g, &o).unwrap();
        let b = solve_static(&P, 10.0, &g, &e).unwrap();
        assert_relative_eq!(a.tip(), b.tip(), max_relative = 1e-3);
    }

    #[test]
    fn invalid_inputs_are_errors() {
        let g = grid(51);
        let o = SolverOptions::default();
        assert!(solve_static(&P.with_gap(0.0), 1.0, &g, &o).is_err());
        assert!(solve_static(&P, 1.0, &Grid::new(51, 1.0).unwrap(), &o).is_err());
        let bad = SolverOptions {
            relaxation: 0.0,
            ..o
        };
        assert!(solve_static(&P, 1.0, &g, &bad).is_err());
        assert!(solve_static_from(&P, 1.0, &g, &o, Some(&[0.0; 3])).is_err());
    }
}
