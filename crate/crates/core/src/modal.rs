//! Small-amplitude vibration about a DC equilibrium.
//!
//! Linearizing the electrostatic load about `y_s` gives
//! `EI u'''' + m u_tt - k_e(x) u = 0` with `k_e = eps b V_p^2 / (G - y_s)^3`.
//! The discrete pencil `(K, M)` is nondimensional (`K = D4 - diag(k_e L^4 / EI)`,
//! `M = I` plus `M_tip / (m h)` on the tip row) and its lowest eigenpairs are
//! found by inverse power iteration with oblique deflation. The bending
//! operator is not symmetric because of the free-end ghost closure, so left
//! eigenvectors are iterated alongside the right ones.

use serde::{Deserialize, Serialize};

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{Error, Result};
use crate::model::{derived_properties, linearized_stiffness_density, nondimensionalize, BeamParams};
use crate::static_solver::{unit_bending_matrix, Grid, StaticSolution};

pub const MAX_MODES: usize = 5;
const EIGEN_TOLERANCE: f64 = 1e-10;
const VECTOR_TOLERANCE: f64 = 1e-11;
const MAX_POWER_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct ModalSystem {
    /// Nondimensional stiffness on unknown nodes `1..n`.
    pub stiffness: BandedMatrix,
    /// Nondimensional lumped mass on the same nodes.
    pub mass: Vec<f64>,
    /// `k_e(x)` at every physical node (N/m^2).
    pub softening: Vec<f64>,
    pub bias_voltage: f64,
    /// Seconds per nondimensional time unit.
    pub t_star: f64,
}

pub fn assemble_modal_system(
    sol: &StaticSolution,
    params: &BeamParams,
    grid: &Grid,
) -> Result<ModalSystem> {
    if !sol.converged {
        return Err(Error::NotConverged {
            voltage: sol.voltage,
        });
    }
    if sol.deflection.len() != grid.nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.nodes(),
            got: sol.deflection.len(),
        });
    }
    let section = derived_properties(params)?;
    let group = nondimensionalize(params, sol.voltage)?;
    let softening = sol
        .deflection
        .iter()
        .map(|&y| linearized_stiffness_density(y, sol.voltage, params))
        .collect::<Result<Vec<_>>>()?;

    let (mut stiffness, _) = unit_bending_matrix(grid.nodes(), sol.ghost_scheme);
    let to_unit = params.length.powi(4) / section.bending_stiffness;
    let diag: Vec<f64> = softening[1..].iter().map(|k| -k * to_unit).collect();
    stiffness.add_diagonal(&diag);

    let mut mass = vec![1.0; grid.nodes() - 1];
    *mass.last_mut().unwrap() += group.mu / grid.unit_spacing();

    Ok(ModalSystem {
        stiffness,
        mass,
        softening,
        bias_voltage: sol.voltage,
        t_star: group.t_star,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalResult {
    /// Angular frequencies (rad/s), ascending.
    pub frequencies: Vec<f64>,
    /// Nondimensional eigenvalues `(omega t_star)^2`.
    pub eigenvalues: Vec<f64>,
    /// Shapes over physical nodes, clamp included, scaled to unit peak.
    pub mode_shapes: Vec<Vec<f64>>,
    /// `|K u - lambda M u| / |K u|` per mode.
    pub residuals: Vec<f64>,
    pub bias_voltage: f64,
}

impl ModalResult {
    pub fn fundamental(&self) -> f64 {
        self.frequencies[0]
    }
}

pub fn lowest_modes(system: &ModalSystem, n_modes: usize) -> Result<ModalResult> {
    if n_modes == 0 || n_modes > MAX_MODES {
        return Err(Error::InvalidParameter {
            name: "n_modes",
            value: n_modes as f64,
            reason: "must lie in 1..=5",
        });
    }
    let past = |_| {
        Error::PastPullIn(format!(
            "stiffness is singular at {} V; equilibrium is not stable",
            system.bias_voltage
        ))
    };
    let lu = system.stiffness.factor().map_err(past)?;
    let lu_t = system.stiffness.transpose().factor().map_err(past)?;
    let m = &system.mass;
    let n = m.len();

    let mut right: Vec<Vec<f64>> = Vec::with_capacity(n_modes);
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(n_modes);
    let mut result = ModalResult {
        frequencies: vec![],
        eigenvalues: vec![],
        mode_shapes: vec![],
        residuals: vec![],
        bias_voltage: system.bias_voltage,
    };

    for k in 0..n_modes {
        let start: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.25 * ((i + 1) as f64 * (k + 1) as f64 * 0.731).sin())
            .collect();
        let v = inverse_iteration(&lu, &system.stiffness, m, &start, &right, &left);
        let lt = system.stiffness.transpose();
        let l = inverse_iteration(&lu_t, &lt, m, &start, &left, &right);

        let kv = system.stiffness.matvec(&v);
        let theta = dot(&l, &kv) / weighted_dot(&l, m, &v);
        if theta <= 0.0 {
            return Err(Error::PastPullIn(format!(
                "mode {} has eigenvalue {theta:e} at {} V",
                k + 1,
                system.bias_voltage
            )));
        }
        let res: f64 = kv
            .iter()
            .zip(&v)
            .zip(m)
            .map(|((a, vi), mi)| (a - theta * mi * vi).powi(2))
            .sum::<f64>()
            .sqrt()
            / dot(&kv, &kv).sqrt();

        let mut shape = Vec::with_capacity(n + 1);
        shape.push(0.0);
        shape.extend_from_slice(&v);
        result.frequencies.push(theta.sqrt() / system.t_star);
        result.eigenvalues.push(theta);
        result.mode_shapes.push(shape);
        result.residuals.push(res);
        right.push(v);
        left.push(l);
    }
    Ok(result)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn weighted_dot(a: &[f64], w: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(w).zip(b).map(|((x, wi), y)| x * wi * y).sum()
}

/// Scales so the largest-magnitude entry is exactly +1.
fn normalize_peak(x: &mut [f64]) {
    let peak = x
        .iter()
        .cloned()
        .fold(0.0f64, |p, v| if v.abs() > p.abs() { v } else { p });
    if peak != 0.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
}

/// Removes components along `found` using the dual set `duals`:
/// `x -= f (d' M x) / (d' M f)`.
fn deflate(x: &mut [f64], m: &[f64], found: &[Vec<f64>], duals: &[Vec<f64>]) {
    for (f, d) in found.iter().zip(duals) {
        let c = weighted_dot(d, m, x) / weighted_dot(d, m, f);
        x.iter_mut().zip(f).for_each(|(xi, fi)| *xi -= c * fi);
    }
}

fn inverse_iteration(
    lu: &BandedLu,
    op: &BandedMatrix,
    m: &[f64],
    start: &[f64],
    found: &[Vec<f64>],
    duals: &[Vec<f64>],
) -> Vec<f64> {
    let mut x = start.to_vec();
    deflate(&mut x, m, found, duals);
    normalize_peak(&mut x);
    let mut theta_prev = f64::NAN;
    for _ in 0..MAX_POWER_ITERATIONS {
        let mut y: Vec<f64> = x.iter().zip(m).map(|(a, b)| a * b).collect();
        lu.solve_in_place(&mut y);
        deflate(&mut y, m, found, duals);
        normalize_peak(&mut y);
        let theta = dot(&y, &op.matvec(&y)) / weighted_dot(&y, m, &y);
        let dx = y
            .iter()
            .zip(&x)
            .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        x = y;
        if (theta - theta_prev).abs() <= EIGEN_TOLERANCE * theta.abs() && dx <= VECTOR_TOLERANCE {
            break;
        }
        theta_prev = theta;
    }
    x
}
