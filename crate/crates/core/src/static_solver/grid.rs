//! Finite-difference grid, ghost-node closure and the bending stencil.
//!
//! Physical nodes run from the clamp (index 0) to the tip (index `n - 1`).
//! Two ghost nodes sit beyond each end; they never become unknowns and are
//! written as linear combinations of physical nodes:
//!
//! | condition            | stencil                                     |
//! |----------------------|---------------------------------------------|
//! | `y(0) = 0`           | `y_0 = 0`                                   |
//! | `y'(0) = 0`          | `y_-2 - 8 y_-1 + 8 y_1 - y_2 = 0`           |
//! | `y''(L) = 0`         | `-y_t-2 + 16 y_t-1 - 30 y_t + 16 y_t+1 - y_t+2 = 0` |
//! | `EI y'''(L) = S`     | `(-y_t-2 + 2 y_t-1 - 2 y_t+1 + y_t+2) / 2h^3 = S / EI` |
//!
//! The fourth-order slope stencil alone leaves the clamp ghosts one equation
//! short. [`GhostScheme::Mirror`] closes it with the second-order central slope
//! `y_-1 = y_1`, which makes `y_-2 = y_2`. [`GhostScheme::Extrapolated`] closes
//! it instead with a vanishing fourth difference at the clamp node, which is
//! the arrangement the classic hand-derived update formulas use.

use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{positive, Error, Result};
use crate::model::BeamParams;

pub const MIN_NODES: usize = 7;
pub const GHOSTS_PER_END: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: usize,
    length: f64,
}

impl Grid {
    pub fn new(nodes: usize, length: f64) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::GridTooSmall {
                got: nodes,
                min: MIN_NODES,
            });
        }
        positive("length", length)?;
        Ok(Grid { nodes, length })
    }

    /// Physical nodes, clamp through tip inclusive.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Physical plus ghost nodes.
    pub fn total_nodes(&self) -> usize {
        self.nodes + 2 * GHOSTS_PER_END
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Node spacing in meters.
    pub fn spacing(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    /// Node spacing on the unit interval.
    pub fn unit_spacing(&self) -> f64 {
        1.0 / (self.nodes - 1) as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.nodes).map(|i| i as f64 * h).collect()
    }

    pub fn tip(&self) -> usize {
        self.nodes - 1
    }
}

pub fn build_grid(nodes: usize, params: &BeamParams) -> Result<Grid> {
    params.validate()?;
    Grid::new(nodes, params.length)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostScheme {
    /// `y_-1 = y_1`, `y_-2 = y_2`.
    #[default]
    Mirror,
    /// `y_-1 = 3 y_1 - y_2 / 2`, `y_-2 = 16 y_1 - 3 y_2` (with `y_0 = 0`).
    Extrapolated,
}

/// A ghost value as `sum(w_k * y[node_k]) + shear * s`, where
/// `s = 2 h^3 y'''(L)` is the prescribed tip third-derivative term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GhostRelation {
    pub terms: [(usize, f64); 3],
    pub shear: f64,
}

impl GhostRelation {
    fn eval(&self, field: &[f64], s: f64) -> f64 {
        self.terms.iter().map(|&(k, w)| w * field[k]).sum::<f64>() + self.shear * s
    }
}

/// Relations for ghosts `[-2, -1, n, n + 1]`.
pub(crate) fn ghost_relations(nodes: usize, scheme: GhostScheme) -> [GhostRelation; 4] {
    let (a, b, c) = (nodes - 3, nodes - 2, nodes - 1);
    let (outer_clamp, inner_clamp) = match scheme {
        GhostScheme::Mirror => (
            GhostRelation {
                terms: [(0, 0.0), (1, 0.0), (2, 1.0)],
                shear: 0.0,
            },
            GhostRelation {
                terms: [(0, 0.0), (1, 1.0), (2, 0.0)],
                shear: 0.0,
            },
        ),
        GhostScheme::Extrapolated => (
            GhostRelation {
                terms: [(0, -12.0), (1, 16.0), (2, -3.0)],
                shear: 0.0,
            },
            GhostRelation {
                terms: [(0, -1.5), (1, 3.0), (2, -0.5)],
                shear: 0.0,
            },
        ),
    };
    let inner_tip = GhostRelation {
        terms: [(a, 1.0 / 7.0), (b, -9.0 / 7.0), (c, 15.0 / 7.0)],
        shear: 1.0 / 14.0,
    };
    let outer_tip = GhostRelation {
        terms: [(a, 9.0 / 7.0), (b, -32.0 / 7.0), (c, 30.0 / 7.0)],
        shear: 8.0 / 7.0,
    };
    [outer_clamp, inner_clamp, inner_tip, outer_tip]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhostValues {
    /// Node `-2`.
    pub clamp_outer: f64,
    /// Node `-1`.
    pub clamp_inner: f64,
    /// Node `n`.
    pub tip_inner: f64,
    /// Node `n + 1`.
    pub tip_outer: f64,
}

/// Ghost values that make `field` satisfy the discrete clamp slope and the
/// free-end (`y'' = 0`, `y''' = 0`) conditions.
pub fn eliminate_ghosts(field: &[f64], grid: &Grid, scheme: GhostScheme) -> Result<GhostValues> {
    eliminate_ghosts_with_shear(field, grid, scheme, 0.0)
}

/// As [`eliminate_ghosts`] with a prescribed tip third derivative `y'''(L)`
/// (units of `field` per length cubed).
pub fn eliminate_ghosts_with_shear(
    field: &[f64],
    grid: &Grid,
    scheme: GhostScheme,
    tip_third_derivative: f64,
) -> Result<GhostValues> {
    if field.len() != grid.nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.nodes(),
            got: field.len(),
        });
    }
    let s = 2.0 * grid.spacing().powi(3) * tip_third_derivative;
    let [g0, g1, g2, g3] = ghost_relations(grid.nodes(), scheme);
    Ok(GhostValues {
        clamp_outer: g0.eval(field, s),
        clamp_inner: g1.eval(field, s),
        tip_inner: g2.eval(field, s),
        tip_outer: g3.eval(field, s),
    })
}

/// Physical field padded with its ghosts: length `nodes + 4`, physical node
/// `i` at index `i + 2`.
pub fn with_ghosts(field: &[f64], grid: &Grid, scheme: GhostScheme) -> Result<Vec<f64>> {
    let g = eliminate_ghosts(field, grid, scheme)?;
    let mut out = Vec::with_capacity(grid.total_nodes());
    out.push(g.clamp_outer);
    out.push(g.clamp_inner);
    out.extend_from_slice(field);
    out.push(g.tip_inner);
    out.push(g.tip_outer);
    Ok(out)
}

/// Five-point fourth difference at every physical node of a ghost-padded
/// field (see [`with_ghosts`]), in units of field per meter^4.
pub fn apply_bending_operator(ghosted: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    if ghosted.len() != grid.total_nodes() {
        return Err(Error::LengthMismatch {
            expected: grid.total_nodes(),
            got: ghosted.len(),
        });
    }
    let inv_h4 = grid.spacing().powi(-4);
    Ok(ghosted
        .windows(5)
        .map(|w| (w[0] - 4.0 * w[1] + 6.0 * w[2] - 4.0 * w[3] + w[4]) * inv_h4)
        .collect())
}

const STENCIL: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];

/// Bending operator on the unknowns `1..n` (clamp node eliminated) of the
/// unit-length beam, ghosts substituted. Row/column `k` is physical node `k + 1`.
///
/// The second return value holds, per row, the coefficient multiplying the
/// tip shear term `s = 2 h^3 y'''(1)`.
pub(crate) fn unit_bending_matrix(nodes: usize, scheme: GhostScheme) -> (BandedMatrix, Vec<f64>) {
    let n = nodes - 1;
    let inv_h4 = ((nodes - 1) as f64).powi(4);
    let relations = ghost_relations(nodes, scheme);
    let mut a = BandedMatrix::zeros(n, 2, 2);
    let mut shear = vec![0.0; n];

    let put = |a: &mut BandedMatrix, row: usize, node: usize, w: f64| {
        if node > 0 {
            a.add(row, node - 1, w);
        }
    };

    for i in 1..nodes {
        let row = i - 1;
        for (k, c) in STENCIL.iter().enumerate() {
            let w = c * inv_h4;
            // node index shifted by 2 so ghosts are representable
            let shifted = i + k;
            match shifted {
                0 | 1 => {
                    let rel = &relations[shifted];
                    for &(node, t) in &rel.terms {
                        put(&mut a, row, node, w * t);
                    }
                    shear[row] += w * rel.shear;
                }
                s if s - 2 < nodes => put(&mut a, row, s - 2, w),
                s => {
                    let rel = &relations[2 + (s - 2 - nodes)];
                    for &(node, t) in &rel.terms {
                        put(&mut a, row, node, w * t);
                    }
                    shear[row] += w * rel.shear;
                }
            }
        }
    }
    (a, shear)
}
