//! Transient response to a DC + AC drive.
//!
//! Space uses the same ghost-node bending stencil as the statics; time uses
//! the five-level backward difference
//! `y_tt ~ (11 y[j-4] - 56 y[j-3] + 114 y[j-2] - 104 y[j-1] + 35 y[j]) / (12 k^2)`.
//! Each step is implicit: the linear part (bending, inertia, tip-mass shear)
//! is factorized once per run and the electrostatic load, which depends on
//! the new row, is resolved by fixed-point iteration.
//!
//! Rows `0..=4` are zero (beam at rest and undeflected), so the drive acts
//! from row 5 on. Row `j` sits at `t = j dt`.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::banded::BandedLu;
use crate::error::{non_negative, positive, Error, Result};
use crate::model::{nondimensionalize, BeamParams};
use crate::static_solver::{unit_bending_matrix, GhostScheme, Grid, CONTACT_FRACTION};

/// Rows held at zero before the drive acts.
pub const STARTUP_ROWS: usize = 5;

const BDF: [f64; 5] = [11.0, -56.0, 114.0, -104.0, 35.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// DC bias (V).
    pub dc: f64,
    /// AC amplitude (V).
    pub ac_amplitude: f64,
    /// AC angular frequency (rad/s).
    pub ac_frequency: f64,
    /// AC phase (rad).
    pub ac_phase: f64,
}

impl Drive {
    pub fn dc(v: f64) -> Self {
        Drive {
            dc: v,
            ac_amplitude: 0.0,
            ac_frequency: 0.0,
            ac_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("dc", self.dc)?;
        non_negative("ac_amplitude", self.ac_amplitude)?;
        if !self.ac_frequency.is_finite() || !self.ac_phase.is_finite() {
            return Err(Error::InvalidParameter {
                name: "ac_frequency",
                value: self.ac_frequency,
                reason: "frequency and phase must be finite",
            });
        }
        Ok(())
    }

    /// `V_p + v_a sin(omega t + phi)`.
    pub fn voltage_at(&self, t: f64) -> f64 {
        if self.ac_amplitude == 0.0 {
            return self.dc;
        }
        self.dc + self.ac_amplitude * (self.ac_frequency * t + self.ac_phase.rem_euclid(TAU)).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicOptions {
    /// Per-step fixed-point tolerance on `max|dy| / max|y|`.
    pub rel_tolerance: f64,
    pub max_fixed_point_iterations: usize,
    /// Keep every n-th full field; `None` keeps only the tip.
    pub snapshot_every: Option<usize>,
    pub ghost_scheme: GhostScheme,
}

impl Default for DynamicOptions {
    fn default() -> Self {
        DynamicOptions {
            rel_tolerance: 1e-3,
            max_fixed_point_iterations: 100,
            snapshot_every: None,
            ghost_scheme: GhostScheme::Mirror,
        }
    }
}

/// `t_star / 2000`.
pub fn default_time_step(params: &BeamParams) -> Result<f64> {
    Ok(nondimensionalize(params, 0.0)?.t_star / 2000.0)
}

/// Largest step that keeps every grid mode below the band where the
/// backward stencil amplifies (`omega k` between about 0.05 and 1.6).
pub fn stable_time_step(params: &BeamParams, grid: &Grid) -> Result<f64> {
    let t_star = nondimensionalize(params, 0.0)?.t_star;
    let omega_max = 4.0 / grid.unit_spacing().powi(2);
    Ok(STABLE_OMEGA_K * t_star / omega_max)
}

const STABLE_OMEGA_K: f64 = 0.05;

/// Five-level backward second difference; `history` runs `j-4 ..= j`.
pub fn backward_second_derivative(history: [f64; 5], k: f64) -> f64 {
    let s: f64 = BDF.iter().zip(history).map(|(c, y)| c * y).sum();
    s / (12.0 * k * k)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Advanced { row: Vec<f64>, iterations: usize },
    /// The fixed point failed or the field reached the electrode.
    PullIn { row: Vec<f64>, iterations: usize },
}

/// Factorized implicit step for one beam, grid and time step.
#[derive(Debug, Clone)]
pub struct TimeStepper {
    params: BeamParams,
    grid: Grid,
    opts: DynamicOptions,
    dt: f64,
    lambda_per_v2: f64,
    /// `1 / (12 kappa^2)` with `kappa = dt / t_star`.
    inertia: f64,
    /// Per-row weight of the tip history in the tip-mass shear term.
    tip_coupling: Vec<f64>,
    lu: BandedLu,
}

impl TimeStepper {
    pub fn new(params: &BeamParams, grid: &Grid, dt: f64, opts: &DynamicOptions) -> Result<Self> {
        params.validate()?;
        positive("dt", dt)?;
        positive("rel_tolerance", opts.rel_tolerance)?;
        if opts.max_fixed_point_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_fixed_point_iterations",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        let group = nondimensionalize(params, 1.0)?;
        let kappa = dt / group.t_star;
        let inertia = 1.0 / (12.0 * kappa * kappa);

        let (mut a, shear) = unit_bending_matrix(grid.nodes(), opts.ghost_scheme);
        let n = grid.nodes() - 1;
        a.add_diagonal(&vec![BDF[4] * inertia; n]);

        // s = 2 h^3 y'''(1) = 2 h^3 mu y_tt(tip)
        let h3 = grid.unit_spacing().powi(3);
        let tip_coupling: Vec<f64> = shear
            .iter()
            .map(|w| w * 2.0 * h3 * group.mu * inertia)
            .collect();
        for (row, c) in tip_coupling.iter().enumerate() {
            if *c != 0.0 {
                a.add(row, n - 1, BDF[4] * c);
            }
        }

        Ok(TimeStepper {
            params: *params,
            grid: *grid,
            opts: *opts,
            dt,
            lambda_per_v2: group.lambda,
            inertia,
            tip_coupling,
            lu: a.factor()?,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// New row (m, physical nodes) from rows `j-4 ..= j-1` at voltage `v`.
    pub fn advance(&self, history: [&[f64]; 4], v: f64) -> Result<StepOutcome> {
        let nodes = self.grid.nodes();
        for row in history {
            if row.len() != nodes {
                return Err(Error::LengthMismatch {
                    expected: nodes,
                    got: row.len(),
                });
            }
        }
        let gap = self.params.gap;
        let n = nodes - 1;
        let lambda = self.lambda_per_v2 * v * v;

        // known part of the backward difference, per unknown node
        let hist: Vec<f64> = (1..nodes)
            .map(|i| {
                (0..4)
                    .map(|l| BDF[l] * history[l][i])
                    .sum::<f64>()
                    / gap
            })
            .collect();
        let tip_hist = hist[n - 1];
        let fixed: Vec<f64> = hist
            .iter()
            .zip(&self.tip_coupling)
            .map(|(hv, c)| -self.inertia * hv - c * tip_hist)
            .collect();

        let mut w: Vec<f64> = history[3][1..].iter().map(|y| y / gap).collect();
        let mut next = vec![0.0; n];
        let mut iterations = 0;
        let mut converged = false;
        for it in 1..=self.opts.max_fixed_point_iterations {
            iterations = it;
            for ((r, wi), f) in next.iter_mut().zip(&w).zip(&fixed) {
                let d = 1.0 - wi;
                *r = lambda / (d * d) + f;
            }
            self.lu.solve_in_place(&mut next);
            let scale = next.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = next
                .iter()
                .zip(&w)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            std::mem::swap(&mut w, &mut next);
            if w.iter().any(|x| !x.is_finite() || *x >= CONTACT_FRACTION) {
                break;
            }
            let change = if scale > 0.0 { diff / scale } else { diff };
            if change < self.opts.rel_tolerance {
                converged = true;
                break;
            }
        }

        let mut row = Vec::with_capacity(nodes);
        row.push(0.0);
        row.extend(w.iter().map(|x| x * gap));
        Ok(if converged {
            StepOutcome::Advanced { row, iterations }
        } else {
            StepOutcome::PullIn { row, iterations }
        })
    }
}

/// Convenience single step; prefer [`TimeStepper`] in loops.
#[allow(clippy::too_many_arguments)]
pub fn advance_step(
    history: [&[f64]; 4],
    drive: &Drive,
    t: f64,
    dt: f64,
    params: &BeamParams,
    grid: &Grid,
    opts: &DynamicOptions,
) -> Result<StepOutcome> {
    drive.validate()?;
    TimeStepper::new(params, grid, dt, opts)?.advance(history, drive.voltage_at(t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub field: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicTrace {
    pub times: Vec<f64>,
    pub tip_history: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub fixed_point_iterations: Vec<usize>,
    pub step_dt: f64,
    /// First step at which the beam pulled in; that row is not recorded.
    pub diverged_at: Option<usize>,
}

pub fn simulate(
    params: &BeamParams,
    drive: &Drive,
    duration: f64,
    dt: f64,
    grid: &Grid,
    opts: &DynamicOptions,
) -> Result<DynamicTrace> {
    drive.validate()?;
    positive("dt", dt)?;
    if duration.is_nan() || duration < STARTUP_ROWS as f64 * dt {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: duration,
            reason: "must cover at least five time steps",
        });
    }
    let stepper = TimeStepper::new(params, grid, dt, opts)?;
    let limit = stable_time_step(params, grid)?;
    if dt > limit {
        log::warn!("dt = {dt:e} s exceeds {limit:e} s; intermediate modes may grow without bound");
    }
    let last = (duration / dt + 1e-9).floor() as usize;

    let nodes = grid.nodes();
    let mut trace = DynamicTrace {
        times: Vec::with_capacity(last + 1),
        tip_history: Vec::with_capacity(last + 1),
        snapshots: vec![],
        fixed_point_iterations: vec![0; STARTUP_ROWS],
        step_dt: dt,
        diverged_at: None,
    };
    let mut rows: VecDeque<Vec<f64>> = VecDeque::with_capacity(5);
    for j in 0..STARTUP_ROWS {
        rows.push_back(vec![0.0; nodes]);
        record(&mut trace, opts, j, dt, &rows[rows.len() - 1]);
    }
    rows.pop_front();

    let mut rising = 0usize;
    let mut warned = false;
    for j in STARTUP_ROWS..=last {
        let history = [&rows[0][..], &rows[1][..], &rows[2][..], &rows[3][..]];
        match stepper.advance(history, drive.voltage_at(j as f64 * dt))? {
            StepOutcome::Advanced { row, iterations } => {
                let prev = *trace.fixed_point_iterations.last().unwrap();
                rising = if iterations > prev { rising + 1 } else { 0 };
                if rising >= 5 && !warned {
                    log::warn!("fixed-point iterations rising at step {j}; time step may be too large");
                    warned = true;
                }
                trace.fixed_point_iterations.push(iterations);
                record(&mut trace, opts, j, dt, &row);
                rows.pop_front();
                rows.push_back(row);
            }
            StepOutcome::PullIn { .. } => {
                trace.diverged_at = Some(j);
                break;
            }
        }
    }
    Ok(trace)
}

fn record(trace: &mut DynamicTrace, opts: &DynamicOptions, j: usize, dt: f64, row: &[f64]) {
    trace.times.push(j as f64 * dt);
    trace.tip_history.push(*row.last().unwrap());
    if let Some(every) = opts.snapshot_every {
        if every > 0 && j.is_multiple_of(every) {
            trace.snapshots.push(Snapshot {
                step: j,
                field: row.to_vec(),
            });
        }
    }
}
