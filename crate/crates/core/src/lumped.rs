//! One-degree-of-freedom spring/capacitor pull-in.
//!
//! A rigid plate of area `A` on a spring `K_m`, a gap `G` above ground. The
//! electric force and its stiffness are
//! `F_e = eps A V^2 / (2 (G - y)^2)` and `K_e = eps A V^2 / (G - y)^3`.
//! Pull-in is where both the forces and their slopes balance: `y = G / 3`,
//! `V_PI = sqrt(8 G^3 K_m / (27 eps A))`.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpedModel {
    /// Mechanical spring constant (N/m).
    pub spring: f64,
    /// Electrode area (m^2).
    pub area: f64,
    /// Gap (m).
    pub gap: f64,
    /// Permittivity (F/m).
    pub permittivity: f64,
    /// Elastic nonlinearity `y K_m / F_m`; 1 for a linear spring.
    pub gamma: f64,
}

impl LumpedModel {
    pub fn new(spring: f64, area: f64, gap: f64, permittivity: f64) -> Result<Self> {
        let m = LumpedModel {
            spring,
            area,
            gap,
            permittivity,
            gamma: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        positive("spring", self.spring)?;
        positive("area", self.area)?;
        positive("gap", self.gap)?;
        positive("permittivity", self.permittivity)?;
        positive("gamma", self.gamma)?;
        Ok(())
    }

    /// `(F_e, K_e)` at voltage `v` and displacement `y`.
    pub fn electric_force_and_stiffness(&self, v: f64, y: f64) -> Result<(f64, f64)> {
        if y >= self.gap || y.is_nan() {
            return Err(Error::GapClosed {
                deflection: y,
                gap: self.gap,
            });
        }
        let d = self.gap - y;
        let c = self.permittivity * self.area * v * v;
        Ok((0.5 * c / (d * d), c / (d * d * d)))
    }

    pub fn pullin_position(&self) -> Result<f64> {
        if self.gamma != 1.0 {
            return Err(Error::Unsupported("pull-in position for nonlinear springs (gamma != 1)"));
        }
        Ok(self.gap / 3.0)
    }

    pub fn pullin_voltage_1d(&self) -> f64 {
        (8.0 / 27.0 * self.gap.powi(3) * self.spring / (self.permittivity * self.area)).sqrt()
    }

    /// Stable equilibrium `K_m y (G - y)^2 = eps A V^2 / 2` on `[0, G/3]`.
    pub fn equilibrium_1d(&self, v: f64) -> Result<f64> {
        non_negative("voltage", v)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        let v_pi = self.pullin_voltage_1d();
        if v > v_pi * (1.0 + 1e-12) {
            return Err(Error::PastPullIn(format!(
                "{v} V exceeds the lumped pull-in voltage {v_pi} V"
            )));
        }
        let target = 0.5 * self.permittivity * self.area * v * v;
        let balance = |y: f64| self.spring * y * (self.gap - y).powi(2) - target;

        // balance is increasing on [0, G/3]
        let (mut lo, mut hi) = (0.0, self.gap / 3.0);
        if balance(hi) <= 0.0 {
            return Ok(hi);
        }
        let tol = 1e-12 * self.gap;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if balance(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
