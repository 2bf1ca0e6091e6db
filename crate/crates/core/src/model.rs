//! Beam parameters and pointwise physics kernels.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

/// Vacuum permittivity (F/m) as used in the reference parameter set.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8e-12;

/// Geometry, material and tip mass of the cantilever. All SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Length `L` (m).
    pub length: f64,
    /// Width `b` (m).
    pub width: f64,
    /// Thickness `h` (m).
    pub thickness: f64,
    /// Initial electrode gap `G` (m).
    pub gap: f64,
    /// Young's modulus `E` (Pa).
    pub youngs: f64,
    /// Density `rho` (kg/m^3).
    pub density: f64,
    /// Permittivity of the gap medium (F/m).
    pub permittivity: f64,
    /// Lumped tip (proof) mass `M` (kg). Statics do not depend on it.
    pub tip_mass: f64,
}

impl BeamParams {
    /// Silicon cantilever, 300 x 50 x 3 um over a 3 um gap, no tip mass.
    pub const fn reference() -> Self {
        BeamParams {
            length: 300e-6,
            width: 50e-6,
            thickness: 3e-6,
            gap: 3e-6,
            youngs: 160e9,
            density: 2330.0,
            permittivity: VACUUM_PERMITTIVITY,
            tip_mass: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("length", self.length)?;
        positive("width", self.width)?;
        positive("thickness", self.thickness)?;
        positive("gap", self.gap)?;
        positive("youngs", self.youngs)?;
        positive("density", self.density)?;
        positive("permittivity", self.permittivity)?;
        non_negative("tip_mass", self.tip_mass)?;
        if self.thickness >= self.length {
            log::warn!(
                "thickness {} m is not small against length {} m; slender-beam theory is questionable",
                self.thickness,
                self.length
            );
        }
        Ok(())
    }

    pub fn with_length(self, length: f64) -> Self {
        BeamParams { length, ..self }
    }

    pub fn with_width(self, width: f64) -> Self {
        BeamParams { width, ..self }
    }

    pub fn with_thickness(self, thickness: f64) -> Self {
        BeamParams { thickness, ..self }
    }

    pub fn with_gap(self, gap: f64) -> Self {
        BeamParams { gap, ..self }
    }

    /// `lambda / V^2`: the nondimensional load per squared volt.
    ///
    /// Written as `6 eps L^4 / (E h^3 G^3)`, which is `eps b L^4 / (2 E I G^3)`
    /// with `I = b h^3 / 12` cancelled, so width drops out bit-exactly.
    pub fn lambda_per_volt_sq(&self) -> f64 {
        6.0 * self.permittivity * self.length.powi(4)
            / (self.youngs * self.thickness.powi(3) * self.gap.powi(3))
    }

    /// Voltage at which the nondimensional load reaches `lambda`.
    pub fn voltage_for_lambda(&self, lambda: f64) -> f64 {
        (lambda / self.lambda_per_volt_sq()).sqrt()
    }
}

impl Default for BeamParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionProps {
    /// Area moment `b h^3 / 12` (m^4).
    pub inertia: f64,
    /// Mass per unit length `rho b h` (kg/m).
    pub line_mass: f64,
    /// Bending stiffness `E I` (N m^2).
    pub bending_stiffness: f64,
}

pub fn derived_properties(params: &BeamParams) -> Result<SectionProps> {
    params.validate()?;
    let inertia = params.width * params.thickness.powi(3) / 12.0;
    Ok(SectionProps {
        inertia,
        line_mass: params.density * params.width * params.thickness,
        bending_stiffness: params.youngs * inertia,
    })
}

fn remaining_gap(y: f64, params: &BeamParams) -> Result<f64> {
    if y >= params.gap || y.is_nan() {
        return Err(Error::GapClosed {
            deflection: y,
            gap: params.gap,
        });
    }
    Ok(params.gap - y)
}

/// Parallel-plate load per unit length (N/m) at deflection `y` and voltage `v`.
pub fn electrostatic_load(y: f64, v: f64, params: &BeamParams) -> Result<f64> {
    let d = remaining_gap(y, params)?;
    Ok(params.permittivity * params.width * v * v / (2.0 * d * d))
}

/// Derivative of [`electrostatic_load`] with respect to `y` (N/m^2): the
/// electrostatic softening about an equilibrium `y_s` at bias `v_p`.
pub fn linearized_stiffness_density(y_s: f64, v_p: f64, params: &BeamParams) -> Result<f64> {
    let d = remaining_gap(y_s, params)?;
    Ok(params.permittivity * params.width * v_p * v_p / (d * d * d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessGroup {
    /// `eps b L^4 V^2 / (2 E I G^3)`.
    pub lambda: f64,
    /// Tip-mass ratio `M / (m L)`.
    pub mu: f64,
    /// Time scale `L^2 sqrt(m / EI)` (s).
    pub t_star: f64,
}

pub fn nondimensionalize(params: &BeamParams, v: f64) -> Result<DimensionlessGroup> {
    let section = derived_properties(params)?;
    if !v.is_finite() {
        return Err(Error::InvalidParameter {
            name: "voltage",
            value: v,
            reason: "must be finite",
        });
    }
    Ok(DimensionlessGroup {
        lambda: params.lambda_per_volt_sq() * v * v,
        mu: params.tip_mass / (section.line_mass * params.length),
        t_star: params.length.powi(2) * (section.line_mass / section.bending_stiffness).sqrt(),
    })
}
