//! JSON run configuration. Every field is optional; flags override it and
//! the reference beam fills whatever neither sets.

use std::path::Path;

use anyhow::Context;
use pullin_core::dynamic::Drive;
use pullin_core::study::{Outputs, VaryParam};
use pullin_core::SolverOptions;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub length: Option<f64>,
    pub width: Option<f64>,
    pub thickness: Option<f64>,
    pub gap: Option<f64>,
    pub youngs: Option<f64>,
    pub density: Option<f64>,
    pub permittivity: Option<f64>,
    pub tip_mass: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub vary: Option<VaryParam>,
    pub values: Option<Vec<f64>>,
    pub voltages: Option<Vec<f64>>,
    pub outputs: Option<Outputs>,
    pub profile_voltage: Option<f64>,
    pub max_threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LumpedConfig {
    pub spring: Option<f64>,
    pub area: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub beam: BeamConfig,
    pub grid_n: Option<usize>,
    pub solver: Option<SolverOptions>,
    pub voltage: Option<f64>,
    pub voltages: Option<Vec<f64>>,
    pub pullin_tol: Option<f64>,
    pub modes: Option<usize>,
    pub drive: Option<Drive>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub lumped: LumpedConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
