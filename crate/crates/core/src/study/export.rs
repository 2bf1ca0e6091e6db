use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{render_svg, StudyResult, SCHEMA_VERSION};
use crate::error::{Error, Result};

pub const CURVES_HEADER: &str = "param_name,param_value_m,voltage_V,tip_deflection_m,converged";
pub const PULLIN_HEADER: &str = "param_name,param_value_m,v_lower_V,v_upper_V,tip_at_lower_m,tip_over_gap";
pub const PROFILE_HEADER: &str = "param_name,param_value_m,voltage_V,x_m,deflection_m,converged";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// `curves.csv`, `pullin.csv` and, when present, `profile.csv` in a directory.
    Csv,
    Svg,
    Json,
}

pub fn curves_csv(result: &StudyResult) -> String {
    let name = result.spec.vary.name();
    let mut out = format!("{CURVES_HEADER}\n");
    for e in &result.entries {
        for p in e.curve.iter().flat_map(|c| &c.points) {
            writeln!(
                out,
                "{name},{},{},{},{}",
                e.value, p.voltage, p.tip_deflection, p.converged
            )
            .unwrap();
        }
    }
    out
}

pub fn pullin_csv(result: &StudyResult) -> String {
    let name = result.spec.vary.name();
    let mut out = format!("{PULLIN_HEADER}\n");
    for e in &result.entries {
        if let Some(p) = &e.pullin {
            writeln!(
                out,
                "{name},{},{},{},{},{}",
                e.value,
                p.v_lower,
                p.v_upper,
                p.tip_at_lower,
                p.tip_at_lower / e.params.gap
            )
            .unwrap();
        }
    }
    out
}

pub fn profile_csv(result: &StudyResult) -> String {
    let name = result.spec.vary.name();
    let mut out = format!("{PROFILE_HEADER}\n");
    for e in &result.entries {
        if let Some(p) = &e.profile {
            for (x, y) in p.positions.iter().zip(&p.deflection) {
                writeln!(out, "{name},{},{},{x},{y},{}", e.value, p.voltage, p.converged).unwrap();
            }
        }
    }
    out
}

/// Writes `result` and returns the files created.
pub fn export(result: &StudyResult, format: ExportFormat, path: &Path) -> Result<Vec<PathBuf>> {
    match format {
        ExportFormat::Csv => {
            fs::create_dir_all(path)?;
            let mut files = vec![
                write(path.join("curves.csv"), curves_csv(result))?,
                write(path.join("pullin.csv"), pullin_csv(result))?,
            ];
            if result.entries.iter().any(|e| e.profile.is_some()) {
                files.push(write(path.join("profile.csv"), profile_csv(result))?);
            }
            Ok(files)
        }
        ExportFormat::Svg => Ok(vec![write(path.to_path_buf(), render_svg(result))?]),
        ExportFormat::Json => {
            let text = serde_json::to_string_pretty(result)
                .map_err(|e| Error::Format(e.to_string()))?;
            Ok(vec![write(path.to_path_buf(), text)?])
        }
    }
}

fn write(path: PathBuf, text: String) -> Result<PathBuf> {
    fs::write(&path, text)?;
    Ok(path)
}

/// Reads a JSON study file written by [`export`].
pub fn load(path: &Path) -> Result<StudyResult> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Format("missing schema_version".into()))?;
    if found != SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            found: found.min(u32::MAX as u64) as u32,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))
}
