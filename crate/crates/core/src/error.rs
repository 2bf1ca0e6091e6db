use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("gap closed: deflection {deflection:e} m reaches gap {gap:e} m")]
    GapClosed { deflection: f64, gap: f64 },

    #[error("grid needs at least {min} physical nodes, got {got}")]
    GridTooSmall { got: usize, min: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("static solution at {voltage} V is not converged")]
    NotConverged { voltage: f64 },

    #[error("past pull-in: {0}")]
    PastPullIn(String),

    #[error("no pull-in found up to {ceiling} V")]
    NoPullIn { ceiling: f64 },

    #[error("singular matrix at pivot {0}")]
    Singular(usize),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("study file schema version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("malformed study file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for physics outcomes (pull-in, contact) rather than bad input or I/O.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::GapClosed { .. }
                | Error::NotConverged { .. }
                | Error::PastPullIn(_)
                | Error::NoPullIn { .. }
                | Error::Singular(_)
        )
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}
