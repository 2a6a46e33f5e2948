use thiserror::Error;

/// Errors produced by the simulation, analysis and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The minus-axis step is too coarse to resolve the delay kernel.
    #[error(
        "quadrature grid too coarse for |tau| = {tau} eV^-1: phase advance {advance:.4} rad per \
         minus-axis step exceeds pi/4 (refine to at least {required_points} minus-axis points)"
    )]
    Aliasing {
        tau: f64,
        advance: f64,
        required_points: usize,
    },

    #[error("no baseline: {0}")]
    Baseline(String),

    #[error("dip analysis failed: {0}")]
    Dip(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("tabulated transmission: {0}")]
    Tabulated(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the failure is numerical (as opposed to configuration or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Aliasing { .. }
                | Error::Baseline(_)
                | Error::Dip(_)
                | Error::DegenerateData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
