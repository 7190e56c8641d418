use thiserror::Error;

/// Errors raised by the simulation and fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("photon number mismatch: input carries {input}, output carries {output}")]
    PhotonNumberMismatch { input: usize, output: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid distinguishability matrix: {0}")]
    InvalidDistinguishability(String),

    #[error("invalid click pattern: {0}")]
    InvalidClickPattern(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("degenerate reference: reference coincidence probability is zero")]
    DegenerateReference,

    #[error("fit failed: {reason} (best candidate t = {best_t:.6}, V = {best_v:.6}, residual = {residual:.3e})")]
    FitFailed {
        reason: String,
        best_t: f64,
        best_v: f64,
        residual: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        })
    }
}
