//! Error taxonomy shared across the crate.
//!
//! The CLI maps these onto process exit codes: validation/domain problems
//! exit 1, numerical failures exit 2, I/O failures exit 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Construction-time rejection of a process or subordinator spec.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A precondition on an operation argument was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested operation is not available for this spec (e.g. a
    /// closed-form-only functional on a non-registry family).
    #[error("unsupported spec: {0}")]
    Unsupported(String),

    /// Degenerate input detected at evaluation time (e.g. W(x+y) = 0).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Root bracketing gave up after the expansion limit.
    #[error("bracketing failure for {context}: bracket [{lo}, {hi}] with f = [{f_lo}, {f_hi}]")]
    Bracketing {
        context: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// The Gaver-Stehfest inversion lost all significant digits.
    #[error("precision loss in Laplace inversion at x = {x}: estimated relative error {estimate:.3e}")]
    PrecisionLoss { x: f64, estimate: f64 },

    /// Expected jumps per simulation step exceed the resolution cap.
    #[error("step dt = {dt} too large for jump intensity: {expected_jumps:.2} expected jumps per step (cap {cap})")]
    Resolution {
        dt: f64,
        expected_jumps: f64,
        cap: f64,
    },

    /// The h-transform step weights collapsed (state too close to the
    /// boundary for the chosen step size).
    #[error("h-transform degeneracy at t = {t}, x = {x}: acceptance ratio {ratio:.3e}")]
    HTransform { t: f64, x: f64, ratio: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit status the CLI reports for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_)
            | Error::Domain(_)
            | Error::Unsupported(_)
            | Error::Degenerate(_)
            | Error::Resolution { .. }
            | Error::Config(_) => 1,
            Error::Bracketing { .. } | Error::PrecisionLoss { .. } | Error::HTransform { .. } => 2,
            Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
