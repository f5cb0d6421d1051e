//! Crate-wide error type.
//!
//! Errors fall into two families that the command-line layer maps to
//! distinct exit codes: *validation* errors (rejected inputs, malformed
//! parameters) and *numerical* failures (a computation that started from
//! valid inputs could not be completed reliably).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Generic parameter validation failure (out-of-range, malformed, ...).
    #[error("invalid parameter: {0}")]
    Invalid(String),

    /// A candidate atom kernel does not integrate to 2 over its support.
    #[error("kernel integral over [-1, 1] is {integral:.17e}, expected 2 within {tol:.1e}")]
    IntegralNotTwo { integral: f64, tol: f64 },

    /// The ratio |phi(t)| / |t|^alpha (or |phi(t) - 1| / |t|^alpha) grows
    /// without bound as t -> 0: the constant estimate keeps growing under
    /// grid refinement instead of converging.
    #[error("kernel ratio near zero is unbounded: estimate {coarse:.6e} grows to {refined:.6e} under grid refinement")]
    RatioUnbounded { coarse: f64, refined: f64 },

    /// A density kernel must satisfy phi_w(0) = 1.
    #[error("phi_w(0) = {value:.17e}, expected exactly 1")]
    NotOneAtZero { value: f64 },

    /// A characteristic function must satisfy cf(0) = 1.
    #[error("characteristic function at 0 is {value:.17e}, expected 1")]
    CfNotOneAtZero { value: f64 },

    /// The noise characteristic function underflowed at a quadrature node;
    /// dividing by it would be meaningless.
    #[error("noise characteristic function underflow (|cf| < 1e-300) at t = {t:.6e}")]
    NoiseCfUnderflow { t: f64 },

    /// The one-step grid-doubling check on a quadrature failed.
    #[error("quadrature not converged: {coarse:.17e} at base resolution vs {fine:.17e} at doubled resolution")]
    QuadratureNotConverged { coarse: f64, fine: f64 },

    /// Sample splitting needs at least one observation on each side.
    #[error("sample splitting requires at least 2 observations")]
    DegenerateSplit,

    /// The clipped density integrates to zero; renormalization is undefined.
    #[error("clipped density has zero mass; cannot renormalize")]
    ZeroMass,

    /// An integrand evaluated to a non-finite value.
    #[error("non-finite integrand at t = {t:.6e}")]
    NonFiniteIntegrand { t: f64 },

    /// Paired slices must have equal lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Grids must be strictly increasing.
    #[error("grid must be strictly increasing and contain at least 2 points")]
    GridNotIncreasing,

    /// The risk grid fails to capture enough of the target's mass.
    #[error("target mass on the risk grid is {mass:.12}, below the required 0.999")]
    GridTooNarrow { mass: f64 },

    /// An inverted reference density came out non-positive on the grid, so
    /// the divergence integrand is unusable at this resolution.
    #[error("inverted density non-positive at x = {x:.6e} (value {value:.6e}); refine the grid or reduce the cutoff")]
    DensityNonPositive { x: f64, value: f64 },

    /// Rate fitting needs strictly positive risks to take logarithms.
    #[error("risk must be strictly positive to fit a rate (row n = {n})")]
    NonPositiveRisk { n: usize },

    /// An estimator failed inside a Monte-Carlo run; the row is aborted.
    #[error("estimator failed at n = {n}, replicate {replicate}: {source}")]
    Replicate {
        n: usize,
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    /// Input/output failure while reading samples or writing reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to
    /// rejected inputs). The CLI exits with 3 for these and 2 otherwise.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoiseCfUnderflow { .. }
            | Error::QuadratureNotConverged { .. }
            | Error::NonFiniteIntegrand { .. }
            | Error::DensityNonPositive { .. }
            | Error::ZeroMass
            | Error::NonPositiveRisk { .. } => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_splits_validation_from_numerical() {
        assert!(!Error::Invalid("x".into()).is_numerical());
        assert!(!Error::DegenerateSplit.is_numerical());
        assert!(Error::NoiseCfUnderflow { t: 1.0 }.is_numerical());
        assert!(Error::ZeroMass.is_numerical());
        let wrapped = Error::Replicate {
            n: 10,
            replicate: 3,
            source: Box::new(Error::QuadratureNotConverged { coarse: 1.0, fine: 2.0 }),
        };
        assert!(wrapped.is_numerical());
        let wrapped = Error::Replicate {
            n: 10,
            replicate: 3,
            source: Box::new(Error::DegenerateSplit),
        };
        assert!(!wrapped.is_numerical());
    }

    #[test]
    fn messages_carry_context() {
        let msg = Error::Replicate {
            n: 4096,
            replicate: 17,
            source: Box::new(Error::NoiseCfUnderflow { t: 2.5 }),
        }
        .to_string();
        assert!(msg.contains("4096"));
        assert!(msg.contains("17"));
        assert!(msg.contains("underflow"));
    }
}
