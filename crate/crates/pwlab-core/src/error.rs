//! Error type shared by every layer of the library.

use thiserror::Error;

/// Everything that can go wrong while evaluating a wave family.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The requested invariants lie outside the admissible parameter range.
    #[error("parameters outside the admissible range: {0}")]
    OutOfRange(String),

    /// Two cubic roots collapsed, i.e. the point sits on the domain boundary.
    #[error("degenerate cubic roots (gap {gap:.3e}); point is on the domain boundary")]
    DegenerateRoots { gap: f64 },

    /// A quadrature integrand lost integrability near the domain boundary.
    #[error("integrand degenerates near the domain boundary (min gap {gap:.3e})")]
    BoundaryDegeneracy { gap: f64 },

    /// The phase increment has no value on the J = 0 axis.
    #[error("phase increment is undefined at J = 0")]
    UndefinedAtZeroJ,

    /// The renormalized phase jumps on the corotating segment Gamma_minus.
    #[error("renormalized phase is discontinuous here; use the Phi branch")]
    PhaseBranch,

    /// Newton iteration ran out of its iteration budget.
    #[error("Newton iteration did not converge after {iters} steps (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },

    /// A (T, Psi) target lies outside the image of the parameter domain.
    #[error("(T, Psi) = ({t:.6}, {psi:.6}) lies outside the image domain")]
    OutsideImage { t: f64, psi: f64 },

    /// A Newton iterate escaped the existence domain.
    #[error("Newton iterate left the existence domain")]
    LeftDomain,

    /// The ODE integrator could not meet the requested tolerance.
    #[error("ODE integration failed: {0}")]
    ToleranceNotMet(String),

    /// The shot trajectory failed the periodic-closure condition.
    #[error("shooting endpoint mismatch |e^(-ipT) W(T) - W(0)| = {defect:.3e}")]
    PeriodMismatch { defect: f64 },

    /// The family matrix M is numerically singular.
    #[error("family matrix M is numerically singular (det {det:.3e})")]
    SingularM { det: f64 },

    /// The evolved field exceeded the amplitude guard.
    #[error("field amplitude reached {max:.3e} at t = {t:.4}; evolution stopped")]
    BlowUp { t: f64, max: f64 },

    /// The profile is not resolved at the requested operator truncation.
    #[error("profile spectral tail at the truncation mode is {tail:.3e} (limit {limit:.1e})")]
    AliasWarning { tail: f64, limit: f64 },

    /// Malformed user input (CLI / config layer).
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
