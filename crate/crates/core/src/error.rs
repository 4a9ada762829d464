use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("tangent vectors live over different base points")]
    BaseMismatch,
    #[error("point is not regular for the torus action ({0})")]
    Regularity(&'static str),
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("weight vector is inadmissible: {0}")]
    Inadmissible(&'static str),
    #[error("no Killing witness found on the tau grid")]
    WitnessNotFound,
    #[error("point is off the zero set (residual {residual:e})")]
    Membership { residual: f64 },
    #[error("characteristic field is singular here")]
    SingularField,
    #[error("model violation: {0}")]
    ModelViolation(&'static str),
    #[error("level drift {drift:e} exceeds budget {budget:e}")]
    IntegrationDiverged { drift: f64, budget: f64 },
    #[error("step budget of {0} exhausted")]
    StepLimit(usize),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("trajectory reached the endpoint margin")]
    EndpointHit,
    #[error("no sign change in bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("orbit failed to close (distance {distance:e})")]
    Closure { distance: f64 },
    #[error("root refinement did not converge")]
    Refinement,
    #[error("mesh is degenerate: {0}")]
    DegenerateMesh(&'static str),
    #[error("resolution too coarse: Richardson gap {gap:e}")]
    Resolution { gap: f64 },
}
