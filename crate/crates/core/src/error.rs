use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative evaluation produced a non-finite value")]
    DerivativeFailure,

    #[error("state too close to the origin (|X| = {radius:e})")]
    OriginSingularity { radius: f64 },

    #[error("requested {requested} steps exceeds the limit of {limit}")]
    StepOverflow { requested: u64, limit: u64 },

    #[error("polar angle wound through {winding:.6} rad, less than a full turn")]
    NonWinding { winding: f64 },

    #[error("polar angle is not monotone (step {step})")]
    DirectionReversal { step: usize },

    #[error("no circular orbit: radicand {radicand:e} is negative")]
    NoCircularOrbit { radicand: f64 },

    #[error("degenerate frequency: omega = {omega:e} is not positive")]
    DegenerateFrequency { omega: f64 },

    #[error("1 + gamma vanishes; momentum amplitude is undefined")]
    SingularDeformation,

    #[error("zero noncommutativity parameter: {0}")]
    ZeroParameter(&'static str),

    #[error("gamma = {gamma} exceeds theta*eta/4 = {bound}")]
    GammaConstraint { gamma: f64, bound: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("no solution found: {0}")]
    NoSolution(String),

    #[error("rotation axis is not a unit vector (|n| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("sampler variance must be positive, got {0}")]
    DegenerateSampler(f64),

    #[error("rejection rate {rate:.4} exceeds the 1% limit")]
    ExcessiveRejection { rate: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable code used in CLI error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DerivativeFailure => "DERIVATIVE_FAILURE",
            Error::OriginSingularity { .. } => "ORIGIN_SINGULARITY",
            Error::StepOverflow { .. } => "STEP_OVERFLOW",
            Error::NonWinding { .. } => "NON_WINDING",
            Error::DirectionReversal { .. } => "DIRECTION_REVERSAL",
            Error::NoCircularOrbit { .. } => "NO_CIRCULAR_ORBIT",
            Error::DegenerateFrequency { .. } => "DEGENERATE_FREQUENCY",
            Error::SingularDeformation => "SINGULAR_DEFORMATION",
            Error::ZeroParameter(_) => "ZERO_PARAMETER",
            Error::GammaConstraint { .. } => "GAMMA_CONSTRAINT",
            Error::Constraint(_) => "CONSTRAINT_VIOLATION",
            Error::NoSolution(_) => "NO_SOLUTION",
            Error::NonUnitAxis { .. } => "NON_UNIT_AXIS",
            Error::DegenerateSampler(_) => "DEGENERATE_SAMPLER",
            Error::ExcessiveRejection { .. } => "EXCESSIVE_REJECTION",
            Error::InvalidInput(_) => "INVALID_INPUT",
        }
    }

    pub fn is_measurement_failure(&self) -> bool {
        matches!(self, Error::NonWinding { .. } | Error::DirectionReversal { .. })
    }
}
