use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the reliability engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("value {value} outside the support of {family}")]
    OutsideSupport { family: &'static str, value: f64 },
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("experimental design: {0}")]
    Design(String),
    #[error("correlation matrix not factorizable even with nugget {nugget:e} (condition number ~{condition:e})")]
    IllConditioned { nugget: f64, condition: f64 },
    #[error("polynomial basis has {size} terms (cap {cap}); lower the maximum degree")]
    BasisTooLarge { size: usize, cap: usize },
    #[error("non-finite limit-state value {value} at {point:?}")]
    NonFiniteLimitState { value: f64, point: Vec<f64> },
    #[error("FORM did not converge within {0} iterations")]
    FormNotConverged(usize),
    #[error("subset simulation stagnated: threshold {next} did not decrease below {previous}")]
    DegenerateLevels { previous: f64, next: f64 },
    #[error("empty candidate pool")]
    EmptyPool,
    #[error("stiffness matrix singular: {null_space} zero-energy mode(s)")]
    Mechanism { null_space: usize },
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("problem {0} has no limit-state definition loaded")]
    MissingLimitState(u32),
    #[error("empty record set")]
    EmptyRecords,
}

pub type Result<T> = core::result::Result<T, Error>;
