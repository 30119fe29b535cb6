use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),
    #[error("self-loop arc ({0}, {0}) requested")]
    SelfLoop(usize),
    #[error("unknown variable id {0}")]
    UnknownVariable(usize),
    #[error("duplicate variable id {0} in constraint row")]
    DuplicateVariable(usize),
    #[error("non-finite coefficient for variable {0}")]
    NonFiniteCoefficient(usize),
    #[error("value {value} outside bounds [{lower}, {upper}] of variable {var}")]
    BoundViolation {
        var: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("cannot fix integer variable {var} to fractional value {value}")]
    FractionalFix { var: usize, value: f64 },
    #[error("connectivity enumeration requested for {0} vertices (limit 12)")]
    EnumerationTooLarge(usize),
    #[error("solution decomposition failed: {0}")]
    Decomposition(String),
    #[error("separation failed: {0}")]
    Separation(String),
    #[error("LP failure: {0}")]
    Numerical(String),
    #[error("branching requested on an integral point")]
    IntegralPoint,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("oracle size limit exceeded: {0}")]
    OracleLimit(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
