use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision exhausted at {bits} bits: {what}")]
    PrecisionExhausted { bits: u32, what: String },
    #[error("denominator enclosure contains zero: {0}")]
    DivisionByEnclosedZero(String),
    #[error("function may vanish on the boundary of {0}")]
    BoundaryZero(String),
    #[error("target touches the boundary of {0}")]
    BoundaryContact(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("retries exhausted in {step}: {detail}")]
    RetryExhausted { step: String, detail: String },
    #[error("expected one simple zero, counted {0}")]
    NonSimpleZero(u64),
    #[error("cycle persistence lost: {0}")]
    PersistenceLost(String),
    #[error("degenerate argument: {0}")]
    DegenerateArgument(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("budget overflow: {0}")]
    BudgetOverflow(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("checksum mismatch")]
    Checksum,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn precision(bits: u32, what: impl Into<String>) -> Self {
        Error::PrecisionExhausted { bits, what: what.into() }
    }

    pub(crate) fn retry(step: &str, detail: impl Into<String>) -> Self {
        Error::RetryExhausted { step: step.to_string(), detail: detail.into() }
    }
}
