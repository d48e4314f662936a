use thiserror::Error;

pub type Result<T> = std::result::Result<T, RnsError>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RnsError {
    #[error("channel width n = {0} is outside the supported range 2..=31")]
    InvalidWidth(u32),

    #[error("extension exponent p = {p} must satisfy 0 <= p <= n = {n}")]
    InvalidExtension { p: u32, n: u32 },

    #[error("{what} = {value} is out of range (maximum {max})")]
    OutOfRange {
        what: &'static str,
        value: String,
        max: String,
    },

    #[error("invalid modulus {0}: integer moduli must be odd and at least 3")]
    InvalidModulus(u64),

    #[error("moduli {first} and {second} are not co-prime")]
    CoprimalityViolation { first: String, second: String },

    #[error("moduli set must contain at least one channel")]
    EmptySet,

    #[error("{value} has no inverse modulo {modulus}")]
    NotInvertible { value: String, modulus: String },

    #[error("expected {expected} residues, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("input {value} exceeds the dynamic range {range}")]
    RangeExceeded { value: String, range: String },

    #[error("the {unit} space does not fit a 64-bit case count; sweep it with --random")]
    ExhaustiveTooLarge { unit: &'static str },

    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

impl RnsError {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        max: impl ToString,
    ) -> Self {
        RnsError::OutOfRange {
            what,
            value: value.to_string(),
            max: max.to_string(),
        }
    }

    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        RnsError::Parse {
            input: input.to_owned(),
            reason: reason.into(),
        }
    }
}
