use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Sequence text contained a glyph or index outside the declared alphabet.
    /// `position` is 1-based (glyph position or token index).
    Parse { position: usize, message: String },
    /// Two operands were built over incompatible alphabets.
    AlphabetMismatch { left: usize, right: usize },
    /// An index, length, or numeric argument was out of range.
    Range(String),
    /// A sequence left the support of the measure scoring it.
    /// `position` is the 1-based index of the offending symbol.
    SupportViolation { position: usize },
    /// An enumeration would exceed the caller-supplied budget.
    BudgetExceeded { required: u128, budget: u64 },
    /// Invalid model or experiment configuration.
    Config(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config/input, 3 support violation,
    /// 4 budget exceeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::AlphabetMismatch { .. }
            | Error::Range(_)
            | Error::Config(_)
            | Error::Json(_) => 2,
            Error::SupportViolation { .. } => 3,
            Error::BudgetExceeded { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { position, message } => {
                write!(f, "parse error at position {position}: {message}")
            }
            Error::AlphabetMismatch { left, right } => {
                write!(f, "alphabet mismatch: size {left} vs {right}")
            }
            Error::Range(msg) => write!(f, "range error: {msg}"),
            Error::SupportViolation { position } => {
                write!(f, "support violation at position {position}")
            }
            Error::BudgetExceeded { required, budget } => {
                write!(
                    f,
                    "enumeration budget exceeded: {required} words needed, budget {budget}; \
                     retry with a smaller n or a larger budget"
                )
            }
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
