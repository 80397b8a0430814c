use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge after {terms} terms (last term magnitude {last_term:e})")]
    NonConvergence { terms: usize, last_term: f64 },

    #[error("parse error at byte {offset}: expected one of {}", expected.join(", "))]
    Parse { offset: usize, expected: Vec<String> },

    #[error("expression uses more than one variable: `{first}` and `{second}`")]
    MultipleVariables { first: String, second: String },

    #[error("evaluation error at byte {offset}: {message}")]
    Eval { offset: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("boundary mismatch: X({at}) = {found}, expected {expected}")]
    BoundaryMismatch { at: f64, found: f64, expected: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("config error (line {line}, key `{key}`): {message}")]
    Config { key: String, line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
