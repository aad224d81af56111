use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("circuit: {0}")]
    Circuit(String),
    #[error("dimension {dim} exceeds the assembly cap {cap}")]
    TooLarge { dim: u128, cap: u128 },
    #[error("solver: {0}")]
    Solver(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
