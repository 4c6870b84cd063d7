use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no convergence after {iterations} iterations (last increment {last_increment:.3e})")]
    NoConvergence { iterations: usize, last_increment: f64, history: Vec<f64> },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
