use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the Gamma function at {0}")]
    Pole(f64),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge after {terms} terms (z = {z})")]
    NonConvergence { terms: usize, z: f64 },
    #[error("series cancellation at z = {z}: estimated relative error {estimate:.1e}")]
    Cancellation { z: f64, estimate: f64 },
    #[error("argument {z} outside the series radius {radius}")]
    Radius { z: f64, radius: f64 },
    #[error("singular derivative at the initial point")]
    Singular,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("ill-conditioned system (condition estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("rank deficient dictionary: rank {rank} < {rows}")]
    RankDeficient { rank: usize, rows: usize },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("jet mismatch: {0}")]
    JetMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
