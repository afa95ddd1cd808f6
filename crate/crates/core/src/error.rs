use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("beta = {beta} is below the admissibility threshold beta0 = {beta0}")]
    BelowThreshold { beta: f64, beta0: f64 },

    #[error("no zero crossing up to eta = {searched_to} (beta = {beta})")]
    NoZero { beta: f64, searched_to: f64 },

    #[error("fixed-point iteration did not converge at beta = {beta}: residual {residual:e} after {iterations} iterations")]
    NonConvergence {
        beta: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("could not bracket the no-flux slope: {0}")]
    Bracket(String),

    #[error("eigenvalue iteration failed to converge")]
    Eigen,

    #[error("time stepping became unstable at step {step}: |u| = {value}")]
    Instability { step: usize, value: f64 },

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
