use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite{}", ctx_suffix(.0))]
    NotPositiveDefinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("panel validation failed: {0}")]
    InvalidPanel(String),

    #[error("first-stage regression rank-deficient for firm {firm}")]
    RankDeficient { firm: String },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("cross-validation excluded every lambda on the grid")]
    EmptyCvGrid,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn ctx_suffix(ctx: &str) -> String {
    if ctx.is_empty() {
        String::new()
    } else {
        format!(" ({ctx})")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
