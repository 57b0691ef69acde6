use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("constant-rank assumption violated: expected rank {expected}, found {found}")]
    ConstantRankViolation { expected: usize, found: usize },
    #[error("projection onto the manifold did not converge (residual {residual:e})")]
    RetractionFailure { residual: f64 },
    #[error("covector is not orthogonal to im L (discarded part {residual:e})")]
    NotCoexact { residual: f64 },
    #[error("map is not a submersion: rank {rank}, needed {needed}")]
    NotSubmersion { rank: usize, needed: usize },
    #[error("point has no degenerate directions for this lift")]
    NoDegeneracy,
    #[error("point is in a regime where local minima are preserved; no pathological sequence")]
    NoPathology,
    #[error("sampler produced {produced} of {requested} requested points")]
    SamplerExhausted { requested: usize, produced: usize },
    #[error("no witness covector found among {candidates} candidates")]
    WitnessSearchFailed { candidates: usize },
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("solver stopped after {iters} iterations (grad norm {grad_norm:e}, min eig {min_eig:e})")]
    NotConverged {
        iters: usize,
        grad_norm: f64,
        min_eig: f64,
        best: Vec<f64>,
        trace: Vec<crate::optimize::TraceRow>,
    },
    #[error("no data: {0}")]
    NoData(String),
}

pub type Result<T> = std::result::Result<T, LiftError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LiftError::InvalidInput(msg.into()))
}
