use thiserror::Error;

/// Errors raised by the planning library.
#[derive(Debug, Error)]
pub enum PumpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix `{0}` is not symmetric positive semidefinite")]
    NotPsd(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("Riccati recursion diverged ({0})")]
    RiccatiDivergence(&'static str),
    #[error("waypoint {0:?} lies in collision")]
    WaypointInCollision(Vec<f64>),
    #[error("timestep {step} exceeds deviation bank horizon {horizon}")]
    HorizonOverflow { step: usize, horizon: usize },
    #[error("no collision-free goal sample could be placed")]
    GoalUnreachable,
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PumpError>;
