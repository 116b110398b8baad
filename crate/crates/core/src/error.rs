use thiserror::Error;

pub type Result<T, E = FlockError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FlockError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Identical gradients leave the edge direction undefined.
    #[error("degenerate edge direction: gradient difference is zero")]
    DegenerateDirection,

    /// Two connected agents report identical gradients. Valid runs never
    /// reach this state.
    #[error("collision state on edge ({i}, {j}): gradient difference is zero")]
    Collision { i: usize, j: usize },

    /// A barrier potential was evaluated with `mu` outside `(0, r)`.
    #[error("barrier domain violated: mu = {mu} not in (0, {r})")]
    BarrierDomain { mu: f64, r: f64 },

    /// An admitted edge left the sensing range.
    #[error("connectivity violation at t = {t}: edge ({i}, {j}) dropped out of range")]
    EdgeRemoved { t: f64, i: usize, j: usize },

    /// A per-step invariant (ASP band, edge bookkeeping) failed.
    #[error("invariant violated at t = {t}: {what}")]
    Invariant { t: f64, what: String },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FlockError {
    /// True for errors that indicate the closed-loop guarantees were broken
    /// during a run (as opposed to bad input).
    pub fn is_theorem_violation(&self) -> bool {
        matches!(
            self,
            FlockError::DegenerateDirection
                | FlockError::Collision { .. }
                | FlockError::BarrierDomain { .. }
                | FlockError::EdgeRemoved { .. }
                | FlockError::NonFinite { .. }
                | FlockError::Invariant { .. }
        )
    }
}
