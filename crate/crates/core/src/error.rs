use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate root set: polynomial is identically zero")]
    DegenerateRoots,

    #[error("irregular segment {index}: parametric speed vanishes on [0, 1]")]
    IrregularSegment { index: usize },

    #[error("discontinuous path at junction {junction}: gap {gap:e} mm")]
    DiscontinuousPath { junction: usize, gap: f64 },

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("chord undefined: chord length {chord} exceeds osculating diameter {diameter}")]
    ChordUndefined { chord: f64, diameter: f64 },

    #[error("repair not applied: block {block} violates the compatibility condition")]
    RepairNotApplied { block: usize },

    #[error("degenerate block {block}: infeasible for any positive junction feedrate")]
    DegenerateBlock { block: usize },

    #[error("interpolator failed to converge at sample {index}")]
    NonConvergence { index: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
