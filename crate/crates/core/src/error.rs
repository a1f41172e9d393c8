use crate::grid::FaceCoord;
use thiserror::Error;

/// Errors produced across the library. Illegal fires are values so that
/// search code can probe legality without unwinding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("negative weight {weight} at face {face}")]
    NegativeWeight { face: FaceCoord, weight: i64 },

    #[error("the marked face (0,0) cannot appear in the face map")]
    MarkedFaceInMap,

    #[error("duplicate face {0} in configuration")]
    DuplicateFace(FaceCoord),

    #[error("weight {0} does not fit the configuration value range")]
    WeightOverflow(i64),

    #[error("invalid move {from} -> {to}: {reason}")]
    InvalidMove {
        from: FaceCoord,
        to: FaceCoord,
        reason: &'static str,
    },

    #[error("illegal fire {from} -> {to}: {rule}")]
    IllegalFire {
        from: FaceCoord,
        to: FaceCoord,
        rule: &'static str,
    },

    #[error("illegal path fire at index {0}: needs w[i] >= w[i+1] + 2")]
    IllegalPathFire(usize),

    #[error("face index {0} has no successor on the path")]
    OutOfPath(usize),

    #[error("input outside the supported scope: {0}")]
    OutOfScope(String),

    #[error("configuration violates the Aztec diamond at {} face(s)", .0.len())]
    Violation(Vec<FaceCoord>),

    #[error("no face violates the Aztec diamond; nothing to flood")]
    NothingToFlood,

    #[error("step budget of {0} moves exhausted before stabilizing")]
    BudgetExhausted(u64),

    #[error("trace replay failed at move {index}: {source}")]
    Replay {
        index: usize,
        #[source]
        source: Box<FlowError>,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for FlowError {
    fn from(e: serde_json::Error) -> Self {
        FlowError::Parse(e.to_string())
    }
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;
