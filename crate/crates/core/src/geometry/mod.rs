//! Charts, vector fields, frames, Lie brackets, ranks and decompositions.

mod chart;
mod field;
mod frame;
mod solve;

pub use chart::Chart;
pub use field::{lie_bracket, CompiledField, VectorField};
pub use frame::{frame_rank, rank_of_fields, Frame, RankReport, DEFAULT_RANK_SAMPLES, RANK_TOLERANCE};
pub use solve::{decompose_in_frame, is_involutive, FrameSolver, InvolutivityVerdict};
pub(crate) use solve::{involutive_with, inverse_matrix};

use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("fields live on different charts")]
    ChartMismatch,
    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frame has rank {found} < {expected} at {point:?}")]
    RankDeficient {
        expected: usize,
        found: usize,
        point: Vec<f64>,
    },
    #[error("every sample point failed to evaluate: {0}")]
    AllPointsSkipped(String),
    #[error("field is not in the span of the frame: component {component} is {value:e} at {witness:?}")]
    NotInSpan {
        component: usize,
        witness: Vec<f64>,
        value: f64,
    },
    #[error("zero test inconclusive: {0}")]
    Ambiguous(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
