//! Numerical normalizing coordinates: flows of the W- and V-fields from a
//! base point, pushforward residuals on a parameter grid, and a polynomial
//! surrogate of the recovered force that is fed back through the analysis.

mod basis;
mod flow;
mod ode;
mod residual;
mod surrogate;
mod transform;

pub use basis::{solve_basis_ode, BasisOde, SINGULAR_DETERMINANT};
pub use flow::{grown_box, integrate_flow, FlowMap};
pub use ode::{integrate, FlowError, IntegratorSettings};
pub use residual::{pushforward_residuals, GridSpec, NodeSample, ResidualReport, Stat};
pub use surrogate::{fit_surrogate, SurrogateReport};
pub use transform::{build_normal_coordinates, BasisChoice, CoordinateTransform, Pushforward, TransformMetadata};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::expr::EvalError;
use crate::geometry::GeometryError;
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StraightenError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("not a second-order field: {0}")]
    NotSecondOrder(String),
    #[error("cross-section not found in box")]
    MissingCrossSection,
    #[error("singular Jacobian at {point:?} (condition {condition:e})")]
    SingularJacobian { point: Vec<f64>, condition: f64 },
    #[error("fibre redefinition is singular at {point:?} (smallest singular value {sigma:e})")]
    SingularFibre { point: Vec<f64>, sigma: f64 },
    #[error("basis transport became singular at {point:?}")]
    SingularBasis { point: Vec<f64> },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraightenOptions {
    pub integrator: IntegratorSettings,
    /// Points per parameter axis; by default 10 for `m <= 3` and 5 above.
    pub grid: Option<usize>,
    /// Grid half-width as a fraction of the smallest box width.
    pub extent: f64,
    /// Pass threshold on the largest structural residual.
    pub tolerance: f64,
    /// Finite-difference step as a fraction of the grid half-width.
    pub fd_step: f64,
    /// Nodes with a worse Jacobian condition number are excluded from maxima.
    pub conditioning_limit: f64,
    /// Smallest singular value allowed for the fibre redefinition.
    pub fibre_tolerance: f64,
    /// Largest relative disagreement between variational and differenced Jacobians.
    pub jacobian_agreement: f64,
    pub execution: Execution,
}

impl Default for StraightenOptions {
    fn default() -> Self {
        StraightenOptions {
            integrator: IntegratorSettings::default(),
            grid: None,
            extent: 0.2,
            tolerance: 1e-5,
            fd_step: 1e-3,
            conditioning_limit: 1e8,
            fibre_tolerance: 1e-6,
            jacobian_agreement: 1e-5,
            execution: Execution::default(),
        }
    }
}

impl StraightenOptions {
    pub fn grid_points(&self, m: usize) -> usize {
        self.grid.unwrap_or(if m <= 3 { 10 } else { 5 })
    }
}
