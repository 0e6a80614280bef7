//! The recognition pipeline: regularity, the W-distribution, β-coefficients,
//! basis adaptation, the tensor S with its projectors and connections, the
//! mixed curvature, and the final classification.

mod beta;
mod check;
mod classify;
mod extended;
mod natural;
mod problem;
mod structure;

pub use beta::{
    adapt_commuting_basis, transform_beta, verify_beta_integrability, Adaptation, AdaptationMethod, BetaCoefficients,
};
pub use check::{check_field_zero, check_zero, Check, CheckStatus};
pub use classify::{
    analyze, classify, find_cross_section, Analysis, AnalysisReport, Classification, ConnectionTables,
    CrossSectionSearch, FieldMembership, NamedField,
};
pub use extended::{build_w, check_regularity, check_w_involutive, ExtendedFrame, RegularityVerdict};
pub use natural::{natural_chart, NaturalChart, QuadraticDecomposition};
pub use problem::{AnalysisOptions, SecondOrderProblem};
pub use structure::{QuadraticVerdict, Structure, ThetaComponent};

use thiserror::Error;

use crate::geometry::{GeometryError, InvolutivityVerdict};

/// Sign convention used for every connection quantity in reports.
pub const CONVENTIONS: &str = "W_i = [F, V_i]; [V_i, W_j] = alpha^k_ij V_k + beta^k_ij W_k; \
S(a^i V_i + b^i W_i) = -b^i V_i; L = L_F S; P_H = (id - L)/2, P_V = (id + L)/2; \
h(V_i) = -P_H(W_i); nabla_{V_i} V_j = S([V_i, -W_j]) = +beta^k_ij V_k; \
nabla_X V = P_V([P_H X, V]) + S([P_V X, h(V)]); \
theta(i,j,k) = nabla_{h_i} nabla_{V_j} V_k - nabla_{V_j} nabla_{h_i} V_k - nabla_{[h_i, V_j]} V_k; \
natural chart: Gamma^i_j = -1/2 dF^i/dy^j, Gamma^i_jk = dGamma^i_j/dy^k, \
force = c^i_jk y^j y^k + P^i_j y^j + Q^i with c^i_jk = 1/2 d^2 F^i/dy^j dy^k";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("V is not involutive: {0:?}")]
    NotInvolutive(InvolutivityVerdict),
    #[error("the V-basis does not commute: [V_{i}, V_{j}] != 0")]
    NonCommutingBasis { i: usize, j: usize },
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}
