use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::expr::ZeroTest;
use crate::geometry::{is_involutive, Chart, Frame, VectorField, DEFAULT_RANK_SAMPLES};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Sample points for rank checks.
    pub samples: usize,
    pub seed: u64,
    pub zero: ZeroTest,
    pub newton_starts: usize,
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    pub execution: Execution,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            samples: DEFAULT_RANK_SAMPLES,
            seed: 0,
            zero: ZeroTest::default(),
            newton_starts: 16,
            newton_tolerance: 1e-10,
            newton_max_iterations: 50,
            execution: Execution::default(),
        }
    }
}

impl AnalysisOptions {
    /// Options with every seed derived from `seed`.
    pub fn with_seed(seed: u64) -> AnalysisOptions {
        let mut o = AnalysisOptions::default();
        o.set_seed(seed);
        o
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.zero.seed = seed;
    }
}

/// A field `F` and an involutive distribution `V` with `2 dim V <= dim M`.
#[derive(Debug, Clone)]
pub struct SecondOrderProblem {
    pub chart: Arc<Chart>,
    pub f: VectorField,
    pub v: Frame,
    pub options: AnalysisOptions,
}

impl SecondOrderProblem {
    /// Validates dimensions and the involutivity of `V`.
    pub fn new(f: VectorField, v: Frame, options: AnalysisOptions) -> Result<SecondOrderProblem, AnalysisError> {
        let p = SecondOrderProblem::new_unverified(f, v, options)?;
        let verdict = is_involutive(&p.v, &p.options.zero)?;
        if !verdict.holds() {
            return Err(AnalysisError::NotInvolutive(verdict));
        }
        Ok(p)
    }

    /// Dimension checks only; involutivity is left to the caller.
    pub fn new_unverified(
        f: VectorField,
        v: Frame,
        options: AnalysisOptions,
    ) -> Result<SecondOrderProblem, AnalysisError> {
        let chart = v.chart().clone();
        if !f.same_chart(v.field(0)) && !v.is_empty() {
            return Err(AnalysisError::Geometry(crate::geometry::GeometryError::ChartMismatch));
        }
        if v.is_empty() {
            return Err(AnalysisError::InvalidProblem("V must have at least one field".into()));
        }
        if 2 * v.len() > chart.dim() {
            return Err(AnalysisError::InvalidProblem(format!(
                "2 dim V = {} exceeds the chart dimension {}",
                2 * v.len(),
                chart.dim()
            )));
        }
        Ok(SecondOrderProblem { chart, f, v, options })
    }

    pub fn m(&self) -> usize {
        self.chart.dim()
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }
}
