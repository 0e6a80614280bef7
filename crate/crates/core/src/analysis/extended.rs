use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, AnalysisOptions, SecondOrderProblem};
use crate::expr::ZeroTest;
use crate::geometry::{
    involutive_with, lie_bracket, rank_of_fields, Chart, Frame, FrameSolver, InvolutivityVerdict, RankReport,
    VectorField,
};

/// Outcome of the rank condition on `V + [F, V]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub passed: bool,
    pub expected_rank: usize,
    pub min_rank: usize,
    pub max_rank: usize,
    pub samples: usize,
    pub worst_conditioning: f64,
    /// Sample points where the rank drops (at most eight are kept).
    pub deficient: Vec<Vec<f64>>,
    pub skipped: usize,
}

impl RegularityVerdict {
    fn from_report(r: &RankReport, expected: usize) -> RegularityVerdict {
        let deficient: Vec<Vec<f64>> = r
            .ranks
            .iter()
            .zip(&r.points)
            .filter(|(k, _)| **k < expected)
            .map(|(_, p)| p.clone())
            .take(8)
            .collect();
        RegularityVerdict {
            passed: r.is_constant(expected),
            expected_rank: expected,
            min_rank: r.min_rank(),
            max_rank: r.claimed_rank,
            samples: r.ranks.len(),
            worst_conditioning: r.worst_conditioning,
            deficient,
            skipped: r.skipped.len(),
        }
    }
}

/// `W_i = [F, V_i]` for every field of `v`.
pub(crate) fn brackets_with(f: &VectorField, v: &[VectorField]) -> Result<Vec<VectorField>, AnalysisError> {
    v.iter()
        .map(|vi| lie_bracket(f, vi).map_err(AnalysisError::from))
        .collect()
}

/// Passes iff `{V_i} ∪ {[F, V_i]}` has rank `2n` at every sample.
pub fn check_regularity(p: &SecondOrderProblem) -> Result<RegularityVerdict, AnalysisError> {
    let w = brackets_with(&p.f, p.v.fields())?;
    let mut all = p.v.fields().to_vec();
    all.extend(w);
    let report = rank_of_fields(
        &p.chart,
        &all,
        p.options.samples,
        p.options.seed,
        p.options.execution,
    )?;
    Ok(RegularityVerdict::from_report(&report, 2 * p.n()))
}

/// The V-basis, its W-partners, and a solver for the combined frame.
#[derive(Debug, Clone)]
pub struct ExtendedFrame {
    pub chart: Arc<Chart>,
    pub f: VectorField,
    pub v: Vec<VectorField>,
    pub w: Vec<VectorField>,
    pub combined: Frame,
    pub solver: FrameSolver,
    /// `[V_i, V_j] = 0` for all pairs.
    pub commuting: bool,
    pub options: AnalysisOptions,
}

impl ExtendedFrame {
    /// Builds the extended frame for a given V-basis.
    pub fn from_basis(
        f: &VectorField,
        v: Vec<VectorField>,
        options: &AnalysisOptions,
    ) -> Result<ExtendedFrame, AnalysisError> {
        let chart = f.chart().clone();
        let w = brackets_with(f, &v)?;
        let mut all = v.clone();
        all.extend(w.iter().cloned());
        let report = rank_of_fields(&chart, &all, options.samples, options.seed, options.execution)?;
        if !report.is_constant(all.len()) {
            return Err(AnalysisError::Inconsistent(format!(
                "combined frame has rank {} < {} at {:?}",
                report.min_rank(),
                all.len(),
                report.first_deficiency(all.len()).map(|(p, _)| p)
            )));
        }
        let combined = Frame::new_unchecked(&chart, all)?;
        let solver = FrameSolver::new(&combined, &options.zero)?;
        let mut commuting = true;
        'outer: for i in 0..v.len() {
            for j in i + 1..v.len() {
                let br = lie_bracket(&v[i], &v[j])?;
                let zero = br.components().iter().all(|c| {
                    c.is_structurally_zero() || chart.zero_verdict(c, &options.zero).is_zero_like()
                });
                if !zero {
                    commuting = false;
                    break 'outer;
                }
            }
        }
        Ok(ExtendedFrame {
            chart,
            f: f.clone(),
            v,
            w,
            combined,
            solver,
            commuting,
            options: *options,
        })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn zero(&self) -> &ZeroTest {
        &self.options.zero
    }

    /// Combined-frame coefficients `(a, b)` of `X = a^i V_i + b^i W_i`.
    pub fn split(&self, x: &VectorField) -> Result<(Vec<crate::expr::Expr>, Vec<crate::expr::Expr>), AnalysisError> {
        let mut c = self.solver.decompose(x)?;
        let b = c.split_off(self.n());
        Ok((c, b))
    }

    /// The fields `V_1..V_n, W_1..W_n`.
    pub fn elements(&self) -> &[VectorField] {
        self.combined.fields()
    }

    pub fn element_name(&self, a: usize) -> String {
        let n = self.n();
        if a < n {
            format!("V{}", a + 1)
        } else {
            format!("W{}", a - n + 1)
        }
    }
}

/// Builds `W` and the combined frame.
pub fn build_w(p: &SecondOrderProblem) -> Result<ExtendedFrame, AnalysisError> {
    ExtendedFrame::from_basis(&p.f, p.v.fields().to_vec(), &p.options)
}

/// Involutivity of `W = span{V_i, W_i}`.
pub fn check_w_involutive(ef: &ExtendedFrame) -> Result<InvolutivityVerdict, AnalysisError> {
    let fields = ef.combined.fields();
    Ok(involutive_with(&ef.solver, fields, fields)?)
}
