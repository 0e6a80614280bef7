use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Chart, CompiledField, GeometryError, VectorField};
use crate::expr::EvalError;
use crate::par::{map_slice, Execution};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_RANK_SAMPLES: usize = 64;

/// Ordered list of vector fields spanning a distribution of constant rank.
#[derive(Clone, Debug)]
pub struct Frame {
    chart: Arc<Chart>,
    fields: Vec<VectorField>,
}

impl Frame {
    /// Builds a frame and verifies full rank at 64 sample points.
    pub fn new(chart: &Arc<Chart>, fields: Vec<VectorField>) -> Result<Frame, GeometryError> {
        let frame = Frame::new_unchecked(chart, fields)?;
        let report = frame_rank(&frame, DEFAULT_RANK_SAMPLES, chart.seed(), Execution::default())?;
        if let Some((point, found)) = report.first_deficiency(frame.len()) {
            return Err(GeometryError::RankDeficient {
                expected: frame.len(),
                found,
                point,
            });
        }
        Ok(frame)
    }

    /// Builds a frame without the rank check (chart agreement is still checked).
    pub fn new_unchecked(chart: &Arc<Chart>, fields: Vec<VectorField>) -> Result<Frame, GeometryError> {
        for f in &fields {
            if !(Arc::ptr_eq(f.chart(), chart) || **f.chart() == **chart) {
                return Err(GeometryError::ChartMismatch);
            }
        }
        Ok(Frame {
            chart: chart.clone(),
            fields,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> &VectorField {
        &self.fields[i]
    }
}

/// Pointwise numeric ranks of a list of fields over sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// Maximum rank over the samples.
    pub claimed_rank: usize,
    pub ranks: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    /// Smallest singular value that counted as nonzero, over all samples.
    pub worst_conditioning: f64,
    /// Sample points whose rank is below `claimed_rank`.
    pub deficient: Vec<Vec<f64>>,
    /// Points that failed to evaluate, with the reason.
    pub skipped: Vec<(Vec<f64>, String)>,
}

impl RankReport {
    pub fn min_rank(&self) -> usize {
        self.ranks.iter().copied().min().unwrap_or(0)
    }

    pub fn is_constant(&self, expected: usize) -> bool {
        self.ranks.iter().all(|r| *r == expected)
    }

    /// First evaluated point whose rank is below `expected`.
    pub fn first_deficiency(&self, expected: usize) -> Option<(Vec<f64>, usize)> {
        self.ranks
            .iter()
            .zip(&self.points)
            .find(|(r, _)| **r < expected)
            .map(|(r, p)| (p.clone(), *r))
    }
}

/// Numeric rank of the matrix whose columns are `vectors`.
pub(crate) fn numeric_rank(columns: &[Vec<f64>], rows: usize) -> (usize, f64) {
    if columns.is_empty() {
        return (0, f64::INFINITY);
    }
    let m = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return (0, 0.0);
    }
    let mut rank = 0;
    let mut smallest = f64::INFINITY;
    for s in sv.iter() {
        if *s > RANK_TOLERANCE * smax {
            rank += 1;
            smallest = smallest.min(*s);
        }
    }
    (rank, smallest)
}

/// Rank report for an arbitrary list of fields.
pub fn rank_of_fields(
    chart: &Chart,
    fields: &[VectorField],
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<RankReport, GeometryError> {
    let compiled = fields
        .iter()
        .map(|f| f.compile())
        .collect::<Result<Vec<CompiledField>, EvalError>>()?;
    let points = chart.sample_points(samples.max(1), seed);
    let m = chart.dim();
    let results: Vec<Result<(usize, f64), EvalError>> = map_slice(exec, &points, |z| {
        let cols = compiled
            .iter()
            .map(|c| c.eval(z))
            .collect::<Result<Vec<_>, _>>()?;
        if cols.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EvalError::Domain {
                subterm: "frame".into(),
                reason: "non-finite component".into(),
            });
        }
        Ok(numeric_rank(&cols, m))
    });
    let mut report = RankReport {
        claimed_rank: 0,
        ranks: Vec::new(),
        points: Vec::new(),
        worst_conditioning: f64::INFINITY,
        deficient: Vec::new(),
        skipped: Vec::new(),
    };
    for (z, r) in points.into_iter().zip(results) {
        match r {
            Ok((rank, smallest)) => {
                report.ranks.push(rank);
                report.points.push(z);
                report.worst_conditioning = report.worst_conditioning.min(smallest);
            }
            Err(e) => report.skipped.push((z, e.to_string())),
        }
    }
    if report.ranks.is_empty() {
        let reason = report
            .skipped
            .first()
            .map(|(_, s)| s.clone())
            .unwrap_or_default();
        return Err(GeometryError::AllPointsSkipped(reason));
    }
    report.claimed_rank = report.ranks.iter().copied().max().unwrap_or(0);
    report.deficient = report
        .ranks
        .iter()
        .zip(&report.points)
        .filter(|(r, _)| **r < report.claimed_rank)
        .map(|(_, p)| p.clone())
        .collect();
    Ok(report)
}

/// Pointwise rank of a frame at `samples` quasi-random points.
pub fn frame_rank(fr: &Frame, samples: usize, seed: u64, exec: Execution) -> Result<RankReport, GeometryError> {
    rank_of_fields(&fr.chart, &fr.fields, samples, seed, exec)
}
