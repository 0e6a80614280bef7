use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::expr::{is_zero, Expr, SampleBox, ZeroTest, ZeroVerdict};
use crate::sampling::QuasiRandom;

/// Ordered coordinate names with a sampling box and a default seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    sample_box: SampleBox,
    seed: u64,
}

impl Chart {
    pub fn new(names: &[&str], lower: &[f64], upper: &[f64], seed: u64) -> Result<Chart, GeometryError> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        Chart::from_box(SampleBox::new_checked(names, lower.to_vec(), upper.to_vec())?, seed)
    }

    pub fn from_box(sample_box: SampleBox, seed: u64) -> Result<Chart, GeometryError> {
        let unique: BTreeSet<&String> = sample_box.names.iter().collect();
        if unique.len() != sample_box.names.len() {
            return Err(GeometryError::InvalidChart("coordinate names must be unique".into()));
        }
        if sample_box.names.is_empty() {
            return Err(GeometryError::InvalidChart("no coordinates".into()));
        }
        for (i, name) in sample_box.names.iter().enumerate() {
            if !(sample_box.width(i) > 0.0) || !sample_box.lower[i].is_finite() || !sample_box.upper[i].is_finite() {
                return Err(GeometryError::InvalidChart(format!("degenerate interval for '{name}'")));
            }
        }
        Ok(Chart { sample_box, seed })
    }

    pub fn dim(&self) -> usize {
        self.sample_box.dim()
    }

    pub fn names(&self) -> &[String] {
        &self.sample_box.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.sample_box.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.sample_box.index_of(name)
    }

    pub fn sample_box(&self) -> &SampleBox {
        &self.sample_box
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn coordinate(&self, i: usize) -> Expr {
        Expr::sym(self.name(i))
    }

    /// `count` quasi-random points of the box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let seq = QuasiRandom::new(self.dim(), seed);
        (0..count)
            .map(|i| self.sample_box.from_unit(&seq.point(i)))
            .collect()
    }

    pub fn zero_verdict(&self, e: &Expr, opts: &ZeroTest) -> ZeroVerdict {
        is_zero(e, &self.sample_box, opts)
    }
}

impl SampleBox {
    fn new_checked(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<SampleBox, GeometryError> {
        if lower.len() != names.len() || upper.len() != names.len() {
            return Err(GeometryError::InvalidChart("bounds do not match coordinates".into()));
        }
        Ok(SampleBox::new(names, lower, upper))
    }
}
