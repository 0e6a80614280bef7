use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lagrangian::{reduce, LagrangianSpec};
use super::CliError;
use crate::analysis::{AnalysisOptions, SecondOrderProblem};
use crate::expr::{parse, Expr};
use crate::geometry::{Chart, Frame, VectorField};
use crate::straighten::StraightenOptions;

/// Sample points used to compare a Lagrangian-derived field with the stated one.
pub const LAGRANGIAN_SAMPLES: usize = 100;
pub const LAGRANGIAN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coordinates: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub fields: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifestOptions {
    pub seed: u64,
    /// Sample points for rank checks.
    pub samples: Option<usize>,
    /// Pass threshold on the straightening residual.
    pub tolerance: f64,
    /// Grid points per parameter axis.
    pub grid: Option<usize>,
    /// Evaluations per zero test.
    pub zero_trials: Option<usize>,
    pub newton_starts: Option<usize>,
}

impl Default for ManifestOptions {
    fn default() -> Self {
        ManifestOptions {
            seed: 0,
            samples: None,
            tolerance: 1e-5,
            grid: None,
            zero_trials: None,
            newton_starts: None,
        }
    }
}

/// A problem definition: chart, `F`, the frame of `V`, and run options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub metadata: Metadata,
    pub chart: ChartSpec,
    /// May be omitted when a Lagrangian is given.
    pub field: Option<FieldSpec>,
    pub frame: FrameSpec,
    pub lagrangian: Option<LagrangianSpec>,
    #[serde(default)]
    pub options: ManifestOptions,
}

/// Agreement between the Lagrangian-derived field and the stated one.
#[derive(Debug, Clone, Serialize)]
pub struct LagrangianComparison {
    pub routhian: Expr,
    pub derived: Vec<Expr>,
    /// Differences vanish in normal form.
    pub exact: bool,
    pub samples: usize,
    pub max_difference: f64,
    pub passed: bool,
}

/// A validated manifest turned into library objects.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: SecondOrderProblem,
    pub straighten: StraightenOptions,
    pub lagrangian: Option<LagrangianComparison>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Manifest, CliError> {
        toml::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let o = &self.options;
        let mut a = AnalysisOptions::with_seed(o.seed);
        if let Some(s) = o.samples {
            a.samples = s;
        }
        if let Some(t) = o.zero_trials {
            a.zero.trials = t;
        }
        if let Some(k) = o.newton_starts {
            a.newton_starts = k;
        }
        a
    }

    pub fn straighten_options(&self) -> StraightenOptions {
        StraightenOptions {
            grid: self.options.grid,
            tolerance: self.options.tolerance,
            ..StraightenOptions::default()
        }
    }

    fn expression(&self, text: &str, location: String, chart: &Chart) -> Result<Expr, CliError> {
        let e = parse(text).map_err(|source| CliError::Expression { location: location.clone(), source })?;
        if let Some(s) = e.symbols().into_iter().find(|s| chart.index_of(s).is_none()) {
            return Err(invalid(format!("{location}: unknown symbol {s}")));
        }
        Ok(e)
    }

    /// Checks dimensions and expressions and builds the problem.
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        let c = &self.chart;
        let m = c.coordinates.len();
        if c.lower.len() != m || c.upper.len() != m {
            return Err(invalid(format!(
                "chart: {m} coordinates but {} lower and {} upper bounds",
                c.lower.len(),
                c.upper.len()
            )));
        }
        let names: Vec<&str> = c.coordinates.iter().map(String::as_str).collect();
        let chart = Arc::new(Chart::new(&names, &c.lower, &c.upper, self.options.seed)?);
        let opts = self.analysis_options();

        let mut frame_fields = Vec::new();
        for (i, comps) in self.frame.fields.iter().enumerate() {
            if comps.len() != m {
                return Err(invalid(format!("frame.fields[{i}]: expected {m} components, got {}", comps.len())));
            }
            let exprs = comps
                .iter()
                .enumerate()
                .map(|(j, t)| self.expression(t, format!("frame.fields[{i}][{j}]"), &chart))
                .collect::<Result<Vec<_>, _>>()?;
            frame_fields.push(VectorField::new(&chart, exprs)?);
        }
        if frame_fields.is_empty() {
            return Err(invalid("frame: at least one field is required"));
        }
        if 2 * frame_fields.len() > m {
            return Err(invalid(format!(
                "frame: 2 x {} fields exceed the chart dimension {m}",
                frame_fields.len()
            )));
        }

        let stated = match &self.field {
            Some(fs) => {
                if fs.components.len() != m {
                    return Err(invalid(format!(
                        "field: expected {m} components, got {}",
                        fs.components.len()
                    )));
                }
                let exprs = fs
                    .components
                    .iter()
                    .enumerate()
                    .map(|(j, t)| self.expression(t, format!("field.components[{j}]"), &chart))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(VectorField::new(&chart, exprs)?)
            }
            None => None,
        };

        let (f, lagrangian) = match &self.lagrangian {
            Some(spec) => {
                let reduced = reduce(spec, &chart, &opts.zero)?;
                let derived = VectorField::new(&chart, reduced.components.clone())?;
                let comparison = stated.as_ref().map(|s| compare(&derived, s, &reduced.routhian, &chart, self.options.seed));
                (derived, comparison)
            }
            None => (stated.ok_or_else(|| invalid("field: required without a lagrangian"))?, None),
        };
        if let Some(cmp) = &lagrangian {
            if !cmp.passed {
                return Err(invalid(format!(
                    "field disagrees with the lagrangian by {:e}",
                    cmp.max_difference
                )));
            }
        }

        let frame = Frame::new_unchecked(&chart, frame_fields)?;
        let problem = SecondOrderProblem::new_unverified(f, frame, opts)?;
        Ok(Prepared {
            problem,
            straighten: self.straighten_options(),
            lagrangian,
        })
    }
}

fn compare(derived: &VectorField, stated: &VectorField, routhian: &Expr, chart: &Chart, seed: u64) -> LagrangianComparison {
    let exact = derived
        .components()
        .iter()
        .zip(stated.components())
        .all(|(a, b)| a.same_normal_form(b));
    let mut max_difference: f64 = 0.0;
    for z in chart.sample_points(LAGRANGIAN_SAMPLES, seed) {
        match (derived.eval(&z), stated.eval(&z)) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.iter().zip(&b) {
                    max_difference = max_difference.max((x - y).abs());
                }
            }
            _ => max_difference = f64::INFINITY,
        }
    }
    LagrangianComparison {
        routhian: routhian.clone(),
        derived: derived.components().to_vec(),
        exact,
        samples: LAGRANGIAN_SAMPLES,
        max_difference,
        passed: max_difference <= LAGRANGIAN_TOLERANCE,
    }
}
