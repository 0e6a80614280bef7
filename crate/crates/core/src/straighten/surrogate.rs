use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{CoordinateTransform, ResidualReport, StraightenError};
use crate::analysis::{
    analyze, AnalysisOptions, Classification, QuadraticDecomposition, QuadraticVerdict, SecondOrderProblem,
};
use crate::expr::Expr;
use crate::geometry::{Chart, Frame, VectorField};

/// Total degree of the fitted force.
pub const SURROGATE_DEGREE: u32 = 3;
/// Fitted coefficients below this magnitude are dropped.
pub const SNAP_THRESHOLD: f64 = 1e-7;
/// Surviving coefficients are rounded to this many decimals.
pub const SNAP_DECIMALS: i32 = 9;

/// A polynomial force fitted to the sampled normal form, re-analyzed
/// symbolically.
#[derive(Debug, Clone, Serialize)]
pub struct SurrogateReport {
    pub degree: u32,
    pub variables: Vec<String>,
    pub force: Vec<Expr>,
    pub samples: usize,
    /// Largest absolute fit error over the samples.
    pub fit_residual: f64,
    pub original: Classification,
    pub surrogate: Option<Classification>,
    pub agrees: bool,
    pub quadratic: Option<QuadraticVerdict>,
    /// `force = c y y + P y + Q` of the surrogate in the normal chart.
    pub decomposition: Option<QuadraticDecomposition>,
    pub diagnostic: Option<String>,
}

fn monomials(vars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(vars: usize, budget: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == vars {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=budget {
            prefix.push(e);
            rec(vars, budget - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, degree, &mut Vec::new(), &mut out);
    out.sort_by_key(|m| (m.iter().sum::<u32>(), std::cmp::Reverse(m.clone())));
    out
}

fn monomial_value(x: &[f64], exps: &[u32]) -> f64 {
    x.iter().zip(exps).map(|(xi, &e)| xi.powi(e as i32)).product()
}

fn monomial_expr(names: &[String], exps: &[u32]) -> Expr {
    Expr::prod(
        names
            .iter()
            .zip(exps)
            .filter(|(_, &e)| e > 0)
            .map(|(n, &e)| Expr::powi(Expr::sym(n), e as i64))
            .collect(),
    )
}

/// Fits the force on the unflagged samples and classifies the fitted system.
pub fn fit_surrogate(
    tr: &CoordinateTransform,
    residuals: &ResidualReport,
    options: &AnalysisOptions,
) -> Result<SurrogateReport, StraightenError> {
    let (k, n) = (tr.k(), tr.n());
    let meta = tr.metadata();
    let names = meta.parameters.clone();
    let rows: Vec<(Vec<f64>, &[f64])> = residuals
        .samples
        .iter()
        .filter(|s| !s.flagged)
        .map(|s| {
            let mut x = s.parameters[..k + n].to_vec();
            x.extend(&s.x_dot);
            (x, s.force.as_slice())
        })
        .collect();
    let exps = monomials(k + 2 * n, SURROGATE_DEGREE);
    if rows.len() < exps.len() {
        return Err(StraightenError::Numeric(format!(
            "{} samples cannot determine {} coefficients",
            rows.len(),
            exps.len()
        )));
    }
    let design = DMatrix::from_fn(rows.len(), exps.len(), |r, c| monomial_value(&rows[r].0, &exps[c]));
    let svd = design.clone().svd(true, true);
    let mut force = Vec::with_capacity(n);
    let mut fit_residual: f64 = 0.0;
    for i in 0..n {
        let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1[i]));
        let mut coef = svd
            .solve(&rhs, 1e-12)
            .map_err(|e| StraightenError::Numeric(e.to_string()))?;
        for c in coef.iter_mut() {
            if c.abs() < SNAP_THRESHOLD {
                *c = 0.0;
            }
        }
        fit_residual = fit_residual.max((&design * &coef - &rhs).amax());
        let terms = exps
            .iter()
            .zip(coef.iter())
            .filter(|(_, c)| **c != 0.0)
            .map(|(e, c)| &decimal(*c) * &monomial_expr(&names, e))
            .collect();
        force.push(Expr::sum(terms));
    }

    let mut lower = vec![f64::INFINITY; k + 2 * n];
    let mut upper = vec![f64::NEG_INFINITY; k + 2 * n];
    for (x, _) in &rows {
        for (d, v) in x.iter().enumerate() {
            lower[d] = lower[d].min(*v);
            upper[d] = upper[d].max(*v);
        }
    }
    for d in 0..lower.len() {
        if upper[d] - lower[d] < 1e-6 {
            lower[d] -= 0.5;
            upper[d] += 0.5;
        }
    }
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let chart = Arc::new(Chart::new(&name_refs, &lower, &upper, options.seed)?);
    let mut comps = vec![Expr::zero(); k];
    if meta.time_from_flow {
        comps[0] = Expr::one();
    }
    comps.extend(names[k + n..].iter().map(|y| Expr::sym(y)));
    comps.extend(force.iter().cloned());
    let f = VectorField::new(&chart, comps)?;
    let v = Frame::new(
        &chart,
        (0..n).map(|j| VectorField::coordinate(&chart, k + n + j)).collect(),
    )?;
    let outcome = SecondOrderProblem::new(f, v, options.clone()).and_then(|p| analyze(&p));
    let (surrogate, quadratic, decomposition, diagnostic) = match outcome {
        Ok(a) => (
            Some(a.report.classification),
            a.report.quadratic,
            a.report.natural_chart.map(|nc| nc.quadratic),
            None,
        ),
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    let agrees = surrogate.as_ref().is_some_and(|s| same_case(s, &meta.classification));
    Ok(SurrogateReport {
        degree: SURROGATE_DEGREE,
        variables: names,
        force,
        samples: rows.len(),
        fit_residual,
        original: meta.classification.clone(),
        surrogate,
        agrees,
        quadratic,
        decomposition,
        diagnostic,
    })
}

/// `c` rounded to [`SNAP_DECIMALS`] decimals as an exact rational.
fn decimal(c: f64) -> Expr {
    let scale = 10f64.powi(SNAP_DECIMALS);
    Expr::ratio((c * scale).round() as i64, scale as i64)
}

fn same_case(a: &Classification, b: &Classification) -> bool {
    match (a, b) {
        (Classification::Case1 { parameters: p }, Classification::Case1 { parameters: q })
        | (Classification::Case2 { parameters: p }, Classification::Case2 { parameters: q }) => p == q,
        (Classification::NotSecondOrder { .. }, Classification::NotSecondOrder { .. }) => true,
        _ => false,
    }
}
