use std::fmt;
use std::sync::Arc;

use super::{Chart, GeometryError};
use crate::expr::{differentiate, Compiled, EvalError, Expr};

/// A vector field given by its components in a chart.
#[derive(Clone, Debug)]
pub struct VectorField {
    chart: Arc<Chart>,
    components: Vec<Expr>,
}

impl PartialEq for VectorField {
    /// Equality of normal forms on the same chart.
    fn eq(&self, other: &Self) -> bool {
        self.same_chart(other)
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.same_normal_form(b))
    }
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, components: Vec<Expr>) -> Result<VectorField, GeometryError> {
        if components.len() != chart.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: chart.dim(),
                got: components.len(),
            });
        }
        Ok(VectorField {
            chart: chart.clone(),
            components,
        })
    }

    /// Parses each component.
    pub fn parse(chart: &Arc<Chart>, components: &[&str]) -> Result<VectorField, GeometryError> {
        let comps = components
            .iter()
            .map(|s| crate::expr::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        VectorField::new(chart, comps)
    }

    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField {
            chart: chart.clone(),
            components: vec![Expr::zero(); chart.dim()],
        }
    }

    /// The coordinate field `∂/∂z_i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.components[i] = Expr::one();
        v
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn same_chart(&self, other: &VectorField) -> bool {
        Arc::ptr_eq(&self.chart, &other.chart) || *self.chart == *other.chart
    }

    fn check(&self, other: &VectorField) -> Result<(), GeometryError> {
        if self.same_chart(other) {
            Ok(())
        } else {
            Err(GeometryError::ChartMismatch)
        }
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn normalize(&self) -> VectorField {
        self.map(|c| c.normalize())
    }

    /// Derivative of a function along the field, `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (j, c) in self.components.iter().enumerate() {
            if c.is_structurally_zero() {
                continue;
            }
            let d = differentiate(f, self.chart.name(j));
            if d.is_structurally_zero() {
                continue;
            }
            acc = &acc + &(c * &d);
        }
        acc
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, GeometryError> {
        self.check(other)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, GeometryError> {
        self.check(other)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn neg(&self) -> VectorField {
        self.map(|c| -c)
    }

    /// Multiplication by a function.
    pub fn scale(&self, f: &Expr) -> VectorField {
        self.map(|c| c * f)
    }

    /// `Σ coeffs[k] * fields[k]`; the list must be nonempty or `chart` given.
    pub fn combination(chart: &Arc<Chart>, coeffs: &[Expr], fields: &[VectorField]) -> VectorField {
        let mut comps = vec![Expr::zero(); chart.dim()];
        for (c, f) in coeffs.iter().zip(fields) {
            if c.is_structurally_zero() {
                continue;
            }
            for (acc, x) in comps.iter_mut().zip(&f.components) {
                if !x.is_structurally_zero() {
                    *acc = &*acc + &(c * x);
                }
            }
        }
        VectorField {
            chart: chart.clone(),
            components: comps,
        }
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_structurally_zero())
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let names = self.chart.names();
        let lookup = |s: &str| names.iter().position(|n| n == s).map(|i| z[i]);
        self.components.iter().map(|c| c.evaluate_with(&lookup)).collect()
    }

    pub fn compile(&self) -> Result<CompiledField, EvalError> {
        CompiledField::new(self, false)
    }

    pub fn compile_with_jacobian(&self) -> Result<CompiledField, EvalError> {
        CompiledField::new(self, true)
    }
}

/// Serialized as the list of component strings.
impl serde::Serialize for VectorField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&self.components, s)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.components.iter().enumerate() {
            if c.is_structurally_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})*d/d{}", c, self.chart.name(i))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `[X, Y]^k = X^j ∂_j Y^k - Y^j ∂_j X^k`, normalized.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, GeometryError> {
    x.check(y)?;
    let components = (0..x.dim())
        .map(|k| &x.apply(&y.components[k]) - &y.apply(&x.components[k]))
        .collect();
    Ok(VectorField {
        chart: x.chart.clone(),
        components,
    })
}

/// Components (and optionally the Jacobian) compiled for fast evaluation.
#[derive(Debug, Clone)]
pub struct CompiledField {
    dim: usize,
    values: Vec<Compiled>,
    /// Row-major `∂X^i/∂z^j`.
    jacobian: Option<Vec<Compiled>>,
}

impl CompiledField {
    fn new(x: &VectorField, with_jacobian: bool) -> Result<CompiledField, EvalError> {
        let names = x.chart.names();
        let values = x
            .components
            .iter()
            .map(|c| Compiled::new(c, names))
            .collect::<Result<Vec<_>, _>>()?;
        let jacobian = if with_jacobian {
            let mut jac = Vec::with_capacity(x.dim() * x.dim());
            for c in &x.components {
                for name in names {
                    jac.push(Compiled::new(&differentiate(c, name), names)?);
                }
            }
            Some(jac)
        } else {
            None
        };
        Ok(CompiledField {
            dim: x.dim(),
            values,
            jacobian,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval_into(&self, z: &[f64], out: &mut [f64], stack: &mut Vec<f64>) -> Result<(), EvalError> {
        for (o, c) in out.iter_mut().zip(&self.values) {
            *o = c.eval_with(z, stack)?;
        }
        Ok(())
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(z, &mut out, &mut Vec::new())?;
        Ok(out)
    }

    /// Row-major Jacobian; panics if compiled without it.
    pub fn jacobian_into(&self, z: &[f64], out: &mut [f64], stack: &mut Vec<f64>) -> Result<(), EvalError> {
        let jac = self.jacobian.as_ref().expect("compiled without jacobian");
        for (o, c) in out.iter_mut().zip(jac) {
            *o = c.eval_with(z, stack)?;
        }
        Ok(())
    }
}
