//! Routh reduction of a Lagrangian with cyclic coordinates, done symbolically.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::expr::{differentiate, parse, Expr, ZeroTest};
use crate::geometry::{inverse_matrix, Chart};

/// A Lagrangian `L(x, v, w)` whose cyclic velocities `w` are traded for
/// momenta `mu = ∂L/∂w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianSpec {
    pub positions: Vec<String>,
    pub velocities: Vec<String>,
    pub cyclic_velocities: Vec<String>,
    pub momenta: Vec<String>,
    pub function: String,
}

/// The reduced field derived from a [`LagrangianSpec`].
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub routhian: Expr,
    /// Components in chart order.
    pub components: Vec<Expr>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn matrix_times(a: &[Vec<Expr>], v: &[Expr]) -> Vec<Expr> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(Expr::zero(), |acc, (x, y)| &acc + &(x * y)))
        .collect()
}

/// `R = L − μ·w` with `w(μ)` solved from `μ = ∂L/∂w`, then
/// `∂²R/∂v∂v · v̇ = ∂R/∂x − ∂²R/∂v∂x · v` solved for `v̇`.
pub fn reduce(spec: &LagrangianSpec, chart: &Chart, zero: &ZeroTest) -> Result<ReducedSystem, CliError> {
    let n = spec.positions.len();
    let r = spec.cyclic_velocities.len();
    if spec.velocities.len() != n {
        return Err(invalid("lagrangian: positions and velocities differ in length"));
    }
    if spec.momenta.len() != r {
        return Err(invalid("lagrangian: cyclic_velocities and momenta differ in length"));
    }
    for name in spec.positions.iter().chain(&spec.velocities).chain(&spec.momenta) {
        if chart.index_of(name).is_none() {
            return Err(invalid(format!("lagrangian: {name} is not a chart coordinate")));
        }
    }
    for name in &spec.cyclic_velocities {
        if chart.index_of(name).is_some() {
            return Err(invalid(format!("lagrangian: cyclic velocity {name} must not be a chart coordinate")));
        }
    }
    let l = parse(&spec.function).map_err(|source| CliError::Expression {
        location: "lagrangian.function".into(),
        source,
    })?;

    let w = &spec.cyclic_velocities;
    let at_rest = |e: &Expr| w.iter().fold(e.clone(), |acc, s| acc.substitute(s, &Expr::zero()));
    let dl: Vec<Expr> = w.iter().map(|s| differentiate(&l, s)).collect();
    let mass: Vec<Vec<Expr>> = dl.iter().map(|d| w.iter().map(|s| differentiate(d, s)).collect()).collect();
    for entry in mass.iter().flatten() {
        if w.iter().any(|s| entry.depends_on(s)) {
            return Err(invalid("lagrangian: not quadratic in the cyclic velocities"));
        }
    }
    let offset: Vec<Expr> = dl.iter().map(at_rest).collect();
    let inv = inverse_matrix(mass, chart, zero)?;
    let shifted: Vec<Expr> = spec
        .momenta
        .iter()
        .zip(&offset)
        .map(|(mu, b)| &Expr::sym(mu) - b)
        .collect();
    let w_of_mu = matrix_times(&inv, &shifted);
    let mut routhian = w.iter().zip(&w_of_mu).fold(l, |acc, (s, e)| acc.substitute(s, e));
    for (mu, e) in spec.momenta.iter().zip(&w_of_mu) {
        routhian = &routhian - &(&Expr::sym(mu) * e);
    }
    let routhian = routhian.normalize();

    let dv: Vec<Expr> = spec.velocities.iter().map(|v| differentiate(&routhian, v)).collect();
    let hess: Vec<Vec<Expr>> = dv
        .iter()
        .map(|d| spec.velocities.iter().map(|v| differentiate(d, v)).collect())
        .collect();
    let rhs: Vec<Expr> = (0..n)
        .map(|i| {
            let mut acc = differentiate(&routhian, &spec.positions[i]);
            for j in 0..n {
                let mixed = differentiate(&dv[i], &spec.positions[j]);
                acc = &acc - &(&mixed * &Expr::sym(&spec.velocities[j]));
            }
            acc
        })
        .collect();
    let accel = matrix_times(&inverse_matrix(hess, chart, zero)?, &rhs);

    let mut components = vec![Expr::zero(); chart.dim()];
    let mut assigned = vec![false; chart.dim()];
    for i in 0..n {
        let x = chart.index_of(&spec.positions[i]).expect("checked above");
        let v = chart.index_of(&spec.velocities[i]).expect("checked above");
        components[x] = Expr::sym(&spec.velocities[i]);
        components[v] = accel[i].normalize();
        assigned[x] = true;
        assigned[v] = true;
    }
    for mu in &spec.momenta {
        assigned[chart.index_of(mu).expect("checked above")] = true;
    }
    if let Some(free) = assigned.iter().position(|a| !a) {
        return Err(invalid(format!(
            "lagrangian: coordinate {} has no role",
            chart.name(free)
        )));
    }
    Ok(ReducedSystem { routhian, components })
}
