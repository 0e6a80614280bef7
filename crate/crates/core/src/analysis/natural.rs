use serde::Serialize;

use super::{check_zero, Check};
use crate::expr::{differentiate, Expr, ZeroTest};
use crate::geometry::VectorField;

/// Force decomposed as `c^i_jk y^j y^k + P^i_j y^j + Q^i`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticDecomposition {
    /// `c[i][j][k] = ½ ∂²F^i/∂y^j∂y^k` at `y = 0`.
    pub c: Vec<Vec<Vec<Expr>>>,
    pub p: Vec<Vec<Expr>>,
    pub q: Vec<Expr>,
    /// The force minus the quadratic part.
    pub remainder: Check,
}

/// Coordinates in which `V_i = ∂/∂y^i` and `F^{x^i} = y^i`.
#[derive(Debug, Clone, Serialize)]
pub struct NaturalChart {
    pub positions: Vec<String>,
    pub velocities: Vec<String>,
    /// Coordinate with `F^t = 1`, if any.
    pub time: Option<String>,
    pub parameters: Vec<String>,
    pub force: Vec<Expr>,
    /// `gamma[i][j] = Γ^i_j = −½ ∂F^{y^i}/∂y^j`.
    pub gamma: Vec<Vec<Expr>>,
    /// `gamma2[i][j][k] = Γ^i_jk = ∂Γ^i_j/∂y^k`.
    pub gamma2: Vec<Vec<Vec<Expr>>>,
    pub gamma_symmetry: Check,
    /// Components of `F` along the parameter coordinates.
    pub parameter_components: Check,
    pub quadratic: QuadraticDecomposition,
    /// `S(F) − y^i V_i`, when `F` lies in W.
    pub liouville: Option<Check>,
}

/// Index of the coordinate `v` is the unit field of, if it is one.
fn unit_index(v: &VectorField) -> Option<usize> {
    let one = Expr::one();
    let mut found = None;
    for (i, c) in v.components().iter().enumerate() {
        if c.is_structurally_zero() {
            continue;
        }
        if found.is_some() || !c.same_normal_form(&one) {
            return None;
        }
        found = Some(i);
    }
    found
}

/// Recognizes a natural chart for `(F, V)`; `None` if the coordinates are not adapted.
pub fn natural_chart(f: &VectorField, v: &[VectorField], zero: &ZeroTest) -> Option<NaturalChart> {
    let chart = f.chart();
    let names = chart.names();
    let vel: Vec<usize> = v.iter().map(unit_index).collect::<Option<_>>()?;
    let mut pos = Vec::with_capacity(vel.len());
    for &y in &vel {
        let target = Expr::sym(&names[y]);
        let x = (0..names.len()).find(|&r| !vel.contains(&r) && f.component(r).same_normal_form(&target))?;
        pos.push(x);
    }
    let rest: Vec<usize> = (0..names.len())
        .filter(|r| !vel.contains(r) && !pos.contains(r))
        .collect();
    let time = rest
        .iter()
        .copied()
        .find(|&r| f.component(r).same_normal_form(&Expr::one()));
    let params: Vec<usize> = rest.iter().copied().filter(|r| Some(*r) != time).collect();

    let n = vel.len();
    let ys: Vec<&str> = vel.iter().map(|&r| names[r].as_str()).collect();
    let force: Vec<Expr> = vel.iter().map(|&r| f.component(r).clone()).collect();
    let half = Expr::ratio(1, 2);
    let gamma: Vec<Vec<Expr>> = force
        .iter()
        .map(|fi| ys.iter().map(|y| -&(&half * &differentiate(fi, y))).collect())
        .collect();
    let gamma2: Vec<Vec<Vec<Expr>>> = gamma
        .iter()
        .map(|row| row.iter().map(|g| ys.iter().map(|y| differentiate(g, y)).collect()).collect())
        .collect();
    let mut asym = Vec::new();
    for g in &gamma2 {
        for j in 0..n {
            for k in j + 1..n {
                asym.push(&g[j][k] - &g[k][j]);
            }
        }
    }
    let gamma_symmetry = check_zero("gamma_symmetry", chart, &asym, zero);
    let param_comps: Vec<Expr> = params.iter().map(|&r| f.component(r).clone()).collect();
    let parameter_components = check_zero("parameter_components", chart, &param_comps, zero);

    let at_origin = |e: &Expr| ys.iter().fold(e.clone(), |acc, y| acc.substitute(y, &Expr::zero()));
    let q: Vec<Expr> = force.iter().map(at_origin).collect();
    let p: Vec<Vec<Expr>> = force
        .iter()
        .map(|fi| ys.iter().map(|y| at_origin(&differentiate(fi, y))).collect())
        .collect();
    let c: Vec<Vec<Vec<Expr>>> = force
        .iter()
        .map(|fi| {
            ys.iter()
                .map(|yj| {
                    let d = differentiate(fi, yj);
                    ys.iter().map(|yk| at_origin(&(&half * &differentiate(&d, yk)))).collect()
                })
                .collect()
        })
        .collect();
    let remainders: Vec<Expr> = (0..n)
        .map(|i| {
            let mut r = &force[i] - &q[i];
            for j in 0..n {
                let yj = Expr::sym(ys[j]);
                r = &r - &(&p[i][j] * &yj);
                for k in 0..n {
                    r = &r - &(&(&c[i][j][k] * &yj) * &Expr::sym(ys[k]));
                }
            }
            r
        })
        .collect();
    let remainder = check_zero("quadratic_remainder", chart, &remainders, zero);

    let label = |rs: &[usize]| rs.iter().map(|&r| names[r].clone()).collect::<Vec<_>>();
    Some(NaturalChart {
        positions: label(&pos),
        velocities: label(&vel),
        time: time.map(|t| names[t].clone()),
        parameters: label(&params),
        force,
        gamma,
        gamma2,
        gamma_symmetry,
        parameter_components,
        quadratic: QuadraticDecomposition { c, p, q, remainder },
        liouville: None,
    })
}
