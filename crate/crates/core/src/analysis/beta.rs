use std::sync::Arc;

use serde::Serialize;

use super::{check_zero, AnalysisError, Check, ExtendedFrame};
use crate::expr::{Expr, ZeroTest};
use crate::geometry::{inverse_matrix, lie_bracket, Chart, VectorField};

/// Coefficients of `[V_i, W_j] = α^k_ij V_k + β^k_ij W_k`.
#[derive(Debug, Clone, Serialize)]
pub struct BetaCoefficients {
    pub n: usize,
    /// `alpha[i][j][k]` is α^k_ij.
    pub alpha: Vec<Vec<Vec<Expr>>>,
    /// `beta[i][j][k]` is β^k_ij.
    pub beta: Vec<Vec<Vec<Expr>>>,
    /// α and β symmetric in the lower indices.
    pub symmetry: Check,
    #[serde(skip)]
    chart: Arc<Chart>,
    #[serde(skip)]
    v: Vec<VectorField>,
    #[serde(skip)]
    zero: ZeroTest,
}

impl BetaCoefficients {
    /// Decomposes every `[V_i, W_j]`; the V-basis must commute.
    pub fn compute(ef: &ExtendedFrame) -> Result<BetaCoefficients, AnalysisError> {
        let n = ef.n();
        if !ef.commuting {
            for i in 0..n {
                for j in i + 1..n {
                    let br = lie_bracket(&ef.v[i], &ef.v[j])?;
                    if !br.is_structurally_zero() {
                        return Err(AnalysisError::NonCommutingBasis { i, j });
                    }
                }
            }
        }
        let mut alpha = vec![vec![Vec::new(); n]; n];
        let mut beta = vec![vec![Vec::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = ef.split(&lie_bracket(&ef.v[i], &ef.w[j])?)?;
                alpha[i][j] = a;
                beta[i][j] = b;
            }
        }
        let mut diffs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    diffs.push(&alpha[i][j][k] - &alpha[j][i][k]);
                    diffs.push(&beta[i][j][k] - &beta[j][i][k]);
                }
            }
        }
        let symmetry = check_zero("alpha_beta_symmetry", &ef.chart, &diffs, ef.zero());
        Ok(BetaCoefficients {
            n,
            alpha,
            beta,
            symmetry,
            chart: ef.chart.clone(),
            v: ef.v.clone(),
            zero: *ef.zero(),
        })
    }

    /// True when every β is structurally zero.
    pub fn is_structurally_zero(&self) -> bool {
        self.beta.iter().flatten().flatten().all(Expr::is_structurally_zero)
    }

    /// The V-basis the coefficients refer to.
    pub fn basis(&self) -> &[VectorField] {
        &self.v
    }
}

/// `V_i(β^l_jk) − V_j(β^l_ik) + β^l_im β^m_jk − β^l_jm β^m_ik` for all indices.
pub fn verify_beta_integrability(b: &BetaCoefficients) -> Check {
    let n = b.n;
    let beta = |i: usize, j: usize, k: usize| &b.beta[i][j][k];
    let mut residuals = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r = &b.v[i].apply(beta(j, k, l)) - &b.v[j].apply(beta(i, k, l));
                    for m in 0..n {
                        r = &r + &(beta(i, m, l) * beta(j, k, m));
                        r = &r - &(beta(j, m, l) * beta(i, k, m));
                    }
                    residuals.push(r);
                }
            }
        }
    }
    check_zero("beta_integrability", &b.chart, &residuals, &b.zero)
}

/// β after the basis change `Ṽ_j = A^k_j V_k` (`a[k][j] = A^k_j`):
/// `β̃^s_ij = (A⁻¹)^s_q (A^p_i V_p(A^q_j) + A^p_i A^r_j β^q_pr)`.
pub fn transform_beta(b: &BetaCoefficients, a: &[Vec<Expr>]) -> Result<Vec<Vec<Vec<Expr>>>, AnalysisError> {
    let n = b.n;
    let inv = inverse_matrix(a.to_vec(), &b.chart, &b.zero)?;
    let mut out = vec![vec![vec![Expr::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut gamma = vec![Expr::zero(); n];
            for (q, g) in gamma.iter_mut().enumerate() {
                for p in 0..n {
                    if a[p][i].is_structurally_zero() {
                        continue;
                    }
                    let mut inner = b.v[p].apply(&a[q][j]);
                    for r in 0..n {
                        inner = &inner + &(&a[r][j] * &b.beta[p][r][q]);
                    }
                    *g = &*g + &(&a[p][i] * &inner);
                }
            }
            for s in 0..n {
                let mut acc = Expr::zero();
                for q in 0..n {
                    acc = &acc + &(&inv[s][q] * &gamma[q]);
                }
                out[i][j][s] = acc;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationMethod {
    /// β already vanishes; `A` is the identity.
    AlreadyAdapted,
    /// `A = B⁻¹ B(z₀)` from the W-components along V-invariant coordinates.
    Symbolic,
    /// Left to the numeric basis ODE.
    Numeric,
}

/// A commuting V-basis with `[Ṽ_i, W̃_j] ∈ V`.
#[derive(Debug, Clone, Serialize)]
pub struct Adaptation {
    pub method: AdaptationMethod,
    /// `matrix[k][j] = A^k_j`, when known symbolically.
    pub matrix: Option<Vec<Vec<Expr>>>,
    /// Coordinates constant along V used for the symbolic solution.
    pub rows: Vec<String>,
    pub base_point: Vec<f64>,
    /// The adapted basis.
    pub basis: Option<Vec<VectorField>>,
    /// Zero check on the W-components of `[Ṽ_i, W̃_j]`.
    pub verification: Option<Check>,
    pub diagnostic: Option<String>,
    #[serde(skip)]
    pub frame: Option<ExtendedFrame>,
}

fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (idx, &first) in pool.iter().enumerate() {
        for mut rest in combinations(&pool[idx + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Finds `A` with `V_l(A) = −β_l A` and `A(z₀) = I`.
pub fn adapt_commuting_basis(
    ef: &ExtendedFrame,
    b: &BetaCoefficients,
    base_point: &[f64],
) -> Result<Adaptation, AnalysisError> {
    let n = ef.n();
    let chart = &ef.chart;
    let zero = ef.zero();
    let all_beta: Vec<Expr> = b.beta.iter().flatten().flatten().cloned().collect();
    let beta_check = check_zero("adapted_beta", chart, &all_beta, zero);
    if beta_check.passed() {
        let identity = (0..n)
            .map(|r| (0..n).map(|c| if r == c { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        return Ok(Adaptation {
            method: AdaptationMethod::AlreadyAdapted,
            matrix: Some(identity),
            rows: Vec::new(),
            base_point: base_point.to_vec(),
            basis: Some(ef.v.clone()),
            verification: Some(beta_check),
            diagnostic: None,
            frame: Some(ef.clone()),
        });
    }

    let numeric = |diagnostic: String| Adaptation {
        method: AdaptationMethod::Numeric,
        matrix: None,
        rows: Vec::new(),
        base_point: base_point.to_vec(),
        basis: None,
        verification: None,
        diagnostic: Some(diagnostic),
        frame: None,
    };

    let invariant: Vec<usize> = (0..chart.dim())
        .filter(|r| ef.v.iter().all(|v| v.component(*r).is_structurally_zero()))
        .collect();
    if invariant.len() < n {
        return Ok(numeric(format!(
            "only {} coordinates are constant along V, need {n}",
            invariant.len()
        )));
    }
    let substitute_base = |e: &Expr| {
        chart
            .names()
            .iter()
            .zip(base_point)
            .fold(e.clone(), |acc, (name, x)| acc.substitute(name, &Expr::float(*x)))
    };
    let mut last_error = String::new();
    for rows in combinations(&invariant, n) {
        let bmat: Vec<Vec<Expr>> = rows
            .iter()
            .map(|&r| ef.w.iter().map(|w| w.component(r).clone()).collect())
            .collect();
        let binv = match inverse_matrix(bmat.clone(), chart, zero) {
            Ok(m) => m,
            Err(e) => {
                last_error = e.to_string();
                continue;
            }
        };
        let b0: Vec<Vec<Expr>> = bmat.iter().map(|row| row.iter().map(substitute_base).collect()).collect();
        if b0.iter().flatten().any(|e| e.as_rational().is_none()) {
            last_error = "W-components do not evaluate to exact constants at the base point".into();
            continue;
        }
        let a: Vec<Vec<Expr>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(Expr::zero(), |acc, q| &acc + &(&binv[k][q] * &b0[q][j]))
                    })
                    .collect()
            })
            .collect();
        let basis: Vec<VectorField> = (0..n)
            .map(|j| {
                let coeffs: Vec<Expr> = (0..n).map(|k| a[k][j].clone()).collect();
                VectorField::combination(chart, &coeffs, &ef.v).normalize()
            })
            .collect();
        let adapted = match ExtendedFrame::from_basis(&ef.f, basis.clone(), &ef.options) {
            Ok(fr) => fr,
            Err(e) => {
                last_error = e.to_string();
                continue;
            }
        };
        let mut w_parts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (_, bcoef) = adapted.split(&lie_bracket(&adapted.v[i], &adapted.w[j])?)?;
                w_parts.extend(bcoef);
            }
        }
        let verification = check_zero("adapted_brackets_in_v", chart, &w_parts, zero);
        if !verification.passed() {
            last_error = format!("symbolic candidate failed verification: {:?}", verification.status);
            continue;
        }
        return Ok(Adaptation {
            method: AdaptationMethod::Symbolic,
            matrix: Some(a),
            rows: rows.iter().map(|r| chart.name(*r).to_string()).collect(),
            base_point: base_point.to_vec(),
            basis: Some(basis),
            verification: Some(verification),
            diagnostic: None,
            frame: Some(adapted),
        });
    }
    Ok(numeric(last_error))
}
