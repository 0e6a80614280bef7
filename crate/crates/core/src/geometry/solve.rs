use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{lie_bracket, Chart, Frame, GeometryError, VectorField};
use crate::expr::{Expr, ZeroTest, ZeroVerdict};

/// Symbolic left inverse of a frame matrix, built once by Gauss-Jordan
/// elimination with probabilistic pivot tests and reused for every
/// decomposition.
#[derive(Clone, Debug)]
pub struct FrameSolver {
    chart: Arc<Chart>,
    fields: Vec<VectorField>,
    /// Pivot row of each frame column.
    pivots: Vec<usize>,
    /// `k x m`: coefficients are `inverse * X`.
    inverse: Vec<Vec<Expr>>,
    zero: ZeroTest,
}

impl FrameSolver {
    pub fn new(fr: &Frame, zero: &ZeroTest) -> Result<FrameSolver, GeometryError> {
        let chart = fr.chart().clone();
        let m = chart.dim();
        let k = fr.len();
        let a: Vec<Vec<Expr>> = (0..m)
            .map(|r| (0..k).map(|c| fr.field(c).component(r).clone()).collect())
            .collect();
        let (pivots, inverse) = left_inverse(a, &chart, zero)?;
        Ok(FrameSolver {
            chart,
            fields: fr.fields().to_vec(),
            pivots,
            inverse,
            zero: *zero,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivots
    }

    /// Candidate coefficients, without the span check.
    pub fn coefficients(&self, x: &VectorField) -> Vec<Expr> {
        self.inverse
            .iter()
            .map(|row| {
                let mut acc = Expr::zero();
                for (l, xi) in row.iter().zip(x.components()) {
                    if l.is_structurally_zero() || xi.is_structurally_zero() {
                        continue;
                    }
                    acc = &acc + &(l * xi);
                }
                acc
            })
            .collect()
    }

    /// `X - Σ c^k fr_k` for the candidate coefficients.
    pub fn residual(&self, x: &VectorField, coeffs: &[Expr]) -> VectorField {
        let recombined = VectorField::combination(&self.chart, coeffs, &self.fields);
        x.sub(&recombined).expect("same chart")
    }

    /// Coefficients `c` with `X = Σ c^k fr_k`, verified on every component.
    pub fn decompose(&self, x: &VectorField) -> Result<Vec<Expr>, GeometryError> {
        let coeffs = self.coefficients(x);
        let res = self.residual(x, &coeffs);
        for (i, r) in res.components().iter().enumerate() {
            if r.is_structurally_zero() {
                continue;
            }
            match self.chart.zero_verdict(r, &self.zero) {
                ZeroVerdict::NonZero { witness, value } => {
                    return Err(GeometryError::NotInSpan {
                        component: i,
                        witness,
                        value,
                    })
                }
                v if v.is_zero_like() => {}
                v => {
                    return Err(GeometryError::Ambiguous(format!(
                        "residual component {i} undecided: {v:?}"
                    )))
                }
            }
        }
        Ok(coeffs)
    }
}

/// Gauss-Jordan elimination on an `m x k` matrix of full column rank.
/// Returns the pivot row of each column and a `k x m` left inverse.
pub(crate) fn left_inverse(
    mut a: Vec<Vec<Expr>>,
    chart: &Chart,
    zero: &ZeroTest,
) -> Result<(Vec<usize>, Vec<Vec<Expr>>), GeometryError> {
    let m = a.len();
    let k = a.first().map_or(0, |r| r.len());
    let mut e: Vec<Vec<Expr>> = (0..m)
        .map(|r| {
            (0..m)
                .map(|c| if r == c { Expr::one() } else { Expr::zero() })
                .collect()
        })
        .collect();
    let mut used = vec![false; m];
    let mut pivots = Vec::with_capacity(k);
    for col in 0..k {
        let mut best: Option<((u8, usize), usize)> = None;
        let mut ambiguous = None;
        for r in (0..m).filter(|r| !used[*r]) {
            let entry = &a[r][col];
            if entry.is_structurally_zero() {
                continue;
            }
            let score = if entry.as_rational().is_some() {
                (0u8, 0usize)
            } else {
                match chart.zero_verdict(entry, zero) {
                    ZeroVerdict::NonZero { .. } => (1, entry.to_string().len()),
                    v => {
                        if !v.is_zero_like() {
                            ambiguous = Some(format!("pivot candidate {entry} in column {col}: {v:?}"));
                        }
                        continue;
                    }
                }
            };
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, r));
            }
        }
        let Some((_, p)) = best else {
            return Err(GeometryError::Ambiguous(ambiguous.unwrap_or_else(|| {
                format!("matrix is rank deficient: no pivot for column {col}")
            })));
        };
        used[p] = true;
        pivots.push(p);
        let piv = a[p][col].clone();
        for r in 0..m {
            if r == p || a[r][col].is_structurally_zero() {
                continue;
            }
            let factor = &a[r][col] / &piv;
            for c in 0..k {
                if !a[p][c].is_structurally_zero() {
                    a[r][c] = &a[r][c] - &(&factor * &a[p][c]);
                }
            }
            for c in 0..m {
                if !e[p][c].is_structurally_zero() {
                    e[r][c] = &e[r][c] - &(&factor * &e[p][c]);
                }
            }
        }
    }
    let inverse = pivots
        .iter()
        .enumerate()
        .map(|(col, &p)| e[p].iter().map(|x| x / &a[p][col]).collect())
        .collect();
    Ok((pivots, inverse))
}

/// Symbolic inverse of a square matrix, rows of the result ordered by column.
pub(crate) fn inverse_matrix(a: Vec<Vec<Expr>>, chart: &Chart, zero: &ZeroTest) -> Result<Vec<Vec<Expr>>, GeometryError> {
    Ok(left_inverse(a, chart, zero)?.1)
}

/// Decomposes `x` in the frame; see [`FrameSolver::decompose`].
pub fn decompose_in_frame(x: &VectorField, fr: &Frame, zero: &ZeroTest) -> Result<Vec<Expr>, GeometryError> {
    FrameSolver::new(fr, zero)?.decompose(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum InvolutivityVerdict {
    Involutive,
    NotInvolutive {
        i: usize,
        j: usize,
        component: usize,
        witness: Vec<f64>,
        value: f64,
    },
    Inconclusive {
        i: usize,
        j: usize,
        diagnostic: String,
    },
}

impl InvolutivityVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, InvolutivityVerdict::Involutive)
    }
}

/// Checks that every bracket `[fr_i, fr_j]` lies in the span of the frame.
pub fn is_involutive(fr: &Frame, zero: &ZeroTest) -> Result<InvolutivityVerdict, GeometryError> {
    if fr.len() < 2 {
        return Ok(InvolutivityVerdict::Involutive);
    }
    let solver = FrameSolver::new(fr, zero)?;
    involutive_with(&solver, fr.fields(), fr.fields())
}

/// Checks `[a_i, b_j]` in the span of `solver`'s frame for all pairs
/// (only `i < j` when both lists are the same frame).
pub(crate) fn involutive_with(
    solver: &FrameSolver,
    left: &[VectorField],
    right: &[VectorField],
) -> Result<InvolutivityVerdict, GeometryError> {
    let same = std::ptr::eq(left, right);
    for (i, a) in left.iter().enumerate() {
        for (j, b) in right.iter().enumerate() {
            if same && j <= i {
                continue;
            }
            let br = lie_bracket(a, b)?;
            match solver.decompose(&br) {
                Ok(_) => {}
                Err(GeometryError::NotInSpan {
                    component,
                    witness,
                    value,
                }) => {
                    return Ok(InvolutivityVerdict::NotInvolutive {
                        i,
                        j,
                        component,
                        witness,
                        value,
                    })
                }
                Err(GeometryError::Ambiguous(d)) => {
                    return Ok(InvolutivityVerdict::Inconclusive { i, j, diagnostic: d })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(InvolutivityVerdict::Involutive)
}
