use nalgebra::DMatrix;

use super::flow::{grown_box, truncate};
use super::ode::integrate;
use super::{IntegratorSettings, StraightenError};
use crate::analysis::BetaCoefficients;
use crate::expr::{Compiled, SampleBox};
use crate::geometry::CompiledField;

/// Numeric solution of `V_l(A) = −β_l A`, `A = I` at the start point,
/// transported along the flows of the V-basis.
#[derive(Debug, Clone)]
pub struct BasisOde {
    v: Vec<CompiledField>,
    /// `beta[l][j][k]` evaluates β^k_lj.
    beta: Vec<Vec<Vec<Compiled>>>,
    settings: IntegratorSettings,
    domain: SampleBox,
}

/// Smallest `|det A|` accepted along a path.
pub const SINGULAR_DETERMINANT: f64 = 1e-10;

impl BasisOde {
    pub fn new(b: &BetaCoefficients, settings: IntegratorSettings) -> Result<BasisOde, StraightenError> {
        let basis = b.basis();
        let chart = basis[0].chart();
        let v = basis
            .iter()
            .map(|f| f.compile())
            .collect::<Result<Vec<_>, _>>()?;
        let beta = b
            .beta
            .iter()
            .map(|row| {
                row.iter()
                    .map(|ks| ks.iter().map(|e| Compiled::new(e, chart.names())).collect())
                    .collect()
            })
            .collect::<Result<Vec<Vec<Vec<_>>>, _>>()?;
        Ok(BasisOde {
            v,
            beta,
            settings,
            domain: grown_box(chart.sample_box(), settings.domain_margin),
        })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// Flows `p` by `ys[l]` along `V_l` in ascending `l`, carrying `A`.
    pub fn transport(&self, p: &[f64], ys: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), StraightenError> {
        let order: Vec<usize> = (0..self.n()).collect();
        self.transport_in_order(p, ys, &order)
    }

    pub fn transport_in_order(
        &self,
        p: &[f64],
        ys: &[f64],
        order: &[usize],
    ) -> Result<(Vec<f64>, DMatrix<f64>), StraightenError> {
        let (m, n) = (p.len(), self.n());
        let mut state = p.to_vec();
        state.extend(DMatrix::<f64>::identity(n, n).iter());
        let mut stack = Vec::new();
        for &l in order {
            state = integrate(
                |y, dy| {
                    let (z, a) = y.split_at(m);
                    let (dz, da) = dy.split_at_mut(m);
                    self.v[l].eval_into(z, dz, &mut stack).map_err(|e| e.to_string())?;
                    let mut bl = vec![0.0; n * n];
                    for j in 0..n {
                        for k in 0..n {
                            bl[k * n + j] = self.beta[l][j][k].eval_with(z, &mut stack).map_err(|e| e.to_string())?;
                        }
                    }
                    for c in 0..n {
                        for r in 0..n {
                            da[c * n + r] = -(0..n).map(|j| bl[r * n + j] * a[c * n + j]).sum::<f64>();
                        }
                    }
                    Ok(())
                },
                &state,
                ys[l],
                &self.settings,
                |y| self.domain.contains(&y[..m]),
            )
            .map_err(|e| truncate(e, m))?;
            let a = DMatrix::from_column_slice(n, n, &state[m..]);
            if a.determinant().abs() < SINGULAR_DETERMINANT {
                return Err(StraightenError::SingularBasis {
                    point: state[..m].to_vec(),
                });
            }
        }
        Ok((state[..m].to_vec(), DMatrix::from_column_slice(n, n, &state[m..])))
    }

    /// Largest entry difference of `A` between ascending and descending paths.
    pub fn path_discrepancy(&self, p: &[f64], ys: &[f64]) -> Result<f64, StraightenError> {
        let (_, a1) = self.transport(p, ys)?;
        let rev: Vec<usize> = (0..self.n()).rev().collect();
        let (_, a2) = self.transport_in_order(p, ys, &rev)?;
        Ok((a1 - a2).abs().max())
    }
}

/// `A` at the end of the path from `p` with fibre parameters `ys`.
pub fn solve_basis_ode(b: &BetaCoefficients, p: &[f64], ys: &[f64]) -> Result<DMatrix<f64>, StraightenError> {
    Ok(BasisOde::new(b, IntegratorSettings::default())?.transport(p, ys)?.1)
}
