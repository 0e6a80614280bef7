use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{FlowMap, StraightenError, StraightenOptions};
use crate::analysis::{AdaptationMethod, Analysis, Classification};
use crate::geometry::{CompiledField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    /// The basis with `[Ṽ_i, W̃_j] ∈ V` found by the analysis.
    Adapted,
    /// The input basis (no symbolic adaptation was available).
    Input,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformMetadata {
    pub classification: Classification,
    pub base_point: Vec<f64>,
    /// Parameter names in order: `t*`, then `x*`, then `y*`.
    pub parameters: Vec<String>,
    /// `t1` is the flow time of `F` itself.
    pub time_from_flow: bool,
    /// Straight-line directions for the remaining `t` parameters.
    pub slice_directions: Vec<Vec<f64>>,
    pub basis: BasisChoice,
    pub v_fields: Vec<VectorField>,
    pub w_fields: Vec<VectorField>,
    pub composition_order: String,
    pub base_condition: f64,
    pub base_fibre_sigma: f64,
}

/// `Φ(t, x, y) = φ^{V_n}_{y_n} ∘ … ∘ φ^{V_1}_{y_1} ∘ φ^{W_n}_{x_n} ∘ … ∘ φ^{W_1}_{x_1}(T(t))`,
/// where `T` moves along the slice directions and, in the time-dependent
/// case, along `F` for `t1`.
#[derive(Debug, Clone)]
pub struct CoordinateTransform {
    meta: TransformMetadata,
    time_flow: Option<FlowMap>,
    w: Vec<FlowMap>,
    v: Vec<FlowMap>,
    f: CompiledField,
    w_eval: Vec<CompiledField>,
    k: usize,
    n: usize,
    m: usize,
}

/// `G = (DΦ)⁻¹ F(Φ(c))` and the pieces of the fibre redefinition `ỹ = G_x`.
#[derive(Debug, Clone)]
pub struct Pushforward {
    pub point: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub components: Vec<f64>,
    pub condition: f64,
    /// `∂ỹ/∂y`.
    pub fibre_jacobian: DMatrix<f64>,
    pub fibre_sigma: f64,
}

fn condition(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Unit directions completing the columns of `cols` to a basis, from the
/// left singular vectors of the smallest singular values.
fn complement(cols: &[Vec<f64>], m: usize, count: usize) -> Vec<Vec<f64>> {
    let a = DMatrix::from_fn(m, m, |r, c| cols.get(c).map_or(0.0, |v| v[r]));
    let svd = a.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    order
        .into_iter()
        .take(count)
        .map(|c| u.column(c).iter().copied().collect())
        .collect()
}

impl CoordinateTransform {
    pub fn metadata(&self) -> &TransformMetadata {
        &self.meta
    }

    /// Number of `t` parameters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// `ṫ` expected in the normal form.
    pub fn expected_time(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.k];
        if self.meta.time_from_flow {
            e[0] = 1.0;
        }
        e
    }

    fn slice_point(&self, c: &[f64]) -> Vec<f64> {
        let start = usize::from(self.meta.time_from_flow);
        let mut p = self.meta.base_point.clone();
        for (d, dir) in self.meta.slice_directions.iter().enumerate() {
            for (pi, di) in p.iter_mut().zip(dir) {
                *pi += c[start + d] * di;
            }
        }
        p
    }

    /// `Φ(c)`.
    pub fn map(&self, c: &[f64]) -> Result<Vec<f64>, StraightenError> {
        let mut p = self.slice_point(c);
        if let Some(fl) = &self.time_flow {
            p = fl.flow(&p, c[0])?;
        }
        for (i, fl) in self.w.iter().chain(&self.v).enumerate() {
            p = fl.flow(&p, c[self.k + i])?;
        }
        Ok(p)
    }

    /// `Φ(c)` and `DΦ(c)` from the variational equations of every flow.
    pub fn map_with_jacobian(&self, c: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), StraightenError> {
        let m = self.m;
        let start = usize::from(self.meta.time_from_flow);
        let mut p = self.slice_point(c);
        let mut jac = DMatrix::zeros(m, m);
        for (d, dir) in self.meta.slice_directions.iter().enumerate() {
            jac.set_column(start + d, &DVector::from_column_slice(dir));
        }
        let mut advance = |fl: &FlowMap, s: f64, col: usize, p: &mut Vec<f64>| -> Result<(), StraightenError> {
            let (q, d) = fl.flow_with_jacobian(p, s)?;
            jac = &d * &jac;
            jac.set_column(col, &DVector::from_vec(fl.eval(&q)?));
            *p = q;
            Ok(())
        };
        if let Some(fl) = &self.time_flow {
            advance(fl, c[0], 0, &mut p)?;
        }
        for (i, fl) in self.w.iter().chain(&self.v).enumerate() {
            advance(fl, c[self.k + i], self.k + i, &mut p)?;
        }
        Ok((p, jac))
    }

    /// Central-difference Jacobian of `Φ` with step `h`.
    pub fn fd_jacobian(&self, c: &[f64], h: f64) -> Result<DMatrix<f64>, StraightenError> {
        let m = self.m;
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let mut cp = c.to_vec();
            let mut cm = c.to_vec();
            cp[j] += h;
            cm[j] -= h;
            let (zp, zm) = (self.map(&cp)?, self.map(&cm)?);
            for i in 0..m {
                jac[(i, j)] = (zp[i] - zm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// The pushforward of `F` to parameter space at `c`.
    pub fn pushforward(&self, c: &[f64]) -> Result<Pushforward, StraightenError> {
        let (point, jacobian) = self.map_with_jacobian(c)?;
        let cond = condition(&jacobian);
        let lu = jacobian.clone().lu();
        let solve = |v: Vec<f64>| -> Result<DVector<f64>, StraightenError> {
            lu.solve(&DVector::from_vec(v)).ok_or(StraightenError::SingularJacobian {
                point: point.clone(),
                condition: cond,
            })
        };
        let g = solve(self.f.eval(&point)?)?;
        let (k, n) = (self.k, self.n);
        // ∂ỹ^i/∂y^j = [V_j, F](x^i) = −W_j(x^i) for commuting V-flows
        let mut fibre = DMatrix::zeros(n, n);
        for (j, w) in self.w_eval.iter().enumerate() {
            let col = solve(w.eval(&point)?)?;
            for i in 0..n {
                fibre[(i, j)] = -col[k + i];
            }
        }
        let fibre_sigma = fibre.singular_values().min();
        Ok(Pushforward {
            point,
            jacobian,
            components: g.iter().copied().collect(),
            condition: cond,
            fibre_jacobian: fibre,
            fibre_sigma,
        })
    }

    /// `ỹ(c)`: the x-block of the pushforward.
    pub fn fibre_coordinates(&self, c: &[f64]) -> Result<Vec<f64>, StraightenError> {
        let pf = self.pushforward(c)?;
        Ok(pf.components[self.k..self.k + self.n].to_vec())
    }

    /// Solves `Φ(c) = z` by Newton's method from `guess`.
    pub fn inverse(&self, z: &[f64], guess: &[f64]) -> Result<Vec<f64>, StraightenError> {
        let mut c = guess.to_vec();
        for _ in 0..50 {
            let (p, j) = self.map_with_jacobian(&c)?;
            let r = DVector::from_iterator(self.m, p.iter().zip(z).map(|(a, b)| a - b));
            if r.amax() < 1e-12 {
                return Ok(c);
            }
            let step = j
                .lu()
                .solve(&r)
                .ok_or_else(|| StraightenError::Numeric("singular Jacobian in inverse".into()))?;
            for (ci, s) in c.iter_mut().zip(step.iter()) {
                *ci -= s;
            }
        }
        Err(StraightenError::Numeric(format!("inverse did not converge for {z:?}")))
    }
}

/// Builds the normalizing parametrization from a completed analysis.
pub fn build_normal_coordinates(
    analysis: &Analysis,
    f: &VectorField,
    options: &StraightenOptions,
) -> Result<CoordinateTransform, StraightenError> {
    let report = &analysis.report;
    let chart = f.chart();
    let (m, n) = (report.m, report.n);
    let (base_point, time_from_flow, k) = match &report.classification {
        Classification::Case1 { .. } => {
            let z0 = report
                .cross_section
                .as_ref()
                .and_then(|s| s.chosen.clone())
                .ok_or(StraightenError::MissingCrossSection)?;
            (z0, false, m - 2 * n)
        }
        Classification::Case2 { .. } => (chart.sample_box().center(), true, m - 2 * n),
        Classification::NotSecondOrder { reason } => return Err(StraightenError::NotSecondOrder(reason.clone())),
    };
    if report.commuting_basis != Some(true) {
        return Err(StraightenError::Numeric(
            "fibre flows need a commuting V-basis".into(),
        ));
    }
    let structure = analysis
        .structure
        .as_ref()
        .ok_or_else(|| StraightenError::NotSecondOrder("no structure".into()))?;
    let ef = structure.frame();
    let basis = match report.adaptation.as_ref().map(|a| a.method) {
        Some(AdaptationMethod::Numeric) | None => BasisChoice::Input,
        _ => BasisChoice::Adapted,
    };

    let settings = options.integrator;
    let mut cols = Vec::new();
    for fld in ef.v.iter().chain(&ef.w) {
        cols.push(fld.eval(&base_point)?);
    }
    if time_from_flow {
        cols.push(f.eval(&base_point)?);
    }
    let slice_count = k - usize::from(time_from_flow);
    let slice_directions = complement(&cols, m, slice_count);

    let mut parameters: Vec<String> = (1..=k).map(|i| format!("t{i}")).collect();
    parameters.extend((1..=n).map(|i| format!("x{i}")));
    parameters.extend((1..=n).map(|i| format!("y{i}")));

    let mut tr = CoordinateTransform {
        meta: TransformMetadata {
            classification: report.classification.clone(),
            base_point,
            parameters,
            time_from_flow,
            slice_directions,
            basis,
            v_fields: ef.v.clone(),
            w_fields: ef.w.clone(),
            composition_order: "slice, then F for t1 (time-dependent case), then W_1..W_n, then V_1..V_n".into(),
            base_condition: f64::NAN,
            base_fibre_sigma: f64::NAN,
        },
        time_flow: if time_from_flow {
            Some(FlowMap::new(f, settings)?)
        } else {
            None
        },
        w: ef.w.iter().map(|w| FlowMap::new(w, settings)).collect::<Result<_, _>>()?,
        v: ef.v.iter().map(|v| FlowMap::new(v, settings)).collect::<Result<_, _>>()?,
        f: f.compile()?,
        w_eval: ef.w.iter().map(|w| w.compile()).collect::<Result<_, _>>()?,
        k,
        n,
        m,
    };
    let pf = tr.pushforward(&vec![0.0; m])?;
    if !(pf.condition <= options.conditioning_limit) {
        return Err(StraightenError::SingularJacobian {
            point: pf.point,
            condition: pf.condition,
        });
    }
    if !(pf.fibre_sigma >= options.fibre_tolerance) {
        return Err(StraightenError::SingularFibre {
            point: pf.point,
            sigma: pf.fibre_sigma,
        });
    }
    tr.meta.base_condition = pf.condition;
    tr.meta.base_fibre_sigma = pf.fibre_sigma;
    Ok(tr)
}
