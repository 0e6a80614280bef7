use nalgebra::DMatrix;

use super::ode::integrate;
use super::{FlowError, IntegratorSettings, StraightenError};
use crate::expr::SampleBox;
use crate::geometry::{CompiledField, VectorField};

/// The flow of a vector field, with its derivative from the variational equations.
#[derive(Debug, Clone)]
pub struct FlowMap {
    field: VectorField,
    compiled: CompiledField,
    settings: IntegratorSettings,
    domain: SampleBox,
}

/// The chart box grown by `margin` widths on every side.
pub fn grown_box(b: &SampleBox, margin: f64) -> SampleBox {
    let pad: Vec<f64> = (0..b.dim()).map(|i| margin * b.width(i)).collect();
    SampleBox::new(
        b.names.clone(),
        b.lower.iter().zip(&pad).map(|(l, p)| l - p).collect(),
        b.upper.iter().zip(&pad).map(|(u, p)| u + p).collect(),
    )
}

impl FlowMap {
    pub fn new(field: &VectorField, settings: IntegratorSettings) -> Result<FlowMap, StraightenError> {
        let domain = grown_box(field.chart().sample_box(), settings.domain_margin);
        Ok(FlowMap {
            field: field.clone(),
            compiled: field.compile_with_jacobian()?,
            settings,
            domain,
        })
    }

    pub fn with_domain(mut self, domain: SampleBox) -> FlowMap {
        self.domain = domain;
        self
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn settings(&self) -> &IntegratorSettings {
        &self.settings
    }

    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.compiled.eval(z).map_err(|e| FlowError::Domain {
            last: z.to_vec(),
            reason: e.to_string(),
        })
    }

    /// `φ_s(z)`.
    pub fn flow(&self, z: &[f64], s: f64) -> Result<Vec<f64>, FlowError> {
        let mut stack = Vec::new();
        integrate(
            |y, dy| self.compiled.eval_into(y, dy, &mut stack).map_err(|e| e.to_string()),
            z,
            s,
            &self.settings,
            |y| self.domain.contains(y),
        )
    }

    /// `φ_s(z)` and `Dφ_s(z)`, integrating `Ψ' = DX(φ) Ψ` alongside the flow.
    pub fn flow_with_jacobian(&self, z: &[f64], s: f64) -> Result<(Vec<f64>, DMatrix<f64>), FlowError> {
        let m = z.len();
        let mut y0 = z.to_vec();
        y0.extend(DMatrix::<f64>::identity(m, m).iter());
        let mut stack = Vec::new();
        let mut jac = vec![0.0; m * m];
        let y = integrate(
            |y, dy| {
                let (p, psi) = y.split_at(m);
                let (dp, dpsi) = dy.split_at_mut(m);
                self.compiled.eval_into(p, dp, &mut stack).map_err(|e| e.to_string())?;
                self.compiled
                    .jacobian_into(p, &mut jac, &mut stack)
                    .map_err(|e| e.to_string())?;
                // Ψ is column-major, the field Jacobian row-major
                for c in 0..m {
                    for r in 0..m {
                        dpsi[c * m + r] = (0..m).map(|k| jac[r * m + k] * psi[c * m + k]).sum();
                    }
                }
                Ok(())
            },
            &y0,
            s,
            &self.settings,
            |y| self.domain.contains(&y[..m]),
        )
        .map_err(|e| truncate(e, m))?;
        Ok((y[..m].to_vec(), DMatrix::from_column_slice(m, m, &y[m..])))
    }
}

/// Reports only the point part of an augmented state.
pub(crate) fn truncate(e: FlowError, m: usize) -> FlowError {
    let cut = |v: Vec<f64>| v.into_iter().take(m).collect();
    match e {
        FlowError::StepUnderflow { last } => FlowError::StepUnderflow { last: cut(last) },
        FlowError::Domain { last, reason } => FlowError::Domain { last: cut(last), reason },
        FlowError::LeftDomain { last } => FlowError::LeftDomain { last: cut(last) },
        FlowError::TooManySteps { last } => FlowError::TooManySteps { last: cut(last) },
    }
}

/// Integrates `ż = X(z)` over `[0, s]` with default settings.
pub fn integrate_flow(x: &VectorField, z: &[f64], s: f64) -> Result<Vec<f64>, StraightenError> {
    Ok(FlowMap::new(x, IntegratorSettings::default())?.flow(z, s)?)
}
