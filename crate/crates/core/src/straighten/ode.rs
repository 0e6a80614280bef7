use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Trajectories may leave the chart box by this fraction of its width.
    pub domain_margin: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.1,
            min_step: 1e-13,
            max_steps: 100_000,
            domain_margin: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("step size underflow at {last:?}")]
    StepUnderflow { last: Vec<f64> },
    #[error("evaluation failed at {last:?}: {reason}")]
    Domain { last: Vec<f64>, reason: String },
    #[error("trajectory left the integration domain at {last:?}")]
    LeftDomain { last: Vec<f64> },
    #[error("step budget exhausted at {last:?}")]
    TooManySteps { last: Vec<f64> },
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the autonomous system `y' = rhs(y)` from `0` to `s` with
/// adaptive Dormand-Prince steps. `inside` is checked after every accepted step.
pub fn integrate<R, G>(mut rhs: R, y0: &[f64], s: f64, settings: &IntegratorSettings, inside: G) -> Result<Vec<f64>, FlowError>
where
    R: FnMut(&[f64], &mut [f64]) -> Result<(), String>,
    G: Fn(&[f64]) -> bool,
{
    let d = y0.len();
    let mut y = y0.to_vec();
    if s == 0.0 {
        return Ok(y);
    }
    let dir = s.signum();
    let total = s.abs();
    let mut done = 0.0;
    let mut h = total.min(settings.max_step).min(0.01);
    let mut k = vec![vec![0.0; d]; 7];
    let mut tmp = vec![0.0; d];
    let mut y5 = vec![0.0; d];
    let domain = |y: &[f64], reason: String| FlowError::Domain {
        last: y.to_vec(),
        reason,
    };
    rhs(&y, &mut k[0]).map_err(|r| domain(&y, r))?;
    for _ in 0..settings.max_steps {
        if done >= total {
            return Ok(y);
        }
        let last = total - done <= h * (1.0 + 1e-12);
        if last {
            h = total - done;
        }
        let hs = dir * h;
        let mut failed = None;
        for stage in 1..7 {
            for i in 0..d {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += hs * A[stage][j] * kj[i];
                }
                tmp[i] = acc;
            }
            if let Err(r) = rhs(&tmp, &mut k[stage]) {
                failed = Some(r);
                break;
            }
            if stage == 6 {
                y5.copy_from_slice(&tmp);
            }
        }
        let err = match failed {
            Some(_) => f64::INFINITY,
            None => {
                let mut sum = 0.0;
                for i in 0..d {
                    let e: f64 = (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>() * hs;
                    let sc = settings.atol + settings.rtol * y[i].abs().max(y5[i].abs());
                    sum += (e / sc).powi(2);
                }
                (sum / d as f64).sqrt()
            }
        };
        if err <= 1.0 && err.is_finite() {
            y.copy_from_slice(&y5);
            done = if last { total } else { done + h };
            if !inside(&y) {
                return Err(FlowError::LeftDomain { last: y });
            }
            // first-same-as-last: the final stage is the next derivative
            k.swap(0, 6);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(settings.max_step);
        } else {
            if let (Some(r), true) = (&failed, h <= settings.min_step) {
                return Err(domain(&y, r.clone()));
            }
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= factor;
            if h < settings.min_step {
                return Err(match failed {
                    Some(r) => domain(&y, r),
                    None => FlowError::StepUnderflow { last: y },
                });
            }
        }
    }
    if done >= total {
        Ok(y)
    } else {
        Err(FlowError::TooManySteps { last: y })
    }
}
