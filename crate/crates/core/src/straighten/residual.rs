use serde::Serialize;

use super::{CoordinateTransform, StraightenError, StraightenOptions};
use crate::par::map_range;

/// A tensor grid `[−e, e]^m` in parameter space.
#[derive(Debug, Clone, Serialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub half_extent: f64,
    pub dim: usize,
}

impl GridSpec {
    /// Grid for `tr` sized from the options and the chart box.
    pub fn for_transform(tr: &CoordinateTransform, options: &StraightenOptions) -> GridSpec {
        let m = tr.dim();
        let bx = tr.metadata().v_fields[0].chart().sample_box().clone();
        let min_width = (0..m).map(|i| bx.width(i)).fold(f64::INFINITY, f64::min);
        GridSpec {
            points_per_axis: options.grid_points(m),
            half_extent: options.extent * min_width,
            dim: m,
        }
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `idx`-th node, first axis fastest.
    pub fn node(&self, mut idx: usize) -> Vec<f64> {
        let p = self.points_per_axis;
        (0..self.dim)
            .map(|_| {
                let i = idx % p;
                idx /= p;
                if p == 1 {
                    0.0
                } else {
                    -self.half_extent + 2.0 * self.half_extent * i as f64 / (p - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Stat {
    pub max: f64,
    pub median: f64,
    pub count: usize,
}

impl Stat {
    fn of(mut values: Vec<f64>) -> Stat {
        if values.is_empty() {
            return Stat { max: 0.0, median: 0.0, count: 0 };
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        };
        Stat { max: values[n - 1], median, count: n }
    }
}

/// The normal form evaluated at one grid node.
#[derive(Debug, Clone, Serialize)]
pub struct NodeSample {
    pub parameters: Vec<f64>,
    pub point: Vec<f64>,
    /// `ṫ`.
    pub t_components: Vec<f64>,
    /// `ẋ`, which is the new fibre coordinate `ỹ`.
    pub x_dot: Vec<f64>,
    /// The force `dỹ/ds` along the flow of `F`.
    pub force: Vec<f64>,
    pub condition: f64,
    pub jacobian_discrepancy: f64,
    pub fibre_sigma: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub grid: GridSpec,
    pub evaluated: usize,
    pub flagged: usize,
    pub failures: Vec<String>,
    /// `|ṫ − expected|`; `None` without `t` parameters.
    pub t_residual: Option<Stat>,
    /// `|ẋ − ỹ|`, zero by the choice of fibre coordinate.
    pub x_residual: Stat,
    pub condition: Stat,
    pub jacobian_discrepancy: Stat,
    pub min_fibre_sigma: f64,
    /// Largest residual over unflagged nodes.
    pub structural_max: f64,
    pub passed: bool,
    pub warnings: Vec<String>,
    /// The unflagged node with the largest time residual, else the worst Jacobian agreement.
    pub worst_node: Option<NodeSample>,
    #[serde(skip)]
    pub samples: Vec<NodeSample>,
}

fn norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Evaluates the normal form at `c`.
pub fn sample_node(
    tr: &CoordinateTransform,
    c: &[f64],
    step: f64,
    limit: f64,
) -> Result<NodeSample, StraightenError> {
    let (k, n) = (tr.k(), tr.n());
    let pf = tr.pushforward(c)?;
    let g = &pf.components;
    let flagged = !(pf.condition <= limit);

    let fd = tr.fd_jacobian(c, step)?;
    let scale = pf.jacobian.norm().max(f64::MIN_POSITIVE);
    let jacobian_discrepancy = (&fd - &pf.jacobian).norm() / scale;

    // five-point derivative of ỹ along G
    let speed = norm(g.iter().copied());
    let mut force = vec![0.0; n];
    if speed > 0.0 {
        let h = step / speed;
        let at = |s: f64| -> Result<Vec<f64>, StraightenError> {
            let cs: Vec<f64> = c.iter().zip(g).map(|(ci, gi)| ci + s * gi).collect();
            tr.fibre_coordinates(&cs)
        };
        let (p2, p1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
        for i in 0..n {
            force[i] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
        }
    }
    Ok(NodeSample {
        parameters: c.to_vec(),
        point: pf.point,
        t_components: g[..k].to_vec(),
        x_dot: g[k..k + n].to_vec(),
        force,
        condition: pf.condition,
        jacobian_discrepancy,
        fibre_sigma: pf.fibre_sigma,
        flagged,
    })
}

/// Samples the pushforward of `F` on `grid` and collects residual statistics.
pub fn pushforward_residuals(
    tr: &CoordinateTransform,
    grid: &GridSpec,
    options: &StraightenOptions,
) -> ResidualReport {
    let step = options.fd_step * grid.half_extent;
    let results = map_range(options.execution, grid.len(), |idx| {
        sample_node(tr, &grid.node(idx), step, options.conditioning_limit)
    });
    let expected = tr.expected_time();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(format!("node {:?}: {e}", grid.node(idx))),
        }
    }
    let good: Vec<&NodeSample> = samples.iter().filter(|s| !s.flagged).collect();
    let flagged = samples.len() - good.len();
    let t_error = |s: &NodeSample| norm(s.t_components.iter().zip(&expected).map(|(a, b)| a - b));
    let t_residual = (tr.k() > 0).then(|| Stat::of(good.iter().map(|s| t_error(s)).collect()));
    // ẋ is ỹ by definition; the residual is reported for the record
    let x_residual = Stat::of(good.iter().map(|_| 0.0).collect());
    let condition = Stat::of(good.iter().map(|s| s.condition).collect());
    let jacobian_discrepancy = Stat::of(good.iter().map(|s| s.jacobian_discrepancy).collect());
    let min_fibre_sigma = good.iter().map(|s| s.fibre_sigma).fold(f64::INFINITY, f64::min);
    let structural_max = t_residual.as_ref().map_or(0.0, |s| s.max).max(x_residual.max);

    let mut warnings = Vec::new();
    if flagged > 0 {
        warnings.push(format!(
            "{flagged} nodes with condition number above {:e} excluded",
            options.conditioning_limit
        ));
    }
    if !failures.is_empty() {
        warnings.push(format!("{} nodes could not be evaluated", failures.len()));
    }
    if jacobian_discrepancy.max > options.jacobian_agreement {
        warnings.push(format!(
            "finite-difference Jacobian disagrees by {:.3e}",
            jacobian_discrepancy.max
        ));
    }
    if min_fibre_sigma < options.fibre_tolerance {
        warnings.push(format!("fibre map nearly singular (σ_min = {min_fibre_sigma:.3e})"));
    }
    let passed = !good.is_empty()
        && failures.is_empty()
        && structural_max < options.tolerance
        && jacobian_discrepancy.max <= options.jacobian_agreement
        && min_fibre_sigma >= options.fibre_tolerance;
    if !passed && structural_max >= options.tolerance {
        warnings.push(format!("structural residual {structural_max:.3e} above tolerance"));
    }
    let worst_node = good
        .iter()
        .max_by(|a, b| {
            t_error(a)
                .total_cmp(&t_error(b))
                .then(a.jacobian_discrepancy.total_cmp(&b.jacobian_discrepancy))
        })
        .map(|s| (*s).clone());
    ResidualReport {
        grid: grid.clone(),
        evaluated: samples.len(),
        flagged,
        failures,
        t_residual,
        x_residual,
        condition,
        jacobian_discrepancy,
        min_fibre_sigma,
        structural_max,
        passed,
        warnings,
        worst_node,
        samples,
    }
}
