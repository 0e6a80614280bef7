use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{
    adapt_commuting_basis, build_w, check_regularity, check_w_involutive, check_zero, natural_chart,
    verify_beta_integrability, Adaptation, AdaptationMethod, AnalysisError, AnalysisOptions, BetaCoefficients,
    Check, CheckStatus, ExtendedFrame, NaturalChart, QuadraticVerdict, RegularityVerdict, SecondOrderProblem,
    Structure, ThetaComponent, CONVENTIONS,
};
use crate::expr::{differentiate, Compiled, Expr};
use crate::geometry::{
    involutive_with, is_involutive, rank_of_fields, Chart, GeometryError, InvolutivityVerdict, VectorField,
};
use crate::par::map_slice;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Classification {
    /// `F ∈ W`: a second-order field with `parameters` constants.
    Case1 { parameters: usize },
    /// `F` independent of `W`: time-dependent, `parameters` besides time.
    Case2 { parameters: usize },
    NotSecondOrder { reason: String },
}

impl Classification {
    pub fn parameters(&self) -> Option<usize> {
        match self {
            Classification::Case1 { parameters } | Classification::Case2 { parameters } => Some(*parameters),
            Classification::NotSecondOrder { .. } => None,
        }
    }

    pub fn is_second_order(&self) -> bool {
        !matches!(self, Classification::NotSecondOrder { .. })
    }
}

/// Where `F` sits relative to `W`.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldMembership {
    InW {
        v_coefficients: Vec<Expr>,
        w_coefficients: Vec<Expr>,
    },
    /// `rank(V, W, F) = 2n + 1` at every evaluated sample.
    Independent { samples: usize, min_rank: usize },
    Neither { diagnostic: String },
}

/// Result of the Newton search for points where the W-coefficients of `F` vanish.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSectionSearch {
    pub starts: usize,
    pub converged: usize,
    /// Distinct solutions, closest to the box center first.
    pub points: Vec<Vec<f64>>,
    pub chosen: Option<Vec<f64>>,
    pub best_residual: f64,
}

/// Gauss-Newton with minimum-norm steps on `b(z) = 0` from the box center
/// and quasi-random starts; iterates that leave the box are abandoned.
pub fn find_cross_section(
    chart: &Chart,
    b: &[Expr],
    options: &AnalysisOptions,
) -> Result<CrossSectionSearch, AnalysisError> {
    let names = chart.names();
    let compile = |e: &Expr| Compiled::new(e, names).map_err(|e| AnalysisError::Geometry(e.into()));
    let residual: Vec<Compiled> = b.iter().map(compile).collect::<Result<_, _>>()?;
    let jacobian: Vec<Vec<Compiled>> = b
        .iter()
        .map(|e| names.iter().map(|s| compile(&differentiate(e, s))).collect())
        .collect::<Result<_, _>>()?;
    let bx = chart.sample_box();
    let mut starts = vec![bx.center()];
    starts.extend(chart.sample_points(options.newton_starts.saturating_sub(1), options.seed));
    let m = chart.dim();
    let eval = |z: &[f64]| -> Option<DVector<f64>> {
        let v: Vec<f64> = residual.iter().map(|c| c.eval(z).ok()).collect::<Option<_>>()?;
        v.iter().all(|x| x.is_finite()).then(|| DVector::from_vec(v))
    };
    let outcomes = map_slice(options.execution, &starts, |start| -> (Option<Vec<f64>>, f64) {
        let mut z = start.clone();
        let mut best = f64::INFINITY;
        for _ in 0..=options.newton_max_iterations {
            let Some(r) = eval(&z) else { return (None, best) };
            best = best.min(r.norm());
            if r.norm() <= options.newton_tolerance {
                return (Some(z), best);
            }
            let mut jm = DMatrix::zeros(b.len(), m);
            for (i, row) in jacobian.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    match c.eval(&z) {
                        Ok(x) if x.is_finite() => jm[(i, j)] = x,
                        _ => return (None, best),
                    }
                }
            }
            let Ok(step) = jm.svd(true, true).solve(&(-r), 1e-12) else { return (None, best) };
            for (zi, s) in z.iter_mut().zip(step.iter()) {
                *zi += s;
            }
            if !bx.contains(&z) {
                return (None, best);
            }
        }
        (None, best)
    });
    let best_residual = outcomes.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let mut found: Vec<Vec<f64>> = outcomes.into_iter().filter_map(|o| o.0).collect();
    let converged = found.len();
    let center = bx.center();
    let scaled = |a: &[f64], b: &[f64]| -> f64 {
        (0..m)
            .map(|i| ((a[i] - b[i]) / bx.width(i)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    found.sort_by(|a, b| scaled(a, &center).total_cmp(&scaled(b, &center)));
    let mut points: Vec<Vec<f64>> = Vec::new();
    for p in found {
        if points.iter().all(|q| scaled(q, &p) > 1e-6) {
            points.push(p);
        }
    }
    Ok(CrossSectionSearch {
        starts: starts.len(),
        converged,
        chosen: points.first().cloned(),
        points,
        best_residual,
    })
}

/// A named vector field in a report table.
#[derive(Debug, Clone, Serialize)]
pub struct NamedField {
    pub name: String,
    pub field: VectorField,
}

/// Action of `S`, `L`, and the projectors on the combined frame, the lifts,
/// and the connection coefficients in the basis the structure was built on.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionTables {
    pub basis: Vec<VectorField>,
    pub w: Vec<VectorField>,
    pub s: Vec<NamedField>,
    pub l: Vec<NamedField>,
    pub p_h: Vec<NamedField>,
    pub p_v: Vec<NamedField>,
    pub lifts: Vec<VectorField>,
    /// `nabla_vertical[i][j][k]`: coefficient of `V_k` in `∇_{V_i} V_j`.
    pub nabla_vertical: Vec<Vec<Vec<Expr>>>,
    /// `nabla_horizontal[i][j][k]`: coefficient of `V_k` in `∇_{h_i} V_j`.
    pub nabla_horizontal: Vec<Vec<Vec<Expr>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub conventions: String,
    pub m: usize,
    pub n: usize,
    pub regularity: RegularityVerdict,
    pub v_involutive: InvolutivityVerdict,
    pub w: Option<Vec<VectorField>>,
    pub w_involutive: Option<InvolutivityVerdict>,
    pub commuting_basis: Option<bool>,
    pub membership: Option<FieldMembership>,
    /// `[F, W_i] ∈ W` for every `i`.
    pub f_preserves_w: Option<InvolutivityVerdict>,
    pub cross_section: Option<CrossSectionSearch>,
    pub classification: Classification,
    pub beta: Option<BetaCoefficients>,
    pub beta_integrability: Option<Check>,
    pub adaptation: Option<Adaptation>,
    pub connection: Option<ConnectionTables>,
    pub theta: Option<Vec<ThetaComponent>>,
    pub quadratic: Option<QuadraticVerdict>,
    pub natural_chart: Option<NaturalChart>,
    /// Identity checks that must hold on every valid instance.
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl AnalysisReport {
    fn new(p: &SecondOrderProblem, regularity: RegularityVerdict, v_involutive: InvolutivityVerdict) -> Self {
        AnalysisReport {
            conventions: CONVENTIONS.to_string(),
            m: p.m(),
            n: p.n(),
            regularity,
            v_involutive,
            w: None,
            w_involutive: None,
            commuting_basis: None,
            membership: None,
            f_preserves_w: None,
            cross_section: None,
            classification: Classification::NotSecondOrder {
                reason: "not analyzed".into(),
            },
            beta: None,
            beta_integrability: None,
            adaptation: None,
            connection: None,
            theta: None,
            quadratic: None,
            natural_chart: None,
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// The check with the given name, if it was run.
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The base point chosen for normalization.
    pub fn base_point(&self) -> Option<&[f64]> {
        self.adaptation.as_ref().map(|a| a.base_point.as_slice())
    }
}

/// The report together with the objects later stages build on.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    /// Extended frame of the input basis.
    pub extended: Option<ExtendedFrame>,
    /// Structure on the adapted basis when one was found, else on the input basis.
    pub structure: Option<Structure>,
}

fn not_second_order(mut report: AnalysisReport, reason: String) -> Analysis {
    report.classification = Classification::NotSecondOrder { reason };
    Analysis {
        report,
        extended: None,
        structure: None,
    }
}

/// Runs the full pipeline and keeps the intermediate objects.
pub fn analyze(p: &SecondOrderProblem) -> Result<Analysis, AnalysisError> {
    let regularity = check_regularity(p)?;
    let v_involutive = is_involutive(&p.v, &p.options.zero)?;
    let mut report = AnalysisReport::new(p, regularity.clone(), v_involutive.clone());
    if !regularity.passed {
        let reason = format!(
            "regularity: rank of V + [F, V] is {} < {} at {:?}",
            regularity.min_rank,
            regularity.expected_rank,
            regularity.deficient.first()
        );
        return Ok(not_second_order(report, reason));
    }
    if !v_involutive.holds() {
        return Ok(not_second_order(report, "V is not involutive".into()));
    }
    let ef = match build_w(p) {
        Ok(ef) => ef,
        Err(AnalysisError::Inconsistent(d)) => return Ok(not_second_order(report, format!("regularity: {d}"))),
        Err(e) => return Err(e),
    };
    report.w = Some(ef.w.clone());
    report.commuting_basis = Some(ef.commuting);
    let w_inv = check_w_involutive(&ef)?;
    report.w_involutive = Some(w_inv.clone());
    if !w_inv.holds() {
        return Ok(not_second_order(report, format!("W is not involutive: {w_inv:?}")));
    }

    let chart = &p.chart;
    let (n, m) = (p.n(), p.m());
    match ef.split(&p.f) {
        Ok((a, b)) => {
            let search = find_cross_section(chart, &b, &p.options)?;
            if search.chosen.is_none() {
                report
                    .warnings
                    .push("cross-section not found in box".to_string());
            }
            report.cross_section = Some(search);
            report.membership = Some(FieldMembership::InW {
                v_coefficients: a,
                w_coefficients: b,
            });
            report.classification = Classification::Case1 { parameters: m - 2 * n };
        }
        Err(AnalysisError::Geometry(GeometryError::NotInSpan { .. })) => {
            let mut fields = ef.elements().to_vec();
            fields.push(p.f.clone());
            let rank = rank_of_fields(chart, &fields, p.options.samples, p.options.seed, p.options.execution)?;
            if !rank.is_constant(2 * n + 1) {
                let diagnostic = format!(
                    "F is neither in W nor independent of it: rank {} at {:?}",
                    rank.min_rank(),
                    rank.first_deficiency(2 * n + 1).map(|(z, _)| z)
                );
                report.membership = Some(FieldMembership::Neither {
                    diagnostic: diagnostic.clone(),
                });
                return Ok(not_second_order(report, diagnostic));
            }
            report.membership = Some(FieldMembership::Independent {
                samples: rank.ranks.len(),
                min_rank: rank.min_rank(),
            });
            let preserves = involutive_with(&ef.solver, std::slice::from_ref(&p.f), &ef.w)?;
            report.f_preserves_w = Some(preserves.clone());
            if !preserves.holds() {
                return Ok(not_second_order(report, format!("[F, W] is not contained in W: {preserves:?}")));
            }
            report.classification = Classification::Case2 {
                parameters: m - 2 * n - 1,
            };
            report
                .warnings
                .push("independence of F from W is certified on the sampled box only".to_string());
        }
        Err(AnalysisError::Geometry(GeometryError::Ambiguous(d))) => {
            report.membership = Some(FieldMembership::Neither { diagnostic: d.clone() });
            return Ok(not_second_order(report, format!("membership of F in W undecided: {d}")));
        }
        Err(e) => return Err(e),
    }

    let base_point = report
        .cross_section
        .as_ref()
        .and_then(|s| s.chosen.clone())
        .unwrap_or_else(|| chart.sample_box().center());

    let mut basis_frame = ef.clone();
    if ef.commuting {
        let beta = BetaCoefficients::compute(&ef)?;
        let integrability = verify_beta_integrability(&beta);
        report.checks.push(beta.symmetry.clone());
        report.checks.push(integrability.clone());
        let adaptation = adapt_commuting_basis(&ef, &beta, &base_point)?;
        if let Some(v) = &adaptation.verification {
            report.checks.push(v.clone());
        }
        match (&adaptation.frame, adaptation.method) {
            (Some(fr), _) => basis_frame = fr.clone(),
            (None, AdaptationMethod::Numeric) => report.warnings.push(format!(
                "no symbolic adapted basis ({}); connection data use the input basis",
                adaptation.diagnostic.as_deref().unwrap_or("")
            )),
            _ => {}
        }
        report.beta = Some(beta);
        report.beta_integrability = Some(integrability);
        report.adaptation = Some(adaptation);
    } else {
        report
            .warnings
            .push("the V-basis does not commute; beta coefficients and adaptation skipped".to_string());
    }

    let structure = Structure::new(basis_frame)?;
    report.connection = Some(connection_tables(&structure)?);
    report.checks.extend(structure.identity_checks());
    let theta = structure.theta()?;
    report.quadratic = Some(structure.quadratic_verdict(&theta));
    report.theta = Some(theta);

    let sf = structure.frame();
    if let Some(mut nat) = natural_chart(&p.f, &sf.v, &p.options.zero) {
        report.checks.push(nat.gamma_symmetry.clone());
        if matches!(report.classification, Classification::Case1 { .. }) {
            let liouville = match structure.s(&p.f) {
                Ok(sf_field) => {
                    let ys: Vec<Expr> = nat.velocities.iter().map(|y| Expr::sym(y)).collect();
                    let euler = VectorField::combination(chart, &ys, &sf.v);
                    match sf_field.sub(&euler) {
                        Ok(d) => check_zero("liouville", chart, d.components(), &p.options.zero),
                        Err(e) => Check::failed("liouville", e),
                    }
                }
                Err(e) => Check::failed("liouville", e),
            };
            report.checks.push(liouville.clone());
            nat.liouville = Some(liouville);
        }
        report.natural_chart = Some(nat);
    }

    for c in &report.checks {
        match &c.status {
            CheckStatus::Unknown { diagnostic } => report
                .warnings
                .push(format!("check {} undecided: {diagnostic}", c.name)),
            CheckStatus::NonZero { witness, value, .. } => report.warnings.push(format!(
                "internal inconsistency: check {} is {value} at {witness:?}",
                c.name
            )),
            CheckStatus::Failed { diagnostic } => report
                .warnings
                .push(format!("check {} could not be formed: {diagnostic}", c.name)),
            _ => {}
        }
    }

    Ok(Analysis {
        report,
        extended: Some(ef),
        structure: Some(structure),
    })
}

/// Runs the full pipeline and returns the report.
pub fn classify(p: &SecondOrderProblem) -> Result<AnalysisReport, AnalysisError> {
    Ok(analyze(p)?.report)
}

fn connection_tables(s: &Structure) -> Result<ConnectionTables, AnalysisError> {
    let ef = s.frame();
    let n = ef.n();
    let table = |op: &dyn Fn(&VectorField) -> Result<VectorField, AnalysisError>| {
        ef.elements()
            .iter()
            .enumerate()
            .map(|(a, e)| {
                Ok(NamedField {
                    name: ef.element_name(a),
                    field: op(e)?.normalize(),
                })
            })
            .collect::<Result<Vec<_>, AnalysisError>>()
    };
    let mut nabla_vertical = vec![Vec::new(); n];
    let mut nabla_horizontal = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            nabla_vertical[i].push(s.vertical_coefficients(&s.nabla(&ef.v[i], &ef.v[j])?)?);
            nabla_horizontal[i].push(s.vertical_coefficients(&s.nabla(&s.lifts()[i], &ef.v[j])?)?);
        }
    }
    Ok(ConnectionTables {
        basis: ef.v.clone(),
        w: ef.w.clone(),
        s: table(&|x| s.s(x))?,
        l: table(&|x| s.l(x))?,
        p_h: table(&|x| s.p_h(x))?,
        p_v: table(&|x| s.p_v(x))?,
        lifts: s.lifts().iter().map(|h| h.normalize()).collect(),
        nabla_vertical,
        nabla_horizontal,
    })
}
