use std::fmt::Write;

use super::{Command, Report};
use crate::analysis::{AnalysisReport, Check, CheckStatus, Classification, QuadraticVerdict};
use crate::geometry::InvolutivityVerdict;

fn involutive(v: &InvolutivityVerdict) -> String {
    match v {
        InvolutivityVerdict::Involutive => "pass".into(),
        InvolutivityVerdict::NotInvolutive { i, j, component, witness, value } => {
            format!("fail: [{i},{j}] leaves the span, component {component} = {value:e} at {witness:?}")
        }
        InvolutivityVerdict::Inconclusive { i, j, diagnostic } => format!("inconclusive at [{i},{j}]: {diagnostic}"),
    }
}

fn status(c: &Check) -> String {
    match &c.status {
        CheckStatus::Zero => "zero".into(),
        CheckStatus::NumericZero { max_relative, .. } => format!("zero numerically (relative {max_relative:.1e})"),
        CheckStatus::NonZero { component, witness, value } => {
            format!("NONZERO: component {component} = {value:e} at {witness:?}")
        }
        CheckStatus::Unknown { diagnostic } => format!("unknown: {diagnostic}"),
        CheckStatus::Failed { diagnostic } => format!("failed: {diagnostic}"),
    }
}

fn classification(c: &Classification) -> String {
    match c {
        Classification::Case1 { parameters } => format!("Case1 (second-order field, {parameters} parameters)"),
        Classification::Case2 { parameters } => {
            format!("Case2 (time-dependent second-order field, {parameters} extra parameters)")
        }
        Classification::NotSecondOrder { reason } => format!("NotSecondOrder: {reason}"),
    }
}

fn classify_section(out: &mut String, r: &AnalysisReport) {
    let _ = writeln!(out, "classification: {}", classification(&r.classification));
    if let Some(s) = &r.cross_section {
        let _ = writeln!(
            out,
            "cross-section: {} of {} starts converged, {} distinct points",
            s.converged,
            s.starts,
            s.points.len()
        );
        if let Some(z) = &s.chosen {
            let _ = writeln!(out, "  chosen point {z:?} (residual {:.1e})", s.best_residual);
        }
    }
    if let Some(w) = &r.w {
        for (i, f) in w.iter().enumerate() {
            let _ = writeln!(out, "W{} = {f}", i + 1);
        }
    }
}

fn connection_section(out: &mut String, r: &AnalysisReport) {
    if let Some(b) = &r.beta {
        for i in 0..b.n {
            for j in 0..b.n {
                for k in 0..b.n {
                    let (a, b_) = (&b.alpha[i][j][k], &b.beta[i][j][k]);
                    let (i, j, k) = (i + 1, j + 1, k + 1);
                    let _ = writeln!(out, "alpha^{k}_{i}{j} = {a}   beta^{k}_{i}{j} = {b_}");
                }
            }
        }
    }
    if let Some(a) = &r.adaptation {
        let _ = writeln!(out, "adaptation: {:?}", a.method);
        if let Some(basis) = &a.basis {
            for (i, f) in basis.iter().enumerate() {
                let _ = writeln!(out, "  adapted V{} = {f}", i + 1);
            }
        }
        if let Some(d) = &a.diagnostic {
            let _ = writeln!(out, "  {d}");
        }
    }
    if let Some(t) = &r.connection {
        for (op, table) in [("S", &t.s), ("L", &t.l), ("P_H", &t.p_h), ("P_V", &t.p_v)] {
            for nf in table {
                let _ = writeln!(out, "{op}({}) = {}", nf.name, nf.field);
            }
        }
        for (i, h) in t.lifts.iter().enumerate() {
            let _ = writeln!(out, "h{} = {h}", i + 1);
        }
    }
    if let Some(nc) = &r.natural_chart {
        for (i, row) in nc.gamma.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                let _ = writeln!(out, "Gamma^{}_{} = {g}", i + 1, j + 1);
            }
        }
    }
    checks_section(out, r);
}

fn checks_section(out: &mut String, r: &AnalysisReport) {
    let total = r.checks.len() + usize::from(r.beta_integrability.is_some());
    let passed = r
        .checks
        .iter()
        .chain(&r.beta_integrability)
        .filter(|c| c.passed())
        .count();
    let _ = writeln!(out, "identity checks: {passed}/{total} pass");
    for c in r.checks.iter().chain(&r.beta_integrability).filter(|c| !c.is_exact()) {
        let _ = writeln!(out, "  {}: {}", c.name, status(c));
    }
}

fn quadratic_section(out: &mut String, r: &AnalysisReport) {
    if let Some(theta) = &r.theta {
        for t in theta {
            let comps: Vec<String> = t.coefficients.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "theta({},{},{}) = [{}]", t.i + 1, t.j + 1, t.k + 1, comps.join(", "));
        }
    }
    match &r.quadratic {
        Some(QuadraticVerdict::Quadratic { exact }) => {
            let _ = writeln!(out, "quadratic: yes{}", if *exact { " (exact)" } else { "" });
        }
        Some(QuadraticVerdict::NotQuadratic { i, j, k, l, witness, value }) => {
            let _ = writeln!(
                out,
                "quadratic: no, theta({},{},{}) component {} = {value:e} at {witness:?}",
                i + 1,
                j + 1,
                k + 1,
                l + 1
            );
        }
        Some(QuadraticVerdict::Inconclusive { diagnostic }) => {
            let _ = writeln!(out, "quadratic: inconclusive ({diagnostic})");
        }
        None => {
            let _ = writeln!(out, "quadratic: not evaluated");
        }
    }
    if let Some(nc) = &r.natural_chart {
        let q = &nc.quadratic;
        for (i, fi) in nc.force.iter().enumerate() {
            let _ = writeln!(out, "force{} = {fi}", i + 1);
            for (j, row) in q.c[i].iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    if !c.is_structurally_zero() {
                        let _ = writeln!(out, "  c^{}_{}{} = {c}", i + 1, j + 1, k + 1);
                    }
                }
            }
            for (j, p) in q.p[i].iter().enumerate() {
                if !p.is_structurally_zero() {
                    let _ = writeln!(out, "  P^{}_{} = {p}", i + 1, j + 1);
                }
            }
            let _ = writeln!(out, "  Q^{} = {}", i + 1, q.q[i]);
        }
    }
}

/// Human-readable summary of a report.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let m = &report.manifest;
    let _ = writeln!(out, "{} {} ({})", report.command, m.metadata.name, report.schema);
    if !m.metadata.description.is_empty() {
        let _ = writeln!(out, "  {}", m.metadata.description);
    }
    let g = &report.gates;
    let _ = writeln!(
        out,
        "regularity: {} (rank {}..{} of {} at {} samples)",
        if g.regularity.passed { "pass" } else { "fail" },
        g.regularity.min_rank,
        g.regularity.max_rank,
        g.regularity.expected_rank,
        g.regularity.samples
    );
    let _ = writeln!(out, "V involutive: {}", involutive(&g.v_involutive));
    let _ = writeln!(
        out,
        "W involutive: {}",
        g.w_involutive.as_ref().map_or("not reached".into(), involutive)
    );
    if let Some(l) = &report.lagrangian {
        let _ = writeln!(
            out,
            "lagrangian: derived field matches the stated one (max difference {:.1e} at {} points{})",
            l.max_difference,
            l.samples,
            if l.exact { ", exact" } else { "" }
        );
    }
    if let Some(r) = &report.analysis {
        match report.command {
            Command::Classify => classify_section(&mut out, r),
            Command::Connection => {
                classify_section(&mut out, r);
                connection_section(&mut out, r);
            }
            Command::Quadratic => {
                classify_section(&mut out, r);
                quadratic_section(&mut out, r);
            }
            Command::Straighten => classify_section(&mut out, r),
            Command::Report => {
                classify_section(&mut out, r);
                connection_section(&mut out, r);
                quadratic_section(&mut out, r);
            }
            Command::Check => {}
        }
        for w in &r.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
    }
    if let Some(s) = &report.straighten {
        if let Some(t) = &s.transform {
            let _ = writeln!(out, "normal coordinates ({:?} basis): {}", t.basis, t.parameters.join(", "));
            let _ = writeln!(out, "  base point {:?}, condition {:.2e}", t.base_point, t.base_condition);
        }
        if let Some(res) = &s.residuals {
            let _ = writeln!(
                out,
                "residuals: {} nodes ({} per axis, half-width {}), {} flagged, {} failed",
                res.evaluated,
                res.grid.points_per_axis,
                res.grid.half_extent,
                res.flagged,
                res.failures.len()
            );
            if let Some(t) = &res.t_residual {
                let _ = writeln!(out, "  time residual max {:.2e} median {:.2e}", t.max, t.median);
            }
            let _ = writeln!(out, "  structural max {:.2e}", res.structural_max);
            let _ = writeln!(
                out,
                "  Jacobian agreement max {:.2e}, fibre sigma min {:.2e}",
                res.jacobian_discrepancy.max, res.min_fibre_sigma
            );
            for w in &res.warnings {
                let _ = writeln!(out, "  warning: {w}");
            }
        }
        if let Some(sur) = &s.surrogate {
            let forces: Vec<String> = sur.force.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "surrogate (degree {}, fit residual {:.1e}): force = [{}]",
                sur.degree,
                sur.fit_residual,
                forces.join(", ")
            );
            let _ = writeln!(
                out,
                "  re-analysis: {} ({})",
                sur.surrogate.as_ref().map_or("failed".into(), classification),
                if sur.agrees { "agrees" } else { "DISAGREES" }
            );
        }
        if let Some(e) = &s.error {
            let _ = writeln!(out, "straighten error: {e}");
        }
    }
    let _ = writeln!(out, "result: {} (exit {})", report.outcome.status, report.outcome.exit_code);
    for msg in &report.outcome.messages {
        let _ = writeln!(out, "  {msg}");
    }
    out
}
