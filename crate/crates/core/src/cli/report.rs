use std::time::Instant;

use serde::Serialize;

use super::{Command, CliError, LagrangianComparison, Manifest, EXIT_CONDITION_FAILED, EXIT_NUMERIC, EXIT_OK};
use crate::analysis::{
    analyze, Analysis, AnalysisReport, CheckStatus, Classification, QuadraticVerdict, RegularityVerdict, CONVENTIONS,
};
use crate::geometry::InvolutivityVerdict;
use crate::straighten::{
    build_normal_coordinates, fit_surrogate, pushforward_residuals, GridSpec, ResidualReport, StraightenError,
    StraightenOptions, SurrogateReport, TransformMetadata,
};

pub const REPORT_SCHEMA: &str = "sodefield-report/1";

/// The hypotheses every later stage relies on.
#[derive(Debug, Clone, Serialize)]
pub struct Gates {
    pub regularity: RegularityVerdict,
    pub v_involutive: InvolutivityVerdict,
    pub w_involutive: Option<InvolutivityVerdict>,
    pub passed: bool,
}

impl Gates {
    fn of(r: &AnalysisReport) -> Gates {
        let w_ok = matches!(r.w_involutive, Some(InvolutivityVerdict::Involutive));
        Gates {
            regularity: r.regularity.clone(),
            v_involutive: r.v_involutive.clone(),
            w_involutive: r.w_involutive.clone(),
            passed: r.regularity.passed && r.v_involutive == InvolutivityVerdict::Involutive && w_ok,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StraightenSection {
    pub transform: Option<TransformMetadata>,
    pub residuals: Option<ResidualReport>,
    pub surrogate: Option<SurrogateReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub exit_code: i32,
    pub status: String,
    pub messages: Vec<String>,
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: Command,
    pub conventions: &'static str,
    pub manifest: Manifest,
    pub gates: Gates,
    pub analysis: Option<AnalysisReport>,
    pub lagrangian: Option<LagrangianComparison>,
    pub straighten: Option<StraightenSection>,
    pub outcome: Outcome,
    pub timings: Timings,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The JSON document without timings, which is reproducible for a fixed manifest.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code
    }
}

struct Verdict {
    code: i32,
    messages: Vec<String>,
}

impl Verdict {
    fn ok() -> Verdict {
        Verdict { code: EXIT_OK, messages: Vec::new() }
    }

    fn fail(code: i32, msg: impl Into<String>) -> Verdict {
        Verdict { code, messages: vec![msg.into()] }
    }

    fn merge(mut self, other: Verdict) -> Verdict {
        self.code = self.code.max(other.code);
        self.messages.extend(other.messages);
        self
    }
}

fn gate_verdict(g: &Gates) -> Verdict {
    let mut v = Verdict::ok();
    if !g.regularity.passed {
        v = v.merge(Verdict::fail(
            EXIT_CONDITION_FAILED,
            format!(
                "regularity failed: rank {} < {} at {:?}",
                g.regularity.min_rank,
                g.regularity.expected_rank,
                g.regularity.deficient.first()
            ),
        ));
    }
    if g.v_involutive != InvolutivityVerdict::Involutive {
        v = v.merge(Verdict::fail(EXIT_CONDITION_FAILED, format!("V not involutive: {:?}", g.v_involutive)));
    }
    match &g.w_involutive {
        Some(InvolutivityVerdict::Involutive) => {}
        Some(other) => v = v.merge(Verdict::fail(EXIT_CONDITION_FAILED, format!("W not involutive: {other:?}"))),
        None => v = v.merge(Verdict::fail(EXIT_CONDITION_FAILED, "W involutivity not reached")),
    }
    v
}

fn classify_verdict(r: &AnalysisReport) -> Verdict {
    match &r.classification {
        Classification::NotSecondOrder { reason } => {
            Verdict::fail(EXIT_CONDITION_FAILED, format!("not a second-order field: {reason}"))
        }
        Classification::Case1 { .. } if r.cross_section.as_ref().and_then(|s| s.chosen.as_ref()).is_none() => {
            let tried = r.cross_section.as_ref().map_or(0, |s| s.starts);
            Verdict::fail(
                EXIT_NUMERIC,
                format!("cross-section not found in box ({tried} Newton starts)"),
            )
        }
        _ => Verdict::ok(),
    }
}

fn connection_verdict(r: &AnalysisReport) -> Verdict {
    let mut v = classify_verdict(r);
    if v.code == EXIT_CONDITION_FAILED {
        return v;
    }
    for c in r.checks.iter().chain(&r.beta_integrability) {
        match &c.status {
            CheckStatus::NonZero { .. } | CheckStatus::Failed { .. } => {
                v = v.merge(Verdict::fail(EXIT_NUMERIC, format!("identity {} violated: {:?}", c.name, c.status)));
            }
            _ => {}
        }
    }
    v
}

fn quadratic_verdict(r: &AnalysisReport) -> Verdict {
    match &r.quadratic {
        None => classify_verdict(r).merge(Verdict::fail(EXIT_CONDITION_FAILED, "no quadratic verdict")),
        Some(QuadraticVerdict::Quadratic { .. }) => Verdict::ok(),
        Some(QuadraticVerdict::NotQuadratic { i, j, k, l, value, .. }) => Verdict::fail(
            EXIT_CONDITION_FAILED,
            format!(
                "not quadratic: theta({},{},{}) has component {} = {value:e}",
                i + 1,
                j + 1,
                k + 1,
                l + 1
            ),
        ),
        Some(QuadraticVerdict::Inconclusive { diagnostic }) => {
            Verdict::fail(EXIT_NUMERIC, format!("quadratic test inconclusive: {diagnostic}"))
        }
    }
}

fn straighten(
    analysis: &Analysis,
    f: &crate::geometry::VectorField,
    options: &StraightenOptions,
    manifest: &Manifest,
    timings: &mut Timings,
) -> (StraightenSection, Verdict) {
    let mut section = StraightenSection::default();
    let t = Instant::now();
    let tr = match build_normal_coordinates(analysis, f, options) {
        Ok(tr) => tr,
        Err(e) => {
            let code = match e {
                StraightenError::NotSecondOrder(_) => EXIT_CONDITION_FAILED,
                _ => EXIT_NUMERIC,
            };
            section.error = Some(e.to_string());
            return (section, Verdict::fail(code, e.to_string()));
        }
    };
    let grid = GridSpec::for_transform(&tr, options);
    let residuals = pushforward_residuals(&tr, &grid, options);
    timings.stages.push(("straighten".into(), ms(t)));

    let verdict = if residuals.passed {
        Verdict::ok()
    } else if residuals.structural_max >= options.tolerance {
        Verdict::fail(
            EXIT_CONDITION_FAILED,
            format!(
                "structural residual {:e} not below tolerance {:e}",
                residuals.structural_max, options.tolerance
            ),
        )
    } else {
        Verdict {
            code: EXIT_NUMERIC,
            messages: residuals.warnings.clone(),
        }
    };
    let t = Instant::now();
    if residuals.evaluated > 0 {
        match fit_surrogate(&tr, &residuals, &manifest.analysis_options()) {
            Ok(s) => section.surrogate = Some(s),
            Err(e) => section.error = Some(format!("surrogate: {e}")),
        }
    }
    timings.stages.push(("surrogate".into(), ms(t)));
    section.transform = Some(tr.metadata().clone());
    section.residuals = Some(residuals);
    (section, verdict)
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs one command on a manifest.
pub fn run(command: Command, manifest: &Manifest) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut timings = Timings::default();
    let prepared = manifest.prepare()?;
    timings.stages.push(("prepare".into(), ms(start)));
    let t = Instant::now();
    let analysis = analyze(&prepared.problem)?;
    timings.stages.push(("analysis".into(), ms(t)));
    let r = &analysis.report;
    let gates = Gates::of(r);

    let mut section = None;
    let verdict = match command {
        Command::Check => gate_verdict(&gates),
        Command::Classify => classify_verdict(r),
        Command::Connection => connection_verdict(r),
        Command::Quadratic => quadratic_verdict(r),
        Command::Straighten | Command::Report => {
            let base = if command == Command::Report {
                connection_verdict(r)
            } else {
                classify_verdict(r)
            };
            if r.classification.is_second_order() {
                let (s, v) = straighten(&analysis, &prepared.problem.f, &prepared.straighten, manifest, &mut timings);
                section = Some(s);
                base.merge(v)
            } else {
                base
            }
        }
    };
    let status = match verdict.code {
        EXIT_OK => "pass",
        EXIT_CONDITION_FAILED => "condition failed",
        _ => "numeric failure",
    };
    timings.total_ms = ms(start);
    Ok(Report {
        schema: REPORT_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        conventions: CONVENTIONS,
        manifest: manifest.clone(),
        gates,
        analysis: (command != Command::Check).then(|| analysis.report.clone()),
        lagrangian: prepared.lagrangian,
        straighten: section,
        outcome: Outcome {
            exit_code: verdict.code,
            status: status.into(),
            messages: verdict.messages,
        },
        timings,
    })
}
