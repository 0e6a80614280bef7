use std::sync::Arc;

use proptest::prelude::*;
use sodefield_core::analysis::{
    analyze, check_regularity, transform_beta, verify_beta_integrability, AdaptationMethod, Analysis,
    AnalysisOptions, BetaCoefficients, Classification, ExtendedFrame, QuadraticVerdict, SecondOrderProblem,
};
use sodefield_core::expr::{differentiate, parse, Assignment, Expr, ZeroTest};
use sodefield_core::geometry::{lie_bracket, Chart, Frame, VectorField};

fn chart(names: &[&str], half: f64) -> Arc<Chart> {
    let n = names.len();
    Arc::new(Chart::new(names, &vec![-half; n], &vec![half; n], 3).unwrap())
}

fn vf(c: &Arc<Chart>, comps: &[&str]) -> VectorField {
    VectorField::parse(c, comps).unwrap()
}

fn problem(c: &Arc<Chart>, f: &[&str], v: &[&[&str]]) -> SecondOrderProblem {
    let fields = v.iter().map(|comps| vf(c, comps)).collect();
    let frame = Frame::new(c, fields).unwrap();
    SecondOrderProblem::new(vf(c, f), frame, AnalysisOptions::with_seed(7)).unwrap()
}

fn run(p: &SecondOrderProblem) -> Analysis {
    analyze(p).unwrap()
}

fn e(s: &str) -> Expr {
    parse(s).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    (a - b).is_structurally_zero()
}

fn natural(force: &str) -> SecondOrderProblem {
    let c = chart(&["x", "y"], 1.0);
    problem(&c, &["y", force], &[&["0", "1"]])
}

const FORCE: &str = "x*y^2 - sin(x) + y";

#[test]
fn regularity_discriminates() {
    assert!(check_regularity(&natural(FORCE)).unwrap().passed);

    let c = chart(&["x", "y"], 1.0);
    let p = problem(&c, &["x", "0"], &[&["0", "1"]]);
    let r = check_regularity(&p).unwrap();
    assert!(!r.passed);
    assert!(!r.deficient.is_empty());
    let a = run(&p);
    match a.report.classification {
        Classification::NotSecondOrder { reason } => assert!(reason.starts_with("regularity")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn beta_of_natural_sode() {
    let p = natural(FORCE);
    let a = run(&p);
    let beta = a.report.beta.as_ref().unwrap();
    // oracle: [∂y, −∂x − f_y ∂y] = −f_yy ∂y
    let f = e(FORCE);
    let fyy = differentiate(&differentiate(&f, "y"), "y");
    assert!(same(&beta.alpha[0][0][0], &-&fyy));
    assert!(beta.beta[0][0][0].is_structurally_zero());
    assert!(verify_beta_integrability(beta).is_exact());
}

#[test]
fn beta_rescaled_basis_and_adaptation() {
    let c = chart(&["x", "y"], 1.0);
    let p = problem(&c, &["y", "0"], &[&["0", "1 + y^2"]]);
    let a = run(&p);
    let r = &a.report;
    let beta = r.beta.as_ref().unwrap();
    // oracle: [Ṽ, W̃] = −2y(1+y²)∂x = 2y W̃
    assert!(same(&beta.beta[0][0][0], &e("2*y")));
    assert!(beta.alpha[0][0][0].is_structurally_zero());

    let ad = r.adaptation.as_ref().unwrap();
    assert_eq!(ad.method, AdaptationMethod::Symbolic);
    let amat = &ad.matrix.as_ref().unwrap()[0][0];
    for z in c.sample_points(50, 9) {
        let got = amat.evaluate(&Assignment::from_pairs(&["x", "y"], &z)).unwrap();
        let want = 1.0 / (1.0 + z[1] * z[1]);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
    let basis = ad.basis.as_ref().unwrap();
    assert_eq!(basis[0], vf(&c, &["0", "1"]));
    assert!(ad.verification.as_ref().unwrap().passed());

    // the connection in the original basis: ∇_Ṽ Ṽ = β Ṽ
    let s = a.structure.as_ref().unwrap();
    let ef = ExtendedFrame::from_basis(&p.f, p.v.fields().to_vec(), &p.options).unwrap();
    let raw = sodefield_core::analysis::Structure::new(ef).unwrap();
    let vt = &p.v.fields()[0];
    let nab = raw.nabla(vt, vt).unwrap();
    assert_eq!(nab, vt.scale(&e("2*y")));
    // and zero in the adapted one
    let v0 = &s.frame().v[0];
    assert!(s.nabla(v0, v0).unwrap().is_structurally_zero());
}

#[test]
fn projectors_lifts_and_s_in_natural_coordinates() {
    let p = natural(FORCE);
    let a = run(&p);
    let s = a.structure.as_ref().unwrap();
    let c = &p.chart;
    let fy = differentiate(&e(FORCE), "y");
    let half_fy = &Expr::ratio(1, 2) * &fy;
    let w = &s.frame().w[0];
    // oracle: (L_F S)(W) = −W − f_y ∂y, so P_H(W) = −(∂x + ½ f_y ∂y)
    let ph = s.p_h(w).unwrap();
    assert_eq!(ph, VectorField::new(c, vec![Expr::num(-1), -&half_fy]).unwrap());
    assert_eq!(s.lifts()[0], VectorField::new(c, vec![Expr::one(), half_fy.clone()]).unwrap());
    let lw = s.l(w).unwrap();
    assert_eq!(lw, w.neg().sub(&VectorField::new(c, vec![Expr::zero(), fy]).unwrap()).unwrap());
    // S(F) is the Liouville field y ∂y
    assert_eq!(s.s(&p.f).unwrap(), vf(c, &["0", "y"]));
    assert!(a.report.check("liouville").unwrap().is_exact());

    let flat = chart(&["x", "y"], 1.0);
    let a = run(&problem(&flat, &["y", "0"], &[&["0", "1"]]));
    assert_eq!(a.structure.unwrap().lifts()[0], vf(&flat, &["1", "0"]));
}

#[test]
fn identity_suite_is_exact_on_polynomial_instances() {
    for force in ["x*y^2 + 3*y - x", "y^3 - x^2*y", "x^2 + y^2*x^3"] {
        let a = run(&natural(force));
        for c in &a.report.checks {
            assert!(c.is_exact(), "{force}: {c:?}");
        }
        assert!(a.report.checks.iter().any(|c| c.name.starts_with("nijenhuis")));
        assert!(a.report.warnings.is_empty(), "{:?}", a.report.warnings);
    }
}

fn theta_oracle(force: &str) -> Expr {
    // n = 1 natural chart: ∇_V V = 0, ∇_h V = Γ₁₁ V, [h, V] = Γ₁₁ V, so θ = −∂Γ₁₁/∂y = ½ f_yyy
    let f = e(force);
    let d3 = differentiate(&differentiate(&differentiate(&f, "y"), "y"), "y");
    &Expr::ratio(1, 2) * &d3
}

#[test]
fn theta_matches_third_derivative() {
    for force in ["x*y^2 + sin(x)*y + exp(x)", "y^3", "y*sin(y) + x", "0"] {
        let a = run(&natural(force));
        let theta = a.report.theta.as_ref().unwrap();
        assert_eq!(theta.len(), 1);
        assert!(
            same(&theta[0].coefficients[0], &theta_oracle(force)),
            "{force}: {}",
            theta[0].coefficients[0]
        );
    }
    let a = run(&natural("x*y^2 + sin(x)*y + exp(x)"));
    assert_eq!(a.report.quadratic, Some(QuadraticVerdict::Quadratic { exact: true }));
    let a = run(&natural("y^3"));
    match a.report.quadratic.unwrap() {
        QuadraticVerdict::NotQuadratic { value, .. } => assert!(value.abs() > 0.1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn natural_chart_data() {
    let a = run(&natural("x*y^2 + sin(x)*y + exp(x)"));
    let nat = a.report.natural_chart.as_ref().unwrap();
    assert_eq!(nat.positions, vec!["x"]);
    assert_eq!(nat.velocities, vec!["y"]);
    // Γ¹₁ = −½ f_y, Γ¹₁₁ = −x
    assert!(same(&nat.gamma[0][0], &e("-x*y - sin(x)/2")));
    assert!(same(&nat.gamma2[0][0][0], &e("-x")));
    let q = &nat.quadratic;
    assert!(same(&q.c[0][0][0], &e("x")));
    assert!(same(&q.p[0][0], &e("sin(x)")));
    assert!(same(&q.q[0], &e("exp(x)")));
    assert!(q.remainder.is_exact());

    let a = run(&natural("y^3"));
    assert!(!a.report.natural_chart.unwrap().quadratic.remainder.passed());
}

fn oscillator_scrambled() -> SecondOrderProblem {
    let c = chart(&["z1", "z2"], 1.0);
    problem(&c, &["z2 - z1^2", "-z1 + 2*z1*(z2 - z1^2)"], &[&["0", "1"]])
}

#[test]
fn scrambled_oscillator_is_case_one() {
    let a = run(&oscillator_scrambled());
    let r = &a.report;
    assert_eq!(r.classification, Classification::Case1 { parameters: 0 });
    let search = r.cross_section.as_ref().unwrap();
    assert!(!search.points.is_empty());
    // oracle: N is the preimage of {u = 0}, the curve z2 = z1²
    for z in &search.points {
        assert!((z[1] - z[0] * z[0]).abs() < 1e-8, "{z:?}");
    }
    assert!(r.checks.iter().all(|c| c.passed()), "{:?}", r.checks);
}

fn timedep_scrambled() -> SecondOrderProblem {
    // t, x, u ↦ z1 = t, z2 = x + u², z3 = u applied to ∂t + u∂x + (−x + sin t)∂u
    let c = chart(&["z1", "z2", "z3"], 1.0);
    let g = "(-(z2 - z3^2) + sin(z1))";
    let f2 = format!("z3 + 2*z3*{g}");
    problem(&c, &["1", &f2, g], &[&["0", "2*z3", "1"]])
}

#[test]
fn scrambled_time_dependent_is_case_two() {
    let a = run(&timedep_scrambled());
    let r = &a.report;
    assert_eq!(r.classification, Classification::Case2 { parameters: 0 });
    assert!(r.w_involutive.as_ref().unwrap().holds());
    assert!(r.f_preserves_w.as_ref().unwrap().holds());
    assert!(r.checks.iter().all(|c| c.passed()), "{:?}", r.checks);
}

#[test]
fn w_not_involutive_is_rejected() {
    let c = chart(&["x", "y", "z", "w"], 1.0);
    let p = problem(&c, &["y", "0", "1", "y^2*x"], &[&["0", "1", "0", "0"]]);
    let a = run(&p);
    // oracle: W₁ = −∂x − 2xy ∂w, [V₁, W₁] = −2x ∂w ∉ span{∂y, ∂x + 2xy ∂w}
    let w = lie_bracket(&p.f, &p.v.fields()[0]).unwrap();
    assert_eq!(w, vf(&c, &["-1", "0", "0", "-2*x*y"]));
    let br = lie_bracket(&p.v.fields()[0], &w).unwrap();
    assert_eq!(br, vf(&c, &["0", "0", "0", "-2*x"]));
    assert!(!a.report.w_involutive.unwrap().holds());
    assert!(matches!(a.report.classification, Classification::NotSecondOrder { .. }));
}

/// Closed form of the reduced Routh system for l = ½(v₁² + v₂²) with magnetic
/// coupling μ(−x₂ v₁): v̇₁ = μ v₂, v̇₂ = −μ v₁, μ̇ = 0.
fn routh() -> SecondOrderProblem {
    let c = Arc::new(Chart::new(&["x1", "x2", "v1", "v2", "mu"], &[-1.0; 5], &[1.0; 5], 3).unwrap());
    problem(
        &c,
        &["v1", "v2", "mu*v2", "-mu*v1", "0"],
        &[&["0", "0", "1", "0", "0"], &["0", "0", "0", "1", "0"]],
    )
}

#[test]
fn routh_instance() {
    let a = run(&routh());
    let r = &a.report;
    assert_eq!(r.classification, Classification::Case1 { parameters: 1 });
    assert!(r.regularity.passed);
    assert!(r.quadratic.as_ref().unwrap().is_quadratic());
    let nat = r.natural_chart.as_ref().unwrap();
    assert_eq!(nat.parameters, vec!["mu"]);
    assert!(nat.parameter_components.is_exact());
    assert_eq!(r.adaptation.as_ref().unwrap().method, AdaptationMethod::AlreadyAdapted);
    for c in &r.checks {
        assert!(c.is_exact(), "{c:?}");
    }
    // h(∂v^i) = ∂x^i − Γ^j_i ∂v^j with Γ^j_i = −½ ∂F^{v_j}/∂v_i
    let s = a.structure.as_ref().unwrap();
    let c = s.frame().chart.clone();
    assert_eq!(s.lifts()[0], vf(&c, &["1", "0", "0", "-mu/2", "0"]));
    assert_eq!(s.lifts()[1], vf(&c, &["0", "1", "mu/2", "0", "0"]));
}

#[test]
fn beta_transforms_covariantly() {
    let p = natural("x*y^3 + y");
    let ef = ExtendedFrame::from_basis(&p.f, p.v.fields().to_vec(), &p.options).unwrap();
    let b = BetaCoefficients::compute(&ef).unwrap();
    let a = vec![vec![e("1 + x^2 + y^2")]];
    let predicted = transform_beta(&b, &a).unwrap();
    let scaled = vec![p.v.fields()[0].scale(&a[0][0])];
    let direct = BetaCoefficients::compute(&ExtendedFrame::from_basis(&p.f, scaled, &p.options).unwrap()).unwrap();
    assert!(same(&predicted[0][0][0], &direct.beta[0][0][0]));
}

// ---- properties ----

const NAT2: [&str; 4] = ["x1", "x2", "y1", "y2"];

fn poly(names: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..names.len()).prop_map(move |i| Expr::sym(names[i])),
        (-2i64..3).prop_map(Expr::num),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner, 2..3).prop_map(Expr::prod),
        ]
    })
}

fn natural2(f1: Expr, f2: Expr) -> ExtendedFrame {
    let c = chart(&NAT2, 1.0);
    let f = VectorField::new(&c, vec![Expr::sym("y1"), Expr::sym("y2"), f1, f2]).unwrap();
    let v = vec![vf(&c, &["0", "0", "1", "0"]), vf(&c, &["0", "0", "0", "1"])];
    ExtendedFrame::from_basis(&f, v, &AnalysisOptions::with_seed(1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn alpha_beta_symmetric_and_integrable(f1 in poly(&NAT2), f2 in poly(&NAT2)) {
        let ef = natural2(f1, f2);
        let b = BetaCoefficients::compute(&ef).unwrap();
        prop_assert!(b.symmetry.is_exact());
        prop_assert!(verify_beta_integrability(&b).is_exact());
    }

    #[test]
    fn beta_covariance_under_unipotent_change(f1 in poly(&NAT2), f2 in poly(&NAT2), q in poly(&["x1", "x2"])) {
        let ef = natural2(f1, f2);
        let b = BetaCoefficients::compute(&ef).unwrap();
        let a = vec![vec![Expr::one(), q.clone()], vec![Expr::zero(), Expr::one()]];
        let predicted = transform_beta(&b, &a).unwrap();
        let c = ef.chart.clone();
        let basis: Vec<VectorField> = (0..2)
            .map(|j| VectorField::combination(&c, &[a[0][j].clone(), a[1][j].clone()], &ef.v))
            .collect();
        let direct = BetaCoefficients::compute(&ExtendedFrame::from_basis(&ef.f, basis, &ef.options).unwrap()).unwrap();
        for i in 0..2 { for j in 0..2 { for k in 0..2 {
            prop_assert!(same(&predicted[i][j][k], &direct.beta[i][j][k]));
        }}}
    }

    #[test]
    fn nabla_is_a_covariant_derivative(force in poly(&["x", "y"]), g in poly(&["x", "y"])) {
        let p = natural(&force.to_string());
        let ef = ExtendedFrame::from_basis(&p.f, p.v.fields().to_vec(), &p.options).unwrap();
        let s = sodefield_core::analysis::Structure::new(ef).unwrap();
        let v = &s.frame().v[0];
        for x in [s.frame().w[0].clone(), v.clone(), s.lifts()[0].clone(), p.f.clone()] {
            let base = s.nabla(&x, v).unwrap();
            let scaled_arg = s.nabla(&x.scale(&g), v).unwrap();
            prop_assert_eq!(scaled_arg, base.scale(&g));
            let lhs = s.nabla(&x, &v.scale(&g)).unwrap();
            let rhs = base.scale(&g).add(&v.scale(&x.apply(&g))).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn classification_survives_triangular_scrambles(q in poly(&["z1"])) {
        // z1 = x, z2 = u + q(x) applied to u ∂x − x ∂u
        let c = chart(&["z1", "z2"], 1.0);
        let u = &Expr::sym("z2") - &q;
        let dq = differentiate(&q, "z1");
        let f = VectorField::new(&c, vec![u.clone(), &-&Expr::sym("z1") + &(&dq * &u)]).unwrap();
        let frame = Frame::new(&c, vec![vf(&c, &["0", "1"])]).unwrap();
        let p = SecondOrderProblem::new(f, frame, AnalysisOptions::with_seed(2)).unwrap();
        let a = analyze(&p).unwrap();
        prop_assert_eq!(a.report.classification, Classification::Case1 { parameters: 0 });
    }
}

#[test]
fn zero_test_options_are_threaded_through() {
    let mut o = AnalysisOptions::with_seed(5);
    assert_eq!(o.zero.seed, 5);
    o.set_seed(6);
    assert_eq!((o.seed, o.zero.seed), (6, 6));
    assert_eq!(ZeroTest::default().trials, 64);
}
