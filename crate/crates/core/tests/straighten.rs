use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sodefield_core::analysis::{analyze, Analysis, AnalysisOptions, Classification, SecondOrderProblem};
use sodefield_core::geometry::{Chart, Frame, VectorField};
use sodefield_core::straighten::{
    build_normal_coordinates, fit_surrogate, pushforward_residuals, solve_basis_ode, BasisChoice,
    CoordinateTransform, FlowMap, GridSpec, IntegratorSettings, StraightenError, StraightenOptions,
};

fn chart(names: &[&str], half: f64) -> Arc<Chart> {
    let n = names.len();
    Arc::new(Chart::new(names, &vec![-half; n], &vec![half; n], 3).unwrap())
}

fn vf(c: &Arc<Chart>, comps: &[&str]) -> VectorField {
    VectorField::parse(c, comps).unwrap()
}

fn problem(c: &Arc<Chart>, f: &[&str], v: &[&[&str]]) -> SecondOrderProblem {
    let fields = v.iter().map(|comps| vf(c, comps)).collect();
    SecondOrderProblem::new(vf(c, f), Frame::new(c, fields).unwrap(), AnalysisOptions::with_seed(7)).unwrap()
}

fn prepared(p: &SecondOrderProblem) -> (Analysis, CoordinateTransform) {
    let a = analyze(p).unwrap();
    let tr = build_normal_coordinates(&a, &p.f, &StraightenOptions::default()).unwrap();
    (a, tr)
}

fn oscillator_scrambled() -> SecondOrderProblem {
    let c = chart(&["z1", "z2"], 1.0);
    problem(&c, &["z2 - z1^2", "-z1 + 2*z1*(z2 - z1^2)"], &[&["0", "1"]])
}

fn timedep_scrambled() -> SecondOrderProblem {
    let c = chart(&["z1", "z2", "z3"], 1.0);
    let g = "(-(z2 - z3^2) + sin(z1))";
    let f2 = format!("z3 + 2*z3*{g}");
    problem(&c, &["1", &f2, g], &[&["0", "2*z3", "1"]])
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn flows_of_simple_fields() {
    let c = chart(&["x", "y"], 1.0);
    let s = IntegratorSettings::default();
    let dx = FlowMap::new(&vf(&c, &["1", "0"]), s).unwrap();
    let z = dx.flow(&[0.1, 0.2], 0.3).unwrap();
    assert!(close(z[0], 0.4, 1e-12) && close(z[1], 0.2, 1e-12), "{z:?}");

    let rot = FlowMap::new(&vf(&c, &["y", "-x"]), s).unwrap();
    let z = rot.flow(&[1.0, 0.0], std::f64::consts::FRAC_PI_2).unwrap();
    assert!(close(z[0], 0.0, 1e-8) && close(z[1], -1.0, 1e-8), "{z:?}");
    let back = rot.flow(&z, -std::f64::consts::FRAC_PI_2).unwrap();
    assert!(close(back[0], 1.0, 1e-8) && close(back[1], 0.0, 1e-8), "{back:?}");
}

#[test]
fn flow_leaving_the_domain_is_reported() {
    let c = chart(&["x", "y"], 1.0);
    let blowup = FlowMap::new(&vf(&c, &["x^2", "0"]), IntegratorSettings::default()).unwrap();
    assert!(blowup.flow(&[1.0, 0.0], 2.0).is_err());
}

#[test]
fn flow_jacobian_matches_finite_differences() {
    let c = chart(&["x", "y"], 1.0);
    let fl = FlowMap::new(&vf(&c, &["y + x*y", "-x + y^2/3"]), IntegratorSettings::default()).unwrap();
    let (z0, s) = ([0.2, -0.1], 0.7);
    let (_, jac) = fl.flow_with_jacobian(&z0, s).unwrap();
    let h = 1e-5;
    for j in 0..2 {
        let mut p = z0;
        let mut m = z0;
        p[j] += h;
        m[j] -= h;
        let (fp, fm) = (fl.flow(&p, s).unwrap(), fl.flow(&m, s).unwrap());
        for i in 0..2 {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            assert!(close(fd, jac[(i, j)], 1e-7), "{i}{j}: {fd} vs {}", jac[(i, j)]);
        }
    }
}

#[test]
fn basis_ode_matches_closed_form() {
    // V = (1+y²)∂y, β = 2y: along y = tan s the solution is A = 1/(1+y²) = cos² s
    let c = chart(&["x", "y"], 1.0);
    let p = problem(&c, &["y", "0"], &[&["0", "1 + y^2"]]);
    let a = analyze(&p).unwrap();
    let beta = a.report.beta.as_ref().unwrap();
    for s in [0.1, 0.4, -0.6] {
        let m = solve_basis_ode(beta, &[0.3, 0.0], &[s]).unwrap();
        assert!(close(m[(0, 0)], s.cos().powi(2), 1e-9), "{s}: {}", m[(0, 0)]);
    }
}

#[test]
fn natural_coordinates_recover_the_force() {
    // F = y∂x + f∂y with W = −∂x: Φ(x̃, ỹ) = (−x̃, ·), ỹ = −y, force = −f(−x̃, −ỹ)
    let f = |x: f64, y: f64| -x - 0.1 * y.powi(3) + 0.5 * x * y;
    let c = chart(&["x", "y"], 1.0);
    let p = problem(&c, &["y", "-x - 0.1*y^3 + 0.5*x*y"], &[&["0", "1"]]);
    let (a, tr) = prepared(&p);
    assert_eq!(a.report.classification, Classification::Case1 { parameters: 0 });
    assert_eq!(tr.metadata().base_point, vec![0.0, 0.0]);
    let opts = StraightenOptions::default();
    let report = pushforward_residuals(&tr, &GridSpec::for_transform(&tr, &opts), &opts);
    assert!(report.passed, "{:?}", report.warnings);
    for s in &report.samples {
        let (xt, yt) = (s.parameters[0], s.x_dot[0]);
        assert!(close(s.point[0], -xt, 1e-9));
        assert!(close(yt, -s.point[1], 1e-9));
        assert!(close(s.force[0], -f(-xt, -yt), 1e-6), "{:?}", s);
    }
}

#[test]
fn scrambled_oscillator_straightens() {
    let (_, tr) = prepared(&oscillator_scrambled());
    let opts = StraightenOptions::default();
    let grid = GridSpec::for_transform(&tr, &opts);
    assert_eq!(grid.len(), 100);
    let report = pushforward_residuals(&tr, &grid, &opts);
    assert!(report.passed, "{:?}", report.warnings);
    assert!(report.t_residual.is_none());
    assert!(report.structural_max < 1e-6);
    assert_eq!(report.evaluated, 100);
    // oracle: x̃ = −z1, ỹ = −(z2 − z1²), force = −x̃
    for s in &report.samples {
        let z = &s.point;
        let xt = s.parameters[0];
        assert!(close(xt, -z[0], 1e-9));
        assert!(close(s.x_dot[0], -(z[1] - z[0] * z[0]), 1e-8));
        assert!(close(s.force[0], -xt, 1e-5), "{s:?}");
    }
}

#[test]
fn scrambled_time_dependent_straightens() {
    let (a, tr) = prepared(&timedep_scrambled());
    assert_eq!(a.report.classification, Classification::Case2 { parameters: 0 });
    assert!(tr.metadata().time_from_flow);
    let opts = StraightenOptions::default();
    let report = pushforward_residuals(&tr, &GridSpec::for_transform(&tr, &opts), &opts);
    assert!(report.passed, "{:?}", report.warnings);
    assert!(report.t_residual.as_ref().unwrap().max < 1e-6);
    assert!(report.jacobian_discrepancy.max <= opts.jacobian_agreement);
    // oracle: from rest at the origin x(t) = (sin t − t cos t)/2, so
    // Φ(t, x̃, ·) has x = x(t) − x̃ and the normal form is (1, ỹ, −x̃)
    for s in &report.samples {
        let (t, xt) = (s.parameters[0], s.parameters[1]);
        let z = &s.point;
        assert!(close(z[0], t, 1e-9));
        let x = z[1] - z[2] * z[2];
        assert!(close(x, 0.5 * (t.sin() - t * t.cos()) - xt, 1e-8), "{s:?}");
        assert!(close(s.force[0], -xt, 1e-5), "{s:?}");
    }
}

/// W-coefficients of `F` in the transform's frame at `z`.
fn w_coefficients(tr: &CoordinateTransform, f: &VectorField, z: &[f64]) -> Vec<f64> {
    let meta = tr.metadata();
    let n = meta.v_fields.len();
    let cols: Vec<Vec<f64>> = meta.v_fields.iter().chain(&meta.w_fields).map(|x| x.eval(z).unwrap()).collect();
    let a = DMatrix::from_fn(z.len(), 2 * n, |r, c| cols[c][r]);
    let coef = a.svd(true, true).solve(&DVector::from_vec(f.eval(z).unwrap()), 1e-14).unwrap();
    coef.iter().skip(n).copied().collect()
}

#[test]
fn w_coefficients_fall_linearly_along_fibres() {
    let c = chart(&["x", "y"], 1.0);
    let rescaled = problem(&c, &["y", "0"], &[&["0", "1 + y^2"]]);
    for p in [oscillator_scrambled(), rescaled] {
        let (_, tr) = prepared(&p);
        assert_eq!(tr.metadata().basis, BasisChoice::Adapted);
        for x in [-0.15, 0.0, 0.1] {
            let b0 = w_coefficients(&tr, &p.f, &tr.map(&[x, 0.0]).unwrap());
            for y in [-0.2, 0.05, 0.3] {
                let b = w_coefficients(&tr, &p.f, &tr.map(&[x, y]).unwrap());
                assert!(close(b[0], b0[0] - y, 1e-8), "{x} {y}: {b:?} {b0:?}");
            }
        }
    }
}

#[test]
fn inverse_undoes_the_map() {
    let (_, tr) = prepared(&timedep_scrambled());
    let c = [0.1, -0.05, 0.2];
    let z = tr.map(&c).unwrap();
    let back = tr.inverse(&z, &[0.0; 3]).unwrap();
    for (a, b) in c.iter().zip(&back) {
        assert!(close(*a, *b, 1e-9));
    }
}

#[test]
fn missing_cross_section_is_an_error() {
    // F ∈ W everywhere but b = −(y + 5) never vanishes in the box
    let c = chart(&["x", "y"], 1.0);
    let p = problem(&c, &["y + 5", "0"], &[&["0", "1"]]);
    let a = analyze(&p).unwrap();
    assert_eq!(a.report.classification, Classification::Case1 { parameters: 0 });
    let err = build_normal_coordinates(&a, &p.f, &StraightenOptions::default()).unwrap_err();
    assert!(matches!(err, StraightenError::MissingCrossSection));
    assert_eq!(err.to_string(), "cross-section not found in box");
}

#[test]
fn surrogate_reproduces_a_polynomial_normal_form() {
    let (a, tr) = prepared(&oscillator_scrambled());
    let opts = StraightenOptions::default();
    let report = pushforward_residuals(&tr, &GridSpec::for_transform(&tr, &opts), &opts);
    let sur = fit_surrogate(&tr, &report, &AnalysisOptions::with_seed(7)).unwrap();
    assert!(sur.fit_residual < 1e-6, "{}", sur.fit_residual);
    assert!(sur.agrees, "{:?} vs {:?}", sur.surrogate, a.report.classification);
    // force = −x1 up to fitting noise
    let g = &sur.force[0];
    for (x, y) in [(0.1, 0.2), (-0.3, 0.05)] {
        let v = g
            .evaluate(&sodefield_core::expr::Assignment::from_pairs(&["t1", "x1", "y1"][1..], &[x, y]))
            .unwrap();
        assert!(close(v, -x, 1e-6), "{v}");
    }
}

#[test]
fn execution_modes_agree() {
    let (_, tr) = prepared(&oscillator_scrambled());
    let mut opts = StraightenOptions::default();
    opts.grid = Some(4);
    opts.execution = sodefield_core::par::Execution::Sequential;
    let seq = pushforward_residuals(&tr, &GridSpec::for_transform(&tr, &opts), &opts);
    opts.execution = sodefield_core::par::Execution::Parallel;
    let par = pushforward_residuals(&tr, &GridSpec::for_transform(&tr, &opts), &opts);
    assert_eq!(serde_json::to_string(&seq).unwrap(), serde_json::to_string(&par).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flows_form_a_group(a in -1.0f64..1.0, b in -1.0f64..1.0, s in -0.4f64..0.4, t in -0.4f64..0.4) {
        let c = chart(&["x", "y"], 1.0);
        let field = VectorField::parse(&c, &[&format!("{a}*y + x*y/4"), &format!("-x + {b}*y^2/4")]).unwrap();
        let fl = FlowMap::new(&field, IntegratorSettings::default()).unwrap();
        let z0 = [0.2, -0.1];
        let two = fl.flow(&fl.flow(&z0, s).unwrap(), t).unwrap();
        let one = fl.flow(&z0, s + t).unwrap();
        prop_assert!(close(two[0], one[0], 1e-8) && close(two[1], one[1], 1e-8));
    }

    #[test]
    fn pushforward_of_normal_form_has_unit_fibre_map(k in -1.0f64..-0.1, g in -0.5f64..0.5) {
        // natural charts need no fibre correction: ∂ỹ/∂y = −1 everywhere
        let c = chart(&["x", "y"], 1.0);
        let p = problem(&c, &["y", &format!("{k}*x + {g}*x*y")], &[&["0", "1"]]);
        let (_, tr) = prepared(&p);
        let pf = tr.pushforward(&[0.1, -0.2]).unwrap();
        prop_assert!(close(pf.fibre_jacobian[(0, 0)], -1.0, 1e-9));
        prop_assert!(close(pf.fibre_sigma, 1.0, 1e-9));
    }
}
