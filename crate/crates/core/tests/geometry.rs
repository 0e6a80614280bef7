use std::sync::Arc;

use proptest::prelude::*;
use sodefield_core::expr::{differentiate, parse, Expr, ZeroTest};
use sodefield_core::geometry::{
    decompose_in_frame, frame_rank, is_involutive, lie_bracket, rank_of_fields, Chart, Frame, GeometryError,
    InvolutivityVerdict, VectorField,
};
use sodefield_core::par::Execution;

fn chart(names: &[&str]) -> Arc<Chart> {
    let n = names.len();
    Arc::new(Chart::new(names, &vec![-1.0; n], &vec![1.0; n], 11).unwrap())
}

fn vf(c: &Arc<Chart>, comps: &[&str]) -> VectorField {
    VectorField::parse(c, comps).unwrap()
}

fn zt() -> ZeroTest {
    ZeroTest::default()
}

const FORCE: &str = "x*y^2 - sin(x) + y";

#[test]
fn bracket_examples() {
    let c = chart(&["x", "y"]);
    let b = lie_bracket(&vf(&c, &["0", "1"]), &vf(&c, &["y", "0"])).unwrap();
    assert_eq!(b, vf(&c, &["1", "0"]));

    let f = parse(FORCE).unwrap();
    let fy = differentiate(&f, "y");
    let sode = VectorField::new(&c, vec![Expr::sym("y"), f.clone()]).unwrap();
    let b = lie_bracket(&sode, &vf(&c, &["0", "1"])).unwrap();
    // oracle: -d/dx - f_y d/dy
    let expected = VectorField::new(&c, vec![Expr::num(-1), -&fy]).unwrap();
    assert_eq!(b, expected);

    assert!(lie_bracket(&sode, &sode).unwrap().is_structurally_zero());
}

#[test]
fn bracket_rejects_chart_mismatch() {
    let a = chart(&["x", "y"]);
    let b = chart(&["u", "v"]);
    assert_eq!(
        lie_bracket(&vf(&a, &["1", "0"]), &vf(&b, &["1", "0"])).unwrap_err(),
        GeometryError::ChartMismatch
    );
}

#[test]
fn rank_examples() {
    let c = chart(&["x", "y"]);
    let fy = differentiate(&parse(FORCE).unwrap(), "y");
    let fr = Frame::new(
        &c,
        vec![
            vf(&c, &["0", "1"]),
            VectorField::new(&c, vec![Expr::num(-1), -&fy]).unwrap(),
        ],
    )
    .unwrap();
    let r = frame_rank(&fr, 64, 1, Execution::Sequential).unwrap();
    assert_eq!(r.claimed_rank, 2);
    assert!(r.is_constant(2));

    let fields = vec![vf(&c, &["1", "0"]), vf(&c, &["x", "0"])];
    let r = rank_of_fields(&c, &fields, 64, 1, Execution::Sequential).unwrap();
    assert_eq!(r.claimed_rank, 1);
    assert!(r.deficient.len() <= 1);
    assert!(Frame::new(&c, fields).is_err());
}

#[test]
fn scrambled_oscillator_w_frame_has_rank_two() {
    let c = chart(&["z1", "z2"]);
    let f = vf(&c, &["z2 - z1^2", "-z1 + 2*z1*(z2 - z1^2)"]);
    let v = vf(&c, &["0", "1"]);
    let w = lie_bracket(&f, &v).unwrap();
    // oracle: push -d/dx forward through z1 = x, z2 = u + x^2
    assert_eq!(w, vf(&c, &["-1", "-2*z1"]));
    let r = rank_of_fields(&c, &[v, w], 200, 3, Execution::Parallel).unwrap();
    assert_eq!(r.ranks.len(), 200);
    assert!(r.is_constant(2));
}

#[test]
fn decomposition_examples() {
    let c = chart(&["x", "y"]);
    let dx = vf(&c, &["1", "0"]);
    let dy = vf(&c, &["0", "1"]);
    let fr = Frame::new(&c, vec![dx.clone(), dy.clone()]).unwrap();
    let coeffs = decompose_in_frame(&dx, &fr, &zt()).unwrap();
    assert!(coeffs[0].same_normal_form(&Expr::one()));
    assert!(coeffs[1].is_structurally_zero());

    let fy = differentiate(&parse(FORCE).unwrap(), "y");
    let w = VectorField::new(&c, vec![Expr::num(-1), -&fy]).unwrap();
    let fr = Frame::new(&c, vec![dy.clone(), w.clone()]).unwrap();
    let coeffs = decompose_in_frame(&w, &fr, &zt()).unwrap();
    assert!(coeffs[0].is_structurally_zero());
    assert!(coeffs[1].same_normal_form(&Expr::one()));

    let fr = Frame::new(&c, vec![dx]).unwrap();
    match decompose_in_frame(&dy, &fr, &zt()) {
        Err(GeometryError::NotInSpan { component, witness, .. }) => {
            assert_eq!(component, 1);
            assert_eq!(witness.len(), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn decomposition_with_function_coefficients() {
    let c = chart(&["x", "y", "z"]);
    let a = vf(&c, &["1", "x", "0"]);
    let b = vf(&c, &["0", "1 + x^2", "y"]);
    let fr = Frame::new(&c, vec![a.clone(), b.clone()]).unwrap();
    let target = VectorField::combination(&c, &[parse("exp(y)").unwrap(), parse("x*z").unwrap()], &[a, b]);
    let coeffs = decompose_in_frame(&target, &fr, &zt()).unwrap();
    assert!(coeffs[0].same_normal_form(&parse("exp(y)").unwrap()));
    assert!(coeffs[1].same_normal_form(&parse("x*z").unwrap()));
}

#[test]
fn involutivity_examples() {
    let c = chart(&["x1", "x2", "y1", "y2"]);
    let fr = Frame::new(&c, vec![vf(&c, &["0", "0", "1", "0"]), vf(&c, &["0", "0", "0", "1"])]).unwrap();
    assert_eq!(is_involutive(&fr, &zt()).unwrap(), InvolutivityVerdict::Involutive);

    let c = chart(&["x", "y", "z"]);
    let fr = Frame::new(&c, vec![vf(&c, &["1", "0", "0"]), vf(&c, &["0", "1", "x"])]).unwrap();
    match is_involutive(&fr, &zt()).unwrap() {
        InvolutivityVerdict::NotInvolutive { i, j, component, .. } => {
            assert_eq!((i, j, component), (0, 1, 2));
        }
        other => panic!("{other:?}"),
    }

    // the W-frame of the scrambled oscillator spans everything
    let c = chart(&["z1", "z2"]);
    let fr = Frame::new(&c, vec![vf(&c, &["0", "1"]), vf(&c, &["-1", "-2*z1"])]).unwrap();
    assert!(is_involutive(&fr, &zt()).unwrap().holds());
}

// ---- properties ----

const NAMES: [&str; 3] = ["x", "y", "z"];

fn poly() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(|i| Expr::sym(NAMES[i])),
        (-2i64..3).prop_map(Expr::num),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner, 2..3).prop_map(Expr::prod),
        ]
    })
}

fn field() -> impl Strategy<Value = Vec<Expr>> {
    prop::collection::vec(poly(), 3)
}

fn mk(c: &Arc<Chart>, comps: Vec<Expr>) -> VectorField {
    VectorField::new(c, comps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn jacobi_identity(a in field(), b in field(), d in field()) {
        let c = chart(&NAMES);
        let (x, y, z) = (mk(&c, a), mk(&c, b), mk(&c, d));
        let t1 = lie_bracket(&lie_bracket(&x, &y).unwrap(), &z).unwrap();
        let t2 = lie_bracket(&lie_bracket(&y, &z).unwrap(), &x).unwrap();
        let t3 = lie_bracket(&lie_bracket(&z, &x).unwrap(), &y).unwrap();
        let sum = t1.add(&t2).unwrap().add(&t3).unwrap();
        prop_assert!(sum.is_structurally_zero());
    }

    #[test]
    fn leibniz_rule(a in field(), b in field(), f in poly()) {
        let c = chart(&NAMES);
        let (x, y) = (mk(&c, a), mk(&c, b));
        let lhs = lie_bracket(&x, &y.scale(&f)).unwrap();
        let rhs = y.scale(&x.apply(&f)).add(&lie_bracket(&x, &y).unwrap().scale(&f)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn decomposition_recombines(c1 in poly(), c2 in poly()) {
        let c = chart(&NAMES);
        let a = vf(&c, &["1", "y", "0"]);
        let b = vf(&c, &["x", "1", "x*y"]);
        let fr = Frame::new(&c, vec![a.clone(), b.clone()]).unwrap();
        let target = VectorField::combination(&c, &[c1, c2], &[a.clone(), b.clone()]);
        let coeffs = decompose_in_frame(&target, &fr, &ZeroTest::default()).unwrap();
        let back = VectorField::combination(&c, &coeffs, &[a, b]);
        prop_assert!(back.sub(&target).unwrap().normalize().is_structurally_zero());
    }

    #[test]
    fn rank_is_invariant_under_constant_mixing(m in prop::array::uniform4(-3i64..4)) {
        prop_assume!(m[0] * m[3] - m[1] * m[2] != 0);
        let c = chart(&NAMES);
        let a = vf(&c, &["1", "y", "0"]);
        let b = vf(&c, &["x", "1", "x*y + z"]);
        let mixed = vec![
            VectorField::combination(&c, &[Expr::num(m[0]), Expr::num(m[1])], &[a.clone(), b.clone()]),
            VectorField::combination(&c, &[Expr::num(m[2]), Expr::num(m[3])], &[a.clone(), b.clone()]),
        ];
        let r1 = rank_of_fields(&c, &[a, b], 32, 5, Execution::Sequential).unwrap();
        let r2 = rank_of_fields(&c, &mixed, 32, 5, Execution::Sequential).unwrap();
        prop_assert_eq!(r1.ranks, r2.ranks);
    }
}
