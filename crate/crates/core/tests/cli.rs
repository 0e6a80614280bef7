use nalgebra::{DMatrix, DVector};
use sodefield_core::cli::{corpus_get, corpus_list, run, CliError, Command, Manifest, EXIT_CONDITION_FAILED, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK};
use sodefield_core::expr::{parse, Expr};

fn inline(coords: &[&str], lo: f64, hi: f64, field: &[&str], frame: &[&[&str]]) -> Manifest {
    let q = |v: &[&str]| v.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>().join(", ");
    let bounds = |x: f64| vec![format!("{x:?}"); coords.len()].join(", ");
    let fields: Vec<String> = frame.iter().map(|f| format!("[{}]", q(f))).collect();
    let text = format!(
        "[metadata]\nname = \"inline\"\n\n[chart]\ncoordinates = [{}]\nlower = [{}]\nupper = [{}]\n\n\
         [field]\ncomponents = [{}]\n\n[frame]\nfields = [{}]\n",
        q(coords),
        bounds(lo),
        bounds(hi),
        q(field),
        fields.join(", ")
    );
    Manifest::from_toml(&text).unwrap()
}

#[test]
fn corpus_has_the_builtin_instances() {
    let names = corpus_list();
    for n in [
        "oscillator-scrambled",
        "timedep-scrambled",
        "quadratic-demo",
        "cubic-demo",
        "beta-rescaled",
        "routh-abelian",
    ] {
        assert!(names.contains(&n), "{n}");
        let m = corpus_get(n).unwrap();
        assert_eq!(m.metadata.name, n);
        assert_eq!(Manifest::from_toml(&m.to_toml()).unwrap(), m);
    }
    assert!(matches!(corpus_get("nonexistent"), Err(CliError::CorpusNotFound(_))));
}

#[test]
fn scrambled_oscillator_manifest_is_the_pushforward() {
    // u∂x − x∂u under z1 = x, z2 = u + x²: ż1 = u, ż2 = −x + 2xu
    let m = corpus_get("oscillator-scrambled").unwrap();
    let f = m.field.unwrap().components;
    let u = "(z2 - z1^2)";
    let expected = [u.to_string(), format!("-z1 + 2*z1*{u}")];
    for (got, want) in f.iter().zip(&expected) {
        assert!(parse(got).unwrap().same_normal_form(&parse(want).unwrap()));
    }
}

/// Accelerations of the unreduced system `L(q, q̇)` by finite-difference
/// Euler–Lagrange; nested central differences are exact on the polynomial
/// Lagrangians used here, up to rounding.
fn euler_lagrange(l: &dyn Fn(&[f64], &[f64]) -> f64, q: &[f64], qd: &[f64]) -> Vec<f64> {
    let n = q.len();
    let h = 1e-3;
    let grad = |f: &dyn Fn(&[f64], &[f64]) -> f64, q: &[f64], qd: &[f64], wrt_q: bool, i: usize| {
        let (mut a, mut b) = ((q.to_vec(), qd.to_vec()), (q.to_vec(), qd.to_vec()));
        if wrt_q {
            a.0[i] += h;
            b.0[i] -= h;
        } else {
            a.1[i] += h;
            b.1[i] -= h;
        }
        (f(&a.0, &a.1) - f(&b.0, &b.1)) / (2.0 * h)
    };
    let mass = DMatrix::from_fn(n, n, |i, j| {
        let mut p = qd.to_vec();
        let mut m = qd.to_vec();
        p[j] += h;
        m[j] -= h;
        (grad(l, q, &p, false, i) - grad(l, q, &m, false, i)) / (2.0 * h)
    });
    let rhs = DVector::from_fn(n, |i, _| {
        let mixed: f64 = (0..n)
            .map(|j| {
                let mut p = q.to_vec();
                let mut m = q.to_vec();
                p[j] += h;
                m[j] -= h;
                (grad(l, &p, qd, false, i) - grad(l, &m, qd, false, i)) / (2.0 * h) * qd[j]
            })
            .sum();
        grad(l, q, qd, true, i) - mixed
    });
    mass.lu().solve(&rhs).unwrap().iter().copied().collect()
}

#[test]
fn routh_reduction_matches_independent_oracles() {
    let m = corpus_get("routh-abelian").unwrap();
    let prepared = m.prepare().unwrap();
    let cmp = prepared.lagrangian.as_ref().unwrap();
    assert!(cmp.exact && cmp.passed);
    // R = L − μθ̇ with θ̇ = μ + x2 v1
    let routhian = parse("(v1^2 + v2^2)/2 - mu^2/2 - mu*x2*v1").unwrap();
    assert!(cmp.routhian.same_normal_form(&routhian), "{}", cmp.routhian);
    let f = &prepared.problem.f;
    assert!(f.component(4).is_structurally_zero());

    // unreduced L(x1, x2, θ; v1, v2, θ̇) = ½(v1² + v2²) + ½(θ̇ − x2 v1)²
    let lag = |q: &[f64], qd: &[f64]| 0.5 * (qd[0] * qd[0] + qd[1] * qd[1]) + 0.5 * (qd[2] - q[1] * qd[0]).powi(2);
    let chart = f.chart();
    let mut worst: f64 = 0.0;
    for z in chart.sample_points(100, 11) {
        let (x1, x2, v1, v2, mu) = (z[0], z[1], z[2], z[3], z[4]);
        let acc = euler_lagrange(&lag, &[x1, x2, 0.0], &[v1, v2, mu + x2 * v1]);
        let got = f.eval(&z).unwrap();
        // closed form dv/dt = μ K v, K12 = 1
        let closed = [v1, v2, mu * v2, -mu * v1, 0.0];
        for i in 0..5 {
            assert!((got[i] - closed[i]).abs() < 1e-8);
        }
        worst = worst.max((got[2] - acc[0]).abs()).max((got[3] - acc[1]).abs());
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn manifest_errors_are_input_errors() {
    let mut m = corpus_get("cubic-demo").unwrap();
    m.field.as_mut().unwrap().components[1] = "-x - y^^3".into();
    let err = m.prepare().unwrap_err();
    assert_eq!(err.exit_code(), EXIT_INPUT);
    let msg = err.to_string();
    assert!(msg.starts_with("field.components[1] at 1:"), "{msg}");

    let mut m = corpus_get("cubic-demo").unwrap();
    m.frame.fields[0].push("0".into());
    assert_eq!(m.prepare().unwrap_err().exit_code(), EXIT_INPUT);

    let mut m = corpus_get("cubic-demo").unwrap();
    m.field.as_mut().unwrap().components[0] = "q".into();
    assert!(m.prepare().unwrap_err().to_string().contains("unknown symbol q"));

    assert!(Manifest::from_toml("[metadata]\nname = 1").is_err());
}

#[test]
fn command_exit_codes() {
    let code = |c, m: &Manifest| run(c, m).unwrap().exit_code();
    let osc = corpus_get("oscillator-scrambled").unwrap();
    assert_eq!(code(Command::Check, &osc), EXIT_OK);
    assert_eq!(code(Command::Classify, &osc), EXIT_OK);
    assert_eq!(code(Command::Straighten, &osc), EXIT_OK);

    let degenerate = inline(&["x", "y"], -1.0, 1.0, &["x", "0"], &[&["0", "1"]]);
    let r = run(Command::Check, &degenerate).unwrap();
    assert_eq!(r.exit_code(), EXIT_CONDITION_FAILED);
    assert!(!r.gates.regularity.deficient.is_empty());

    let cubic = corpus_get("cubic-demo").unwrap();
    assert_eq!(code(Command::Quadratic, &cubic), EXIT_CONDITION_FAILED);
    assert_eq!(code(Command::Quadratic, &corpus_get("quadratic-demo").unwrap()), EXIT_OK);

    // N = {z2 = z1²} lies below this box
    let mut off = osc.clone();
    off.chart.lower = vec![-0.3, 0.5];
    off.chart.upper = vec![0.3, 1.0];
    let r = run(Command::Straighten, &off).unwrap();
    assert_eq!(r.exit_code(), EXIT_NUMERIC);
    assert!(r.outcome.messages.iter().any(|m| m.contains("cross-section not found")), "{:?}", r.outcome);
}

#[test]
fn reports_are_deterministic_and_self_describing() {
    let m = corpus_get("beta-rescaled").unwrap();
    let a = run(Command::Report, &m).unwrap();
    let b = run(Command::Report, &m).unwrap();
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    let v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(v["schema"], "sodefield-report/1");
    assert!(v["conventions"].as_str().unwrap().contains("W_i = [F, V_i]"));
    assert_eq!(v["analysis"]["classification"]["case"], "case1");
    assert!(v["timings"].is_object());
    let beta = &v["analysis"]["beta"]["beta"][0][0][0];
    assert!(parse(beta.as_str().unwrap()).unwrap().same_normal_form(&(&Expr::num(2) * &Expr::sym("y"))));
}
