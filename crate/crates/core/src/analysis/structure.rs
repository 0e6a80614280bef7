use serde::Serialize;

use super::{check_field_zero, check_zero, AnalysisError, Check, CheckStatus, ExtendedFrame};
use crate::expr::Expr;
use crate::geometry::{lie_bracket, VectorField};
use crate::par::map_slice;

/// The tensor `S`, the projectors, horizontal lifts, and the connection
/// `∇`, all defined through decompositions in the combined frame.
#[derive(Debug, Clone)]
pub struct Structure {
    ef: ExtendedFrame,
    lifts: Vec<VectorField>,
}

/// `θ(V_i, V_j) V_k = Σ_l coefficients[l] V_l`.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaComponent {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub coefficients: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum QuadraticVerdict {
    Quadratic { exact: bool },
    NotQuadratic {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        witness: Vec<f64>,
        value: f64,
    },
    Inconclusive { diagnostic: String },
}

impl QuadraticVerdict {
    pub fn is_quadratic(&self) -> bool {
        matches!(self, QuadraticVerdict::Quadratic { .. })
    }
}

impl Structure {
    /// Requires `[F, W] ⊂ W`; fails with the offending decomposition otherwise.
    pub fn new(ef: ExtendedFrame) -> Result<Structure, AnalysisError> {
        let mut s = Structure { ef, lifts: Vec::new() };
        let lifts = (0..s.ef.n())
            .map(|i| Ok(s.p_h(&s.ef.w[i])?.neg()))
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        s.lifts = lifts;
        Ok(s)
    }

    pub fn frame(&self) -> &ExtendedFrame {
        &self.ef
    }

    /// `h(V_i)` for the basis fields.
    pub fn lifts(&self) -> &[VectorField] {
        &self.lifts
    }

    fn combine(&self, coeffs: &[Expr], fields: &[VectorField]) -> VectorField {
        VectorField::combination(&self.ef.chart, coeffs, fields)
    }

    /// `S(a^i V_i + b^i W_i) = −b^i V_i`.
    pub fn s(&self, x: &VectorField) -> Result<VectorField, AnalysisError> {
        let (_, b) = self.ef.split(x)?;
        let neg: Vec<Expr> = b.iter().map(|c| -c).collect();
        Ok(self.combine(&neg, &self.ef.v))
    }

    /// `L(X) = [F, S X] − S[F, X]`.
    pub fn l(&self, x: &VectorField) -> Result<VectorField, AnalysisError> {
        let f = &self.ef.f;
        let first = lie_bracket(f, &self.s(x)?)?;
        let second = self.s(&lie_bracket(f, x)?)?;
        Ok(first.sub(&second)?)
    }

    pub fn p_h(&self, x: &VectorField) -> Result<VectorField, AnalysisError> {
        let lx = self.l(x)?;
        Ok(x.sub(&lx)?.scale(&Expr::ratio(1, 2)))
    }

    pub fn p_v(&self, x: &VectorField) -> Result<VectorField, AnalysisError> {
        let lx = self.l(x)?;
        Ok(x.add(&lx)?.scale(&Expr::ratio(1, 2)))
    }

    /// Horizontal lift of a vertical field: `a^i V_i ↦ a^i h(V_i)`.
    pub fn lift(&self, y: &VectorField) -> Result<VectorField, AnalysisError> {
        let (a, b) = self.ef.split(y)?;
        self.ensure_vertical(&b, "lift argument")?;
        Ok(self.combine(&a, &self.lifts))
    }

    fn ensure_vertical(&self, b: &[Expr], what: &str) -> Result<(), AnalysisError> {
        let c = check_zero(what, &self.ef.chart, b, self.ef.zero());
        match c.status {
            CheckStatus::NonZero { witness, value, .. } => Err(AnalysisError::Inconsistent(format!(
                "{what} is not vertical: W-coefficient {value} at {witness:?}"
            ))),
            _ => Ok(()),
        }
    }

    /// `∇_X Y = P_V([P_H X, Y]) + S([P_V X, h(Y)])` for vertical `Y`.
    pub fn nabla(&self, x: &VectorField, y: &VectorField) -> Result<VectorField, AnalysisError> {
        let horizontal = self.p_v(&lie_bracket(&self.p_h(x)?, y)?)?;
        let vertical = self.s(&lie_bracket(&self.p_v(x)?, &self.lift(y)?)?)?;
        Ok(horizontal.add(&vertical)?)
    }

    /// `N_S(A, B) = [SA, SB] − S[SA, B] − S[A, SB]`.
    pub fn nijenhuis(&self, a: &VectorField, b: &VectorField) -> Result<VectorField, AnalysisError> {
        let (sa, sb) = (self.s(a)?, self.s(b)?);
        let t1 = lie_bracket(&sa, &sb)?;
        let t2 = self.s(&lie_bracket(&sa, b)?)?;
        let t3 = self.s(&lie_bracket(a, &sb)?)?;
        Ok(t1.sub(&t2)?.sub(&t3)?)
    }

    /// V-coefficients of a vertical field.
    pub fn vertical_coefficients(&self, y: &VectorField) -> Result<Vec<Expr>, AnalysisError> {
        let (a, b) = self.ef.split(y)?;
        self.ensure_vertical(&b, "vertical field")?;
        Ok(a)
    }

    /// `θ(V_i, V_j) V_k = ∇_{h_i} ∇_{V_j} V_k − ∇_{V_j} ∇_{h_i} V_k − ∇_{[h_i, V_j]} V_k`.
    pub fn theta_component(&self, i: usize, j: usize, k: usize) -> Result<ThetaComponent, AnalysisError> {
        let (h, v) = (&self.lifts, &self.ef.v);
        let t1 = self.nabla(&h[i], &self.nabla(&v[j], &v[k])?)?;
        let t2 = self.nabla(&v[j], &self.nabla(&h[i], &v[k])?)?;
        let t3 = self.nabla(&lie_bracket(&h[i], &v[j])?, &v[k])?;
        let theta = t1.sub(&t2)?.sub(&t3)?;
        Ok(ThetaComponent {
            i,
            j,
            k,
            coefficients: self.vertical_coefficients(&theta)?,
        })
    }

    pub fn theta(&self) -> Result<Vec<ThetaComponent>, AnalysisError> {
        let n = self.ef.n();
        let triples: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))))
            .collect();
        map_slice(self.ef.options.execution, &triples, |&(i, j, k)| {
            self.theta_component(i, j, k)
        })
        .into_iter()
        .collect()
    }

    /// Quadratic iff every θ coefficient vanishes.
    pub fn quadratic_verdict(&self, theta: &[ThetaComponent]) -> QuadraticVerdict {
        let mut exact = true;
        for t in theta {
            for (l, c) in t.coefficients.iter().enumerate() {
                if c.is_structurally_zero() {
                    continue;
                }
                let check = check_zero("theta", &self.ef.chart, std::slice::from_ref(c), self.ef.zero());
                match check.status {
                    CheckStatus::Zero => {}
                    CheckStatus::NumericZero { .. } => exact = false,
                    CheckStatus::NonZero { witness, value, .. } => {
                        return QuadraticVerdict::NotQuadratic {
                            i: t.i,
                            j: t.j,
                            k: t.k,
                            l,
                            witness,
                            value,
                        }
                    }
                    CheckStatus::Unknown { diagnostic } | CheckStatus::Failed { diagnostic } => {
                        return QuadraticVerdict::Inconclusive { diagnostic }
                    }
                }
            }
        }
        QuadraticVerdict::Quadratic { exact }
    }

    /// Every identity the structure must satisfy, evaluated on the combined frame.
    pub fn identity_checks(&self) -> Vec<Check> {
        let n = self.ef.n();
        let mut jobs = Vec::new();
        for a in 0..2 * n {
            jobs.extend([Job::LSquared(a), Job::ProjectorSum(a), Job::HIdempotent(a), Job::VIdempotent(a)]);
        }
        for i in 0..n {
            jobs.extend([Job::SKillsV(i), Job::SOfW(i), Job::PvFixesV(i), Job::PhKillsV(i), Job::SOfLift(i), Job::LiftHorizontal(i)]);
        }
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                jobs.push(Job::Nijenhuis(a, b));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                jobs.push(Job::Torsion(i, j));
                jobs.extend((0..n).map(|k| Job::Flatness(i, j, k)));
            }
        }
        map_slice(self.ef.options.execution, &jobs, |job| {
            let name = job.name(&self.ef);
            match self.run(*job) {
                Ok(x) => check_field_zero(name, &x, self.ef.zero()),
                Err(e) => Check::failed(name, e),
            }
        })
    }

    /// The field that must vanish for `job`.
    fn run(&self, job: Job) -> Result<VectorField, AnalysisError> {
        let (v, w, h, el) = (&self.ef.v, &self.ef.w, &self.lifts, self.ef.elements());
        Ok(match job {
            Job::LSquared(a) => self.l(&self.l(&el[a])?)?.sub(&el[a])?,
            Job::ProjectorSum(a) => self.p_h(&el[a])?.add(&self.p_v(&el[a])?)?.sub(&el[a])?,
            Job::HIdempotent(a) => {
                let once = self.p_h(&el[a])?;
                self.p_h(&once)?.sub(&once)?
            }
            Job::VIdempotent(a) => {
                let once = self.p_v(&el[a])?;
                self.p_v(&once)?.sub(&once)?
            }
            Job::SKillsV(i) => self.s(&v[i])?,
            Job::SOfW(i) => self.s(&w[i])?.add(&v[i])?,
            Job::PvFixesV(i) => self.p_v(&v[i])?.sub(&v[i])?,
            Job::PhKillsV(i) => self.p_h(&v[i])?,
            Job::SOfLift(i) => self.s(&h[i])?.sub(&v[i])?,
            Job::LiftHorizontal(i) => self.p_v(&h[i])?,
            Job::Nijenhuis(a, b) => self.nijenhuis(&el[a], &el[b])?,
            Job::Torsion(i, j) => {
                let a = self.nabla(&h[i], &v[j])?;
                let b = self.nabla(&h[j], &v[i])?;
                let c = self.s(&lie_bracket(&h[i], &h[j])?)?;
                a.sub(&b)?.sub(&c)?
            }
            Job::Flatness(i, j, k) => {
                let a = self.nabla(&v[i], &self.nabla(&v[j], &v[k])?)?;
                let b = self.nabla(&v[j], &self.nabla(&v[i], &v[k])?)?;
                let c = self.nabla(&lie_bracket(&v[i], &v[j])?, &v[k])?;
                a.sub(&b)?.sub(&c)?
            }
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Job {
    LSquared(usize),
    ProjectorSum(usize),
    HIdempotent(usize),
    VIdempotent(usize),
    SKillsV(usize),
    SOfW(usize),
    PvFixesV(usize),
    PhKillsV(usize),
    SOfLift(usize),
    LiftHorizontal(usize),
    Nijenhuis(usize, usize),
    Torsion(usize, usize),
    Flatness(usize, usize, usize),
}

impl Job {
    fn name(&self, ef: &ExtendedFrame) -> String {
        let e = |a: usize| ef.element_name(a);
        match *self {
            Job::LSquared(a) => format!("l_squared_identity[{}]", e(a)),
            Job::ProjectorSum(a) => format!("projector_sum[{}]", e(a)),
            Job::HIdempotent(a) => format!("p_h_idempotent[{}]", e(a)),
            Job::VIdempotent(a) => format!("p_v_idempotent[{}]", e(a)),
            Job::SKillsV(i) => format!("s_kills_v[V{}]", i + 1),
            Job::SOfW(i) => format!("s_of_w[W{}]", i + 1),
            Job::PvFixesV(i) => format!("p_v_fixes_v[V{}]", i + 1),
            Job::PhKillsV(i) => format!("p_h_kills_v[V{}]", i + 1),
            Job::SOfLift(i) => format!("s_of_lift[h{}]", i + 1),
            Job::LiftHorizontal(i) => format!("lift_is_horizontal[h{}]", i + 1),
            Job::Nijenhuis(a, b) => format!("nijenhuis[{},{}]", e(a), e(b)),
            Job::Torsion(i, j) => format!("torsion[{},{}]", i + 1, j + 1),
            Job::Flatness(i, j, k) => format!("vertical_flatness[{},{},{}]", i + 1, j + 1, k + 1),
        }
    }
}
