//! Normal form: a polynomial numerator over a product of monic polynomial
//! factors. Exactly zero iff the numerator has no terms.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::node::{Expr, Func, Node, Rational};
use super::poly::{Atom, AtomKind, AtomRef, Mono, Poly};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct RatFunc {
    pub(crate) num: Poly,
    /// Monic, non-constant, pairwise distinct factors with multiplicities.
    pub(crate) den: Vec<(Poly, u32)>,
}

fn rational_pow(c: &Rational, k: u32) -> Rational {
    num_traits::pow(c.clone(), k as usize)
}

fn push_factor(den: &mut Vec<(Poly, u32)>, p: Poly, e: u32) {
    if e == 0 {
        return;
    }
    match den.binary_search_by(|(f, _)| f.cmp(&p)) {
        Ok(i) => den[i].1 += e,
        Err(i) => den.insert(i, (p, e)),
    }
}

/// Inserts `p^e` into a factored denominator and returns the constant `c`
/// such that `1/p^e = (1/c) * 1/(inserted factors)`.
fn insert_factor(den: &mut Vec<(Poly, u32)>, p: Poly, e: u32) -> Rational {
    if e == 0 {
        return Rational::one();
    }
    if let Some(c) = p.as_constant() {
        return rational_pow(&c, e);
    }
    if let Some((m, c)) = p.single_term() {
        for (atom, k) in &m.0 {
            push_factor(den, Poly::from_atom(atom.clone()), k * e);
        }
        return rational_pow(c, e);
    }
    let (lc, mut pm) = p.monic();
    let mult = rational_pow(&lc, e);
    let content = pm.mono_content();
    if !content.is_one() {
        for (atom, k) in &content.0 {
            push_factor(den, Poly::from_atom(atom.clone()), k * e);
        }
        pm = pm.div_mono(&content);
        if pm.as_constant().is_some() {
            return mult;
        }
    }
    let mut i = 0;
    while i < den.len() {
        if den[i].0 == pm {
            den[i].1 += e;
            return mult;
        }
        if den[i].0.len() > 1 {
            if let Some(q) = pm.exact_div(&den[i].0) {
                den[i].1 += e;
                if q.as_constant().is_some() {
                    return mult;
                }
                pm = q;
                continue;
            }
            if let Some(q) = den[i].0.exact_div(&pm) {
                let (_, k) = den.remove(i);
                push_factor(den, pm, k + e);
                insert_factor(den, q, k);
                return mult;
            }
        }
        i += 1;
    }
    push_factor(den, pm, e);
    mult
}

impl RatFunc {
    pub(crate) fn zero() -> RatFunc {
        RatFunc {
            num: Poly::zero(),
            den: Vec::new(),
        }
    }

    pub(crate) fn one() -> RatFunc {
        RatFunc::constant(Rational::one())
    }

    pub(crate) fn constant(c: Rational) -> RatFunc {
        RatFunc {
            num: Poly::constant(c),
            den: Vec::new(),
        }
    }

    pub(crate) fn from_poly(p: Poly) -> RatFunc {
        RatFunc {
            num: p,
            den: Vec::new(),
        }
    }

    pub(crate) fn from_atom(a: AtomRef) -> RatFunc {
        RatFunc::from_poly(Poly::from_atom(a))
    }

    pub(crate) fn undefined(expr: Expr) -> RatFunc {
        RatFunc::from_atom(Atom::undefined(expr))
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub(crate) fn as_constant(&self) -> Option<Rational> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else if self.num.is_zero() {
            Some(Rational::zero())
        } else {
            None
        }
    }

    /// Cancels denominator factors that divide the numerator.
    fn reduce(mut num: Poly, mut den: Vec<(Poly, u32)>) -> RatFunc {
        if num.is_zero() {
            return RatFunc::zero();
        }
        for (d, e) in den.iter_mut() {
            while *e > 0 {
                match num.exact_div(d) {
                    Some(q) => {
                        num = q;
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        den.retain(|(_, e)| *e > 0);
        RatFunc { num, den }
    }

    fn expand_factors(factors: &[(Poly, u32)]) -> Poly {
        factors
            .iter()
            .fold(Poly::one(), |acc, (f, e)| acc.mul(&f.pow(*e)))
    }

    pub(crate) fn add(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return RatFunc::reduce(self.num.add(&other.num), self.den.clone());
        }
        // least common denominator over the union of factors
        let mut lcd: Vec<(Poly, u32)> = self.den.clone();
        for (f, e) in &other.den {
            match lcd.binary_search_by(|(g, _)| g.cmp(f)) {
                Ok(i) => lcd[i].1 = lcd[i].1.max(*e),
                Err(i) => lcd.insert(i, (f.clone(), *e)),
            }
        }
        let cofactor = |den: &[(Poly, u32)]| -> Poly {
            let missing: Vec<(Poly, u32)> = lcd
                .iter()
                .filter_map(|(f, e)| {
                    let have = den
                        .iter()
                        .find(|(g, _)| g == f)
                        .map(|(_, k)| *k)
                        .unwrap_or(0);
                    (e > &have).then(|| (f.clone(), e - have))
                })
                .collect();
            RatFunc::expand_factors(&missing)
        };
        let a = self.num.mul(&cofactor(&self.den));
        let b = other.num.mul(&cofactor(&other.den));
        RatFunc::reduce(a.add(&b), lcd)
    }

    pub(crate) fn neg(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub(crate) fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub(crate) fn scale(&self, c: &Rational) -> RatFunc {
        if c.is_zero() {
            return RatFunc::zero();
        }
        RatFunc {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub(crate) fn mul(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() || other.is_zero() {
            return RatFunc::zero();
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut num = self.num.mul(&other.num);
        let mut den = self.den.clone();
        for (f, e) in &other.den {
            let c = insert_factor(&mut den, f.clone(), *e);
            if !c.is_one() {
                num = num.scale(&(Rational::one() / c));
            }
        }
        RatFunc::reduce(num, den)
    }

    pub(crate) fn recip(&self) -> RatFunc {
        if self.is_zero() {
            return RatFunc::undefined(Expr::quot(Expr::one(), Expr::zero()));
        }
        let mut num = RatFunc::expand_factors(&self.den);
        let mut den = Vec::new();
        let c = insert_factor(&mut den, self.num.clone(), 1);
        num = num.scale(&(Rational::one() / c));
        RatFunc::reduce(num, den)
    }

    pub(crate) fn div(&self, other: &RatFunc) -> RatFunc {
        self.mul(&other.recip())
    }

    pub(crate) fn pow_int(&self, k: i64) -> RatFunc {
        if k == 0 {
            return RatFunc::one();
        }
        if k < 0 {
            return self.recip().pow_int(-k);
        }
        let k = k as u32;
        RatFunc {
            num: self.num.pow(k),
            den: self.den.iter().map(|(f, e)| (f.clone(), e * k)).collect(),
        }
    }

    pub(crate) fn depends_on(&self, symbol: &str) -> bool {
        self.num.depends_on(symbol) || self.den.iter().any(|(f, _)| f.depends_on(symbol))
    }

    pub(crate) fn symbols(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.num.symbols(&mut out);
        for (f, _) in &self.den {
            f.symbols(&mut out);
        }
        out
    }

    // ---- conversion from trees ----

    pub(crate) fn from_node(node: &Node) -> RatFunc {
        match node {
            Node::Num(q) => RatFunc::constant(q.clone()),
            Node::Float(f) => match Rational::from_float(*f) {
                Some(q) => RatFunc::constant(q),
                None => RatFunc::undefined(Expr::float(*f)),
            },
            Node::Sym(s) => RatFunc::from_atom(Atom::sym(s)),
            Node::Sum(items) => items
                .iter()
                .fold(RatFunc::zero(), |acc, e| acc.add(e.rat())),
            Node::Prod(items) => {
                let mut acc = RatFunc::one();
                for e in items {
                    acc = acc.mul(e.rat());
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Node::Quot(a, b) => {
                let inv = recip_of(b);
                a.rat().mul(&inv)
            }
            Node::Pow(b, q) => pow_rational(b, q),
            Node::Call(f, a) => call(*f, a.rat()),
        }
    }

    // ---- conversion to trees ----

    pub(crate) fn to_node(&self) -> Node {
        let num = poly_to_node(&self.num);
        if self.den.is_empty() {
            return num;
        }
        let mut factors: Vec<Expr> = self
            .den
            .iter()
            .map(|(f, e)| {
                let base = Expr::from_node(poly_to_node(f));
                if *e == 1 {
                    base
                } else {
                    Expr::powi(base, *e as i64)
                }
            })
            .collect();
        let den = if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::prod(factors)
        };
        Node::Quot(Expr::from_node(num), den)
    }
}

fn atom_to_expr(atom: &Atom) -> Expr {
    match atom.kind() {
        AtomKind::Sym(s) => Expr::from_node(Node::Sym(s.clone())),
        AtomKind::Call(f, arg) => Expr::call(*f, Expr::from_rat_arc(arg.clone())),
        AtomKind::Root(base, frac) => Expr::pow(Expr::from_rat_arc(base.clone()), frac.clone()),
        AtomKind::Undefined(e) => e.clone(),
    }
}

fn term_to_node(mono: &Mono, c: &Rational) -> Node {
    if mono.is_one() {
        return Node::Num(c.clone());
    }
    let mut factors: Vec<Expr> = mono
        .0
        .iter()
        .map(|(a, e)| {
            let base = atom_to_expr(a);
            if *e == 1 {
                base
            } else {
                Expr::powi(base, *e as i64)
            }
        })
        .collect();
    if c.is_one() {
        if factors.len() == 1 {
            return factors.pop().unwrap().node().clone();
        }
        return Node::Prod(factors);
    }
    factors.insert(0, Expr::rational(c.clone()));
    Node::Prod(factors)
}

fn poly_to_node(p: &Poly) -> Node {
    match p.terms.len() {
        0 => Node::Num(Rational::zero()),
        1 => {
            let (m, c) = p.terms.iter().next().unwrap();
            term_to_node(m, c)
        }
        _ => Node::Sum(
            p.terms
                .iter()
                .map(|(m, c)| Expr::from_node(term_to_node(m, c)))
                .collect(),
        ),
    }
}

/// Reciprocal of a tree, keeping the factor structure of products and powers.
fn recip_of(e: &Expr) -> RatFunc {
    match e.node() {
        Node::Prod(items) => {
            let mut acc = RatFunc::one();
            for item in items {
                acc = acc.mul(&recip_of(item));
            }
            acc
        }
        Node::Pow(b, q) => pow_rational(b, &-q),
        Node::Quot(a, b) => b.rat().mul(&recip_of(a)),
        Node::Num(q) if q.is_zero() => RatFunc::undefined(Expr::quot(Expr::one(), e.clone())),
        Node::Num(q) => RatFunc::constant(Rational::one() / q),
        _ => {
            let r = e.rat();
            if r.is_zero() {
                RatFunc::undefined(Expr::quot(Expr::one(), e.clone()))
            } else {
                r.recip()
            }
        }
    }
}

fn exact_root(c: &Rational, r: u32) -> Option<Rational> {
    if c.is_negative() {
        if r % 2 == 0 {
            return None;
        }
        return exact_root(&-c, r).map(|x| -x);
    }
    let root_of = |n: &BigInt| -> Option<BigInt> {
        let k = n.nth_root(r);
        (num_traits::pow(k.clone(), r as usize) == *n).then_some(k)
    };
    Some(Rational::new(root_of(c.numer())?, root_of(c.denom())?))
}

fn pow_rational(base: &Expr, q: &Rational) -> RatFunc {
    if q.is_integer() {
        let k = q.to_integer().to_i64().unwrap_or(i64::MAX);
        if k < 0 {
            return recip_of(base).pow_int(-k);
        }
        return base.rat().pow_int(k);
    }
    let rb = base.rat();
    if rb.is_zero() {
        if q.is_positive() {
            return RatFunc::zero();
        }
        return RatFunc::undefined(Expr::pow(base.clone(), q.clone()));
    }
    let floor = q.floor();
    let frac = q - &floor;
    let k = floor.to_integer().to_i64().unwrap_or(0);
    if let Some(c) = rb.as_constant() {
        let denom = frac.denom().to_u32().unwrap_or(0);
        if denom > 0 {
            if let Some(root) = exact_root(&c, denom) {
                let p = frac.numer().to_u32().unwrap_or(0);
                let value = rational_pow(&root, p) * rational_pow_signed(&c, k);
                return RatFunc::constant(value);
            }
        }
    }
    let integral = if k >= 0 {
        rb.pow_int(k)
    } else {
        recip_of(base).pow_int(-k)
    };
    integral.mul(&RatFunc::from_atom(Atom::root(rb.clone(), frac)))
}

fn rational_pow_signed(c: &Rational, k: i64) -> Rational {
    if k >= 0 {
        rational_pow(c, k as u32)
    } else {
        Rational::one() / rational_pow(c, (-k) as u32)
    }
}

pub(crate) fn call(f: Func, arg: &Arc<RatFunc>) -> RatFunc {
    if let Some(c) = arg.as_constant() {
        if c.is_zero() {
            return match f {
                Func::Exp | Func::Cos => RatFunc::one(),
                Func::Sin => RatFunc::zero(),
                Func::Log => RatFunc::undefined(Expr::log(Expr::zero())),
            };
        }
        if f == Func::Log && c.is_one() {
            return RatFunc::zero();
        }
    }
    if f == Func::Log && arg.den.is_empty() {
        if let Some((m, c)) = arg.num.single_term() {
            if c.is_one() && m.0.len() == 1 && m.0[0].1 == 1 {
                if let AtomKind::Call(Func::Exp, inner) = m.0[0].0.kind() {
                    return (**inner).clone();
                }
            }
        }
    }
    // sin and cos have definite parity; canonicalize the argument sign
    if matches!(f, Func::Sin | Func::Cos) && arg.num.has_negative_lead() {
        let flipped = Arc::new(arg.neg());
        let atom = RatFunc::from_atom(Atom::call(f, flipped));
        return if f == Func::Sin { atom.neg() } else { atom };
    }
    RatFunc::from_atom(Atom::call(f, arg.clone()))
}

impl RatFunc {
    /// True when the normal form contains an ill-defined subterm.
    pub(crate) fn has_undefined(&self) -> bool {
        fn poly_has(p: &Poly) -> bool {
            p.terms.keys().any(|m| {
                m.0.iter().any(|(a, _)| match a.kind() {
                    AtomKind::Undefined(_) => true,
                    AtomKind::Call(_, arg) | AtomKind::Root(arg, _) => arg.has_undefined(),
                    AtomKind::Sym(_) => false,
                })
            })
        }
        poly_has(&self.num) || self.den.iter().any(|(f, _)| poly_has(f))
    }
}
