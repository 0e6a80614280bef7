use std::collections::BTreeMap;

use num_bigint::BigInt;

use super::node::{Expr, Func, Rational};
use super::poly::{AtomKind, AtomRef, Mono, Poly};
use super::rational::{call, RatFunc};

/// Exact partial derivative with respect to `symbol`, normalized.
pub fn differentiate(e: &Expr, symbol: &str) -> Expr {
    Expr::from_rat(diff_rat(e.rat(), symbol))
}

fn int(k: u32) -> Rational {
    Rational::from_integer(BigInt::from(k))
}

fn diff_atom(atom: &AtomRef, symbol: &str) -> RatFunc {
    match atom.kind() {
        AtomKind::Sym(s) => {
            if &**s == symbol {
                RatFunc::one()
            } else {
                RatFunc::zero()
            }
        }
        AtomKind::Call(f, arg) => {
            let du = diff_rat(arg, symbol);
            if du.is_zero() {
                return RatFunc::zero();
            }
            let outer = match f {
                Func::Exp => RatFunc::from_atom(atom.clone()),
                Func::Log => arg.recip(),
                Func::Sin => call(Func::Cos, arg),
                Func::Cos => call(Func::Sin, arg).neg(),
            };
            outer.mul(&du)
        }
        AtomKind::Root(base, frac) => {
            // d(b^f) = f * b^f * b' / b
            let db = diff_rat(base, symbol);
            if db.is_zero() {
                return RatFunc::zero();
            }
            RatFunc::from_atom(atom.clone())
                .mul(&db)
                .div(base)
                .scale(frac)
        }
        AtomKind::Undefined(_) => RatFunc::from_atom(atom.clone()),
    }
}

/// Derivative of a polynomial in atoms: symbol atoms are handled inside the
/// polynomial ring, every other atom through its chain-rule factor.
fn diff_poly(p: &Poly, symbol: &str) -> RatFunc {
    let mut direct = Poly::zero();
    let mut by_atom: BTreeMap<AtomRef, Poly> = BTreeMap::new();
    for (mono, c) in &p.terms {
        for (idx, (atom, k)) in mono.0.iter().enumerate() {
            if !atom.depends_on(symbol) {
                continue;
            }
            let mut rest: Vec<(AtomRef, u32)> = mono.0.clone();
            if *k == 1 {
                rest.remove(idx);
            } else {
                rest[idx].1 = k - 1;
            }
            let coeff = c * int(*k);
            match atom.kind() {
                AtomKind::Sym(_) => direct.add_term(Mono(rest), coeff),
                _ => by_atom
                    .entry(atom.clone())
                    .or_default()
                    .add_term(Mono(rest), coeff),
            }
        }
    }
    let mut out = RatFunc::from_poly(direct);
    for (atom, q) in by_atom {
        if q.is_zero() {
            continue;
        }
        out = out.add(&RatFunc::from_poly(q).mul(&diff_atom(&atom, symbol)));
    }
    out
}

pub(crate) fn diff_rat(r: &RatFunc, symbol: &str) -> RatFunc {
    if !r.depends_on(symbol) {
        return RatFunc::zero();
    }
    let dn = diff_poly(&r.num, symbol);
    if r.den.is_empty() {
        return dn;
    }
    // (N/D)' = (N' - N * sum e_i d_i'/d_i) / D
    let mut log_deriv = RatFunc::zero();
    for (d, e) in &r.den {
        if !d.depends_on(symbol) {
            continue;
        }
        let dd = diff_poly(d, symbol);
        let factor = RatFunc::from_poly(d.clone());
        log_deriv = log_deriv.add(&dd.div(&factor).scale(&int(*e)));
    }
    let numer = dn.sub(&RatFunc::from_poly(r.num.clone()).mul(&log_deriv));
    let inv_den = RatFunc {
        num: Poly::one(),
        den: r.den.clone(),
    };
    numer.mul(&inv_den)
}

