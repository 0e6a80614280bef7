//! Sparse multivariate polynomials over exact rationals, in "atoms"
//! (symbols and non-polynomial subterms such as `exp(u)` or `u^(1/2)`).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::node::{Expr, Func, Rational};
use super::rational::RatFunc;

#[derive(Clone, Debug)]
pub(crate) enum AtomKind {
    Sym(Arc<str>),
    Call(Func, Arc<RatFunc>),
    /// `base^frac` with `0 < frac < 1`.
    Root(Arc<RatFunc>, Rational),
    /// Ill-defined subterm (for example a division by an identically zero
    /// denominator); kept so that evaluation can report it.
    Undefined(Expr),
}

/// A polynomial indeterminate. Atoms are ordered by their canonical key,
/// which is the printed form of the atom.
#[derive(Debug)]
pub(crate) struct Atom {
    key: String,
    kind: AtomKind,
    symbols: BTreeSet<Arc<str>>,
}

pub(crate) type AtomRef = Arc<Atom>;

impl Atom {
    pub(crate) fn sym(name: &str) -> AtomRef {
        let name: Arc<str> = Arc::from(name);
        let mut symbols = BTreeSet::new();
        symbols.insert(name.clone());
        Arc::new(Atom {
            key: name.to_string(),
            kind: AtomKind::Sym(name),
            symbols,
        })
    }

    pub(crate) fn call(func: Func, arg: Arc<RatFunc>) -> AtomRef {
        let key = format!("{}({})", func.name(), Expr::from_rat_arc(arg.clone()));
        let symbols = arg.symbols();
        Arc::new(Atom {
            key,
            kind: AtomKind::Call(func, arg),
            symbols,
        })
    }

    pub(crate) fn root(base: Arc<RatFunc>, frac: Rational) -> AtomRef {
        let key = format!("({})^({})", Expr::from_rat_arc(base.clone()), frac);
        let symbols = base.symbols();
        Arc::new(Atom {
            key,
            kind: AtomKind::Root(base, frac),
            symbols,
        })
    }

    pub(crate) fn undefined(expr: Expr) -> AtomRef {
        let key = format!("({})", expr);
        let symbols = expr.symbols().iter().map(|s| Arc::from(s.as_str())).collect();
        Arc::new(Atom {
            key,
            kind: AtomKind::Undefined(expr),
            symbols,
        })
    }

    pub(crate) fn kind(&self) -> &AtomKind {
        &self.kind
    }

    pub(crate) fn key(&self) -> &str {
        &self.key
    }

    pub(crate) fn symbols(&self) -> &BTreeSet<Arc<str>> {
        &self.symbols
    }

    pub(crate) fn depends_on(&self, symbol: &str) -> bool {
        self.symbols.contains(symbol)
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Atom {}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

/// Product of atoms with positive exponents, sorted by atom.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Mono(pub(crate) Vec<(AtomRef, u32)>);

impl Mono {
    pub(crate) fn one() -> Mono {
        Mono(Vec::new())
    }

    pub(crate) fn atom(atom: AtomRef, exp: u32) -> Mono {
        Mono(vec![(atom, exp)])
    }

    pub(crate) fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// `self / other` if `other` divides `self`.
    pub(crate) fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut i = 0;
        for (atom, e) in &other.0 {
            loop {
                if i >= self.0.len() {
                    return None;
                }
                match self.0[i].0.cmp(atom) {
                    Ordering::Less => {
                        out.push(self.0[i].clone());
                        i += 1;
                    }
                    Ordering::Equal => {
                        let have = self.0[i].1;
                        if have < *e {
                            return None;
                        }
                        if have > *e {
                            out.push((atom.clone(), have - e));
                        }
                        i += 1;
                        break;
                    }
                    Ordering::Greater => return None,
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        Some(Mono(out))
    }

    pub(crate) fn gcd(&self, other: &Mono) -> Mono {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1.min(other.0[j].1)));
                    i += 1;
                    j += 1;
                }
            }
        }
        Mono(out)
    }

    pub(crate) fn pow(&self, k: u32) -> Mono {
        Mono(self.0.iter().map(|(a, e)| (a.clone(), e * k)).collect())
    }

    /// Lexicographic monomial order with the smallest atom most significant.
    pub(crate) fn lex_cmp(&self, other: &Mono) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, ea)), Some((b, eb))) => match a.cmp(b) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }

    pub(crate) fn depends_on(&self, symbol: &str) -> bool {
        self.0.iter().any(|(a, _)| a.depends_on(symbol))
    }
}

/// Sparse polynomial with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Mono, Rational>,
}

impl Poly {
    pub(crate) fn zero() -> Poly {
        Poly::default()
    }

    pub(crate) fn constant(c: Rational) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Mono::one(), c);
        p
    }

    pub(crate) fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub(crate) fn from_atom(atom: AtomRef) -> Poly {
        Poly::from_term(Mono::atom(atom, 1), Rational::one())
    }

    pub(crate) fn from_term(mono: Mono, coeff: Rational) -> Poly {
        let mut p = Poly::zero();
        p.add_term(mono, coeff);
        p
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn len(&self) -> usize {
        self.terms.len()
    }

    pub(crate) fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub(crate) fn single_term(&self) -> Option<(&Mono, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub(crate) fn add_term(&mut self, mono: Mono, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + &coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub(crate) fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub(crate) fn mul_term(&self, mono: &Mono, coeff: &Rational) -> Poly {
        if coeff.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.mul(mono), c * coeff))
                .collect(),
        }
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub(crate) fn pow(&self, k: u32) -> Poly {
        if k == 0 {
            return Poly::one();
        }
        if let Some((m, c)) = self.single_term() {
            return Poly::from_term(m.pow(k), num_traits::pow(c.clone(), k as usize));
        }
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Leading term under [`Mono::lex_cmp`].
    pub(crate) fn leading_term(&self) -> Option<(&Mono, &Rational)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub(crate) fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&(Rational::one() / c)));
        }
        let (dm, dc) = d.leading_term()?;
        let (dm, dc) = (dm.clone(), dc.clone());
        let mut rem = self.clone();
        let mut quotient = Poly::zero();
        // each step removes the current leading term, so this terminates
        while !rem.is_zero() {
            let (rm, rc) = rem.leading_term()?;
            let tm = rm.div(&dm)?;
            let tc = rc / &dc;
            rem = rem.sub(&d.mul_term(&tm, &tc));
            quotient.add_term(tm, tc);
        }
        Some(quotient)
    }

    /// Splits off the lex-leading coefficient: `self = lc * monic`.
    pub(crate) fn monic(&self) -> (Rational, Poly) {
        match self.leading_term() {
            None => (Rational::one(), Poly::zero()),
            Some((_, lc)) => {
                let lc = lc.clone();
                let inv = Rational::one() / &lc;
                (lc, self.scale(&inv))
            }
        }
    }

    /// Greatest common monomial divisor of all terms.
    pub(crate) fn mono_content(&self) -> Mono {
        let mut iter = self.terms.keys();
        let Some(first) = iter.next() else {
            return Mono::one();
        };
        let mut g = first.clone();
        for m in iter {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    pub(crate) fn div_mono(&self, m: &Mono) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.div(m).expect("monomial content divides"), c.clone()))
                .collect(),
        }
    }

    pub(crate) fn depends_on(&self, symbol: &str) -> bool {
        self.terms.keys().any(|m| m.depends_on(symbol))
    }

    pub(crate) fn symbols(&self, out: &mut BTreeSet<Arc<str>>) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                out.extend(a.symbols().iter().cloned());
            }
        }
    }

    pub(crate) fn has_negative_lead(&self) -> bool {
        self.terms
            .iter()
            .next()
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn var(name: &str) -> Poly {
        Poly::from_atom(Atom::sym(name))
    }

    #[test]
    fn exact_division_recovers_factor() {
        let x = var("x");
        let y = var("y");
        let a = x.add(&y.scale(&q(2)));
        let b = x.sub(&Poly::one());
        let prod = a.mul(&b);
        assert_eq!(prod.exact_div(&b).unwrap(), a);
        assert_eq!(prod.exact_div(&a).unwrap(), b);
        assert!(prod.add(&Poly::one()).exact_div(&b).is_none());
    }

    #[test]
    fn lex_order_is_multiplicative() {
        let x = Mono::atom(Atom::sym("x"), 1);
        let y = Mono::atom(Atom::sym("y"), 3);
        assert_eq!(x.lex_cmp(&y), Ordering::Greater);
        let z = Mono::atom(Atom::sym("z"), 1);
        assert_eq!(x.mul(&z).lex_cmp(&y.mul(&z)), Ordering::Greater);
    }

    #[test]
    fn monomial_content_and_gcd() {
        let x = var("x");
        let y = var("y");
        let p = x.mul(&x).mul(&y).add(&x.mul(&y).mul(&y));
        let content = p.mono_content();
        assert_eq!(Poly::from_term(content, q(1)), x.mul(&y));
    }
}
