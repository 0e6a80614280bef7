//! Double-precision evaluation: a tree walker, a normal-form walker used by
//! the zero test, and a compiled stack program for hot loops.

use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;
use thiserror::Error;

use super::node::{Expr, Func, Node, Rational};
use super::poly::{Atom, AtomKind, Poly};
use super::rational::RatFunc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no value for symbol '{0}'")]
    MissingSymbol(String),
    #[error("domain error in '{subterm}': {reason}")]
    Domain { subterm: String, reason: String },
}

fn domain(subterm: impl ToString, reason: &str) -> EvalError {
    EvalError::Domain {
        subterm: subterm.to_string(),
        reason: reason.to_string(),
    }
}

/// Values for symbols.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    values: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_pairs<S: AsRef<str>>(names: &[S], values: &[f64]) -> Assignment {
        Assignment {
            values: names
                .iter()
                .zip(values)
                .map(|(n, v)| (n.as_ref().to_string(), *v))
                .collect(),
        }
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

/// `b^q` for a rational exponent, real branch only.
pub(crate) fn real_pow(b: f64, q: &Rational) -> Option<f64> {
    if q.is_integer() {
        let k = q.to_integer().to_i32()?;
        if k < 0 && b == 0.0 {
            return None;
        }
        return Some(b.powi(k));
    }
    let r = q.denom().to_i64()?;
    let p = q.numer().to_i64()?;
    let e = q.to_f64()?;
    if b == 0.0 {
        return (e > 0.0).then_some(0.0);
    }
    if b < 0.0 {
        if r % 2 == 0 {
            return None;
        }
        let mag = (-b).powf(e);
        return Some(if p % 2 == 0 { mag } else { -mag });
    }
    Some(b.powf(e))
}

impl Expr {
    /// Evaluates the expression tree at an assignment.
    pub fn evaluate(&self, a: &Assignment) -> Result<f64, EvalError> {
        eval_tree(self, &|s| a.get(s))
    }

    /// Evaluates with an arbitrary symbol lookup.
    pub fn evaluate_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        eval_tree(self, lookup)
    }
}

fn eval_tree(e: &Expr, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
    match e.node() {
        Node::Num(q) => Ok(q.to_f64().unwrap_or(f64::NAN)),
        Node::Float(f) => Ok(*f),
        Node::Sym(s) => lookup(s).ok_or_else(|| EvalError::MissingSymbol(s.to_string())),
        Node::Sum(items) => {
            let mut acc = 0.0;
            for item in items {
                acc += eval_tree(item, lookup)?;
            }
            Ok(acc)
        }
        Node::Prod(items) => {
            let mut acc = 1.0;
            for item in items {
                acc *= eval_tree(item, lookup)?;
            }
            Ok(acc)
        }
        Node::Quot(a, b) => {
            let den = eval_tree(b, lookup)?;
            if den == 0.0 {
                return Err(domain(e, "division by zero"));
            }
            Ok(eval_tree(a, lookup)? / den)
        }
        Node::Pow(b, q) => {
            let base = eval_tree(b, lookup)?;
            real_pow(base, q).ok_or_else(|| domain(e, "power outside the real domain"))
        }
        Node::Call(f, a) => {
            let x = eval_tree(a, lookup)?;
            f.apply(x)
                .ok_or_else(|| domain(e, "argument outside the function domain"))
        }
    }
}

/// Evaluator over the normal form, caching atom values per point.
pub(crate) struct RatEvaluator<'a> {
    lookup: &'a dyn Fn(&str) -> Option<f64>,
    cache: HashMap<*const Atom, f64>,
}

impl<'a> RatEvaluator<'a> {
    pub(crate) fn new(lookup: &'a dyn Fn(&str) -> Option<f64>) -> Self {
        RatEvaluator {
            lookup,
            cache: HashMap::new(),
        }
    }

    fn atom(&mut self, atom: &Atom) -> Result<f64, EvalError> {
        let key = atom as *const Atom;
        if let Some(v) = self.cache.get(&key) {
            return Ok(*v);
        }
        let v = match atom.kind() {
            AtomKind::Sym(s) => (self.lookup)(s).ok_or_else(|| EvalError::MissingSymbol(s.to_string()))?,
            AtomKind::Call(f, arg) => {
                let x = self.rat(arg)?;
                f.apply(x)
                    .ok_or_else(|| domain(atom.key(), "argument outside the function domain"))?
            }
            AtomKind::Root(base, frac) => {
                let b = self.rat(base)?;
                real_pow(b, frac).ok_or_else(|| domain(atom.key(), "power outside the real domain"))?
            }
            AtomKind::Undefined(e) => return Err(domain(e, "undefined subterm")),
        };
        self.cache.insert(key, v);
        Ok(v)
    }

    /// Value of a polynomial and the sum of the magnitudes of its terms.
    pub(crate) fn poly(&mut self, p: &Poly) -> Result<(f64, f64), EvalError> {
        let mut value = 0.0;
        let mut scale = 0.0;
        for (mono, c) in &p.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (a, k) in &mono.0 {
                t *= self.atom(a)?.powi(*k as i32);
            }
            value += t;
            scale += t.abs();
        }
        Ok((value, scale))
    }

    pub(crate) fn denominator(&mut self, r: &RatFunc) -> Result<f64, EvalError> {
        let mut den = 1.0;
        for (d, e) in &r.den {
            let (v, _) = self.poly(d)?;
            if v == 0.0 {
                return Err(domain(Expr::from_node(RatFunc::from_poly(d.clone()).to_node()), "division by zero"));
            }
            den *= v.powi(*e as i32);
        }
        Ok(den)
    }

    pub(crate) fn rat(&mut self, r: &RatFunc) -> Result<f64, EvalError> {
        let den = self.denominator(r)?;
        let (num, _) = self.poly(&r.num)?;
        Ok(num / den)
    }
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Var(usize),
    Add(usize),
    Mul(usize),
    Div(usize),
    Pow(Rational, usize),
    Call(Func, usize),
}

/// A compiled expression: a postfix program over indexed variables.
#[derive(Debug, Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    sites: Vec<Expr>,
    depth: usize,
}

impl Compiled {
    /// Compiles `e` with variables bound by position in `vars`.
    pub fn new<S: AsRef<str>>(e: &Expr, vars: &[S]) -> Result<Compiled, EvalError> {
        let index: HashMap<&str, usize> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_ref(), i))
            .collect();
        let mut c = Compiled {
            ops: Vec::new(),
            sites: Vec::new(),
            depth: 0,
        };
        let mut depth = 0;
        c.emit(e, &index, &mut depth)?;
        Ok(c)
    }

    fn push(&mut self, op: Op, depth: &mut usize, pops: usize) {
        *depth = *depth + 1 - pops;
        self.depth = self.depth.max(*depth + pops);
        self.ops.push(op);
    }

    fn site(&mut self, e: &Expr) -> usize {
        self.sites.push(e.clone());
        self.sites.len() - 1
    }

    fn emit(&mut self, e: &Expr, index: &HashMap<&str, usize>, depth: &mut usize) -> Result<(), EvalError> {
        match e.node() {
            Node::Num(q) => self.push(Op::Const(q.to_f64().unwrap_or(f64::NAN)), depth, 0),
            Node::Float(f) => self.push(Op::Const(*f), depth, 0),
            Node::Sym(s) => {
                let i = *index
                    .get(&**s)
                    .ok_or_else(|| EvalError::MissingSymbol(s.to_string()))?;
                self.push(Op::Var(i), depth, 0);
            }
            Node::Sum(items) | Node::Prod(items) => {
                if items.is_empty() {
                    let unit = if matches!(e.node(), Node::Sum(_)) { 0.0 } else { 1.0 };
                    self.push(Op::Const(unit), depth, 0);
                    return Ok(());
                }
                for item in items {
                    self.emit(item, index, depth)?;
                }
                let n = items.len();
                let op = if matches!(e.node(), Node::Sum(_)) { Op::Add(n) } else { Op::Mul(n) };
                self.ops.push(op);
                *depth -= n - 1;
            }
            Node::Quot(a, b) => {
                self.emit(a, index, depth)?;
                self.emit(b, index, depth)?;
                let s = self.site(e);
                self.ops.push(Op::Div(s));
                *depth -= 1;
            }
            Node::Pow(b, q) => {
                self.emit(b, index, depth)?;
                let s = self.site(e);
                self.ops.push(Op::Pow(q.clone(), s));
            }
            Node::Call(f, a) => {
                self.emit(a, index, depth)?;
                let s = self.site(e);
                self.ops.push(Op::Call(*f, s));
            }
        }
        Ok(())
    }

    /// Evaluates at `x` (values in the order of the compile-time variables).
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let mut stack = Vec::with_capacity(self.depth + 1);
        self.eval_with(x, &mut stack)
    }

    /// Like [`Compiled::eval`], reusing a caller-provided stack.
    pub fn eval_with(&self, x: &[f64], stack: &mut Vec<f64>) -> Result<f64, EvalError> {
        stack.clear();
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Var(i) => stack.push(x[*i]),
                Op::Add(n) => {
                    let start = stack.len() - n;
                    let v: f64 = stack[start..].iter().sum();
                    stack.truncate(start);
                    stack.push(v);
                }
                Op::Mul(n) => {
                    let start = stack.len() - n;
                    let v: f64 = stack[start..].iter().product();
                    stack.truncate(start);
                    stack.push(v);
                }
                Op::Div(s) => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    if b == 0.0 {
                        return Err(domain(&self.sites[*s], "division by zero"));
                    }
                    stack.push(a / b);
                }
                Op::Pow(q, s) => {
                    let b = stack.pop().unwrap();
                    let v = real_pow(b, q)
                        .ok_or_else(|| domain(&self.sites[*s], "power outside the real domain"))?;
                    stack.push(v);
                }
                Op::Call(f, s) => {
                    let a = stack.pop().unwrap();
                    let v = f
                        .apply(a)
                        .ok_or_else(|| domain(&self.sites[*s], "argument outside the function domain"))?;
                    stack.push(v);
                }
            }
        }
        Ok(stack.pop().unwrap_or(f64::NAN))
    }
}

