use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::rational::RatFunc;

/// Exact rational constant.
pub type Rational = BigRational;

/// Elementary functions understood by the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }

    /// Applies the function in double precision; `None` outside the real domain.
    pub fn apply(self, x: f64) -> Option<f64> {
        match self {
            Func::Exp => Some(x.exp()),
            Func::Log => (x > 0.0).then(|| x.ln()),
            Func::Sin => Some(x.sin()),
            Func::Cos => Some(x.cos()),
        }
    }
}

/// One node of an expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(Rational),
    Float(f64),
    Sym(Arc<str>),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Quot(Expr, Expr),
    Pow(Expr, Rational),
    Call(Func, Expr),
}

struct Inner {
    node: OnceLock<Node>,
    normal: OnceLock<Arc<RatFunc>>,
}

/// Immutable scalar expression. Cloning is cheap (reference counted).
///
/// An expression is either built as a tree (parser, constructors) or produced
/// by algebra on normal forms; the other representation is derived lazily.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl Expr {
    pub fn from_node(node: Node) -> Expr {
        let node_cell = OnceLock::new();
        let _ = node_cell.set(node);
        Expr(Arc::new(Inner {
            node: node_cell,
            normal: OnceLock::new(),
        }))
    }

    pub(crate) fn from_rat(rat: RatFunc) -> Expr {
        Self::from_rat_arc(Arc::new(rat))
    }

    pub(crate) fn from_rat_arc(rat: Arc<RatFunc>) -> Expr {
        let normal = OnceLock::new();
        let _ = normal.set(rat);
        Expr(Arc::new(Inner {
            node: OnceLock::new(),
            normal,
        }))
    }

    pub fn num(value: i64) -> Expr {
        Expr::rational(Rational::from_integer(BigInt::from(value)))
    }

    pub fn ratio(numer: i64, denom: i64) -> Expr {
        Expr::rational(Rational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn rational(value: Rational) -> Expr {
        Expr::from_node(Node::Num(value))
    }

    pub fn float(value: f64) -> Expr {
        Expr::from_node(Node::Float(value))
    }

    pub fn zero() -> Expr {
        Expr::num(0)
    }

    pub fn one() -> Expr {
        Expr::num(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::from_node(Node::Sym(Arc::from(name)))
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Sum(terms))
    }

    pub fn prod(factors: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Prod(factors))
    }

    pub fn quot(numer: Expr, denom: Expr) -> Expr {
        Expr::from_node(Node::Quot(numer, denom))
    }

    pub fn pow(base: Expr, exponent: Rational) -> Expr {
        Expr::from_node(Node::Pow(base, exponent))
    }

    pub fn powi(base: Expr, exponent: i64) -> Expr {
        Expr::pow(base, Rational::from_integer(BigInt::from(exponent)))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::from_node(Node::Call(func, arg))
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::call(Func::Exp, arg)
    }

    pub fn log(arg: Expr) -> Expr {
        Expr::call(Func::Log, arg)
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::call(Func::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::call(Func::Cos, arg)
    }

    /// The tree form of this expression.
    pub fn node(&self) -> &Node {
        self.0.node.get_or_init(|| {
            let rat = self
                .0
                .normal
                .get()
                .expect("expression has neither tree nor normal form");
            rat.to_node()
        })
    }

    pub(crate) fn rat(&self) -> &Arc<RatFunc> {
        self.0
            .normal
            .get_or_init(|| Arc::new(RatFunc::from_node(self.node())))
    }

    /// Canonical normal form: polynomial parts expanded and collected,
    /// denominators kept as products of monic factors.
    pub fn normalize(&self) -> Expr {
        Expr::from_rat_arc(self.rat().clone())
    }

    /// True when the normal form is the literal zero.
    pub fn is_structurally_zero(&self) -> bool {
        self.rat().is_zero()
    }

    /// The exact constant value of the normal form, if it is a rational constant.
    pub fn as_rational(&self) -> Option<Rational> {
        self.rat().as_constant()
    }

    /// True when both normal forms print identically.
    pub fn same_normal_form(&self, other: &Expr) -> bool {
        Arc::ptr_eq(self.rat(), other.rat()) || self.rat() == other.rat()
    }

    /// Free symbols, sorted.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = std::collections::BTreeSet::new();
        collect_symbols(self.node(), &mut out);
        out.into_iter().collect()
    }

    pub fn depends_on(&self, symbol: &str) -> bool {
        self.rat().depends_on(symbol)
    }

    /// Replaces every occurrence of `symbol` by `value`, then normalizes.
    pub fn substitute(&self, symbol: &str, value: &Expr) -> Expr {
        let replaced = substitute_node(self.node(), symbol, value);
        replaced.normalize()
    }

    pub fn is_negative_constant(&self) -> bool {
        match self.node() {
            Node::Num(q) => q.is_negative(),
            Node::Float(f) => *f < 0.0,
            _ => false,
        }
    }
}

fn collect_symbols(node: &Node, out: &mut std::collections::BTreeSet<String>) {
    match node {
        Node::Num(_) | Node::Float(_) => {}
        Node::Sym(s) => {
            out.insert(s.to_string());
        }
        Node::Sum(items) | Node::Prod(items) => {
            for item in items {
                collect_symbols(item.node(), out);
            }
        }
        Node::Quot(a, b) => {
            collect_symbols(a.node(), out);
            collect_symbols(b.node(), out);
        }
        Node::Pow(b, _) | Node::Call(_, b) => collect_symbols(b.node(), out),
    }
}

fn substitute_node(node: &Node, symbol: &str, value: &Expr) -> Expr {
    let sub = |e: &Expr| substitute_node(e.node(), symbol, value);
    match node {
        Node::Sym(s) if &**s == symbol => value.clone(),
        Node::Num(_) | Node::Float(_) | Node::Sym(_) => Expr::from_node(node.clone()),
        Node::Sum(items) => Expr::sum(items.iter().map(sub).collect()),
        Node::Prod(items) => Expr::prod(items.iter().map(sub).collect()),
        Node::Quot(a, b) => Expr::quot(sub(a), sub(b)),
        Node::Pow(b, q) => Expr::pow(sub(b), q.clone()),
        Node::Call(f, a) => Expr::call(*f, sub(a)),
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.node() == other.node()
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

impl From<i64> for Expr {
    fn from(value: i64) -> Self {
        Expr::num(value)
    }
}

// Arithmetic operators produce normalized results.

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::from_rat(self.rat().add(rhs.rat()))
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::from_rat(self.rat().sub(rhs.rat()))
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::from_rat(self.rat().mul(rhs.rat()))
    }
}

impl std::ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::from_rat(self.rat().div(rhs.rat()))
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_rat(self.rat().neg())
    }
}

macro_rules! forward_owned_ops {
    ($($trait:ident :: $method:ident),*) => {
        $(
            impl std::ops::$trait for Expr {
                type Output = Expr;
                fn $method(self, rhs: Expr) -> Expr {
                    std::ops::$trait::$method(&self, &rhs)
                }
            }
            impl std::ops::$trait<&Expr> for Expr {
                type Output = Expr;
                fn $method(self, rhs: &Expr) -> Expr {
                    std::ops::$trait::$method(&self, rhs)
                }
            }
            impl std::ops::$trait<Expr> for &Expr {
                type Output = Expr;
                fn $method(self, rhs: Expr) -> Expr {
                    std::ops::$trait::$method(self, &rhs)
                }
            }
        )*
    };
}

forward_owned_ops!(Add::add, Sub::sub, Mul::mul, Div::div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl Expr {
    /// Normalized integer power.
    pub fn pow_int(&self, k: i64) -> Expr {
        Expr::from_rat(self.rat().pow_int(k))
    }

    /// Normalized multiplication by a rational constant.
    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_one() {
            return self.clone();
        }
        if c.is_zero() {
            return Expr::zero();
        }
        Expr::from_rat(self.rat().scale(c))
    }
}
