//! Infix printing. Output is accepted by the parser and reparses to an
//! expression with the same normal form.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::node::{Expr, Node, Rational};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const FACTOR: u8 = 3;
const ATOM: u8 = 5;

/// If `e` prints with a leading minus sign, the expression without it.
fn split_sign(e: &Expr) -> Option<Expr> {
    match e.node() {
        Node::Num(q) if q.is_negative() => Some(Expr::rational(-q)),
        Node::Float(f) if *f < 0.0 => Some(Expr::float(-f)),
        Node::Prod(items) if !items.is_empty() => {
            let Node::Num(q) = items[0].node() else {
                return None;
            };
            if !q.is_negative() {
                return None;
            }
            let mut rest: Vec<Expr> = items[1..].to_vec();
            if !(-q).is_one() {
                rest.insert(0, Expr::rational(-q));
            }
            Some(match rest.len() {
                0 => Expr::one(),
                1 => rest.pop().unwrap(),
                _ => Expr::prod(rest),
            })
        }
        Node::Quot(a, b) => split_sign(a).map(|a| Expr::quot(a, b.clone())),
        _ => None,
    }
}

fn write_rational(q: &Rational, out: &mut String) -> u8 {
    out.push_str(&q.numer().to_string());
    if q.denom().is_one() {
        ATOM
    } else {
        out.push('/');
        out.push_str(&q.denom().to_string());
        PRODUCT
    }
}

fn write_exponent(q: &Rational, out: &mut String) {
    if q.is_integer() && !q.is_negative() {
        out.push_str(&q.numer().to_string());
    } else {
        out.push('(');
        if q.is_negative() {
            out.push('-');
        }
        write_rational(&q.abs(), out);
        out.push(')');
    }
}

/// Renders `e` without outer parentheses; returns its precedence.
fn render(e: &Expr, out: &mut String) -> u8 {
    if let Some(pos) = split_sign(e) {
        out.push('-');
        write(&pos, PRODUCT, out);
        return PRODUCT;
    }
    match e.node() {
        Node::Num(q) => write_rational(q, out),
        Node::Float(f) => match Rational::from_float(*f) {
            Some(q) => write_rational(&q, out),
            None => {
                out.push_str(&f.to_string());
                ATOM
            }
        },
        Node::Sym(s) => {
            out.push_str(s);
            ATOM
        }
        Node::Sum(items) => {
            if items.is_empty() {
                out.push('0');
                return ATOM;
            }
            write(&items[0], SUM, out);
            for item in &items[1..] {
                match split_sign(item) {
                    Some(pos) => {
                        out.push_str(" - ");
                        write(&pos, PRODUCT, out);
                    }
                    None => {
                        out.push_str(" + ");
                        write(item, PRODUCT, out);
                    }
                }
            }
            SUM
        }
        Node::Prod(items) => {
            if items.is_empty() {
                out.push('1');
                return ATOM;
            }
            write(&items[0], PRODUCT, out);
            for item in &items[1..] {
                out.push('*');
                write(item, FACTOR, out);
            }
            if items.len() == 1 {
                PRODUCT.min(precedence_hint(&items[0]))
            } else {
                PRODUCT
            }
        }
        Node::Quot(a, b) => {
            write(a, PRODUCT, out);
            out.push('/');
            write(b, FACTOR, out);
            PRODUCT
        }
        Node::Pow(b, q) => {
            if q.is_zero() {
                out.push('1');
                return ATOM;
            }
            write(b, ATOM, out);
            out.push('^');
            write_exponent(q, out);
            FACTOR + 1
        }
        Node::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write(a, 0, out);
            out.push(')');
            ATOM
        }
    }
}

fn precedence_hint(e: &Expr) -> u8 {
    let mut scratch = String::new();
    render(e, &mut scratch)
}

fn write(e: &Expr, min_prec: u8, out: &mut String) {
    let mut inner = String::new();
    let prec = render(e, &mut inner);
    if prec < min_prec {
        out.push('(');
        out.push_str(&inner);
        out.push(')');
    } else {
        out.push_str(&inner);
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        render(self, &mut out);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_signs_and_powers() {
        let x = Expr::sym("x");
        let y = Expr::sym("y");
        let e = Expr::sum(vec![
            x.clone(),
            Expr::prod(vec![Expr::num(-2), y.clone()]),
            Expr::pow(Expr::sum(vec![x.clone(), y.clone()]), Rational::new(1.into(), 2.into())),
        ]);
        assert_eq!(e.to_string(), "x - 2*y + (x + y)^(1/2)");
        let q = Expr::quot(x.clone(), Expr::prod(vec![y.clone(), x.clone()]));
        assert_eq!(q.to_string(), "x/(y*x)");
        let n = Expr::pow(Expr::num(-3), Rational::from_integer(2.into()));
        assert_eq!(n.to_string(), "(-3)^2");
    }
}
