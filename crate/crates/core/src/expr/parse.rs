//! Pratt parser for the infix expression grammar.

use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::node::{Expr, Func, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = parse_number(&text)
                .ok_or_else(|| err(tl, tc, format!("malformed number '{text}'")))?;
            col += i - start;
            out.push(Token {
                tok: Tok::Num(value),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => return Err(err(tl, tc, format!("unexpected character '{c}'"))),
        };
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

/// Decimal or scientific literal as an exact rational.
fn parse_number(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], i64::from_str(&text[p + 1..]).ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(p) => (&mantissa[..p], &mantissa[p + 1..]),
        None => (mantissa, ""),
    };
    if frac_part.contains('.') || (int_part.is_empty() && frac_part.is_empty()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n = BigInt::from_str(&digits).ok()?;
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const UNARY_BP: u8 = 30;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::RParen {
            Ok(())
        } else {
            Err(Self::error_at(&t, "expected ')'"))
        }
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let t = self.next();
        match t.tok.clone() {
            Tok::Num(q) => Ok(Expr::rational(q)),
            Tok::Ident(name) => {
                if self.peek().tok != Tok::LParen {
                    return Ok(Expr::sym(&name));
                }
                self.next();
                let arg = self.expr(0)?;
                self.expect_rparen()?;
                if name == "sqrt" {
                    return Ok(Expr::pow(arg, Rational::new(1.into(), 2.into())));
                }
                match Func::from_name(&name) {
                    Some(f) => Ok(Expr::call(f, arg)),
                    None => Err(Self::error_at(&t, format!("unknown function '{name}'"))),
                }
            }
            Tok::LParen => {
                let e = self.expr(0)?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Op('-') => {
                let e = self.expr(UNARY_BP)?;
                Ok(Expr::prod(vec![Expr::num(-1), e]))
            }
            Tok::Op('+') => self.expr(UNARY_BP),
            Tok::End => Err(Self::error_at(&t, "unexpected end of input")),
            _ => Err(Self::error_at(&t, "expected an operand")),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let t = self.peek().clone();
            let op = match t.tok {
                Tok::Op(c) => c,
                Tok::RParen | Tok::End => break,
                _ => return Err(Self::error_at(&t, "expected an operator")),
            };
            let (l_bp, r_bp) = match op {
                '+' | '-' => (10, 11),
                '*' | '/' => (20, 21),
                '^' => (40, 39),
                _ => unreachable!(),
            };
            if l_bp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(r_bp)?;
            lhs = match op {
                '+' => Expr::sum(vec![lhs, rhs]),
                '-' => Expr::sum(vec![lhs, Expr::prod(vec![Expr::num(-1), rhs])]),
                '*' => Expr::prod(vec![lhs, rhs]),
                '/' => {
                    if rhs.as_rational().is_some_and(|q| q.is_zero()) {
                        return Err(Self::error_at(&t, "division by zero"));
                    }
                    Expr::quot(lhs, rhs)
                }
                '^' => {
                    let Some(q) = rhs.as_rational() else {
                        let message = if rhs.rat().has_undefined() {
                            "zero denominator in exponent"
                        } else {
                            "exponent must be a rational constant"
                        };
                        return Err(Self::error_at(&t, message));
                    };
                    if q.is_zero() && lhs.as_rational().is_some_and(|b| b.is_zero()) {
                        return Err(Self::error_at(&t, "0^0 is undefined"));
                    }
                    if q.is_one() {
                        lhs
                    } else {
                        Expr::pow(lhs, q)
                    }
                }
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }
}

/// Parses an infix expression. Identifiers are free symbols.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr(0)?;
    let t = p.peek().clone();
    match t.tok {
        Tok::End => Ok(e),
        Tok::RParen => Err(Parser::error_at(&t, "unmatched ')'")),
        _ => Err(Parser::error_at(&t, "unexpected trailing input")),
    }
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_are_exact() {
        assert_eq!(parse_number("0.25"), Some(Rational::new(1.into(), 4.into())));
        assert_eq!(parse_number("1e-3"), Some(Rational::new(1.into(), 1000.into())));
        assert_eq!(parse_number("2.5E2"), Some(Rational::from_integer(250.into())));
    }

    #[test]
    fn precedence() {
        let e = parse("-x^2").unwrap();
        assert_eq!(e.to_string(), "-x^2");
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.as_rational(), Some(Rational::from_integer(512.into())));
        let e = parse("a - b - c").unwrap();
        let f = parse("a - (b + c)").unwrap();
        assert!(e.same_normal_form(&f));
    }

    #[test]
    fn errors_carry_position() {
        let err = parse("x +\n  * y").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        let err = parse("y^(1/0)").unwrap_err();
        assert!(err.message.contains("zero"), "{}", err.message);
        assert!(parse("foo(x)").is_err());
        assert!(parse("(x").is_err());
        assert!(parse("x)").is_err());
        assert!(parse("y^x").is_err());
    }
}

