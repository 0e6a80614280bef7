//! Symbolic scalar expressions over chart coordinates.

mod diff;
mod eval;
mod node;
mod parse;
mod poly;
mod print;
mod rational;
mod zero;

pub use diff::differentiate;
pub use eval::{Assignment, Compiled, EvalError};
pub use node::{Expr, Func, Node, Rational};
pub use parse::{parse, ParseError};
pub use zero::{is_zero, SampleBox, ZeroTest, ZeroVerdict};
