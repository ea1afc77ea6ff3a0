//! Basic untyped array language: syntax, text format and evaluation.

mod eval;
mod parse;
mod pretty;
mod syntax;

pub use eval::{
    apply_arith, eval, eval_traced, step, Congruence, EvalError, EvalResult, Rule, StepOutcome,
    TraceEntry,
};
pub use parse::{is_identifier, parse, KEYWORDS};
pub use pretty::pretty;
pub use syntax::{ArithOp, Builtin, Expr, Ident};
