//! Call-by-value small-step semantics with a fixed leftmost strategy.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::syntax::{ArithOp, Builtin, Expr};

/// The axiom that fired in a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rule {
    #[serde(rename = "E-BETA")]
    Beta,
    #[serde(rename = "E-INDEX")]
    Index,
    #[serde(rename = "E-IF-TRUE")]
    IfTrue,
    #[serde(rename = "E-IF-FALSE")]
    IfFalse,
    #[serde(rename = "E-MAP")]
    Map,
    #[serde(rename = "E-SIZE")]
    Size,
    #[serde(rename = "E-IOTA")]
    Iota,
    #[serde(rename = "E-ARITH")]
    Arith,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Beta => "E-BETA",
            Rule::Index => "E-INDEX",
            Rule::IfTrue => "E-IF-TRUE",
            Rule::IfFalse => "E-IF-FALSE",
            Rule::Map => "E-MAP",
            Rule::Size => "E-SIZE",
            Rule::Iota => "E-IOTA",
            Rule::Arith => "E-ARITH",
        })
    }
}

/// Which subterm a congruence rule descended into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Congruence {
    AppFun,
    AppArg,
    IndexTarget,
    IndexArg,
    IfCond,
    ArrayElem(usize),
    TupleElem(usize),
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Congruence::AppFun => f.write_str("E-APP-1"),
            Congruence::AppArg => f.write_str("E-APP-2"),
            Congruence::IndexTarget => f.write_str("E-INDEX-1"),
            Congruence::IndexArg => f.write_str("E-INDEX-2"),
            Congruence::IfCond => f.write_str("E-IF"),
            Congruence::ArrayElem(i) => write!(f, "E-ARRAY-ELEM[{i}]"),
            Congruence::TupleElem(i) => write!(f, "E-TUPLE-ELEM[{i}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Reduced {
        next: Expr,
        rule: Rule,
        /// Congruence path from the root to the redex.
        context: Vec<Congruence>,
        /// The subterm that fired.
        redex: Expr,
    },
    AlreadyValue,
    Stuck(String),
}

impl StepOutcome {
    pub fn rule(&self) -> Option<Rule> {
        match self {
            StepOutcome::Reduced { rule, .. } => Some(*rule),
            _ => None,
        }
    }
}

struct Fired {
    next: Expr,
    rule: Rule,
    path: Vec<Congruence>,
    redex: Expr,
}

/// Performs one leftmost-outermost call-by-value reduction.
pub fn step(e: &Expr) -> StepOutcome {
    match step_inner(e) {
        Ok(None) => StepOutcome::AlreadyValue,
        Ok(Some(mut f)) => {
            f.path.reverse();
            StepOutcome::Reduced {
                next: f.next,
                rule: f.rule,
                context: f.path,
                redex: f.redex,
            }
        }
        Err(reason) => StepOutcome::Stuck(reason),
    }
}

fn axiom(next: Expr, rule: Rule, redex: &Expr) -> Result<Option<Fired>, String> {
    Ok(Some(Fired {
        next,
        rule,
        path: Vec::new(),
        redex: redex.clone(),
    }))
}

fn under(
    inner: &Expr,
    pos: Congruence,
    rebuild: impl FnOnce(Expr) -> Expr,
) -> Result<Option<Fired>, String> {
    let mut fired = step_inner(inner)?.expect("non-value subterm must step or get stuck");
    fired.next = rebuild(fired.next);
    fired.path.push(pos);
    Ok(Some(fired))
}

fn step_items(
    items: &[Expr],
    pos: fn(usize) -> Congruence,
    wrap: fn(Vec<Expr>) -> Expr,
) -> Result<Option<Fired>, String> {
    match items.iter().position(|x| !x.is_value()) {
        None => Ok(None),
        Some(i) => under(&items[i], pos(i), |x| {
            let mut v = items.to_vec();
            v[i] = x;
            wrap(v)
        }),
    }
}

fn step_inner(e: &Expr) -> Result<Option<Fired>, String> {
    match e {
        Expr::Num(_) | Expr::Builtin(_) | Expr::Lambda(..) => Ok(None),
        Expr::Var(x) => Err(format!("free variable `{x}` in redex position")),
        Expr::Array(items) => step_items(items, Congruence::ArrayElem, Expr::Array),
        Expr::Tuple(items) => step_items(items, Congruence::TupleElem, Expr::Tuple),
        Expr::Index(target, idx) => {
            if !target.is_value() {
                return under(target, Congruence::IndexTarget, |t| {
                    Expr::Index(Box::new(t), idx.clone())
                });
            }
            if !idx.is_value() {
                return under(idx, Congruence::IndexArg, |i| {
                    Expr::Index(target.clone(), Box::new(i))
                });
            }
            let Expr::Array(items) = &**target else {
                return Err("index target not an array".into());
            };
            let Expr::Num(i) = &**idx else {
                return Err("index is not a number".into());
            };
            match i.to_usize().filter(|&i| i < items.len()) {
                Some(i) => axiom(items[i].clone(), Rule::Index, e),
                None => Err(format!(
                    "index {i} out of bounds for array of length {}",
                    items.len()
                )),
            }
        }
        Expr::If(cond, then, otherwise) => {
            if !cond.is_value() {
                return under(cond, Congruence::IfCond, |c| {
                    Expr::If(Box::new(c), then.clone(), otherwise.clone())
                });
            }
            match &**cond {
                Expr::Num(n) if n.is_zero() => axiom((**otherwise).clone(), Rule::IfFalse, e),
                _ => axiom((**then).clone(), Rule::IfTrue, e),
            }
        }
        Expr::App(fun, arg) => {
            if !fun.is_value() {
                return under(fun, Congruence::AppFun, |f| {
                    Expr::App(Box::new(f), arg.clone())
                });
            }
            if !arg.is_value() {
                return under(arg, Congruence::AppArg, |a| {
                    Expr::App(fun.clone(), Box::new(a))
                });
            }
            match &**fun {
                Expr::Lambda(x, body) => axiom(body.substitute(x, arg), Rule::Beta, e),
                Expr::Builtin(b) => apply_builtin(*b, arg, e),
                _ => Err("applying a non-function".into()),
            }
        }
    }
}

fn apply_builtin(b: Builtin, arg: &Expr, redex: &Expr) -> Result<Option<Fired>, String> {
    match b {
        Builtin::Map => {
            let shape_err = || "map expects a (function, array) pair".to_string();
            let Expr::Tuple(pair) = arg else {
                return Err(shape_err());
            };
            match pair.as_slice() {
                [Expr::Lambda(x, body), Expr::Array(items)] => {
                    let mapped = items.iter().map(|v| body.substitute(x, v)).collect();
                    axiom(Expr::Array(mapped), Rule::Map, redex)
                }
                _ => Err(shape_err()),
            }
        }
        Builtin::Size => match arg {
            Expr::Array(items) => axiom(Expr::num(items.len()), Rule::Size, redex),
            _ => Err("size expects an array".into()),
        },
        Builtin::Iota => match arg {
            Expr::Num(n) if !n.is_negative() => {
                let n = n
                    .to_usize()
                    .ok_or_else(|| format!("iota argument {n} too large"))?;
                axiom(
                    Expr::Array((0..n).map(Expr::num).collect()),
                    Rule::Iota,
                    redex,
                )
            }
            Expr::Num(n) => Err(format!("iota of negative number {n}")),
            _ => Err("iota expects a number".into()),
        },
        Builtin::Arith(op) => match arg {
            Expr::Tuple(pair) => match pair.as_slice() {
                [Expr::Num(a), Expr::Num(b)] => {
                    let r = apply_arith(op, a, b).ok_or("division by zero")?;
                    axiom(Expr::Num(r), Rule::Arith, redex)
                }
                _ => Err(format!("{op} expects a pair of numbers")),
            },
            _ => Err(format!("{op} expects a pair of numbers")),
        },
    }
}

/// Exact integer arithmetic; division truncates toward zero. `None` on
/// division by zero.
pub fn apply_arith(op: ArithOp, a: &BigInt, b: &BigInt) -> Option<BigInt> {
    Some(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => {
            if b.is_zero() {
                return None;
            }
            a / b
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: Expr,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no value after {fuel} steps")]
    Diverged { fuel: u64 },
    #[error("stuck after {steps} steps: {reason}")]
    Stuck {
        reason: String,
        steps: u64,
        term: Expr,
    },
}

/// One line of an evaluation trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub step: u64,
    pub rule: Rule,
    pub context: Vec<String>,
    #[serde(skip)]
    pub redex: Expr,
    #[serde(rename = "expr")]
    pub result: String,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}: {}", self.step, self.rule, self.result)
    }
}

pub fn eval(e: &Expr, fuel: u64) -> Result<EvalResult, EvalError> {
    eval_with(e, fuel, |_, _, _| {})
}

/// Like [`eval`], also returning one entry per reduction.
pub fn eval_traced(e: &Expr, fuel: u64) -> (Result<EvalResult, EvalError>, Vec<TraceEntry>) {
    let mut trace = Vec::new();
    let result = eval_with(e, fuel, |k, outcome, _| {
        if let StepOutcome::Reduced {
            next,
            rule,
            context,
            redex,
        } = outcome
        {
            trace.push(TraceEntry {
                step: k,
                rule: *rule,
                context: context.iter().map(ToString::to_string).collect(),
                redex: redex.clone(),
                result: next.to_string(),
            });
        }
    });
    (result, trace)
}

fn eval_with(
    e: &Expr,
    fuel: u64,
    mut observe: impl FnMut(u64, &StepOutcome, &Expr),
) -> Result<EvalResult, EvalError> {
    let mut cur = e.clone();
    let mut steps = 0;
    loop {
        if cur.is_value() {
            return Ok(EvalResult { value: cur, steps });
        }
        if steps >= fuel {
            return Err(EvalError::Diverged { fuel });
        }
        let outcome = step(&cur);
        match outcome {
            StepOutcome::Reduced { ref next, .. } => {
                steps += 1;
                observe(steps, &outcome, &cur);
                cur = next.clone();
            }
            StepOutcome::AlreadyValue => unreachable!("checked above"),
            StepOutcome::Stuck(reason) => {
                return Err(EvalError::Stuck {
                    reason,
                    steps,
                    term: cur,
                })
            }
        }
    }
}
