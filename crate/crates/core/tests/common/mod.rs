//! Helpers shared by the integration tests.

#![allow(dead_code)]

use butfpi_core::butf::{ArithOp, Builtin, Expr};
use rand::Rng;

/// A random closed expression. Variables are drawn only from enclosing
/// binders; `depth` bounds the nesting.
pub fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    gen(rng, depth, &mut Vec::new())
}

/// A random expression whose free variables are among `free`.
pub fn random_open_expr(rng: &mut impl Rng, depth: u32, free: &[&str]) -> Expr {
    gen(rng, depth, &mut free.iter().map(|x| x.to_string()).collect())
}

fn leaf(rng: &mut impl Rng, scope: &[String]) -> Expr {
    match rng.gen_range(0..10) {
        0..=3 => Expr::num(rng.gen_range(-2..6)),
        4..=6 if !scope.is_empty() => Expr::var(&scope[rng.gen_range(0..scope.len())]),
        7 => Expr::Tuple(vec![]),
        8 => Expr::Array(vec![]),
        _ => Expr::Builtin(match rng.gen_range(0..4) {
            0 => Builtin::Size,
            1 => Builtin::Iota,
            2 => Builtin::Map,
            _ => Builtin::Arith(ArithOp::Add),
        }),
    }
}

fn gen(rng: &mut impl Rng, depth: u32, scope: &mut Vec<String>) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, scope);
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 | 1 => {
            let x = ["x", "y", "z", "len", "o1", "o"][rng.gen_range(0..6)].to_string();
            scope.push(x.clone());
            let body = gen(rng, d, scope);
            scope.pop();
            Expr::lambda(&x, body)
        }
        2 | 3 => Expr::app(gen(rng, d, scope), gen(rng, d, scope)),
        4 => Expr::if_(gen(rng, d, scope), gen(rng, d, scope), gen(rng, d, scope)),
        5 => Expr::index(gen(rng, d, scope), gen(rng, d, scope)),
        6 => {
            let n = rng.gen_range(0..4);
            Expr::Tuple((0..n).map(|_| gen(rng, d, scope)).collect())
        }
        7 => {
            let n = rng.gen_range(0..4);
            Expr::Array((0..n).map(|_| gen(rng, d, scope)).collect())
        }
        8 => {
            let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div][rng.gen_range(0..4)];
            Expr::arith(op, gen(rng, d, scope), gen(rng, d, scope))
        }
        9 => {
            scope.push("e".to_string());
            let body = gen(rng, d, scope);
            scope.pop();
            Expr::app(
                Expr::Builtin(Builtin::Map),
                Expr::Tuple(vec![Expr::lambda("e", body), gen(rng, d, scope)]),
            )
        }
        _ => {
            let b = if rng.gen_bool(0.5) { Builtin::Size } else { Builtin::Iota };
            Expr::app(Expr::Builtin(b), gen(rng, d, scope))
        }
    }
}
