use num_bigint::Sign;

use super::syntax::{Builtin, Expr};

const TOP: u8 = 0;
const APP: u8 = 3;
const ARG: u8 = 4;

/// Renders an expression so that [`parse`](super::parse) gives it back
/// unchanged.
pub fn pretty(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, TOP, &mut out);
    out
}

fn write_expr(e: &Expr, prec: u8, out: &mut String) {
    match e {
        Expr::Num(n) => {
            if n.sign() == Sign::Minus {
                out.push_str(&format!("({n})"));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Expr::Var(x) => out.push_str(x),
        Expr::Builtin(b) => out.push_str(&builtin_name(*b)),
        Expr::Array(items) => {
            out.push('[');
            write_list(items, out);
            out.push(']');
        }
        Expr::Tuple(items) => {
            out.push('(');
            write_list(items, out);
            if items.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        Expr::Index(target, idx) => {
            write_expr(target, ARG, out);
            out.push('[');
            write_expr(idx, TOP, out);
            out.push(']');
        }
        Expr::Lambda(x, body) => parens(prec > TOP, out, |out| {
            out.push('\\');
            out.push_str(x);
            out.push_str(". ");
            write_expr(body, TOP, out);
        }),
        Expr::If(c, t, f) => parens(prec > TOP, out, |out| {
            out.push_str("if ");
            write_expr(c, TOP, out);
            out.push_str(" then ");
            write_expr(t, TOP, out);
            out.push_str(" else ");
            write_expr(f, TOP, out);
        }),
        Expr::App(fun, arg) => match (&**fun, &**arg) {
            (Expr::Builtin(Builtin::Arith(op)), Expr::Tuple(pair)) if pair.len() == 2 => {
                let level = op.precedence();
                parens(prec > level, out, |out| {
                    write_expr(&pair[0], level, out);
                    out.push(' ');
                    out.push(op.symbol());
                    out.push(' ');
                    write_expr(&pair[1], level + 1, out);
                })
            }
            _ => parens(prec > APP, out, |out| {
                write_expr(fun, APP, out);
                out.push(' ');
                write_expr(arg, ARG, out);
            }),
        },
    }
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(item, TOP, out);
    }
}

fn parens(wrap: bool, out: &mut String, body: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    body(out);
    if wrap {
        out.push(')');
    }
}

pub(crate) fn builtin_name(b: Builtin) -> String {
    match b {
        Builtin::Map => "map".into(),
        Builtin::Iota => "iota".into(),
        Builtin::Size => "size".into(),
        Builtin::Arith(op) => format!("({})", op.symbol()),
    }
}
