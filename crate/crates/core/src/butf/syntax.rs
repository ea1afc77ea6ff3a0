use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

pub type Ident = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub const ALL: [ArithOp; 4] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];

    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }

    pub(crate) fn from_symbol(c: char) -> Option<ArithOp> {
        match c {
            '+' => Some(ArithOp::Add),
            '-' => Some(ArithOp::Sub),
            '*' => Some(ArithOp::Mul),
            '/' => Some(ArithOp::Div),
            _ => None,
        }
    }

    /// Binding strength for infix printing; higher binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ArithOp::Add => "add",
            ArithOp::Sub => "sub",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
        };
        f.write_str(name)
    }
}

/// Function constants. Arithmetic is uncurried: it takes a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Map,
    Iota,
    Size,
    Arith(ArithOp),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(BigInt),
    Var(Ident),
    Array(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Lambda(Ident, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Tuple(Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Builtin(Builtin),
}

impl Expr {
    pub fn num(n: impl Into<BigInt>) -> Expr {
        Expr::Num(n.into())
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn lambda(param: &str, body: Expr) -> Expr {
        Expr::Lambda(param.to_string(), Box::new(body))
    }

    pub fn app(fun: Expr, arg: Expr) -> Expr {
        Expr::App(Box::new(fun), Box::new(arg))
    }

    pub fn index(target: Expr, index: Expr) -> Expr {
        Expr::Index(Box::new(target), Box::new(index))
    }

    pub fn if_(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
        Expr::If(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    /// `a op b`, i.e. the arithmetic constant applied to the pair `(a, b)`.
    pub fn arith(op: ArithOp, a: Expr, b: Expr) -> Expr {
        Expr::app(Expr::Builtin(Builtin::Arith(op)), Expr::Tuple(vec![a, b]))
    }

    pub fn is_value(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Builtin(_) | Expr::Lambda(..) => true,
            Expr::Array(items) | Expr::Tuple(items) => items.iter().all(Expr::is_value),
            _ => false,
        }
    }

    /// True for values that are functions (abstractions and constants other
    /// than numbers).
    pub fn is_function_value(&self) -> bool {
        matches!(self, Expr::Lambda(..) | Expr::Builtin(_))
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
        match self {
            Expr::Num(_) | Expr::Builtin(_) => {}
            Expr::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Expr::Lambda(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => self.for_each_child(|c| c.collect_free(bound, out)),
        }
    }

    /// Every identifier appearing anywhere, bound or free.
    pub fn identifiers(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| match e {
            Expr::Var(x) | Expr::Lambda(x, _) => {
                out.insert(x.clone());
            }
            _ => {}
        });
        out
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        self.for_each_child(|c| c.walk(f));
    }

    fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Builtin(_) => {}
            Expr::Array(items) | Expr::Tuple(items) => items.iter().for_each(f),
            Expr::Index(a, b) | Expr::App(a, b) => {
                f(a);
                f(b);
            }
            Expr::Lambda(_, body) => f(body),
            Expr::If(c, t, e) => {
                f(c);
                f(t);
                f(e);
            }
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Capture-avoiding substitution `self{x ↦ v}`.
    ///
    /// A binder is renamed to `name_k` (first `k` that is unused) when it
    /// would capture a free variable of `v`.
    pub fn substitute(&self, x: &str, v: &Expr) -> Expr {
        let fv = v.free_vars();
        self.subst_with(x, v, &fv)
    }

    fn subst_with(&self, x: &str, v: &Expr, fv: &BTreeSet<Ident>) -> Expr {
        match self {
            Expr::Var(y) if y == x => v.clone(),
            Expr::Num(_) | Expr::Var(_) | Expr::Builtin(_) => self.clone(),
            Expr::Lambda(y, body) => {
                if y == x {
                    return self.clone();
                }
                let body_fv = body.free_vars();
                if !body_fv.contains(x) {
                    return self.clone();
                }
                if fv.contains(y) {
                    let fresh = fresh_ident(y, |cand| {
                        cand == x || fv.contains(cand) || body_fv.contains(cand)
                    });
                    let fresh_fv = BTreeSet::from([fresh.clone()]);
                    let renamed = body.subst_with(y, &Expr::Var(fresh.clone()), &fresh_fv);
                    Expr::Lambda(fresh, Box::new(renamed.subst_with(x, v, fv)))
                } else {
                    Expr::Lambda(y.clone(), Box::new(body.subst_with(x, v, fv)))
                }
            }
            Expr::Array(items) => {
                Expr::Array(items.iter().map(|e| e.subst_with(x, v, fv)).collect())
            }
            Expr::Tuple(items) => {
                Expr::Tuple(items.iter().map(|e| e.subst_with(x, v, fv)).collect())
            }
            Expr::Index(a, b) => Expr::Index(
                Box::new(a.subst_with(x, v, fv)),
                Box::new(b.subst_with(x, v, fv)),
            ),
            Expr::App(a, b) => Expr::App(
                Box::new(a.subst_with(x, v, fv)),
                Box::new(b.subst_with(x, v, fv)),
            ),
            Expr::If(c, t, e) => Expr::If(
                Box::new(c.subst_with(x, v, fv)),
                Box::new(t.subst_with(x, v, fv)),
                Box::new(e.subst_with(x, v, fv)),
            ),
        }
    }

    /// Structural equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &Expr) -> bool {
        alpha_eq(self, other, &mut Vec::new())
    }
}

fn alpha_eq(a: &Expr, b: &Expr, env: &mut Vec<(Ident, Ident)>) -> bool {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => x == y,
        (Expr::Builtin(x), Expr::Builtin(y)) => x == y,
        (Expr::Var(x), Expr::Var(y)) => {
            for (l, r) in env.iter().rev() {
                if l == x || r == y {
                    return l == x && r == y;
                }
            }
            x == y
        }
        (Expr::Lambda(x, bx), Expr::Lambda(y, by)) => {
            env.push((x.clone(), y.clone()));
            let eq = alpha_eq(bx, by, env);
            env.pop();
            eq
        }
        (Expr::Array(xs), Expr::Array(ys)) | (Expr::Tuple(xs), Expr::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_eq(x, y, env))
        }
        (Expr::Index(a1, b1), Expr::Index(a2, b2)) | (Expr::App(a1, b1), Expr::App(a2, b2)) => {
            alpha_eq(a1, a2, env) && alpha_eq(b1, b2, env)
        }
        (Expr::If(c1, t1, e1), Expr::If(c2, t2, e2)) => {
            alpha_eq(c1, c2, env) && alpha_eq(t1, t2, env) && alpha_eq(e1, e2, env)
        }
        _ => false,
    }
}

pub(crate) fn fresh_ident(base: &str, taken: impl Fn(&str) -> bool) -> Ident {
    (1..)
        .map(|k| format!("{base}_{k}"))
        .find(|cand| !taken(cand))
        .expect("unbounded candidate supply")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::pretty(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let arr = Expr::Array(vec![Expr::num(1), Expr::num(2), Expr::num(3)]);
        assert!(arr.is_value());
        let id = Expr::lambda("x", Expr::var("x"));
        let not = Expr::Array(vec![Expr::num(1), Expr::app(id.clone(), Expr::num(2))]);
        assert!(!not.is_value());
        assert!(Expr::Builtin(Builtin::Map).is_value());
        assert!(Expr::Tuple(vec![]).is_value());
        assert!(!Expr::var("x").is_value());
    }

    #[test]
    fn free_variables() {
        assert_eq!(Expr::var("x").free_vars(), BTreeSet::from(["x".to_string()]));
        assert!(Expr::lambda("x", Expr::var("x")).free_vars().is_empty());
        let e = Expr::app(Expr::var("f"), Expr::lambda("x", Expr::var("y")));
        assert_eq!(
            e.free_vars(),
            BTreeSet::from(["f".to_string(), "y".to_string()])
        );
    }

    #[test]
    fn substitution_cases() {
        assert_eq!(Expr::var("x").substitute("x", &Expr::num(3)), Expr::num(3));
        let shadow = Expr::lambda("x", Expr::var("x"));
        assert_eq!(shadow.substitute("x", &Expr::num(3)), shadow);

        let e = Expr::lambda("y", Expr::var("x"));
        let v = Expr::lambda("z", Expr::var("y"));
        let out = e.substitute("x", &v);
        match &out {
            Expr::Lambda(p, body) => {
                assert_ne!(p, "y");
                assert_eq!(**body, v);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(out.alpha_eq(&Expr::lambda("w", v.clone())));
    }

    #[test]
    fn alpha_equivalence() {
        let a = Expr::lambda("x", Expr::lambda("y", Expr::var("x")));
        let b = Expr::lambda("p", Expr::lambda("q", Expr::var("p")));
        let c = Expr::lambda("p", Expr::lambda("q", Expr::var("q")));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
        assert!(!Expr::var("x").alpha_eq(&Expr::var("y")));
    }
}
