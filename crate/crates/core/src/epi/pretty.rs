//! Text rendering. Output re-parses to the same tree, except for run-time
//! names carrying a `$` suffix.

use std::fmt::{self, Display, Formatter, Write};

use super::syntax::{Action, Channel, Label, Pattern, Process, Term};

fn write_term(t: &Term, prec: u8, f: &mut Formatter<'_>) -> fmt::Result {
    match t {
        Term::Num(n) => write!(f, "{n}"),
        Term::Name(n) => write!(f, "{n}"),
        Term::Var(x) => f.write_str(x),
        Term::BinOp(op, a, b) => {
            let level = op.precedence();
            if prec > level {
                f.write_char('(')?;
            }
            write_term(a, level, f)?;
            write!(f, " {} ", op.symbol())?;
            write_term(b, level + 1, f)?;
            if prec > level {
                f.write_char(')')?;
            }
            Ok(())
        }
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_term(self, 0, f)
    }
}

impl Display for Label {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Label::All => f.write_str("all"),
            Label::Tup => f.write_str("tup"),
            Label::Len => f.write_str("len"),
            Label::Index(t @ Term::BinOp(..)) => write!(f, "({t})"),
            Label::Index(t) => write!(f, "{t}"),
        }
    }
}

impl Display for Channel {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.base {
            t @ Term::BinOp(..) => write!(f, "({t})")?,
            t => write!(f, "{t}")?,
        }
        if let Some(l) = &self.label {
            write!(f, ".{l}")?;
        }
        Ok(())
    }
}

fn comma_list<T: Display>(items: &[T], f: &mut Formatter<'_>) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl Display for Pattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Bind(x) => f.write_str(x),
            Pattern::Wildcard => f.write_char('_'),
        }
    }
}

impl Display for Action {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Action::Send(c, ts) => {
                write!(f, "{c}<")?;
                comma_list(ts, f)?;
                f.write_char('>')
            }
            Action::Broadcast(c, ts) => {
                write!(f, "{c}:<")?;
                comma_list(ts, f)?;
                f.write_char('>')
            }
            Action::Recv(c, ps) => {
                write!(f, "{c}(")?;
                comma_list(ps, f)?;
                f.write_char(')')
            }
        }
    }
}

const PAR: u8 = 0;
const UNARY: u8 = 1;

fn write_process(p: &Process, prec: u8, f: &mut Formatter<'_>) -> fmt::Result {
    match p {
        Process::Nil => f.write_char('0'),
        Process::Par(a, b) => {
            if prec > PAR {
                f.write_char('(')?;
            }
            write_process(a, UNARY, f)?;
            f.write_str(" | ")?;
            write_process(b, PAR, f)?;
            if prec > PAR {
                f.write_char(')')?;
            }
            Ok(())
        }
        Process::Repl(q) => {
            f.write_char('!')?;
            write_process(q, UNARY, f)
        }
        Process::Bullet(q) => {
            f.write_char('*')?;
            write_process(q, UNARY, f)
        }
        Process::New(n, body) => {
            write!(f, "new {n}")?;
            let mut body = body;
            while let Process::New(m, inner) = &**body {
                write!(f, ", {m}")?;
                body = inner;
            }
            f.write_str(". ")?;
            write_process(body, UNARY, f)
        }
        Process::Act(a, cont) => {
            write!(f, "{a}")?;
            if **cont != Process::Nil {
                f.write_char('.')?;
                write_process(cont, UNARY, f)?;
            }
            Ok(())
        }
        Process::Match {
            lhs,
            op,
            rhs,
            then,
            otherwise,
        } => {
            write!(f, "[{lhs} {} {rhs}] ", op.symbol())?;
            if matches!(**then, Process::Match { .. }) {
                f.write_char('(')?;
                write_process(then, PAR, f)?;
                f.write_char(')')?;
            } else {
                write_process(then, UNARY, f)?;
            }
            f.write_str(", ")?;
            write_process(otherwise, UNARY, f)
        }
    }
}

impl Display for Process {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_process(self, PAR, f)
    }
}

#[cfg(test)]
mod tests {
    use crate::butf::ArithOp;
    use crate::epi::syntax::*;

    #[test]
    fn renders_core_forms() {
        let a = Name::new("a");
        let p = Process::new_all(
            [a.clone(), Name::new("b")],
            Process::par(
                Process::send(Channel::named(&a), vec![Term::num(1)], Process::Nil),
                Process::recv(
                    Channel::with(Term::name("h"), Label::Index(Term::num(-1))),
                    vec![Pattern::bind("x"), Pattern::Wildcard],
                    Process::Nil,
                ),
            ),
        );
        assert_eq!(p.to_string(), "new a, b. (a<1> | h.-1(x, _))");
        let q = Process::bullet(Process::matching(
            Term::binop(ArithOp::Sub, Term::var("m"), Term::num(1)),
            Comparator::Ge,
            Term::num(0),
            Process::broadcast(Channel::with(Term::name("h"), Label::All), vec![], Process::Nil),
            Process::Nil,
        ));
        assert_eq!(q.to_string(), "*[m - 1 >= 0] h.all:<>, 0");
    }
}
