//! Parser for process text.
//!
//! ```text
//! proc    ::= unary ('|' unary)*
//! unary   ::= '0' | '(' proc ')' | '!' unary | '*' unary
//!           | 'new' IDENT (',' IDENT)* '.' unary
//!           | '[' term CMP term ']' unary ',' unary
//!           | channel '<' terms '>' cont          -- send
//!           | channel ':' '<' terms '>' cont      -- broadcast
//!           | channel '(' patterns ')' cont       -- receive
//! cont    ::= ('.' unary)?
//! channel ::= IDENT ('.' label)?
//! label   ::= 'len' | 'all' | 'tup' | INT | '-' INT | IDENT | '(' term ')'
//! term    ::= factor (('+' | '-') factor)*
//! factor  ::= atom (('*' | '/') atom)*
//! atom    ::= INT | '-' INT | IDENT | '(' term ')'
//! CMP     ::= '<' | '>' | '<=' | '>=' | '=' | '!='
//! ```
//!
//! An identifier is a variable when an enclosing receive binds it and a name
//! otherwise.

use std::sync::Arc;

use num_bigint::BigInt;

use super::syntax::{Action, Channel, Comparator, Label, Name, Pattern, Process, Term};
use crate::butf::ArithOp;
use crate::error::SyntaxError;
use crate::text::{is_ident_start, Cursor};

pub const KEYWORDS: [&str; 4] = ["new", "all", "tup", "len"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    New,
    All,
    Tup,
    Len,
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 20] = [
    "<=", ">=", "!=", "(", ")", "[", "]", "<", ">", "=", ",", ".", "|", "!", "*", ":", "+", "-",
    "/", "_",
];

fn lex(src: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();
    loop {
        cur.skip_trivia();
        let (line, column) = (cur.line, cur.column);
        let Some(c) = cur.peek() else {
            out.push(Spanned {
                tok: Tok::Eof,
                line,
                column,
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() {
            Tok::Int(cur.digits().parse().expect("digits"))
        } else if is_ident_start(c) {
            match cur.ident_tail() {
                "new" => Tok::New,
                "all" => Tok::All,
                "tup" => Tok::Tup,
                "len" => Tok::Len,
                "_" => Tok::Sym("_"),
                other => Tok::Ident(other.to_string()),
            }
        } else {
            let two: String = [Some(c), cur.peek2()].into_iter().flatten().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| two.starts_with(**s))
                .ok_or_else(|| cur.error(format!("unexpected character `{c}`")))?;
            for _ in 0..sym.len() {
                cur.bump();
            }
            Tok::Sym(sym)
        };
        out.push(Spanned { tok, line, column });
    }
}

pub fn parse_process(src: &str) -> Result<Process, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        scope: Vec::new(),
    };
    let proc = p.process()?;
    match p.peek() {
        Tok::Eof => Ok(proc),
        _ => Err(p.error("expected end of input")),
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Innermost last; `true` marks a variable binder.
    scope: Vec<(String, bool)>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> SyntaxError {
        let s = &self.toks[self.pos];
        SyntaxError::new(s.line, s.column, msg)
    }

    fn at(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn eat(&mut self, sym: &str) -> bool {
        if self.at(sym) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), SyntaxError> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{sym}`")))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn resolve(&self, id: &str) -> Term {
        match self.scope.iter().rev().find(|(n, _)| n == id) {
            Some((_, true)) => Term::Var(Arc::from(id)),
            _ => Term::Name(Name::new(id)),
        }
    }

    fn process(&mut self) -> Result<Process, SyntaxError> {
        let first = self.unary()?;
        if self.eat("|") {
            let rest = self.process()?;
            Ok(Process::par(first, rest))
        } else {
            Ok(first)
        }
    }

    fn unary(&mut self) -> Result<Process, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) if n == BigInt::from(0) => {
                self.advance();
                Ok(Process::Nil)
            }
            Tok::Sym("(") => {
                self.advance();
                let p = self.process()?;
                self.expect(")")?;
                Ok(p)
            }
            Tok::Sym("!") => {
                self.advance();
                Ok(Process::repl(self.unary()?))
            }
            Tok::Sym("*") => {
                self.advance();
                Ok(Process::bullet(self.unary()?))
            }
            Tok::New => {
                self.advance();
                let mut names = vec![self.ident()?];
                while self.eat(",") {
                    names.push(self.ident()?);
                }
                self.expect(".")?;
                let depth = self.scope.len();
                self.scope.extend(names.iter().map(|n| (n.clone(), false)));
                let body = self.unary();
                self.scope.truncate(depth);
                Ok(Process::new_all(names.iter().map(|n| Name::new(n)), body?))
            }
            Tok::Sym("[") => {
                self.advance();
                let lhs = self.term()?;
                let op = self.comparator()?;
                let rhs = self.term()?;
                self.expect("]")?;
                let then = self.unary()?;
                self.expect(",")?;
                let otherwise = self.unary()?;
                Ok(Process::matching(lhs, op, rhs, then, otherwise))
            }
            Tok::Ident(_) => self.action(),
            _ => Err(self.error("expected a process")),
        }
    }

    fn comparator(&mut self) -> Result<Comparator, SyntaxError> {
        let op = match self.peek() {
            Tok::Sym(s) => Comparator::ALL.into_iter().find(|c| c.symbol() == *s),
            _ => None,
        };
        match op {
            Some(op) => {
                self.advance();
                Ok(op)
            }
            None => Err(self.error("expected a comparison operator")),
        }
    }

    fn channel(&mut self) -> Result<Channel, SyntaxError> {
        let id = self.ident()?;
        let base = self.resolve(&id);
        if !self.eat(".") {
            return Ok(Channel::plain(base));
        }
        let label = match self.peek().clone() {
            Tok::Len => Label::Len,
            Tok::All => Label::All,
            Tok::Tup => Label::Tup,
            Tok::Int(n) => Label::Index(Term::Num(n)),
            Tok::Sym("-") => {
                self.advance();
                match self.peek().clone() {
                    Tok::Int(n) => Label::Index(Term::Num(-n)),
                    _ => return Err(self.error("expected an integer label")),
                }
            }
            Tok::Ident(id) => Label::Index(self.resolve(&id)),
            Tok::Sym("(") => {
                self.advance();
                let t = self.term()?;
                if !self.at(")") {
                    return Err(self.error("expected `)`"));
                }
                Label::Index(t)
            }
            _ => return Err(self.error("expected a channel label")),
        };
        self.advance();
        Ok(Channel {
            base,
            label: Some(label),
        })
    }

    fn action(&mut self) -> Result<Process, SyntaxError> {
        let chan = self.channel()?;
        if self.eat("(") {
            let mut pats = Vec::new();
            if !self.at(")") {
                loop {
                    pats.push(if self.eat("_") {
                        Pattern::Wildcard
                    } else {
                        Pattern::Bind(Arc::from(self.ident()?.as_str()))
                    });
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
            let depth = self.scope.len();
            self.scope
                .extend(pats.iter().filter_map(Pattern::var).map(|x| (x.to_string(), true)));
            let cont = self.continuation();
            self.scope.truncate(depth);
            return Ok(Process::act(Action::Recv(chan, pats), cont?));
        }
        let broadcast = self.eat(":");
        self.expect("<")?;
        let mut terms = Vec::new();
        if !self.at(">") {
            loop {
                terms.push(self.term()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(">")?;
        let cont = self.continuation()?;
        let a = if broadcast {
            Action::Broadcast(chan, terms)
        } else {
            Action::Send(chan, terms)
        };
        Ok(Process::act(a, cont))
    }

    fn continuation(&mut self) -> Result<Process, SyntaxError> {
        if self.eat(".") {
            self.unary()
        } else {
            Ok(Process::Nil)
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.at("+") {
                ArithOp::Add
            } else if self.at("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            self.advance();
            lhs = Term::binop(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<Term, SyntaxError> {
        let mut lhs = self.atom()?;
        loop {
            let op = if self.at("*") {
                ArithOp::Mul
            } else if self.at("/") {
                ArithOp::Div
            } else {
                return Ok(lhs);
            };
            self.advance();
            lhs = Term::binop(op, lhs, self.atom()?);
        }
    }

    fn atom(&mut self) -> Result<Term, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Term::Num(n))
            }
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.advance();
                let Tok::Int(n) = self.advance() else {
                    unreachable!()
                };
                Ok(Term::Num(-n))
            }
            Tok::Ident(id) => {
                self.advance();
                Ok(self.resolve(&id))
            }
            Tok::Sym("(") => {
                self.advance();
                let t = self.term()?;
                self.expect(")")?;
                Ok(t)
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_forms() {
        let p = parse_process("new a. a<1>").unwrap();
        assert_eq!(
            p,
            Process::new_name(
                Name::new("a"),
                Process::send(Channel::named(&Name::new("a")), vec![Term::num(1)], Process::Nil)
            )
        );
        assert!(matches!(
            parse_process("c:<v>").unwrap(),
            Process::Act(Action::Broadcast(..), _)
        ));
        match parse_process("h.len<3>").unwrap() {
            Process::Act(Action::Send(c, ts), _) => {
                assert_eq!(c, Channel::with(Term::name("h"), Label::Len));
                assert_eq!(ts, vec![Term::num(3)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn variables_follow_receive_scope() {
        let p = parse_process("c(x, _).x<y> | x<1>").unwrap();
        let Process::Par(l, r) = p else { panic!() };
        let Process::Act(Action::Recv(_, pats), k) = &*l else {
            panic!()
        };
        assert_eq!(pats, &vec![Pattern::bind("x"), Pattern::Wildcard]);
        assert_eq!(
            **k,
            Process::send(Channel::plain(Term::var("x")), vec![Term::name("y")], Process::Nil)
        );
        // outside the receive, x is a name
        let Process::Act(Action::Send(c, _), _) = &*r else {
            panic!()
        };
        assert_eq!(c.base, Term::name("x"));
    }

    #[test]
    fn prefixes_bind_tighter_than_par() {
        let p = parse_process("!a(x).b<x> | new c. c<> | *d()").unwrap();
        let Process::Par(l, rest) = p else { panic!() };
        assert!(matches!(*l, Process::Repl(_)));
        let Process::Par(m, r) = &*rest else { panic!() };
        assert!(matches!(**m, Process::New(..)));
        assert!(matches!(**r, Process::Bullet(_)));
    }

    #[test]
    fn labels_and_terms() {
        let p = parse_process("c(m).[m >= 1] (r.-1<m - 1, -2 * 3> | h.(m + 1)<>), d<>").unwrap();
        assert_eq!(
            p.to_string(),
            "c(m).[m >= 1] (r.-1<m - 1, -2 * 3> | h.(m + 1)<>), d<>"
        );
    }

    #[test]
    fn round_trip_samples() {
        for src in [
            "0",
            "a<1, 2>.b(x).x<x + 1>",
            "new f. (o<f> | !f(x, k).k<x>)",
            "(a<> | b<>) | c<>",
            "*[x = 0] 0, ([y != 1] a<>, b<>)",
            "c(x).[x < 0] ([x > -5] a<>, 0), h.x(i, v).o<v>",
            "!h.all(k).k<0, 5> | !h.0<0, 5>",
            "a:<>.0",
        ] {
            let p = parse_process(src).unwrap();
            assert_eq!(parse_process(&p.to_string()).unwrap(), p, "{src}");
        }
    }

    #[test]
    fn errors_have_positions() {
        let e = parse_process("a<1>.\n  (b<> | )").unwrap_err();
        assert_eq!((e.line, e.column), (2, 10));
        assert!(parse_process("a + b").is_err());
        assert!(parse_process("a<1> $").is_err());
    }
}
