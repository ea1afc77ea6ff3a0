//! Recursive-descent parser for `.butf` source.
//!
//! ```text
//! expr     ::= '\' IDENT '.' expr
//!            | 'if' expr 'then' expr 'else' expr
//!            | additive
//! additive ::= mult (('+' | '-') mult)*
//! mult     ::= app (('*' | '/') app)*
//! app      ::= postfix postfix*
//! postfix  ::= atom ('[' expr ']')*          -- '[' written with no space before it
//! atom     ::= INT | '-' INT | IDENT | 'map' | 'iota' | 'size'
//!            | '(' ')' | '(' expr ',' ')' | '(' expr (',' expr)+ ','? ')'
//!            | '(' expr ')' | '(' OP ')' | '[' (expr (',' expr)*)? ']'
//! ```
//!
//! `a + b` is sugar for `(+) (a, b)`. An array literal directly after an
//! expression with no whitespace in between is an index; with whitespace it is
//! an argument, so `size [1, 2]` applies `size`.

use num_bigint::BigInt;

use super::syntax::{ArithOp, Builtin, Expr};
use crate::error::SyntaxError;
use crate::text::{is_ident_start, Cursor};

pub const KEYWORDS: [&str; 6] = ["map", "iota", "size", "if", "then", "else"];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c))
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Map,
    Iota,
    Size,
    If,
    Then,
    Else,
    Backslash,
    Dot,
    LParen,
    RParen,
    /// `tight` is set when no whitespace separates it from the previous token.
    LBracket { tight: bool },
    RBracket,
    Comma,
    Op(ArithOp),
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut cur = Cursor::new(src);
    let mut out: Vec<Spanned> = Vec::new();
    loop {
        let gap = cur.skip_trivia();
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
                "map" => Tok::Map,
                "iota" => Tok::Iota,
                "size" => Tok::Size,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                other => Tok::Ident(other.to_string()),
            }
        } else {
            cur.bump();
            match c {
                '\\' | 'λ' => Tok::Backslash,
                '.' => Tok::Dot,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => {
                    let ends_expr = matches!(
                        out.last().map(|s| &s.tok),
                        Some(
                            Tok::Int(_)
                                | Tok::Ident(_)
                                | Tok::Map
                                | Tok::Iota
                                | Tok::Size
                                | Tok::RParen
                                | Tok::RBracket
                        )
                    );
                    Tok::LBracket {
                        tight: ends_expr && !gap,
                    }
                }
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                _ => match ArithOp::from_symbol(c) {
                    Some(op) => Tok::Op(op),
                    None => {
                        return Err(SyntaxError::new(
                            line,
                            column,
                            format!("unexpected character `{c}`"),
                        ))
                    }
                },
            }
        };
        out.push(Spanned { tok, line, column });
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

pub fn parse(src: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        t => Err(p.error(format!("unexpected {} after expression", describe(t)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("number `{n}`"),
        Tok::Ident(x) => format!("identifier `{x}`"),
        Tok::Eof => "end of input".to_string(),
        Tok::Map => "`map`".into(),
        Tok::Iota => "`iota`".into(),
        Tok::Size => "`size`".into(),
        Tok::If => "`if`".into(),
        Tok::Then => "`then`".into(),
        Tok::Else => "`else`".into(),
        Tok::Backslash => "`\\`".into(),
        Tok::Dot => "`.`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket { .. } => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Op(op) => format!("`{}`", op.symbol()),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn next(&mut self) -> Tok {
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

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                describe(&want),
                describe(self.peek())
            )))
        }
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Tok::Backslash => {
                self.next();
                let param = match self.peek().clone() {
                    Tok::Ident(x) => {
                        self.next();
                        x
                    }
                    t => {
                        return Err(self.error(format!(
                            "expected parameter name, found {}",
                            describe(&t)
                        )));
                    }
                };
                self.expect(Tok::Dot)?;
                let body = self.expr()?;
                Ok(Expr::Lambda(param, Box::new(body)))
            }
            Tok::If => {
                self.next();
                let c = self.expr()?;
                self.expect(Tok::Then)?;
                let t = self.expr()?;
                self.expect(Tok::Else)?;
                let e = self.expr()?;
                Ok(Expr::if_(c, t, e))
            }
            _ => self.infix(1),
        }
    }

    fn infix(&mut self, level: u8) -> Result<Expr, SyntaxError> {
        if level > 2 {
            return self.app();
        }
        let mut lhs = self.infix(level + 1)?;
        while let Tok::Op(op) = *self.peek() {
            if op.precedence() != level {
                break;
            }
            self.next();
            let rhs = self.infix(level + 1)?;
            lhs = Expr::arith(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn app(&mut self) -> Result<Expr, SyntaxError> {
        let mut fun = self.postfix()?;
        while self.starts_argument() {
            let arg = self.postfix()?;
            fun = Expr::app(fun, arg);
        }
        Ok(fun)
    }

    fn starts_argument(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Int(_)
                | Tok::Ident(_)
                | Tok::Map
                | Tok::Iota
                | Tok::Size
                | Tok::LParen
                | Tok::LBracket { tight: false }
        )
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.atom()?;
        while let Tok::LBracket { tight: true } = self.peek() {
            self.next();
            let idx = self.expr()?;
            self.expect(Tok::RBracket)?;
            e = Expr::index(e, idx);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        if !matches!(self.peek(), Tok::Eof) {
            return self.atom_after(self.pos);
        }
        Err(self.error("expected an expression, found end of input"))
    }

    fn atom_after(&mut self, start: usize) -> Result<Expr, SyntaxError> {
        match self.next() {
            Tok::Int(n) => Ok(Expr::Num(n)),
            Tok::Op(ArithOp::Sub) => match self.peek().clone() {
                Tok::Int(n) => {
                    self.next();
                    Ok(Expr::Num(-n))
                }
                t => {
                    Err(self.error(format!(
                        "expected a number after unary `-`, found {}",
                        describe(&t)
                    )))
                }
            },
            Tok::Ident(x) => Ok(Expr::Var(x)),
            Tok::Map => Ok(Expr::Builtin(Builtin::Map)),
            Tok::Iota => Ok(Expr::Builtin(Builtin::Iota)),
            Tok::Size => Ok(Expr::Builtin(Builtin::Size)),
            Tok::LBracket { .. } => {
                let items = self.list(Tok::RBracket)?;
                Ok(Expr::Array(items))
            }
            Tok::LParen => self.paren(),
            t => {
                self.pos = start;
                Err(self.error(format!("expected an expression, found {}", describe(&t))))
            }
        }
    }

    fn paren(&mut self) -> Result<Expr, SyntaxError> {
        if let (Tok::Op(op), Tok::RParen) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.next();
            self.next();
            return Ok(Expr::Builtin(Builtin::Arith(op)));
        }
        if *self.peek() == Tok::RParen {
            self.next();
            return Ok(Expr::Tuple(Vec::new()));
        }
        let first = self.expr()?;
        match self.peek().clone() {
            Tok::RParen => {
                self.next();
                Ok(first)
            }
            Tok::Comma => {
                self.next();
                let mut items = vec![first];
                items.extend(self.list(Tok::RParen)?);
                Ok(Expr::Tuple(items))
            }
            t => {
                Err(self.error(format!("expected `)` or `,`, found {}", describe(&t))))
            }
        }
    }

    /// Comma-separated expressions up to `close`; a trailing comma is allowed.
    fn list(&mut self, close: Tok) -> Result<Vec<Expr>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            if *self.peek() == close {
                self.next();
                return Ok(items);
            }
            items.push(self.expr()?);
            match self.peek() {
                Tok::Comma => {
                    self.next();
                }
                t if *t == close => {}
                t => {
                    return Err(self.error(format!(
                        "expected `,` or {}, found {}",
                        describe(&close),
                        describe(t)
                    )))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_examples() {
        assert_eq!(
            parse("iota 3").unwrap(),
            Expr::app(Expr::Builtin(Builtin::Iota), Expr::num(3))
        );
        assert_eq!(
            parse("(\\x. x) 5").unwrap(),
            Expr::app(Expr::lambda("x", Expr::var("x")), Expr::num(5))
        );
        let inc = Expr::lambda(
            "x",
            Expr::arith(ArithOp::Add, Expr::var("x"), Expr::num(1)),
        );
        assert_eq!(
            parse("map ((\\x. x+1), [1,2])").unwrap(),
            Expr::app(
                Expr::Builtin(Builtin::Map),
                Expr::Tuple(vec![inc, Expr::Array(vec![Expr::num(1), Expr::num(2)])])
            )
        );
    }

    #[test]
    fn indexing_versus_application() {
        assert_eq!(
            parse("size [4, 5]").unwrap(),
            Expr::app(
                Expr::Builtin(Builtin::Size),
                Expr::Array(vec![Expr::num(4), Expr::num(5)])
            )
        );
        assert_eq!(
            parse("[10,20,30][1]").unwrap(),
            Expr::index(
                Expr::Array(vec![Expr::num(10), Expr::num(20), Expr::num(30)]),
                Expr::num(1)
            )
        );
        // indexing binds tighter than application
        assert_eq!(
            parse("f a[0]").unwrap(),
            Expr::app(Expr::var("f"), Expr::index(Expr::var("a"), Expr::num(0)))
        );
    }

    #[test]
    fn tuples_and_sections() {
        assert_eq!(parse("()").unwrap(), Expr::Tuple(vec![]));
        assert_eq!(parse("(1,)").unwrap(), Expr::Tuple(vec![Expr::num(1)]));
        assert_eq!(parse("(1)").unwrap(), Expr::num(1));
        assert_eq!(
            parse("(-)").unwrap(),
            Expr::Builtin(Builtin::Arith(ArithOp::Sub))
        );
        assert_eq!(parse("(-3)").unwrap(), Expr::num(-3));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("1 - 2 - 3 * 4").unwrap();
        let expect = Expr::arith(
            ArithOp::Sub,
            Expr::arith(ArithOp::Sub, Expr::num(1), Expr::num(2)),
            Expr::arith(ArithOp::Mul, Expr::num(3), Expr::num(4)),
        );
        assert_eq!(e, expect);
        assert_eq!(
            parse("f x y").unwrap(),
            Expr::app(Expr::app(Expr::var("f"), Expr::var("x")), Expr::var("y"))
        );
    }

    #[test]
    fn comments_and_errors() {
        assert_eq!(parse("-- a comment\n 7 -- trailing").unwrap(), Expr::num(7));
        let err = parse("(1, 2").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse("\n  if 1 then 2").unwrap_err();
        assert_eq!((err.line, err.column), (2, 14));
        assert!(parse("x # y").is_err());
        // free variables are fine at parse time
        assert_eq!(parse("zzz").unwrap(), Expr::var("zzz"));
    }

    #[test]
    fn large_literals() {
        let e = parse("123456789012345678901234567890").unwrap();
        assert_eq!(
            e,
            Expr::Num("123456789012345678901234567890".parse().unwrap())
        );
    }
}
