//! Compositional encoding of BUTF expressions as Eπ processes.
//!
//! `translate(e, o)` yields a process that eventually sends the encoding of
//! the value of `e` on `o`. Numbers are sent as they are; arrays, tuples
//! and functions are sent as handles, restricted names served by
//! replicated processes:
//!
//! * a function `f` answers `f<v, k>` by running its body with output `k`;
//! * an array `h` has one cell per element answering `h.i(i, v)` and the
//!   broadcast `h.all:<c>`, plus `!h.len<n>`;
//! * a tuple `h` serves `!h.tup<v1, ..., vn>`.
//!
//! Every BUTF reduction is matched by exactly one bullet-marked step.

mod wellformed;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::butf::{ArithOp, Builtin, Expr};
use crate::epi::{Channel, Comparator, Label, Name, Pattern, Process, Term};

pub use wellformed::{check_well_behaved, well_behaved};

/// Role of a generated channel, visible in its printed prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ChannelRole {
    Output,
    Handle,
    Signal,
    Collection,
    Function,
    ReplyR,
    Counter,
}

impl ChannelRole {
    pub const ALL: [ChannelRole; 7] = [
        ChannelRole::Output,
        ChannelRole::Handle,
        ChannelRole::Signal,
        ChannelRole::Collection,
        ChannelRole::Function,
        ChannelRole::ReplyR,
        ChannelRole::Counter,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            ChannelRole::Output => "o",
            ChannelRole::Handle => "h",
            ChannelRole::Signal => "d",
            ChannelRole::Collection => "vals",
            ChannelRole::Function => "f",
            ChannelRole::ReplyR => "r",
            ChannelRole::Counter => "c",
        }
    }

    /// Recovers the role from a generated (or run-time renamed) name.
    pub fn of(name: &Name) -> Option<ChannelRole> {
        let stem = name.base().trim_end_matches(|c: char| c.is_ascii_digit());
        ChannelRole::ALL.into_iter().find(|r| r.prefix() == stem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TranslationOptions {
    /// Bullets on the committing steps of `size` and `iota`.
    pub strict_bullets: bool,
    /// Use the counter guard `m >= 0` with parallel outputs, which also
    /// emits the pair (-1, -1) and lets `done` overtake the tokens.
    pub paper_literal_repeat: bool,
}

impl Default for TranslationOptions {
    fn default() -> Self {
        TranslationOptions {
            strict_bullets: true,
            paper_literal_repeat: false,
        }
    }
}

impl TranslationOptions {
    /// A one-line comment recording the options.
    pub fn header(&self) -> String {
        format!(
            "-- strict_bullets={} paper_literal_repeat={}",
            self.strict_bullets, self.paper_literal_repeat
        )
    }
}

/// Per-prefix counters that skip every identifier of the source program.
#[derive(Debug, Default)]
pub struct Fresh {
    counters: HashMap<&'static str, usize>,
    avoid: BTreeSet<String>,
}

impl Fresh {
    pub fn avoiding(avoid: BTreeSet<String>) -> Fresh {
        Fresh {
            counters: HashMap::new(),
            avoid,
        }
    }

    fn ident(&mut self, prefix: &'static str) -> String {
        let k = self.counters.entry(prefix).or_insert(0);
        loop {
            *k += 1;
            let s = format!("{prefix}{k}");
            if !self.avoid.contains(&s) {
                return s;
            }
        }
    }

    pub fn name(&mut self, role: ChannelRole) -> Name {
        Name::new(&self.ident(role.prefix()))
    }

    fn var(&mut self, prefix: &'static str) -> String {
        self.ident(prefix)
    }
}

/// Identifiers that cannot be used as process variables.
const RESERVED: [&str; 5] = ["new", "all", "tup", "len", "_"];

pub fn translate(e: &Expr, o: &Name, opts: &TranslationOptions) -> Process {
    let mut avoid = e.identifiers();
    avoid.insert(o.as_str().to_string());
    let mut t = Translator {
        fresh: Fresh::avoiding(avoid),
        opts: *opts,
        env: Vec::new(),
    };
    t.expr(e, &Term::Name(o.clone()))
}

/// `!h.all(k).k<i, v> | !h.i<i, v>`.
pub fn cell(h: &Term, i: &Term, v: &Term, k: &str) -> Process {
    let [a, b] = cell_parts(h, i, v, k);
    Process::par(a, b)
}

fn cell_parts(h: &Term, i: &Term, v: &Term, k: &str) -> [Process; 2] {
    [
        Process::repl(Process::recv(
            Channel::with(h.clone(), Label::All),
            vec![Pattern::bind(k)],
            Process::send(
                Channel::plain(Term::var(k)),
                vec![i.clone(), v.clone()],
                Process::Nil,
            ),
        )),
        Process::repl(Process::send(
            Channel::with(h.clone(), Label::Index(i.clone())),
            vec![i.clone(), v.clone()],
            Process::Nil,
        )),
    ]
}

/// Sends the pairs (s-1, s-1), ..., (0, 0) on `r`, then `d<>`.
pub fn repeat(s: &Term, r: &Name, d: &Name, fresh: &mut Fresh, opts: &TranslationOptions) -> Process {
    let c = fresh.name(ChannelRole::Counter);
    let m = fresh.var("m");
    let pred = Term::binop(ArithOp::Sub, Term::var(&m), Term::num(1));
    let emit = |cont: Process| Process::send(Channel::named(r), vec![pred.clone(), pred.clone()], cont);
    let again = Process::send(Channel::named(&c), vec![pred.clone()], Process::Nil);
    let (bound, body) = if opts.paper_literal_repeat {
        (0, Process::par(emit(Process::Nil), again))
    } else {
        (1, emit(again))
    };
    let server = Process::repl(Process::recv(
        Channel::named(&c),
        vec![Pattern::bind(&m)],
        Process::matching(
            Term::var(&m),
            Comparator::Ge,
            Term::num(bound),
            body,
            Process::send(Channel::named(d), vec![], Process::Nil),
        ),
    ));
    Process::new_name(
        c.clone(),
        Process::par(
            server,
            Process::send(Channel::named(&c), vec![s.clone()], Process::Nil),
        ),
    )
}

struct Translator {
    fresh: Fresh,
    opts: TranslationOptions,
    /// BUTF variable to process variable, innermost last.
    env: Vec<(String, String)>,
}

fn out(ch: &Term, vals: Vec<Term>) -> Process {
    Process::send(Channel::plain(ch.clone()), vals, Process::Nil)
}

fn recv1(ch: &Term, x: &str, cont: Process) -> Process {
    Process::recv(Channel::plain(ch.clone()), vec![Pattern::bind(x)], cont)
}

impl Translator {
    fn lookup(&self, x: &str) -> Term {
        match self.env.iter().rev().find(|(b, _)| b == x) {
            Some((_, v)) => Term::var(v),
            None => Term::var(x),
        }
    }

    fn output(&mut self) -> (Name, Term) {
        let n = self.fresh.name(ChannelRole::Output);
        let t = Term::Name(n.clone());
        (n, t)
    }

    fn expr(&mut self, e: &Expr, o: &Term) -> Process {
        match e {
            Expr::Num(n) => out(o, vec![Term::Num(n.clone())]),
            Expr::Var(x) => out(o, vec![self.lookup(x)]),
            Expr::Builtin(b) => self.builtin_server(*b, o),
            Expr::Lambda(x, body) => {
                let f = self.fresh.name(ChannelRole::Function);
                let param = if RESERVED.contains(&x.as_str()) {
                    self.fresh.var("x")
                } else {
                    x.clone()
                };
                let k = self.fresh.var("k");
                self.env.push((x.clone(), param.clone()));
                let body = self.expr(body, &Term::var(&k));
                self.env.pop();
                Process::new_name(
                    f.clone(),
                    Process::par(
                        out(o, vec![Term::Name(f.clone())]),
                        Process::repl(Process::recv(
                            Channel::named(&f),
                            vec![Pattern::bind(&param), Pattern::bind(&k)],
                            body,
                        )),
                    ),
                )
            }
            Expr::App(fun, arg) => match &**fun {
                Expr::Builtin(b) => self.builtin_app(*b, arg, o),
                _ => {
                    let (n1, t1) = self.output();
                    let (n2, t2) = self.output();
                    let p1 = self.expr(fun, &t1);
                    let p2 = self.expr(arg, &t2);
                    let g = self.fresh.var("g");
                    let v = self.fresh.var("v");
                    let call = Process::bullet(Process::send(
                        Channel::plain(Term::var(&g)),
                        vec![Term::var(&v), o.clone()],
                        Process::Nil,
                    ));
                    Process::new_all(
                        [n1, n2],
                        Process::par_all([p1, p2, recv1(&t1, &g, recv1(&t2, &v, call))]),
                    )
                }
            },
            Expr::If(c, then, otherwise) => {
                let (n1, t1) = self.output();
                let pc = self.expr(c, &t1);
                let v = self.fresh.var("v");
                let pt = self.expr(then, o);
                let pe = self.expr(otherwise, o);
                let choice = Process::bullet(Process::matching(
                    Term::var(&v),
                    Comparator::Ne,
                    Term::num(0),
                    pt,
                    pe,
                ));
                Process::new_name(n1, Process::par(pc, recv1(&t1, &v, choice)))
            }
            Expr::Index(target, idx) => {
                let (n1, t1) = self.output();
                let (n2, t2) = self.output();
                let p1 = self.expr(target, &t1);
                let p2 = self.expr(idx, &t2);
                let a = self.fresh.var("a");
                let i = self.fresh.var("i");
                let j = self.fresh.var("i");
                let v = self.fresh.var("v");
                let read = Process::recv(
                    Channel::with(Term::var(&a), Label::Index(Term::var(&i))),
                    vec![Pattern::bind(&j), Pattern::bind(&v)],
                    out(o, vec![Term::var(&v)]),
                );
                let guard = Process::bullet(Process::matching(
                    Term::var(&i),
                    Comparator::Ge,
                    Term::num(0),
                    read,
                    Process::Nil,
                ));
                Process::new_all(
                    [n1, n2],
                    Process::par_all([p1, p2, recv1(&t1, &a, recv1(&t2, &i, guard))]),
                )
            }
            Expr::Tuple(items) => {
                let h = self.fresh.name(ChannelRole::Handle);
                let (names, parts, vals) = self.gather(items);
                let server = Process::repl(Process::send(
                    Channel::with(Term::Name(h.clone()), Label::Tup),
                    vals.iter().map(|v| Term::var(v)).collect(),
                    Process::Nil,
                ));
                let build = Process::new_name(
                    h.clone(),
                    Process::par(server, out(o, vec![Term::Name(h)])),
                );
                self.sequence(names, parts, &vals, build)
            }
            Expr::Array(items) => {
                let h = self.fresh.name(ChannelRole::Handle);
                let (names, parts, vals) = self.gather(items);
                let ht = Term::Name(h.clone());
                let mut body: Vec<Process> = Vec::new();
                for (i, v) in vals.iter().enumerate() {
                    let k = self.fresh.var("k");
                    body.extend(cell_parts(&ht, &Term::num(i), &Term::var(v), &k));
                }
                body.push(Process::repl(Process::send(
                    Channel::with(ht.clone(), Label::Len),
                    vec![Term::num(items.len())],
                    Process::Nil,
                )));
                body.push(out(o, vec![ht]));
                let inner = self.sequence(Vec::new(), parts, &vals, Process::par_all(body));
                Process::new_all(names.into_iter().chain([h]), inner)
            }
        }
    }

    /// Translates each item on its own fresh output; returns the outputs,
    /// the translations and the receiving variables.
    fn gather(&mut self, items: &[Expr]) -> (Vec<Name>, Vec<(Term, Process)>, Vec<String>) {
        let mut names = Vec::new();
        let mut parts = Vec::new();
        for _ in items {
            let (n, t) = self.output();
            names.push(n);
            parts.push((t, Process::Nil));
        }
        for (item, part) in items.iter().zip(parts.iter_mut()) {
            part.1 = self.expr(item, &part.0);
        }
        let vals = items.iter().map(|_| self.fresh.var("v")).collect();
        (names, parts, vals)
    }

    /// `new names. (P1 | ... | Pn | o1(v1). ... on(vn). then)`.
    fn sequence(
        &mut self,
        names: Vec<Name>,
        parts: Vec<(Term, Process)>,
        vals: &[String],
        then: Process,
    ) -> Process {
        let mut chain = then;
        for ((t, _), v) in parts.iter().zip(vals).rev() {
            chain = recv1(t, v, chain);
        }
        let procs = parts.into_iter().map(|(_, p)| p).chain([chain]);
        Process::new_all(names, Process::par_all(procs))
    }

    /// A builtin used as a value: a function server with no bullet of its
    /// own, since the application calling it already carries one.
    fn builtin_server(&mut self, b: Builtin, o: &Term) -> Process {
        let f = self.fresh.name(ChannelRole::Function);
        let a = self.fresh.var("a");
        let k = self.fresh.var("k");
        let core = self.core(b, &Term::var(&a), &Term::var(&k), false);
        Process::new_name(
            f.clone(),
            Process::par(
                out(o, vec![Term::Name(f.clone())]),
                Process::repl(Process::recv(
                    Channel::named(&f),
                    vec![Pattern::bind(&a), Pattern::bind(&k)],
                    core,
                )),
            ),
        )
    }

    /// A builtin applied directly: evaluate the argument, then run the
    /// builtin's protocol, which carries the one bullet for its reduction.
    fn builtin_app(&mut self, b: Builtin, arg: &Expr, o: &Term) -> Process {
        let (n1, t1) = self.output();
        let p1 = self.expr(arg, &t1);
        let a = self.fresh.var("a");
        let bullet = match b {
            Builtin::Size | Builtin::Iota => self.opts.strict_bullets,
            Builtin::Map | Builtin::Arith(_) => true,
        };
        let core = self.core(b, &Term::var(&a), o, bullet);
        Process::new_name(n1, Process::par(p1, recv1(&t1, &a, core)))
    }

    fn core(&mut self, b: Builtin, a: &Term, o: &Term, bullet: bool) -> Process {
        match b {
            Builtin::Size => {
                let n = self.fresh.var("n");
                Process::bullet_if(
                    bullet,
                    Process::recv(
                        Channel::with(a.clone(), Label::Len),
                        vec![Pattern::bind(&n)],
                        out(o, vec![Term::var(&n)]),
                    ),
                )
            }
            Builtin::Iota => {
                let vals = self.fresh.name(ChannelRole::Collection);
                let h = self.fresh.name(ChannelRole::Handle);
                let d = self.fresh.name(ChannelRole::Signal);
                let rep = repeat(a, &vals, &d, &mut self.fresh, &self.opts);
                let ht = Term::Name(h.clone());
                let publish = Process::bullet_if(
                    bullet,
                    Process::recv(
                        Channel::named(&d),
                        vec![],
                        Process::par(
                            Process::repl(Process::send(
                                Channel::with(ht.clone(), Label::Len),
                                vec![a.clone()],
                                Process::Nil,
                            )),
                            out(o, vec![ht.clone()]),
                        ),
                    ),
                );
                let i = self.fresh.var("i");
                let v = self.fresh.var("v");
                let k = self.fresh.var("k");
                let cells = Process::repl(Process::recv(
                    Channel::named(&vals),
                    vec![Pattern::bind(&i), Pattern::bind(&v)],
                    cell(&ht, &Term::var(&i), &Term::var(&v), &k),
                ));
                Process::new_all([vals, h, d], Process::par_all([rep, publish, cells]))
            }
            Builtin::Arith(op) => {
                let x = self.fresh.var("x");
                let y = self.fresh.var("x");
                Process::bullet_if(
                    bullet,
                    Process::recv(
                        Channel::with(a.clone(), Label::Tup),
                        vec![Pattern::bind(&x), Pattern::bind(&y)],
                        out(o, vec![Term::binop(op, Term::var(&x), Term::var(&y))]),
                    ),
                )
            }
            Builtin::Map => self.map_core(a, o, bullet),
        }
    }

    fn map_core(&mut self, args: &Term, o: &Term, bullet: bool) -> Process {
        let g = self.fresh.var("g");
        let src = self.fresh.var("a");
        let n = self.fresh.var("n");
        let vals = self.fresh.name(ChannelRole::Collection);
        let count = self.fresh.name(ChannelRole::Collection);
        let done = self.fresh.name(ChannelRole::Signal);
        let h2 = self.fresh.name(ChannelRole::Handle);
        let h2t = Term::Name(h2.clone());
        let rep = repeat(&Term::var(&n), &count, &done, &mut self.fresh, &self.opts);

        let i = self.fresh.var("i");
        let v = self.fresh.var("v");
        let w = self.fresh.var("v");
        let k = self.fresh.var("k");
        let r = self.fresh.name(ChannelRole::ReplyR);
        let apply = Process::repl(Process::recv(
            Channel::named(&vals),
            vec![Pattern::bind(&i), Pattern::bind(&v)],
            Process::new_name(
                r.clone(),
                Process::send(
                    Channel::plain(Term::var(&g)),
                    vec![Term::var(&v), Term::Name(r.clone())],
                    recv1(
                        &Term::Name(r),
                        &w,
                        Process::recv(
                            Channel::named(&count),
                            vec![Pattern::Wildcard, Pattern::Wildcard],
                            cell(&h2t, &Term::var(&i), &Term::var(&w), &k),
                        ),
                    ),
                ),
            ),
        ));

        let (dummy, _) = self.output();
        let finish = Process::new_name(
            dummy.clone(),
            Process::send(
                Channel::plain(Term::var(&g)),
                vec![Term::num(0), Term::Name(dummy)],
                Process::bullet_if(
                    bullet,
                    Process::recv(Channel::named(&done), vec![], out(o, vec![h2t.clone()])),
                ),
            ),
        );
        let length = Process::repl(Process::send(
            Channel::with(h2t, Label::Len),
            vec![Term::var(&n)],
            Process::Nil,
        ));

        let body = Process::new_all(
            [count, done, h2],
            Process::par_all([rep, apply, finish, length]),
        );
        let scatter = Process::new_name(
            vals.clone(),
            Process::broadcast(
                Channel::with(Term::var(&src), Label::All),
                vec![Term::Name(vals)],
                body,
            ),
        );
        Process::recv(
            Channel::with(args.clone(), Label::Tup),
            vec![Pattern::bind(&g), Pattern::bind(&src)],
            Process::recv(
                Channel::with(Term::var(&src), Label::Len),
                vec![Pattern::bind(&n)],
                scatter,
            ),
        )
    }
}

/// Counts of syntax nodes that each contribute one bullet.
pub fn bullet_census(e: &Expr, opts: &TranslationOptions) -> usize {
    let mut count = 0;
    e.walk(&mut |node| match node {
        Expr::If(..) | Expr::Index(..) => count += 1,
        Expr::App(f, _) => match &**f {
            Expr::Builtin(Builtin::Size | Builtin::Iota) => {
                count += usize::from(opts.strict_bullets)
            }
            _ => count += 1,
        },
        _ => {}
    });
    count
}

/// Names in `p` grouped by role; names of no known role are listed under
/// `None`.
pub fn names_by_role(p: &Process) -> BTreeMap<Option<ChannelRole>, BTreeSet<Name>> {
    let mut out: BTreeMap<Option<ChannelRole>, BTreeSet<Name>> = BTreeMap::new();
    for n in p.bound_names().into_iter().chain(p.free_names()) {
        out.entry(ChannelRole::of(&n)).or_default().insert(n);
    }
    out
}
