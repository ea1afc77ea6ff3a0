use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Serialize, Serializer};

use crate::butf::ArithOp;

/// A channel name. Names produced at run time carry a `$k` suffix, which
/// cannot occur in source text.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The part before any `$` suffix.
    pub fn base(&self) -> &str {
        self.0.split('$').next().unwrap_or("")
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

pub type Var = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Num(BigInt),
    Name(Name),
    Var(Var),
    BinOp(ArithOp, Box<Term>, Box<Term>),
}

impl Term {
    pub fn num(n: impl Into<BigInt>) -> Term {
        Term::Num(n.into())
    }

    pub fn name(s: &str) -> Term {
        Term::Name(Name::new(s))
    }

    pub fn var(s: &str) -> Term {
        Term::Var(Arc::from(s))
    }

    pub fn binop(op: ArithOp, a: Term, b: Term) -> Term {
        Term::BinOp(op, Box::new(a), Box::new(b))
    }

    /// Numbers and names, the only things that can be transmitted.
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Num(_) | Term::Name(_))
    }

    fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        if let Term::BinOp(_, a, b) = self {
            a.visit(f);
            b.visit(f);
        }
    }

    fn subst(&self, s: &Subst) -> Option<Term> {
        match self {
            Term::Num(_) => None,
            Term::Name(n) => s.names.get(n).map(|m| Term::Name(m.clone())),
            Term::Var(x) => s.vars.get(x).cloned(),
            Term::BinOp(op, a, b) => {
                let (na, nb) = (a.subst(s), b.subst(s));
                if na.is_none() && nb.is_none() {
                    return None;
                }
                Some(Term::binop(
                    *op,
                    na.unwrap_or_else(|| (**a).clone()),
                    nb.unwrap_or_else(|| (**b).clone()),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Label {
    Index(Term),
    All,
    Tup,
    Len,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    pub base: Term,
    pub label: Option<Label>,
}

impl Channel {
    pub fn plain(base: Term) -> Channel {
        Channel { base, label: None }
    }

    pub fn named(name: &Name) -> Channel {
        Channel::plain(Term::Name(name.clone()))
    }

    pub fn with(base: Term, label: Label) -> Channel {
        Channel {
            base,
            label: Some(label),
        }
    }

    fn terms(&self) -> impl Iterator<Item = &Term> {
        let label = match &self.label {
            Some(Label::Index(t)) => Some(t),
            _ => None,
        };
        std::iter::once(&self.base).chain(label)
    }

    fn subst(&self, s: &Subst) -> Option<Channel> {
        let base = self.base.subst(s);
        let label = match &self.label {
            Some(Label::Index(t)) => t.subst(s).map(|t| Some(Label::Index(t))),
            _ => None,
        };
        if base.is_none() && label.is_none() {
            return None;
        }
        Some(Channel {
            base: base.unwrap_or_else(|| self.base.clone()),
            label: label.unwrap_or_else(|| self.label.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Bind(Var),
    Wildcard,
}

impl Pattern {
    pub fn bind(s: &str) -> Pattern {
        Pattern::Bind(Arc::from(s))
    }

    pub fn var(&self) -> Option<&Var> {
        match self {
            Pattern::Bind(x) => Some(x),
            Pattern::Wildcard => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Send(Channel, Vec<Term>),
    Recv(Channel, Vec<Pattern>),
    Broadcast(Channel, Vec<Term>),
}

impl Action {
    pub fn channel(&self) -> &Channel {
        match self {
            Action::Send(c, _) | Action::Recv(c, _) | Action::Broadcast(c, _) => c,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Action::Send(_, ts) | Action::Broadcast(_, ts) => ts.len(),
            Action::Recv(_, ps) => ps.len(),
        }
    }

    fn terms(&self) -> Box<dyn Iterator<Item = &Term> + '_> {
        match self {
            Action::Send(c, ts) | Action::Broadcast(c, ts) => Box::new(c.terms().chain(ts)),
            Action::Recv(c, _) => Box::new(c.terms()),
        }
    }

    fn binders(&self) -> &[Pattern] {
        match self {
            Action::Recv(_, ps) => ps,
            _ => &[],
        }
    }

    fn subst(&self, s: &Subst) -> Option<Action> {
        match self {
            Action::Send(c, ts) | Action::Broadcast(c, ts) => {
                let nc = c.subst(s);
                let nts: Vec<Option<Term>> = ts.iter().map(|t| t.subst(s)).collect();
                if nc.is_none() && nts.iter().all(Option::is_none) {
                    return None;
                }
                let c = nc.unwrap_or_else(|| c.clone());
                let ts = nts
                    .into_iter()
                    .zip(ts)
                    .map(|(n, t)| n.unwrap_or_else(|| t.clone()))
                    .collect();
                Some(match self {
                    Action::Send(..) => Action::Send(c, ts),
                    _ => Action::Broadcast(c, ts),
                })
            }
            Action::Recv(c, ps) => c.subst(s).map(|c| Action::Recv(c, ps.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Comparator {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    pub const ALL: [Comparator; 6] = [
        Comparator::Lt,
        Comparator::Gt,
        Comparator::Le,
        Comparator::Ge,
        Comparator::Eq,
        Comparator::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Gt => ">",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Process {
    Nil,
    Par(Arc<Process>, Arc<Process>),
    Repl(Arc<Process>),
    New(Name, Arc<Process>),
    Act(Action, Arc<Process>),
    Bullet(Arc<Process>),
    Match {
        lhs: Term,
        op: Comparator,
        rhs: Term,
        then: Arc<Process>,
        otherwise: Arc<Process>,
    },
}

/// Simultaneous replacement of term variables by values and of names by
/// names. Pattern binders shadow variables, `new` binders shadow names.
#[derive(Debug, Default, Clone)]
pub struct Subst {
    pub vars: HashMap<Var, Term>,
    pub names: HashMap<Name, Name>,
}

impl Subst {
    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.names.is_empty()
    }

    fn without_vars(&self, ps: &[Pattern]) -> Option<Subst> {
        if !ps
            .iter()
            .filter_map(Pattern::var)
            .any(|x| self.vars.contains_key(x))
        {
            return None;
        }
        let mut s = self.clone();
        for x in ps.iter().filter_map(Pattern::var) {
            s.vars.remove(x);
        }
        Some(s)
    }
}

impl Process {
    pub fn par(a: Process, b: Process) -> Process {
        Process::Par(Arc::new(a), Arc::new(b))
    }

    /// Right-nested parallel composition; empty input gives `0`.
    pub fn par_all(items: impl IntoIterator<Item = Process>) -> Process {
        let mut items: Vec<Process> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Process::Nil;
        };
        while let Some(p) = items.pop() {
            acc = Process::par(p, acc);
        }
        acc
    }

    pub fn new_name(name: Name, body: Process) -> Process {
        Process::New(name, Arc::new(body))
    }

    pub fn new_all(names: impl IntoIterator<Item = Name>, body: Process) -> Process {
        let names: Vec<Name> = names.into_iter().collect();
        names
            .into_iter()
            .rev()
            .fold(body, |p, n| Process::new_name(n, p))
    }

    pub fn act(a: Action, cont: Process) -> Process {
        Process::Act(a, Arc::new(cont))
    }

    pub fn send(c: Channel, ts: Vec<Term>, cont: Process) -> Process {
        Process::act(Action::Send(c, ts), cont)
    }

    pub fn recv(c: Channel, ps: Vec<Pattern>, cont: Process) -> Process {
        Process::act(Action::Recv(c, ps), cont)
    }

    pub fn broadcast(c: Channel, ts: Vec<Term>, cont: Process) -> Process {
        Process::act(Action::Broadcast(c, ts), cont)
    }

    pub fn repl(p: Process) -> Process {
        Process::Repl(Arc::new(p))
    }

    pub fn bullet(p: Process) -> Process {
        Process::Bullet(Arc::new(p))
    }

    pub fn bullet_if(on: bool, p: Process) -> Process {
        if on {
            Process::bullet(p)
        } else {
            p
        }
    }

    pub fn matching(lhs: Term, op: Comparator, rhs: Term, then: Process, otherwise: Process) -> Process {
        Process::Match {
            lhs,
            op,
            rhs,
            then: Arc::new(then),
            otherwise: Arc::new(otherwise),
        }
    }

    /// Number of bullet nodes.
    pub fn bullets(&self) -> usize {
        match self {
            Process::Nil => 0,
            Process::Par(a, b) => a.bullets() + b.bullets(),
            Process::Repl(p) | Process::New(_, p) | Process::Act(_, p) => p.bullets(),
            Process::Bullet(p) => 1 + p.bullets(),
            Process::Match {
                then, otherwise, ..
            } => then.bullets() + otherwise.bullets(),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut |t| {
            if let Term::Name(n) = t {
                out.insert(n.clone());
            }
        });
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut |t| {
            if let Term::Var(x) = t {
                out.insert(x.clone());
            }
        });
        out
    }

    /// Calls `f` on every free atomic term (names and variables).
    fn collect_free(
        &self,
        bound_names: &mut Vec<Name>,
        bound_vars: &mut Vec<Var>,
        f: &mut impl FnMut(&Term),
    ) {
        let mut atom = |t: &Term, bn: &Vec<Name>, bv: &Vec<Var>| {
            t.visit(&mut |t| match t {
                Term::Name(n) if !bn.contains(n) => f(t),
                Term::Var(x) if !bv.contains(x) => f(t),
                _ => {}
            })
        };
        match self {
            Process::Nil => {}
            Process::Par(a, b) => {
                a.collect_free(bound_names, bound_vars, f);
                b.collect_free(bound_names, bound_vars, f);
            }
            Process::Repl(p) | Process::Bullet(p) => p.collect_free(bound_names, bound_vars, f),
            Process::New(n, p) => {
                bound_names.push(n.clone());
                p.collect_free(bound_names, bound_vars, f);
                bound_names.pop();
            }
            Process::Act(a, p) => {
                for t in a.terms() {
                    atom(t, bound_names, bound_vars);
                }
                let binders: Vec<Var> = a.binders().iter().filter_map(Pattern::var).cloned().collect();
                let k = binders.len();
                bound_vars.extend(binders);
                p.collect_free(bound_names, bound_vars, f);
                bound_vars.truncate(bound_vars.len() - k);
            }
            Process::Match {
                lhs,
                rhs,
                then,
                otherwise,
                ..
            } => {
                atom(lhs, bound_names, bound_vars);
                atom(rhs, bound_names, bound_vars);
                then.collect_free(bound_names, bound_vars, f);
                otherwise.collect_free(bound_names, bound_vars, f);
            }
        }
    }

    /// Applies `s`, sharing every subtree it leaves unchanged.
    pub fn substitute(self: &Arc<Process>, s: &Subst) -> Arc<Process> {
        if s.is_empty() {
            return self.clone();
        }
        self.subst(s).map(Arc::new).unwrap_or_else(|| self.clone())
    }

    fn subst(&self, s: &Subst) -> Option<Process> {
        let sub = |p: &Arc<Process>, s: &Subst| p.subst(s).map(Arc::new);
        match self {
            Process::Nil => None,
            Process::Par(a, b) => {
                let (na, nb) = (sub(a, s), sub(b, s));
                if na.is_none() && nb.is_none() {
                    return None;
                }
                Some(Process::Par(
                    na.unwrap_or_else(|| a.clone()),
                    nb.unwrap_or_else(|| b.clone()),
                ))
            }
            Process::Repl(p) => sub(p, s).map(Process::Repl),
            Process::Bullet(p) => sub(p, s).map(Process::Bullet),
            Process::New(n, p) => {
                if s.names.contains_key(n) {
                    let mut inner = s.clone();
                    inner.names.remove(n);
                    if inner.is_empty() {
                        return None;
                    }
                    sub(p, &inner).map(|p| Process::New(n.clone(), p))
                } else {
                    sub(p, s).map(|p| Process::New(n.clone(), p))
                }
            }
            Process::Act(a, p) => {
                let na = a.subst(s);
                let inner = s.without_vars(a.binders());
                let np = match &inner {
                    Some(inner) if inner.is_empty() => None,
                    Some(inner) => sub(p, inner),
                    None => sub(p, s),
                };
                if na.is_none() && np.is_none() {
                    return None;
                }
                Some(Process::Act(
                    na.unwrap_or_else(|| a.clone()),
                    np.unwrap_or_else(|| p.clone()),
                ))
            }
            Process::Match {
                lhs,
                op,
                rhs,
                then,
                otherwise,
            } => {
                let (nl, nr) = (lhs.subst(s), rhs.subst(s));
                let (nt, no) = (sub(then, s), sub(otherwise, s));
                if nl.is_none() && nr.is_none() && nt.is_none() && no.is_none() {
                    return None;
                }
                Some(Process::Match {
                    lhs: nl.unwrap_or_else(|| lhs.clone()),
                    op: *op,
                    rhs: nr.unwrap_or_else(|| rhs.clone()),
                    then: nt.unwrap_or_else(|| then.clone()),
                    otherwise: no.unwrap_or_else(|| otherwise.clone()),
                })
            }
        }
    }

    /// Every name bound by a `new` anywhere in the term.
    pub fn bound_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.walk(&mut |p| {
            if let Process::New(n, _) = p {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut impl FnMut(&Process)) {
        f(self);
        match self {
            Process::Nil => {}
            Process::Par(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Process::Repl(p) | Process::Bullet(p) | Process::New(_, p) | Process::Act(_, p) => {
                p.walk(f)
            }
            Process::Match {
                then, otherwise, ..
            } => {
                then.walk(f);
                otherwise.walk(f);
            }
        }
    }

    /// Equality up to renaming of `new` binders and pattern variables.
    pub fn alpha_eq(&self, other: &Process) -> bool {
        alpha(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

type Pairs<T> = Vec<(Option<T>, Option<T>)>;

fn lookup<T: PartialEq>(env: &Pairs<T>, l: &T, r: &T) -> bool {
    for (a, b) in env.iter().rev() {
        let hit_l = a.as_ref() == Some(l);
        let hit_r = b.as_ref() == Some(r);
        if hit_l || hit_r {
            return hit_l && hit_r;
        }
    }
    l == r
}

fn alpha_term(a: &Term, b: &Term, names: &Pairs<Name>, vars: &Pairs<Var>) -> bool {
    match (a, b) {
        (Term::Num(x), Term::Num(y)) => x == y,
        (Term::Name(x), Term::Name(y)) => lookup(names, x, y),
        (Term::Var(x), Term::Var(y)) => lookup(vars, x, y),
        (Term::BinOp(o1, a1, b1), Term::BinOp(o2, a2, b2)) => {
            o1 == o2 && alpha_term(a1, a2, names, vars) && alpha_term(b1, b2, names, vars)
        }
        _ => false,
    }
}

fn alpha_channel(a: &Channel, b: &Channel, names: &Pairs<Name>, vars: &Pairs<Var>) -> bool {
    alpha_term(&a.base, &b.base, names, vars)
        && match (&a.label, &b.label) {
            (Some(Label::Index(x)), Some(Label::Index(y))) => alpha_term(x, y, names, vars),
            (x, y) => x == y,
        }
}

fn alpha_terms(a: &[Term], b: &[Term], names: &Pairs<Name>, vars: &Pairs<Var>) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| alpha_term(x, y, names, vars))
}

fn alpha(a: &Process, b: &Process, names: &mut Pairs<Name>, vars: &mut Pairs<Var>) -> bool {
    match (a, b) {
        (Process::Nil, Process::Nil) => true,
        (Process::Par(a1, a2), Process::Par(b1, b2)) => {
            alpha(a1, b1, names, vars) && alpha(a2, b2, names, vars)
        }
        (Process::Repl(x), Process::Repl(y)) | (Process::Bullet(x), Process::Bullet(y)) => {
            alpha(x, y, names, vars)
        }
        (Process::New(n, x), Process::New(m, y)) => {
            names.push((Some(n.clone()), Some(m.clone())));
            let ok = alpha(x, y, names, vars);
            names.pop();
            ok
        }
        (Process::Act(x, p), Process::Act(y, q)) => {
            let head = match (x, y) {
                (Action::Send(c, ts), Action::Send(d, us))
                | (Action::Broadcast(c, ts), Action::Broadcast(d, us)) => {
                    alpha_channel(c, d, names, vars) && alpha_terms(ts, us, names, vars)
                }
                (Action::Recv(c, ps), Action::Recv(d, qs)) => {
                    alpha_channel(c, d, names, vars) && ps.len() == qs.len()
                }
                _ => false,
            };
            if !head {
                return false;
            }
            let k = x.binders().len();
            for (p1, p2) in x.binders().iter().zip(y.binders()) {
                vars.push((p1.var().cloned(), p2.var().cloned()));
            }
            let ok = alpha(p, q, names, vars);
            vars.truncate(vars.len() - k);
            ok
        }
        (
            Process::Match {
                lhs: l1,
                op: o1,
                rhs: r1,
                then: t1,
                otherwise: e1,
            },
            Process::Match {
                lhs: l2,
                op: o2,
                rhs: r2,
                then: t2,
                otherwise: e2,
            },
        ) => {
            o1 == o2
                && alpha_term(l1, l2, names, vars)
                && alpha_term(r1, r2, names, vars)
                && alpha(t1, t2, names, vars)
                && alpha(e1, e2, names, vars)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    #[test]
    fn free_names_respect_binders() {
        // new a. (a<b> | c(x). x<a>)
        let p = Process::new_name(
            n("a"),
            Process::par(
                Process::send(Channel::named(&n("a")), vec![Term::name("b")], Process::Nil),
                Process::recv(
                    Channel::named(&n("c")),
                    vec![Pattern::bind("x")],
                    Process::send(Channel::plain(Term::var("x")), vec![Term::name("a")], Process::Nil),
                ),
            ),
        );
        assert_eq!(p.free_names(), [n("b"), n("c")].into_iter().collect());
        assert!(p.free_vars().is_empty());
    }

    #[test]
    fn substitution_stops_at_shadowing_pattern() {
        // c(x). x<y> | y<x> with x := 1, y := 2
        let inner = Process::recv(
            Channel::named(&n("c")),
            vec![Pattern::bind("x")],
            Process::send(Channel::plain(Term::var("x")), vec![Term::var("y")], Process::Nil),
        );
        let p = Arc::new(Process::par(
            inner,
            Process::send(Channel::plain(Term::var("y")), vec![Term::var("x")], Process::Nil),
        ));
        let mut s = Subst::default();
        s.vars.insert(Arc::from("x"), Term::num(1));
        s.vars.insert(Arc::from("y"), Term::num(2));
        let q = p.substitute(&s);
        let expected = Process::par(
            Process::recv(
                Channel::named(&n("c")),
                vec![Pattern::bind("x")],
                Process::send(Channel::plain(Term::var("x")), vec![Term::num(2)], Process::Nil),
            ),
            Process::send(Channel::plain(Term::num(2)), vec![Term::num(1)], Process::Nil),
        );
        assert_eq!(*q, expected);
    }

    #[test]
    fn unchanged_subtrees_are_shared() {
        let p = Arc::new(Process::send(Channel::named(&n("a")), vec![], Process::Nil));
        let mut s = Subst::default();
        s.vars.insert(Arc::from("z"), Term::num(0));
        assert!(Arc::ptr_eq(&p, &p.substitute(&s)));
    }

    #[test]
    fn alpha_equivalence() {
        let mk = |a: &str, x: &str| {
            Process::new_name(
                n(a),
                Process::recv(
                    Channel::named(&n(a)),
                    vec![Pattern::bind(x)],
                    Process::send(Channel::plain(Term::var(x)), vec![Term::name(a)], Process::Nil),
                ),
            )
        };
        assert!(mk("a", "x").alpha_eq(&mk("b", "y")));
        let free = Process::send(Channel::named(&n("a")), vec![], Process::Nil);
        let other = Process::send(Channel::named(&n("b")), vec![], Process::Nil);
        assert!(!free.alpha_eq(&other));
    }

    #[test]
    fn bullet_count() {
        let p = Process::par(
            Process::bullet(Process::send(Channel::named(&n("a")), vec![], Process::Nil)),
            Process::repl(Process::bullet(Process::Nil)),
        );
        assert_eq!(p.bullets(), 2);
    }
}
