//! Redex enumeration and one-step reduction.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Serialize, Serializer};

use super::config::Config;
use super::syntax::{Action, Channel, Comparator, Label, Name, Pattern, Process, Subst, Term};
use crate::butf::apply_arith;
use crate::error::EngineError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvLabel {
    Index(BigInt),
    All,
    Tup,
    Len,
}

/// A channel after its terms have been evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelId {
    pub base: Name,
    pub label: Option<EvLabel>,
}

impl ChannelId {
    pub fn plain(base: Name) -> ChannelId {
        ChannelId { base, label: None }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        match &self.label {
            None => Ok(()),
            Some(EvLabel::Index(i)) => write!(f, ".{i}"),
            Some(EvLabel::All) => f.write_str(".all"),
            Some(EvLabel::Tup) => f.write_str(".tup"),
            Some(EvLabel::Len) => f.write_str(".len"),
        }
    }
}

impl Serialize for ChannelId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Evaluates a closed term to a number or a name.
pub fn eval_term(t: &Term) -> Result<Term, String> {
    match t {
        Term::Num(_) | Term::Name(_) => Ok(t.clone()),
        Term::Var(x) => Err(format!("free variable `{x}`")),
        Term::BinOp(op, a, b) => match (eval_term(a)?, eval_term(b)?) {
            (Term::Num(x), Term::Num(y)) => apply_arith(*op, &x, &y)
                .map(Term::Num)
                .ok_or_else(|| "division by zero".to_string()),
            (x, y) => Err(format!("arithmetic on a name: {x} {} {y}", op.symbol())),
        },
    }
}

/// `None` when the channel does not (yet) denote a name, which leaves the
/// thread inert.
pub fn eval_channel(c: &Channel) -> Option<ChannelId> {
    let Ok(Term::Name(base)) = eval_term(&c.base) else {
        return None;
    };
    let label = match &c.label {
        None => None,
        Some(Label::All) => Some(EvLabel::All),
        Some(Label::Tup) => Some(EvLabel::Tup),
        Some(Label::Len) => Some(EvLabel::Len),
        Some(Label::Index(t)) => match eval_term(t) {
            Ok(Term::Num(i)) => Some(EvLabel::Index(i)),
            _ => return None,
        },
    };
    Some(ChannelId { base, label })
}

/// `Ok(None)` if the comparison is not decidable (ordering on a name).
pub fn decide(lhs: &Term, op: Comparator, rhs: &Term) -> Result<Option<bool>, String> {
    let (l, r) = (eval_term(lhs)?, eval_term(rhs)?);
    Ok(match op {
        Comparator::Eq => Some(l == r),
        Comparator::Ne => Some(l != r),
        _ => match (&l, &r) {
            (Term::Num(a), Term::Num(b)) => Some(match op {
                Comparator::Lt => a < b,
                Comparator::Gt => a > b,
                Comparator::Le => a <= b,
                Comparator::Ge => a >= b,
                Comparator::Eq | Comparator::Ne => unreachable!(),
            }),
            _ => None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Redex {
    Comm {
        sender: u64,
        receiver: u64,
        channel: ChannelId,
    },
    Broad {
        sender: u64,
        receivers: Vec<u64>,
        channel: ChannelId,
    },
    Match {
        thread: u64,
    },
}

impl Redex {
    /// Participating thread ids, sorted.
    pub fn participants(&self) -> Vec<u64> {
        let mut v = match self {
            Redex::Comm {
                sender, receiver, ..
            } => vec![*sender, *receiver],
            Redex::Broad {
                sender, receivers, ..
            } => std::iter::once(*sender).chain(receivers.iter().copied()).collect(),
            Redex::Match { thread } => vec![*thread],
        };
        v.sort_unstable();
        v
    }

    pub fn channel(&self) -> Option<&ChannelId> {
        match self {
            Redex::Comm { channel, .. } | Redex::Broad { channel, .. } => Some(channel),
            Redex::Match { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StepKind {
    #[serde(rename = "important")]
    Important,
    #[serde(rename = "administrative")]
    Administrative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RuleKind {
    #[serde(rename = "COMM")]
    Comm,
    #[serde(rename = "BROAD")]
    Broad,
    #[serde(rename = "THEN")]
    Then,
    #[serde(rename = "ELSE")]
    Else,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Comm => "COMM",
            RuleKind::Broad => "BROAD",
            RuleKind::Then => "THEN",
            RuleKind::Else => "ELSE",
        })
    }
}

/// One fired redex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub kind: StepKind,
    pub rule: RuleKind,
    pub channel: Option<ChannelId>,
    pub participants: Vec<u64>,
    pub depth_after: u32,
    /// Set for a broadcast on a free channel, which the environment sees.
    pub label: Option<String>,
    pub bullets_consumed: usize,
    pub bullets_unfolded: usize,
    pub bullets_discarded: usize,
}

impl Step {
    pub fn is_important(&self) -> bool {
        self.kind == StepKind::Important
    }
}

/// A run-time fault attributed to one thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub thread: u64,
    pub message: String,
}

#[derive(Default)]
struct Slots {
    send: Vec<usize>,
    recv: Vec<usize>,
    broad: Vec<usize>,
}

impl Config {
    /// All enabled redexes in a fixed order. With `strict`, an arity
    /// mismatch between a sender and a receiver is an error; otherwise such
    /// pairs are ignored (and such a broadcast is blocked).
    pub fn enabled_redexes(&self, strict: bool) -> Result<Vec<Redex>, EngineError> {
        let mut out = Vec::new();
        let mut chans: BTreeMap<&ChannelId, Slots> = BTreeMap::new();
        for (i, t) in self.threads.iter().enumerate() {
            match &*t.body {
                Process::Act(a, _) => {
                    let Some(c) = &t.chan else { continue };
                    let slot = chans.entry(c).or_default();
                    match a {
                        Action::Send(..) => slot.send.push(i),
                        Action::Recv(..) => slot.recv.push(i),
                        Action::Broadcast(..) => slot.broad.push(i),
                    }
                }
                Process::Match { lhs, op, rhs, .. } => {
                    if !matches!(decide(lhs, *op, rhs), Ok(None)) {
                        out.push(Redex::Match { thread: t.id });
                    }
                }
                _ => unreachable!("threads are prefix-headed"),
            }
        }
        let arity = |i: usize| self.threads[i].action().map_or(0, Action::arity);
        let mismatch = |c: &ChannelId, a: usize, b: usize| EngineError::ArityMismatch {
            channel: c.to_string(),
            left: a,
            right: b,
        };
        for (c, slot) in &chans {
            for &s in &slot.send {
                for &r in &slot.recv {
                    if arity(s) == arity(r) {
                        out.push(Redex::Comm {
                            sender: self.threads[s].id,
                            receiver: self.threads[r].id,
                            channel: (*c).clone(),
                        });
                    } else if strict {
                        return Err(mismatch(c, arity(s), arity(r)));
                    }
                }
            }
            'b: for &b in &slot.broad {
                for &r in &slot.recv {
                    if arity(b) != arity(r) {
                        if strict {
                            return Err(mismatch(c, arity(b), arity(r)));
                        }
                        continue 'b;
                    }
                }
                out.push(Redex::Broad {
                    sender: self.threads[b].id,
                    receivers: slot.recv.iter().map(|&r| self.threads[r].id).collect(),
                    channel: (*c).clone(),
                });
            }
        }
        Ok(out)
    }

    /// Fires `r` in place. On a fault nothing is changed.
    pub fn apply(&mut self, r: &Redex) -> Result<Step, Result<Fault, EngineError>> {
        let stale = || Err(EngineError::StaleRedex);
        let mut participants = Vec::new();
        for id in r.participants() {
            match self.thread(id) {
                Some(t) => participants.push(t.clone()),
                None => return Err(stale()),
            }
        }
        let important = participants.iter().any(|t| t.bullet);
        let depth = participants.iter().map(|t| t.depth).max().unwrap_or(0) + u32::from(important);
        let consumed = participants.iter().filter(|t| t.bullet).count();
        let unfolded: usize = participants
            .iter()
            .filter(|t| t.replicated)
            .map(|t| t.bullets())
            .sum();
        let mut step = Step {
            kind: if important {
                StepKind::Important
            } else {
                StepKind::Administrative
            },
            rule: RuleKind::Comm,
            channel: r.channel().cloned(),
            participants: r.participants(),
            depth_after: depth,
            label: None,
            bullets_consumed: consumed,
            bullets_unfolded: unfolded,
            bullets_discarded: 0,
        };
        let by_id = |id: u64| participants.iter().find(|t| t.id == id).expect("participant");

        // Evaluate everything before touching the configuration.
        let mut spawns: Vec<Arc<Process>> = Vec::new();
        match r {
            Redex::Match { thread } => {
                let t = by_id(*thread);
                let Process::Match {
                    lhs,
                    op,
                    rhs,
                    then,
                    otherwise,
                } = &*t.body
                else {
                    return Err(stale());
                };
                let taken = match decide(lhs, *op, rhs) {
                    Ok(Some(b)) => b,
                    Ok(None) => return Err(stale()),
                    Err(message) => {
                        return Err(Ok(Fault {
                            thread: t.id,
                            message,
                        }))
                    }
                };
                let (keep, drop) = if taken {
                    (then, otherwise)
                } else {
                    (otherwise, then)
                };
                step.rule = if taken {
                    RuleKind::Then
                } else {
                    RuleKind::Else
                };
                step.bullets_discarded = drop.bullets();
                spawns.push(keep.clone());
            }
            Redex::Comm { sender, .. } | Redex::Broad { sender, .. } => {
                let s = by_id(*sender);
                let Process::Act(Action::Send(_, ts) | Action::Broadcast(_, ts), scont) = &*s.body
                else {
                    return Err(stale());
                };
                let mut values = Vec::with_capacity(ts.len());
                for t in ts {
                    match eval_term(t) {
                        Ok(v) => values.push(v),
                        Err(message) => {
                            return Err(Ok(Fault {
                                thread: s.id,
                                message,
                            }))
                        }
                    }
                }
                spawns.push(scont.clone());
                let receivers: Vec<u64> = match r {
                    Redex::Comm { receiver, .. } => vec![*receiver],
                    Redex::Broad { receivers, .. } => {
                        step.rule = RuleKind::Broad;
                        let c = r.channel().expect("broadcast channel");
                        if !self.restricted.contains(&c.base) {
                            step.label = Some(format!("{c}:"));
                        }
                        receivers.clone()
                    }
                    Redex::Match { .. } => unreachable!(),
                };
                for id in receivers {
                    let t = by_id(id);
                    let Process::Act(Action::Recv(_, pats), rcont) = &*t.body else {
                        return Err(stale());
                    };
                    if pats.len() != values.len() {
                        return Err(stale());
                    }
                    let mut s = Subst::default();
                    for (p, v) in pats.iter().zip(&values) {
                        if let Pattern::Bind(x) = p {
                            s.vars.insert(x.clone(), v.clone());
                        }
                    }
                    spawns.push(rcont.substitute(&s));
                }
            }
        }

        let consumed_ids: Vec<u64> = participants
            .iter()
            .filter(|t| !t.replicated)
            .map(|t| t.id)
            .collect();
        self.remove_ids(&consumed_ids);
        for p in &spawns {
            self.spawn(p, depth, None).map_err(Err)?;
        }
        Ok(step)
    }

    /// Functional form of [`Config::apply`]; faults become
    /// [`EngineError::Fault`].
    pub fn apply_redex(&self, r: &Redex) -> Result<(Config, Step), EngineError> {
        let mut next = self.clone();
        match next.apply(r) {
            Ok(step) => Ok((next, step)),
            Err(Ok(fault)) => Err(EngineError::Fault(fault.message)),
            Err(Err(e)) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epi::{normalize, parse_process};

    fn norm(src: &str) -> Config {
        normalize(&parse_process(src).unwrap()).unwrap()
    }

    fn fire_only(src: &str) -> (Config, Step) {
        let c = norm(src);
        let rs = c.enabled_redexes(true).unwrap();
        assert_eq!(rs.len(), 1, "{src}: {rs:?}");
        c.apply_redex(&rs[0]).unwrap()
    }

    fn shown(c: &Config) -> Vec<String> {
        c.threads.iter().map(|t| t.to_process().to_string()).collect()
    }

    #[test]
    fn term_evaluation() {
        let t = Term::binop(crate::butf::ArithOp::Add, Term::num(2), Term::num(3));
        assert_eq!(eval_term(&t), Ok(Term::num(5)));
        assert_eq!(eval_term(&Term::name("a")), Ok(Term::name("a")));
        let bad = Term::binop(crate::butf::ArithOp::Add, Term::name("a"), Term::num(1));
        assert!(eval_term(&bad).is_err());
        let div = Term::binop(crate::butf::ArithOp::Div, Term::num(1), Term::num(0));
        assert!(eval_term(&div).is_err());
    }

    #[test]
    fn comm_substitutes() {
        let (c, step) = fire_only("c<7>.0 | c(x).d<x>");
        assert_eq!(shown(&c), vec!["d<7>"]);
        assert_eq!(step.kind, StepKind::Administrative);
        assert_eq!(step.rule, RuleKind::Comm);
        let (c, _) = fire_only("c<2 + 3> | c(x).d<x>");
        assert_eq!(shown(&c), vec!["d<5>"]);
    }

    #[test]
    fn bullet_marks_important() {
        let (c, step) = fire_only("*c<7> | c(x).0");
        assert_eq!(step.kind, StepKind::Important);
        assert_eq!(step.bullets_consumed, 1);
        assert_eq!(step.depth_after, 1);
        assert!(c.is_empty());
    }

    #[test]
    fn broadcast_takes_every_receiver() {
        let c = norm("c:<1> | c(x).0 | c(y).0");
        let rs = c.enabled_redexes(true).unwrap();
        assert_eq!(rs.len(), 1);
        assert!(matches!(&rs[0], Redex::Broad { receivers, .. } if receivers.len() == 2));
        let (c, step) = c.apply_redex(&rs[0]).unwrap();
        assert_eq!(step.rule, RuleKind::Broad);
        assert_eq!(step.label.as_deref(), Some("c:"));
        assert!(c.is_empty());

        let (_, step) = fire_only("c:<1>");
        assert_eq!(step.participants.len(), 1);
        let (_, step) = fire_only("new c. c:<1>");
        assert_eq!(step.label, None);
    }

    #[test]
    fn replicated_receiver_persists() {
        let (c, _) = fire_only("c:<1> | !c(x).d<x> | c(y).0");
        assert_eq!(shown(&c), vec!["!c(x).d<x>", "d<1>"]);
    }

    #[test]
    fn matches() {
        let (c, step) = fire_only("[3 >= 0] a<>, b<>");
        assert_eq!((step.rule, shown(&c)), (RuleKind::Then, vec!["a<>".to_string()]));
        let (c, step) = fire_only("*[a = b] a<>, *b<>");
        assert_eq!((step.rule, shown(&c)), (RuleKind::Else, vec!["*b<>".to_string()]));
        assert_eq!(step.kind, StepKind::Important);
        assert_eq!(step.bullets_discarded, 0);
        // ordering on names never fires
        assert!(norm("[a < 1] 0, 0").enabled_redexes(true).unwrap().is_empty());
    }

    #[test]
    fn arity_mismatch() {
        let c = norm("c<1, 2> | c(x).0");
        assert!(matches!(
            c.enabled_redexes(true),
            Err(EngineError::ArityMismatch { .. })
        ));
        assert!(c.enabled_redexes(false).unwrap().is_empty());
    }

    #[test]
    fn faults_leave_config_untouched() {
        let mut c = norm("c<a + 1> | c(x).0");
        let rs = c.enabled_redexes(true).unwrap();
        let before = shown(&c);
        let err = c.apply(&rs[0]).unwrap_err().unwrap();
        assert_eq!(err.thread, c.threads[0].id);
        assert_eq!(shown(&c), before);
    }

    #[test]
    fn inert_channels() {
        // a number in channel position never communicates
        let (c, _) = fire_only("c(f).f<1> | c<5>.0 | !g(x).0");
        assert_eq!(shown(&c)[1], "5<1>");
        assert!(c.enabled_redexes(true).unwrap().is_empty());
    }

    #[test]
    fn composite_channels() {
        let (c, _) = fire_only("new h. (!h.1<1, 9> | h.(0 + 1)(i, v).o<v>)");
        assert_eq!(shown(&c)[1], "o<9>");
    }
}
