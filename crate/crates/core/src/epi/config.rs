//! Normalized configurations: a set of restricted names and a soup of
//! prefix-headed threads.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::reduce::{eval_channel, ChannelId};
use super::syntax::{Action, Name, Process, Subst, Term};
use crate::error::EngineError;

#[derive(Debug, Clone)]
pub struct Thread {
    pub id: u64,
    /// Act- or Match-headed.
    pub body: Arc<Process>,
    pub bullet: bool,
    pub replicated: bool,
    /// Causal depth in important steps.
    pub depth: u32,
    /// Evaluated subject channel, if the head is an action on a valid channel.
    pub chan: Option<ChannelId>,
    names: Arc<[Name]>,
    key: Arc<OnceLock<ThreadKey>>,
}

#[derive(Debug)]
struct ThreadKey {
    anon: String,
    /// Restricted-name occurrences in traversal order.
    occ: Vec<Name>,
}

impl Thread {
    /// Distinct free names, in order of first occurrence.
    pub fn names(&self) -> &[Name] {
        &self.names
    }

    pub fn mentions(&self, n: &Name) -> bool {
        self.names.contains(n)
    }

    pub fn action(&self) -> Option<&Action> {
        match &*self.body {
            Process::Act(a, _) => Some(a),
            _ => None,
        }
    }

    /// Bullet nodes in this thread, counting the head marker.
    pub fn bullets(&self) -> usize {
        usize::from(self.bullet) + self.body.bullets()
    }

    /// The thread as a process term.
    pub fn to_process(&self) -> Process {
        let p = (*self.body).clone();
        let p = Process::bullet_if(self.bullet, p);
        if self.replicated {
            Process::repl(p)
        } else {
            p
        }
    }

    fn key(&self, restricted: &BTreeSet<Name>) -> &ThreadKey {
        self.key.get_or_init(|| {
            let mut s = Subst::default();
            let hidden = Name::new("#");
            for n in self.names.iter().filter(|n| restricted.contains(*n)) {
                s.names.insert(n.clone(), hidden.clone());
            }
            let mut occ = Vec::new();
            free_occurrences(&self.body, &mut |n| {
                if restricted.contains(n) {
                    occ.push(n.clone());
                }
            });
            let body = self.body.substitute(&s);
            let flags = match (self.replicated, self.bullet) {
                (true, true) => "!*",
                (true, false) => "!",
                (false, true) => "*",
                (false, false) => "",
            };
            ThreadKey {
                anon: format!("{flags}{body}"),
                occ,
            }
        })
    }
}

fn free_occurrences(p: &Process, f: &mut impl FnMut(&Name)) {
    let mut names = Vec::new();
    collect_free_names(p, &mut Vec::new(), &mut names);
    for n in &names {
        f(n);
    }
}

fn collect_free_names(p: &Process, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
    fn term(t: &Term, bound: &[Name], out: &mut Vec<Name>) {
        match t {
            Term::Name(n) if !bound.contains(n) => out.push(n.clone()),
            Term::BinOp(_, a, b) => {
                term(a, bound, out);
                term(b, bound, out);
            }
            _ => {}
        }
    }
    fn channel(c: &super::Channel, bound: &[Name], out: &mut Vec<Name>) {
        term(&c.base, bound, out);
        if let Some(super::Label::Index(t)) = &c.label {
            term(t, bound, out);
        }
    }
    match p {
        Process::Nil => {}
        Process::Par(a, b) => {
            collect_free_names(a, bound, out);
            collect_free_names(b, bound, out);
        }
        Process::Repl(q) | Process::Bullet(q) => collect_free_names(q, bound, out),
        Process::New(n, q) => {
            bound.push(n.clone());
            collect_free_names(q, bound, out);
            bound.pop();
        }
        Process::Act(a, q) => {
            match a {
                Action::Send(c, ts) | Action::Broadcast(c, ts) => {
                    channel(c, bound, out);
                    for t in ts {
                        term(t, bound, out);
                    }
                }
                Action::Recv(c, _) => channel(c, bound, out),
            }
            collect_free_names(q, bound, out);
        }
        Process::Match {
            lhs,
            rhs,
            then,
            otherwise,
            ..
        } => {
            term(lhs, bound, out);
            term(rhs, bound, out);
            collect_free_names(then, bound, out);
            collect_free_names(otherwise, bound, out);
        }
    }
}

/// Whether a barb is an output or an input capability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Barb {
    pub channel: ChannelId,
    pub polarity: Polarity,
}

impl fmt::Display for Barb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pol = match self.polarity {
            Polarity::In => "in",
            Polarity::Out => "out",
        };
        write!(f, "{}:{pol}", self.channel)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub restricted: BTreeSet<Name>,
    /// Ordered by id.
    pub threads: Vec<Thread>,
    next_id: u64,
    fresh: u64,
}

/// Flattens a closed process into a configuration.
pub fn normalize(p: &Process) -> Result<Config, EngineError> {
    if let Some(x) = p.free_vars().into_iter().next() {
        return Err(EngineError::FreeVariable(x.to_string()));
    }
    validate(p)?;
    let free = p.free_names();
    let mut c = Config::default();
    let mut top = BTreeSet::new();
    top_binders(p, &mut top);
    let clash: BTreeSet<Name> = free.union(&top).cloned().collect();
    let p = c.refresh_guarded(p, false, &clash).unwrap_or_else(|| p.clone());
    c.spawn(&Arc::new(p), 0, Some(&free))?;
    Ok(c)
}

fn top_binders(p: &Process, out: &mut BTreeSet<Name>) {
    match p {
        Process::Par(a, b) => {
            top_binders(a, out);
            top_binders(b, out);
        }
        Process::New(n, q) => {
            out.insert(n.clone());
            top_binders(q, out);
        }
        _ => {}
    }
}

/// Rejects replication or bullets in positions normalization cannot handle,
/// anywhere in the term (so later spawns cannot fail).
fn validate(p: &Process) -> Result<(), EngineError> {
    match p {
        Process::Nil => Ok(()),
        Process::Par(a, b) => {
            validate(a)?;
            validate(b)
        }
        Process::New(_, q) | Process::Act(_, q) => validate(q),
        Process::Repl(q) => {
            check_replicable(q, p)?;
            validate(q)
        }
        Process::Bullet(q) => match &**q {
            Process::Act(..) | Process::Match { .. } => validate(q),
            _ => Err(EngineError::MisplacedBullet(p.to_string())),
        },
        Process::Match {
            then, otherwise, ..
        } => {
            validate(then)?;
            validate(otherwise)
        }
    }
}

fn check_replicable(q: &Process, whole: &Process) -> Result<(), EngineError> {
    match q {
        Process::Nil | Process::Act(..) => Ok(()),
        Process::Bullet(inner) if matches!(**inner, Process::Act(..)) => Ok(()),
        Process::Par(a, b) => {
            check_replicable(a, whole)?;
            check_replicable(b, whole)
        }
        Process::Repl(inner) => check_replicable(inner, whole),
        _ => Err(EngineError::UnguardedReplication(whole.to_string())),
    }
}

impl Config {
    pub fn fresh_name(&mut self, like: &Name) -> Name {
        self.fresh += 1;
        Name::new(&format!("{}${}", like.base(), self.fresh))
    }

    /// Renames binders under a prefix that coincide with a name in `clash`.
    fn refresh_guarded(
        &mut self,
        p: &Process,
        guarded: bool,
        clash: &BTreeSet<Name>,
    ) -> Option<Process> {
        let rec = |q: &Arc<Process>, g: bool, this: &mut Config| {
            this.refresh_guarded(q, g, clash).map(Arc::new)
        };
        match p {
            Process::Nil => None,
            Process::Par(a, b) => {
                let (na, nb) = (rec(a, guarded, self), rec(b, guarded, self));
                if na.is_none() && nb.is_none() {
                    return None;
                }
                Some(Process::Par(
                    na.unwrap_or_else(|| a.clone()),
                    nb.unwrap_or_else(|| b.clone()),
                ))
            }
            Process::Repl(q) => rec(q, true, self).map(Process::Repl),
            Process::Bullet(q) => rec(q, guarded, self).map(Process::Bullet),
            Process::New(n, q) => {
                if guarded && clash.contains(n) {
                    let m = self.fresh_name(n);
                    let mut s = Subst::default();
                    s.names.insert(n.clone(), m.clone());
                    let body = q.substitute(&s);
                    let body = rec(&body, guarded, self).unwrap_or(body);
                    Some(Process::New(m, body))
                } else {
                    rec(q, guarded, self).map(|q| Process::New(n.clone(), q))
                }
            }
            Process::Act(a, q) => rec(q, true, self).map(|q| Process::Act(a.clone(), q)),
            Process::Match {
                lhs,
                op,
                rhs,
                then,
                otherwise,
            } => {
                let (nt, no) = (rec(then, true, self), rec(otherwise, true, self));
                if nt.is_none() && no.is_none() {
                    return None;
                }
                Some(Process::Match {
                    lhs: lhs.clone(),
                    op: *op,
                    rhs: rhs.clone(),
                    then: nt.unwrap_or_else(|| then.clone()),
                    otherwise: no.unwrap_or_else(|| otherwise.clone()),
                })
            }
        }
    }

    /// Adds the threads of `p`. With `keep` set (initial normalization),
    /// binders keep their source names unless they collide.
    pub(crate) fn spawn(
        &mut self,
        p: &Arc<Process>,
        depth: u32,
        keep: Option<&BTreeSet<Name>>,
    ) -> Result<(), EngineError> {
        match &**p {
            Process::Nil => Ok(()),
            Process::Par(a, b) => {
                self.spawn(a, depth, keep)?;
                self.spawn(b, depth, keep)
            }
            Process::New(n, body) => {
                let reuse = keep.is_some_and(|free| !free.contains(n) && !self.restricted.contains(n));
                if reuse {
                    self.restricted.insert(n.clone());
                    self.spawn(body, depth, keep)
                } else {
                    let m = self.fresh_name(n);
                    let mut s = Subst::default();
                    s.names.insert(n.clone(), m.clone());
                    self.restricted.insert(m);
                    self.spawn(&body.substitute(&s), depth, keep)
                }
            }
            Process::Repl(q) => match &**q {
                Process::Nil => Ok(()),
                Process::Par(a, b) => {
                    self.spawn(&Arc::new(Process::Repl(a.clone())), depth, keep)?;
                    self.spawn(&Arc::new(Process::Repl(b.clone())), depth, keep)
                }
                Process::Repl(_) => self.spawn(q, depth, keep),
                Process::Act(..) => {
                    self.push(q.clone(), false, true, depth);
                    Ok(())
                }
                Process::Bullet(inner) if matches!(**inner, Process::Act(..)) => {
                    self.push(inner.clone(), true, true, depth);
                    Ok(())
                }
                _ => Err(EngineError::UnguardedReplication(p.to_string())),
            },
            Process::Act(..) | Process::Match { .. } => {
                self.push(p.clone(), false, false, depth);
                Ok(())
            }
            Process::Bullet(q) => match &**q {
                Process::Act(..) | Process::Match { .. } => {
                    self.push(q.clone(), true, false, depth);
                    Ok(())
                }
                _ => Err(EngineError::MisplacedBullet(p.to_string())),
            },
        }
    }

    fn push(&mut self, body: Arc<Process>, bullet: bool, replicated: bool, depth: u32) {
        let mut all = Vec::new();
        collect_free_names(&body, &mut Vec::new(), &mut all);
        let mut seen = HashSet::new();
        all.retain(|n| seen.insert(n.clone()));
        let chan = match &*body {
            Process::Act(a, _) => eval_channel(a.channel()),
            _ => None,
        };
        self.threads.push(Thread {
            id: self.next_id,
            body,
            bullet,
            replicated,
            depth,
            chan,
            names: all.into(),
            key: Arc::new(OnceLock::new()),
        });
        self.next_id += 1;
    }

    pub fn thread(&self, id: u64) -> Option<&Thread> {
        self.threads
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.threads[i])
    }

    pub fn bullet_count(&self) -> usize {
        self.threads.iter().map(Thread::bullets).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty()
    }

    /// Observable capabilities on unrestricted channels.
    pub fn barbs(&self) -> BTreeSet<Barb> {
        self.threads
            .iter()
            .filter_map(|t| {
                let chan = t.chan.as_ref()?;
                if self.restricted.contains(&chan.base) {
                    return None;
                }
                let polarity = match t.action()? {
                    Action::Recv(..) => Polarity::In,
                    _ => Polarity::Out,
                };
                Some(Barb {
                    channel: chan.clone(),
                    polarity,
                })
            })
            .collect()
    }

    pub fn has_out_barb(&self, name: &Name) -> bool {
        !self.restricted.contains(name)
            && self.threads.iter().any(|t| {
                t.chan.as_ref().is_some_and(|c| &c.base == name && c.label.is_none())
                    && !matches!(t.action(), Some(Action::Recv(..)))
            })
    }

    /// Removes replicated servers on restricted channels that nothing else
    /// mentions, repeating until stable. Returns the bullets removed.
    pub fn garbage_collect(&mut self) -> usize {
        let mut removed = 0;
        loop {
            let mut groups: BTreeMap<&Name, Vec<usize>> = BTreeMap::new();
            for (i, t) in self.threads.iter().enumerate() {
                if let (true, Some(c)) = (t.replicated, &t.chan) {
                    if self.restricted.contains(&c.base) {
                        groups.entry(&c.base).or_default().push(i);
                    }
                }
            }
            let mut dead: BTreeSet<usize> = BTreeSet::new();
            for (base, members) in &groups {
                let used = self
                    .threads
                    .iter()
                    .enumerate()
                    .any(|(i, t)| !members.contains(&i) && t.mentions(base));
                if !used {
                    dead.extend(members);
                }
            }
            if dead.is_empty() {
                return removed;
            }
            let mut i = 0;
            self.threads.retain(|t| {
                let keep = !dead.contains(&i);
                if !keep {
                    removed += t.bullets();
                }
                i += 1;
                keep
            });
        }
    }

    /// Drops restricted names no thread mentions any more.
    pub fn prune_restricted(&mut self) {
        let live: HashSet<&Name> = self.threads.iter().flat_map(|t| t.names.iter()).collect();
        let keep: BTreeSet<Name> = self
            .restricted
            .iter()
            .filter(|n| live.contains(n))
            .cloned()
            .collect();
        self.restricted = keep;
    }

    /// A hash identifying the configuration up to renaming of restricted
    /// names, thread ids and depths.
    pub fn canonical_key(&self) -> u128 {
        let mut entries: Vec<(&ThreadKey, u64)> = self
            .threads
            .iter()
            .map(|t| (t.key(&self.restricted), t.id))
            .collect();
        entries.sort_by(|a, b| a.0.anon.cmp(&b.0.anon).then(a.1.cmp(&b.1)));
        let mut numbering: HashMap<&Name, usize> = HashMap::new();
        let mut h1 = DefaultHasher::new();
        let mut h2 = DefaultHasher::new();
        0xA5u8.hash(&mut h2);
        for (k, _) in &entries {
            k.anon.hash(&mut h1);
            k.anon.hash(&mut h2);
            for n in &k.occ {
                let next = numbering.len();
                let idx = *numbering.entry(n).or_insert(next);
                idx.hash(&mut h1);
                idx.hash(&mut h2);
            }
        }
        (u128::from(h1.finish()) << 64) | u128::from(h2.finish())
    }

    /// Threads with restricted names hidden, sorted: a coarse, readable
    /// summary used to compare terminal sets.
    pub fn anonymized(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .threads
            .iter()
            .map(|t| t.key(&self.restricted).anon.clone())
            .collect();
        v.sort();
        v
    }

    /// The configuration as a single process term.
    pub fn to_process(&self) -> Process {
        let body = Process::par_all(self.threads.iter().map(Thread::to_process));
        let used: BTreeSet<&Name> = self.threads.iter().flat_map(|t| t.names.iter()).collect();
        Process::new_all(
            self.restricted.iter().filter(|n| used.contains(n)).cloned(),
            body,
        )
    }

    pub(crate) fn remove_ids(&mut self, ids: &[u64]) {
        self.threads.retain(|t| !ids.contains(&t.id));
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_process())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epi::parse_process;

    fn norm(src: &str) -> Config {
        normalize(&parse_process(src).unwrap()).unwrap()
    }

    fn threads(c: &Config) -> Vec<String> {
        c.threads.iter().map(|t| t.to_process().to_string()).collect()
    }

    #[test]
    fn flattening() {
        let c = norm("new a. (0 | a<1>)");
        assert_eq!(c.restricted, [Name::new("a")].into_iter().collect());
        assert_eq!(threads(&c), vec!["a<1>"]);
        let c = norm("b<1> | new a. a<2>");
        assert_eq!(threads(&c), vec!["b<1>", "a<2>"]);
        assert!(c.restricted.contains(&Name::new("a")));
    }

    #[test]
    fn binder_order_is_irrelevant() {
        let a = norm("new a. new b. (a<b> | b(x).0)");
        let b = norm("new b. new a. (a<b> | b(x).0)");
        assert_eq!(a.canonical_key(), b.canonical_key());
    }

    #[test]
    fn colliding_binders_are_renamed() {
        let c = norm("new a. a<1> | new a. a<2> | a<3>");
        assert_eq!(c.restricted.len(), 2);
        let chans: BTreeSet<_> = c.threads.iter().map(|t| t.chan.clone().unwrap()).collect();
        assert_eq!(chans.len(), 3);
        // the free a stays free
        assert!(c.barbs().iter().any(|b| b.channel.base.as_str() == "a"));
    }

    #[test]
    fn guarded_binders_avoid_free_names() {
        let c = norm("c(x).new a. x<a> | new a. c<a>");
        let recv = &c.threads[0];
        let Process::Act(_, k) = &*recv.body else { panic!() };
        let Process::New(bound, _) = &**k else { panic!() };
        assert_ne!(bound.as_str(), "a");
    }

    #[test]
    fn replication_rules() {
        let c = norm("!(a(x).0 | !b<>) | !0");
        assert_eq!(c.threads.len(), 2);
        assert!(c.threads.iter().all(|t| t.replicated));
        let p = parse_process("!new a. a<>").unwrap();
        assert!(matches!(
            normalize(&p),
            Err(EngineError::UnguardedReplication(_))
        ));
        let p = parse_process("*(a<> | b<>)").unwrap();
        assert!(matches!(normalize(&p), Err(EngineError::MisplacedBullet(_))));
        let p = parse_process("a<x>").unwrap();
        assert!(normalize(&p).is_ok());
        let p = parse_process("c(x).0 | x(y).y<>").unwrap();
        // y is bound, x free as a name
        assert!(normalize(&p).is_ok());
    }

    #[test]
    fn barbs_ignore_restricted_channels() {
        let c = norm("new a. (a<1> | b(x).0)");
        let barbs: Vec<String> = c.barbs().iter().map(ToString::to_string).collect();
        assert_eq!(barbs, vec!["b:in"]);
        assert_eq!(
            norm("o<5>").barbs().iter().map(ToString::to_string).collect::<Vec<_>>(),
            vec!["o:out"]
        );
        assert!(norm("0").barbs().is_empty());
    }

    #[test]
    fn gc_removes_unreachable_servers() {
        let mut c = norm("new f. !f(x, r).r<x>");
        c.garbage_collect();
        assert!(c.is_empty());
        let mut c = norm("new f. (!f(x, r).r<x> | f<1, o>)");
        c.garbage_collect();
        assert_eq!(c.threads.len(), 2);
        let mut c = norm("!f(x, r).r<x>");
        c.garbage_collect();
        assert_eq!(c.threads.len(), 1);
        // a chain of handles dies together
        let mut c = norm("new h, g. (!h.0<g> | !g.len<1>)");
        c.garbage_collect();
        assert!(c.is_empty());
    }

    #[test]
    fn normalize_is_idempotent() {
        let c = norm("new a, b. (a<b> | !b(x).x<1> | *[1 = 1] c<>, 0)");
        let again = normalize(&c.to_process()).unwrap();
        assert_eq!(c.canonical_key(), again.canonical_key());
        assert_eq!(threads(&c), threads(&again));
    }

    #[test]
    fn key_separates_sharing_patterns() {
        let same = norm("new a. (a<a, a> | c<>)");
        let diff = norm("new a, b. (a<a, b> | c<>)");
        assert_ne!(same.canonical_key(), diff.canonical_key());
        assert_eq!(same.anonymized(), diff.anonymized());
    }
}
