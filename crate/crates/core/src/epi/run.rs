//! Schedulers, whole runs and exhaustive exploration.

use std::collections::{HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::config::Config;
use super::reduce::{Redex, Step};
use super::syntax::Name;
use crate::error::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Uniform choice among enabled redexes.
    SeededRandom(u64),
    /// The redex whose sorted participant ids are lexicographically least.
    PriorityDeterministic,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub budget: u64,
    /// Faults and arity mismatches abort the run.
    pub strict: bool,
    /// Collect unreachable servers after every step.
    pub gc: bool,
    /// Stop as soon as this free channel has an output barb.
    pub stop_on_barb: Option<Name>,
    /// Only fire administrative redexes.
    pub admin_only: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            budget: 1_000_000,
            strict: true,
            gc: false,
            stop_on_barb: None,
            admin_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Quiescent,
    StopBarb,
    Timeout,
    Fault,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub status: RunStatus,
    pub config: Config,
    /// Important steps.
    pub work: u64,
    /// Deepest causal chain of important steps.
    pub span: u32,
    pub admin_steps: u64,
    pub faults: Vec<String>,
    /// Bullets removed by garbage collection or fault removal.
    pub bullets_removed: usize,
}

impl Trace {
    pub fn to_json(&self) -> serde_json::Value {
        let steps: Vec<_> = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                json!({
                    "idx": i + 1,
                    "kind": s.kind,
                    "rule": s.rule,
                    "channel": s.channel,
                    "depth": s.depth_after,
                })
            })
            .collect();
        let barbs: Vec<String> = self.config.barbs().iter().map(ToString::to_string).collect();
        json!({
            "steps": steps,
            "work": self.work,
            "span": self.span,
            "admin_steps": self.admin_steps,
            "barbs": barbs,
            "status": self.status,
            "faults": self.faults,
        })
    }
}

/// Whether firing `r` would consume a bullet.
pub fn is_important(c: &Config, r: &Redex) -> bool {
    r.participants()
        .iter()
        .any(|&id| c.thread(id).is_some_and(|t| t.bullet))
}

fn enabled(c: &Config, strict: bool, admin_only: bool) -> Result<Vec<Redex>, EngineError> {
    let mut rs = c.enabled_redexes(strict)?;
    if admin_only {
        rs.retain(|r| !is_important(c, r));
    }
    Ok(rs)
}

/// Runs until quiescence, a stop barb, the budget, or (strict) a fault.
pub fn run(c: Config, policy: Policy, opts: &RunOptions) -> Trace {
    let mut rng = match policy {
        Policy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Policy::PriorityDeterministic => None,
    };
    let mut trace = Trace {
        steps: Vec::new(),
        status: RunStatus::Quiescent,
        config: c,
        work: 0,
        span: 0,
        admin_steps: 0,
        faults: Vec::new(),
        bullets_removed: 0,
    };
    loop {
        if let Some(o) = &opts.stop_on_barb {
            if trace.config.has_out_barb(o) {
                trace.status = RunStatus::StopBarb;
                return trace;
            }
        }
        let redexes = match enabled(&trace.config, opts.strict, opts.admin_only) {
            Ok(rs) => rs,
            Err(e) => {
                trace.faults.push(e.to_string());
                trace.status = RunStatus::Fault;
                return trace;
            }
        };
        if redexes.is_empty() {
            trace.status = RunStatus::Quiescent;
            return trace;
        }
        if trace.steps.len() as u64 >= opts.budget {
            trace.status = RunStatus::Timeout;
            return trace;
        }
        let pick = match &mut rng {
            Some(rng) => &redexes[rng.gen_range(0..redexes.len())],
            None => redexes
                .iter()
                .min_by_key(|r| r.participants())
                .expect("nonempty"),
        };
        match trace.config.apply(pick) {
            Ok(step) => {
                if step.is_important() {
                    trace.work += 1;
                } else {
                    trace.admin_steps += 1;
                }
                trace.span = trace.span.max(step.depth_after);
                trace.steps.push(step);
            }
            Err(Ok(fault)) => {
                trace.faults.push(fault.message);
                if opts.strict {
                    trace.status = RunStatus::Fault;
                    return trace;
                }
                if let Some(t) = trace.config.thread(fault.thread) {
                    trace.bullets_removed += t.bullets();
                }
                trace.config.remove_ids(&[fault.thread]);
            }
            Err(Err(e)) => {
                trace.faults.push(e.to_string());
                trace.status = RunStatus::Fault;
                return trace;
            }
        }
        if opts.gc {
            trace.bullets_removed += trace.config.garbage_collect();
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub max_states: usize,
    pub max_depth: usize,
    /// Partial-order reduction: when a redex commutes with everything,
    /// explore only it.
    pub por: bool,
    pub admin_only: bool,
    pub strict: bool,
    /// Record whether any reached state shows an output barb here.
    pub watch: Option<Name>,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_states: 100_000,
            max_depth: 1_000_000,
            por: true,
            admin_only: false,
            strict: true,
            watch: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Exploration {
    /// Distinct configurations with no enabled redex.
    pub terminals: Vec<Config>,
    pub states: usize,
    pub bound_hit: bool,
    pub faults: Vec<String>,
    pub watched_barb_seen: bool,
}

/// A redex independent of every other redex now and later: a match, or a
/// communication on a restricted channel that only its two participants
/// know about.
fn independent(c: &Config, rs: &[Redex]) -> Option<usize> {
    rs.iter().position(|r| match r {
        Redex::Match { .. } => true,
        Redex::Comm {
            sender,
            receiver,
            channel,
        } => {
            c.restricted.contains(&channel.base)
                && c.threads
                    .iter()
                    .all(|t| t.id == *sender || t.id == *receiver || !t.mentions(&channel.base))
        }
        Redex::Broad { .. } => false,
    })
}

/// Breadth-first search of the reduction graph modulo renaming.
pub fn explore(c: &Config, opts: &ExploreOptions) -> Exploration {
    let mut out = Exploration::default();
    let mut seen: HashSet<u128> = HashSet::new();
    let mut queue: VecDeque<(Config, usize)> = VecDeque::new();
    let mut root = c.clone();
    root.prune_restricted();
    seen.insert(root.canonical_key());
    queue.push_back((root, 0));
    while let Some((cfg, depth)) = queue.pop_front() {
        out.states += 1;
        if let Some(o) = &opts.watch {
            if cfg.has_out_barb(o) {
                out.watched_barb_seen = true;
            }
        }
        let redexes = match enabled(&cfg, opts.strict, opts.admin_only) {
            Ok(rs) => rs,
            Err(e) => {
                out.faults.push(e.to_string());
                continue;
            }
        };
        if redexes.is_empty() {
            out.terminals.push(cfg);
            continue;
        }
        if depth >= opts.max_depth {
            out.bound_hit = true;
            continue;
        }
        let chosen: Vec<&Redex> = match opts.por.then(|| independent(&cfg, &redexes)).flatten() {
            Some(i) => vec![&redexes[i]],
            None => redexes.iter().collect(),
        };
        for r in chosen {
            let mut next = cfg.clone();
            match next.apply(r) {
                Ok(_) => {}
                Err(Ok(fault)) => {
                    out.faults.push(fault.message);
                    if opts.strict {
                        continue;
                    }
                    next.remove_ids(&[fault.thread]);
                }
                Err(Err(e)) => {
                    out.faults.push(e.to_string());
                    continue;
                }
            }
            next.prune_restricted();
            if seen.insert(next.canonical_key()) {
                if seen.len() > opts.max_states {
                    out.bound_hit = true;
                    return out;
                }
                queue.push_back((next, depth + 1));
            }
        }
    }
    out
}
