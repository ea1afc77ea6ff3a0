//! Runs a program both ways and compares the outcomes.
//!
//! The process side is run to quiescence. The value is then read out of the
//! final configuration by injecting probe threads that use the handle
//! protocols (`h.len`, `h.i`, `h.tup`) and running them administratively,
//! guided by the shape of the value the evaluator produced: the tuple
//! protocol is polyadic, so its arity cannot be discovered blindly.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Serialize;
use thiserror::Error;

use crate::butf::{eval, eval_traced, Builtin, EvalError, Expr, Rule};
use crate::epi::{
    eval_term, explore, normalize, run, Action, Channel, Config, ExploreOptions, Label, Name,
    Pattern, Policy, Process, RunOptions, RunStatus, Term, Trace,
};
use crate::error::EngineError;
use crate::translate::{translate, TranslationOptions};

/// A value decoded from a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ReadBack {
    Num(#[serde(serialize_with = "crate::json::serialize_bigint")] BigInt),
    Array(Vec<ReadBack>),
    Tuple(Vec<ReadBack>),
    /// A handle that is not probed further.
    Function(String),
}

impl fmt::Display for ReadBack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, items: &[ReadBack]) -> fmt::Result {
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            Ok(())
        }
        match self {
            ReadBack::Num(n) => write!(f, "{n}"),
            ReadBack::Array(xs) => {
                write!(f, "[")?;
                list(f, xs)?;
                write!(f, "]")
            }
            ReadBack::Tuple(xs) => {
                write!(f, "(")?;
                list(f, xs)?;
                if xs.len() == 1 {
                    write!(f, ",")?;
                }
                write!(f, ")")
            }
            ReadBack::Function(_) => write!(f, "<function>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrespondenceError {
    #[error("evaluator: {0}")]
    Oracle(#[from] EvalError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("no quiescence within {budget} steps")]
    Timeout { budget: u64 },
    #[error("fault: {0}")]
    Fault(String),
    #[error("process stopped without output on the result channel")]
    NoResult,
    #[error("read-back blocked on {channel}")]
    Incomplete { channel: String },
}

/// Structural equality; any function matches any unprobed handle.
pub fn value_equal(v: &Expr, r: &ReadBack) -> bool {
    match (v, r) {
        (Expr::Num(a), ReadBack::Num(b)) => a == b,
        (Expr::Array(xs), ReadBack::Array(ys)) | (Expr::Tuple(xs), ReadBack::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| value_equal(x, y))
        }
        (Expr::Lambda(..) | Expr::Builtin(_), ReadBack::Function(_)) => true,
        _ => false,
    }
}

/// The term sent on `o`, if some thread is offering one.
pub fn result_term(c: &Config, o: &Name) -> Option<Term> {
    c.threads.iter().find_map(|t| match t.action() {
        Some(Action::Send(ch, args))
            if !t.replicated
                && ch.label.is_none()
                && ch.base == Term::Name(o.clone())
                && args.len() == 1 =>
        {
            Some(args[0].clone())
        }
        _ => None,
    })
}

/// Decodes `result` in `c`, using `shape` (the expected value) to choose
/// probes. Probe steps are administrative and are not reported.
pub fn read_back(
    c: &Config,
    result: &Term,
    shape: Option<&Expr>,
    budget: u64,
) -> Result<ReadBack, CorrespondenceError> {
    let mut c = c.clone();
    decode(&mut c, result, shape, budget)
}

fn decode(
    c: &mut Config,
    result: &Term,
    shape: Option<&Expr>,
    budget: u64,
) -> Result<ReadBack, CorrespondenceError> {
    let value = eval_term(result).map_err(CorrespondenceError::Fault)?;
    let h = match value {
        Term::Num(n) => return Ok(ReadBack::Num(n)),
        Term::Name(h) => h,
        other => return Err(CorrespondenceError::Fault(format!("unexpected result {other}"))),
    };
    match shape {
        Some(Expr::Array(items)) => {
            let [n] = probe(c, &h, Label::Len, 1, budget)?.try_into().expect("one");
            let n: usize = match &n {
                Term::Num(k) => k.try_into().map_err(|_| bad_len(&h, &n))?,
                _ => return Err(bad_len(&h, &n)),
            };
            let mut elems = Vec::with_capacity(n);
            for i in 0..n {
                let [_, v] = probe(c, &h, Label::Index(Term::num(i)), 2, budget)?
                    .try_into()
                    .expect("two");
                elems.push(v);
            }
            let mut out = Vec::with_capacity(n);
            for (i, v) in elems.iter().enumerate() {
                out.push(decode(c, v, items.get(i), budget)?);
            }
            Ok(ReadBack::Array(out))
        }
        Some(Expr::Tuple(items)) => {
            let vs = probe(c, &h, Label::Tup, items.len(), budget)?;
            let mut out = Vec::with_capacity(vs.len());
            for (v, s) in vs.iter().zip(items) {
                out.push(decode(c, v, Some(s), budget)?);
            }
            Ok(ReadBack::Tuple(out))
        }
        _ => Ok(ReadBack::Function(h.to_string())),
    }
}

fn bad_len(h: &Name, t: &Term) -> CorrespondenceError {
    CorrespondenceError::Fault(format!("{h}.len answered {t}"))
}

/// Injects `h.label(x1, .., xk).p<x1, .., xk>`, runs administratively and
/// returns what arrived on `p`.
fn probe(
    c: &mut Config,
    h: &Name,
    label: Label,
    arity: usize,
    budget: u64,
) -> Result<Vec<Term>, CorrespondenceError> {
    let p = c.fresh_name(&Name::new("probe"));
    let vars: Vec<String> = (0..arity).map(|i| format!("x{i}")).collect();
    let channel = Channel::with(Term::Name(h.clone()), label);
    let shown = channel.to_string();
    let body = Process::recv(
        channel,
        vars.iter().map(|x| Pattern::bind(x)).collect(),
        Process::send(
            Channel::named(&p),
            vars.iter().map(|x| Term::var(x)).collect(),
            Process::Nil,
        ),
    );
    c.spawn(&Arc::new(body), 0, None)?;
    let opts = RunOptions {
        budget,
        admin_only: true,
        stop_on_barb: Some(p.clone()),
        ..RunOptions::default()
    };
    let trace = run(std::mem::take(c), Policy::PriorityDeterministic, &opts);
    *c = trace.config;
    let answer = c.threads.iter().find_map(|t| match t.action() {
        Some(Action::Send(ch, args)) if ch.base == Term::Name(p.clone()) => Some(args.clone()),
        _ => None,
    });
    answer.ok_or(CorrespondenceError::Incomplete { channel: shown })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CheckOptions {
    pub seeds: u64,
    /// Engine steps per run.
    pub budget: u64,
    /// Evaluator steps.
    pub fuel: u64,
    pub translation: TranslationOptions,
    pub gc: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seeds: 20,
            budget: 1_000_000,
            fuel: 1_000_000,
            translation: TranslationOptions::default(),
            gc: false,
        }
    }
}

pub fn root() -> Name {
    Name::new("o")
}

/// The translated program as a configuration.
pub fn initial_config(e: &Expr, opts: &TranslationOptions) -> Result<Config, EngineError> {
    normalize(&translate(e, &root(), opts))
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub readback: ReadBack,
    pub important_steps: u64,
    pub trace: Trace,
}

/// Runs the translation of `e` to quiescence and reads the result back.
pub fn simulate_to_result(
    e: &Expr,
    shape: Option<&Expr>,
    policy: Policy,
    opts: &CheckOptions,
) -> Result<RunReport, CorrespondenceError> {
    let c = initial_config(e, &opts.translation)?;
    let run_opts = RunOptions {
        budget: opts.budget,
        gc: opts.gc,
        ..RunOptions::default()
    };
    let trace = run(c, policy, &run_opts);
    match trace.status {
        RunStatus::Timeout => return Err(CorrespondenceError::Timeout { budget: opts.budget }),
        RunStatus::Fault => return Err(CorrespondenceError::Fault(trace.faults.join("; "))),
        RunStatus::Quiescent | RunStatus::StopBarb => {}
    }
    let result = result_term(&trace.config, &root()).ok_or(CorrespondenceError::NoResult)?;
    let readback = read_back(&trace.config, &result, shape, opts.budget)?;
    Ok(RunReport {
        readback,
        important_steps: trace.work,
        trace,
    })
}

/// True iff the translation of `e` can show its result using
/// administrative steps only; `None` when the search bound was hit first.
pub fn check_value_barb(e: &Expr, max_states: usize) -> Result<Option<bool>, EngineError> {
    let c = initial_config(e, &TranslationOptions::default())?;
    let ex = explore(
        &c,
        &ExploreOptions {
            max_states,
            admin_only: true,
            watch: Some(root()),
            ..ExploreOptions::default()
        },
    );
    Ok(if ex.watched_barb_seen {
        Some(true)
    } else if ex.bound_hit {
        None
    } else {
        Some(false)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    /// Bullets consumed by `map`'s probe call of the function on 0.
    MapDummyCall,
    /// `size` and `iota` reductions that carry no bullet without strict
    /// bullets.
    UnbulletedSizeIota,
    /// Arithmetic reductions, whose rule the source language leaves implicit.
    ArithRule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub kind: DeviationKind,
    /// Signed contribution to the expected important-step count.
    pub adjustment: i64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportantSteps {
    pub min: u64,
    pub max: u64,
    pub per_seed: Vec<u64>,
    pub deterministic: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrespondenceReport {
    pub program: String,
    pub mode: &'static str,
    pub value: String,
    pub readback: Vec<String>,
    pub butf_steps: u64,
    pub important: ImportantSteps,
    /// `butf_steps` plus the deviation adjustments.
    pub expected_important: i64,
    pub value_match: bool,
    pub accounting_match: bool,
    pub deviations: Vec<Deviation>,
    pub seeds_run: u64,
    pub status: CheckStatus,
}

impl CorrespondenceReport {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// Evaluates `e`, runs its translation under every seed and the
/// deterministic policy, and compares values and step counts.
pub fn check_program(e: &Expr, opts: &CheckOptions) -> Result<CorrespondenceReport, CorrespondenceError> {
    let (result, trace) = eval_traced(e, opts.fuel);
    let value = result?;
    let deviations = deviations(e, &trace, opts)?;
    let expected = value.steps as i64 + deviations.iter().map(|d| d.adjustment).sum::<i64>();

    let mut per_seed = Vec::new();
    let mut readbacks = BTreeSet::new();
    let mut value_match = true;
    let mut record = |r: &RunReport| {
        value_match &= value_equal(&value.value, &r.readback);
        readbacks.insert(r.readback.to_string());
        r.important_steps
    };
    for seed in 0..opts.seeds {
        let r = simulate_to_result(e, Some(&value.value), Policy::SeededRandom(seed), opts)?;
        per_seed.push(record(&r));
    }
    let det = simulate_to_result(e, Some(&value.value), Policy::PriorityDeterministic, opts)?;
    let deterministic = record(&det);

    let all = per_seed.iter().copied().chain([deterministic]);
    let accounting_match = all.clone().all(|k| k as i64 == expected);
    let important = ImportantSteps {
        min: all.clone().min().unwrap_or(0),
        max: all.max().unwrap_or(0),
        per_seed,
        deterministic,
    };
    let status = if value_match && accounting_match {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(CorrespondenceReport {
        program: e.to_string(),
        mode: if opts.translation.strict_bullets {
            "strict"
        } else {
            "paper-literal"
        },
        value: value.value.to_string(),
        readback: readbacks.into_iter().collect(),
        butf_steps: value.steps,
        important,
        expected_important: expected,
        value_match,
        accounting_match,
        deviations,
        seeds_run: opts.seeds,
        status,
    })
}

fn deviations(
    e: &Expr,
    trace: &[crate::butf::TraceEntry],
    opts: &CheckOptions,
) -> Result<Vec<Deviation>, CorrespondenceError> {
    let mut out = Vec::new();
    let mut dummy = 0i64;
    let mut maps = 0;
    for entry in trace.iter().filter(|t| t.rule == Rule::Map) {
        if let Expr::App(_, arg) = &entry.redex {
            if let Expr::Tuple(items) = &**arg {
                dummy += dummy_call_bullets(&items[0], opts)? as i64;
                maps += 1;
            }
        }
    }
    if maps > 0 {
        out.push(Deviation {
            kind: DeviationKind::MapDummyCall,
            adjustment: dummy,
            detail: format!("{maps} map reductions; their calls on 0 consume {dummy} bullets"),
        });
    }
    if !opts.translation.strict_bullets {
        let k = direct_size_iota(e, opts.fuel)?;
        if k > 0 {
            out.push(Deviation {
                kind: DeviationKind::UnbulletedSizeIota,
                adjustment: -(k as i64),
                detail: format!("{k} size/iota reductions count 0 instead of 1"),
            });
        }
    }
    let arith = trace.iter().filter(|t| t.rule == Rule::Arith).count();
    if arith > 0 {
        out.push(Deviation {
            kind: DeviationKind::ArithRule,
            adjustment: 0,
            detail: format!("{arith} arithmetic reductions, one bullet each"),
        });
    }
    Ok(out)
}

/// Important steps of `f 0` beyond the application itself.
pub fn dummy_call_bullets(f: &Expr, opts: &CheckOptions) -> Result<u64, CorrespondenceError> {
    let call = Expr::app(f.clone(), Expr::num(0));
    let c = initial_config(&call, &opts.translation)?;
    let trace = run(
        c,
        Policy::PriorityDeterministic,
        &RunOptions {
            budget: opts.budget,
            strict: false,
            ..RunOptions::default()
        },
    );
    if trace.status == RunStatus::Timeout {
        return Err(CorrespondenceError::Timeout { budget: opts.budget });
    }
    Ok(trace.work.saturating_sub(1))
}

const WRAP: &str = "%builtin";

/// Number of `size`/`iota` reductions performed by directly applied
/// occurrences. A bare occurrence passed as a value is charged by the
/// bullet of the application that eventually calls it, so it is wrapped in
/// a marked abstraction and its reductions are discounted.
fn direct_size_iota(e: &Expr, fuel: u64) -> Result<u64, EvalError> {
    fn mark(e: &Expr) -> Expr {
        match e {
            Expr::Builtin(b @ (Builtin::Size | Builtin::Iota)) => Expr::lambda(
                WRAP,
                Expr::app(Expr::Builtin(*b), Expr::var(WRAP)),
            ),
            Expr::App(f, a) if matches!(**f, Expr::Builtin(_)) => Expr::App(f.clone(), Box::new(mark(a))),
            Expr::App(f, a) => Expr::app(mark(f), mark(a)),
            Expr::Array(xs) => Expr::Array(xs.iter().map(mark).collect()),
            Expr::Tuple(xs) => Expr::Tuple(xs.iter().map(mark).collect()),
            Expr::Index(a, b) => Expr::index(mark(a), mark(b)),
            Expr::Lambda(x, b) => Expr::lambda(x, mark(b)),
            Expr::If(c, t, f) => Expr::if_(mark(c), mark(t), mark(f)),
            Expr::Num(_) | Expr::Var(_) | Expr::Builtin(_) => e.clone(),
        }
    }
    let (result, trace) = eval_traced(&mark(e), fuel);
    result?;
    let reductions = trace
        .iter()
        .filter(|t| matches!(t.rule, Rule::Size | Rule::Iota))
        .count();
    let wrapped = trace
        .iter()
        .filter(|t| {
            t.rule == Rule::Beta
                && matches!(&t.redex, Expr::App(f, _) if matches!(&**f, Expr::Lambda(x, _) if x == WRAP))
        })
        .count();
    Ok((reductions - wrapped) as u64)
}

/// Outcome of one terminal configuration of an exhaustive search.
pub fn terminal_outcome(c: &Config, shape: Option<&Expr>, budget: u64) -> String {
    match result_term(c, &root()) {
        None => "no result".to_string(),
        Some(t) => match read_back(c, &t, shape, budget) {
            Ok(r) => r.to_string(),
            Err(err) => format!("error: {err}"),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfluenceReport {
    pub program: String,
    pub states: usize,
    pub terminals: usize,
    pub bound_hit: bool,
    /// Distinct outcomes; faulting branches count as the outcome `fault`.
    pub outcomes: Vec<String>,
}

impl ConfluenceReport {
    pub fn confluent(&self) -> bool {
        self.outcomes.len() <= 1
    }
}

/// Explores every schedule of the translation of `e` (up to `max_states`
/// configurations) and collects the distinct read-back outcomes.
pub fn confluence(e: &Expr, max_states: usize, opts: &CheckOptions) -> Result<ConfluenceReport, EngineError> {
    let shape = eval(e, opts.fuel).ok().map(|r| r.value);
    let c = initial_config(e, &opts.translation)?;
    let ex = explore(
        &c,
        &ExploreOptions {
            max_states,
            ..ExploreOptions::default()
        },
    );
    let mut outcomes: BTreeSet<String> = ex
        .terminals
        .iter()
        .map(|t| terminal_outcome(t, shape.as_ref(), opts.budget))
        .collect();
    if !ex.faults.is_empty() {
        outcomes.insert("fault".to_string());
    }
    Ok(ConfluenceReport {
        program: e.to_string(),
        states: ex.states,
        terminals: ex.terminals.len(),
        bound_hit: ex.bound_hit,
        outcomes: outcomes.into_iter().collect(),
    })
}
