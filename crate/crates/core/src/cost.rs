//! Work and span of translated programs.
//!
//! Work is the number of important steps of a run, span the deepest causal
//! chain of important steps. Scaling families generate programs indexed by
//! a size and compare the measured growth with the expected shape.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::butf::{parse, Expr};
use crate::correspondence::{initial_config, CheckOptions, CorrespondenceError};
use crate::epi::{run, Policy, RunOptions, RunStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedCost {
    /// `None` for the deterministic policy.
    pub seed: Option<u64>,
    pub work: u64,
    pub span: u32,
    pub admin_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    /// Maxima over the runs.
    pub work: u64,
    pub span: u32,
    pub admin_steps: u64,
    pub runs: Vec<SeedCost>,
}

fn policies(seeds: u64) -> Vec<(Option<u64>, Policy)> {
    if seeds == 0 {
        vec![(None, Policy::PriorityDeterministic)]
    } else {
        (0..seeds).map(|s| (Some(s), Policy::SeededRandom(s))).collect()
    }
}

/// Runs the translation of `e` once per seed (or once deterministically
/// when `opts.seeds` is 0) and reports work and span.
pub fn measure(e: &Expr, opts: &CheckOptions) -> Result<CostReport, CorrespondenceError> {
    let c = initial_config(e, &opts.translation)?;
    let run_opts = RunOptions {
        budget: opts.budget,
        gc: opts.gc,
        ..RunOptions::default()
    };
    let mut runs = Vec::new();
    for (seed, policy) in policies(opts.seeds) {
        let trace = run(c.clone(), policy, &run_opts);
        match trace.status {
            RunStatus::Timeout => return Err(CorrespondenceError::Timeout { budget: opts.budget }),
            RunStatus::Fault => return Err(CorrespondenceError::Fault(trace.faults.join("; "))),
            RunStatus::Quiescent | RunStatus::StopBarb => {}
        }
        runs.push(SeedCost {
            seed,
            work: trace.work,
            span: trace.span,
            admin_steps: trace.admin_steps,
        });
    }
    Ok(CostReport {
        work: runs.iter().map(|r| r.work).max().unwrap_or(0),
        span: runs.iter().map(|r| r.span).max().unwrap_or(0),
        admin_steps: runs.iter().map(|r| r.admin_steps).max().unwrap_or(0),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `[(\x. x) 1, ..., (\x. x) n]`.
    ArrayOfApps,
    /// `map (body, iota n)`.
    MapOverIota(Expr),
    /// `(\x1. (\x2. ... (\xk. xk) ... x2) x1) 0`.
    NestedApps,
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Family::ArrayOfApps => "array-of-apps",
            Family::MapOverIota(_) => "map-over-iota",
            Family::NestedApps => "nested-apps",
        }
    }

    pub fn program(&self, n: usize) -> Expr {
        let id = || Expr::lambda("x", Expr::var("x"));
        match self {
            Family::ArrayOfApps => {
                Expr::Array((1..=n).map(|i| Expr::app(id(), Expr::num(i))).collect())
            }
            Family::MapOverIota(body) => Expr::app(
                Expr::Builtin(crate::butf::Builtin::Map),
                Expr::Tuple(vec![
                    body.clone(),
                    Expr::app(Expr::Builtin(crate::butf::Builtin::Iota), Expr::num(n)),
                ]),
            ),
            Family::NestedApps => {
                let var = |i: usize| format!("x{i}");
                let mut body = Expr::var(&var(n));
                for i in (1..n).rev() {
                    body = Expr::app(Expr::lambda(&var(i + 1), body), Expr::var(&var(i)));
                }
                Expr::app(Expr::lambda(&var(1), body), Expr::num(0))
            }
        }
    }

    pub fn predicted(&self) -> (Shape, Shape) {
        match self {
            Family::ArrayOfApps | Family::MapOverIota(_) => (Shape::Linear, Shape::Constant),
            Family::NestedApps => (Shape::Linear, Shape::Linear),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::MapOverIota(body) => write!(f, "{}({body})", self.id()),
            _ => write!(f, "{}", self.id()),
        }
    }
}

impl FromStr for Family {
    type Err = String;

    /// `array-of-apps`, `nested-apps`, `map-over-iota` or
    /// `map-over-iota:<body>`.
    fn from_str(s: &str) -> Result<Family, String> {
        let (id, body) = match s.split_once(':') {
            Some((id, body)) => (id, Some(body)),
            None => (s, None),
        };
        match (id, body) {
            ("array-of-apps", None) => Ok(Family::ArrayOfApps),
            ("nested-apps", None) => Ok(Family::NestedApps),
            ("map-over-iota", None) => Ok(Family::MapOverIota(Expr::lambda("x", Expr::var("x")))),
            ("map-over-iota", Some(src)) => parse(src)
                .map(Family::MapOverIota)
                .map_err(|e| format!("body: {e}")),
            _ => Err(format!(
                "unknown family `{s}` (array-of-apps, map-over-iota[:body], nested-apps)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    Linear,
}

/// One measurement in long format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Row {
    pub family: String,
    pub n: usize,
    pub seed: Option<u64>,
    pub work: u64,
    pub span: u32,
    pub admin_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScalingTable {
    pub family: String,
    pub rows: Vec<Row>,
    pub predicted_work: Shape,
    pub predicted_span: Shape,
    /// Sizes whose measurement failed, with the reason.
    pub dropped: Vec<(usize, String)>,
}

impl ScalingTable {
    /// `(n, max work, max span)` per size, in increasing `n`.
    pub fn summary(&self) -> Vec<(usize, u64, u32)> {
        let mut out: Vec<(usize, u64, u32)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some(last) if last.0 == r.n => {
                    last.1 = last.1.max(r.work);
                    last.2 = last.2.max(r.span);
                }
                _ => out.push((r.n, r.work, r.span)),
            }
        }
        out
    }
}

pub fn scaling_experiment(family: &Family, sizes: &[usize], opts: &CheckOptions) -> ScalingTable {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let (predicted_work, predicted_span) = family.predicted();
    let mut table = ScalingTable {
        family: family.to_string(),
        rows: Vec::new(),
        predicted_work,
        predicted_span,
        dropped: Vec::new(),
    };
    for n in sizes {
        match measure(&family.program(n), opts) {
            Ok(report) => table.rows.extend(report.runs.iter().map(|r| Row {
                family: family.id().to_string(),
                n,
                seed: r.seed,
                work: r.work,
                span: r.span,
                admin_steps: r.admin_steps,
            })),
            Err(e) => table.dropped.push((n, e.to_string())),
        }
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub metric: &'static str,
    pub shape: Shape,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FitReport {
    pub family: String,
    pub verdicts: Vec<Verdict>,
}

impl FitReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Exact check of the predicted shapes: equal first differences per unit
/// of `n` for linear rows, no variation at all for constant rows.
pub fn fit_check(t: &ScalingTable) -> FitReport {
    let summary = t.summary();
    let work: Vec<(usize, i128)> = summary.iter().map(|r| (r.0, r.1 as i128)).collect();
    let span: Vec<(usize, i128)> = summary.iter().map(|r| (r.0, r.2 as i128)).collect();
    FitReport {
        family: t.family.clone(),
        verdicts: vec![
            verdict("work", t.predicted_work, &work),
            verdict("span", t.predicted_span, &span),
        ],
    }
}

fn verdict(metric: &'static str, shape: Shape, pts: &[(usize, i128)]) -> Verdict {
    let data = pts
        .iter()
        .map(|(n, v)| format!("{n}:{v}"))
        .collect::<Vec<_>>()
        .join(" ");
    if pts.len() < 3 {
        return Verdict {
            metric,
            shape,
            pass: false,
            detail: format!("need at least 3 sizes, have {}: {data}", pts.len()),
        };
    }
    let (pass, why) = match shape {
        Shape::Constant => {
            let max = pts.iter().map(|p| p.1).max().unwrap_or(0);
            let min = pts.iter().map(|p| p.1).min().unwrap_or(0);
            (max == min, format!("max - min = {}", max - min))
        }
        Shape::Linear => {
            // slope (v1 - v0) / (n1 - n0) compared by cross-multiplication
            let (n0, v0) = pts[0];
            let (n1, v1) = pts[1];
            let (dv, dn) = (v1 - v0, n1 as i128 - n0 as i128);
            let ok = pts.windows(2).all(|w| {
                let (a, b) = (w[0], w[1]);
                (b.1 - a.1) * dn == dv * (b.0 as i128 - a.0 as i128)
            });
            (ok, format!("slope {dv}/{dn}"))
        }
    };
    Verdict {
        metric,
        shape,
        pass,
        detail: format!("{why}; {data}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det() -> CheckOptions {
        CheckOptions {
            seeds: 0,
            ..CheckOptions::default()
        }
    }

    #[test]
    fn measurements() {
        let m = |src: &str| {
            let r = measure(&parse(src).unwrap(), &det()).unwrap();
            (r.work, r.span)
        };
        assert_eq!(m("5"), (0, 0));
        assert_eq!(m("(\\x. x) 5"), (1, 1));
        assert_eq!(m("[(\\x. x) 1, (\\x. x) 2]"), (2, 1));
        assert_eq!(m("if 1 then (\\x. x) 2 else 3"), (2, 2));
    }

    #[test]
    fn family_programs() {
        assert_eq!(
            Family::NestedApps.program(3).to_string(),
            "(\\x1. (\\x2. (\\x3. x3) x2) x1) 0"
        );
        assert_eq!(Family::ArrayOfApps.program(2).to_string(), "[(\\x. x) 1, (\\x. x) 2]");
        assert_eq!(
            "map-over-iota".parse::<Family>().unwrap().program(4).to_string(),
            "map (\\x. x, iota 4)"
        );
        assert!("bogus".parse::<Family>().is_err());
    }

    #[test]
    fn nested_apps_chain() {
        let r = measure(&Family::NestedApps.program(3), &det()).unwrap();
        assert_eq!((r.work, r.span), (3, 3));
    }

    #[test]
    fn fit_verdicts() {
        let table = |rows: &[(usize, u64, u32)], w, s| ScalingTable {
            family: "t".into(),
            rows: rows
                .iter()
                .map(|&(n, work, span)| Row {
                    family: "t".into(),
                    n,
                    seed: None,
                    work,
                    span,
                    admin_steps: 0,
                })
                .collect(),
            predicted_work: w,
            predicted_span: s,
            dropped: vec![],
        };
        let t = table(&[(1, 1, 1), (2, 2, 1), (4, 4, 1)], Shape::Linear, Shape::Constant);
        assert!(fit_check(&t).pass());
        let t = table(&[(1, 2, 2), (2, 2, 3), (4, 2, 4)], Shape::Linear, Shape::Constant);
        let f = fit_check(&t);
        assert!(f.verdicts[0].pass && !f.verdicts[1].pass);
        let t = table(&[(1, 1, 1), (2, 3, 1), (4, 4, 1)], Shape::Linear, Shape::Constant);
        assert!(!fit_check(&t).verdicts[0].pass);
        assert!(!fit_check(&table(&[(1, 1, 1)], Shape::Linear, Shape::Linear)).pass());
    }

    #[test]
    fn map_span_is_flat() {
        let fam: Family = "map-over-iota".parse().unwrap();
        let t = scaling_experiment(&fam, &[1, 4, 16], &det());
        assert!(t.dropped.is_empty());
        assert!(fit_check(&t).pass(), "{:?}", t.summary());
    }
}
