//! `butfpi`: evaluate, translate, simulate and check BUTF programs.
//!
//! Exit status: 0 on success, 1 when a check fails or a run does not reach
//! a value, 2 on usage, input or parse errors. JSON output is deterministic
//! for a fixed argv.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use butfpi_core::butf::{eval_traced, parse, EvalError, Rule};
use butfpi_core::correspondence::{
    check_program, confluence, read_back, result_term, root, CheckOptions,
};
use butfpi_core::cost::{fit_check, measure, scaling_experiment, Family};
use butfpi_core::epi::{
    explore, normalize, parse_process, run, ExploreOptions, Policy, RunOptions, RunStatus,
};
use butfpi_core::{translate, Expr, Process, TranslationOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "butfpi", version, about = "BUTF programs and their Eπ translations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a BUTF program and print its reduction trace.
    Run(Single),
    /// Print the Eπ translation of a BUTF program.
    Translate(Single),
    /// Run a translated program, or a raw Eπ process, and print the trace.
    Simulate(Simulate),
    /// Compare a program's value and step count with its translation.
    Check(Seeded),
    /// Measure work and span of the translation.
    Cost(Seeded),
    /// Measure a program family over several sizes and fit the shapes.
    Scale(Scale),
    /// Search every schedule of a small term.
    Explore(Explore),
}

#[derive(Args)]
struct Input {
    /// Program file: `.butf`, or `.epi` for simulate and explore.
    #[arg(conflicts_with = "expr")]
    path: Option<PathBuf>,
    /// Inline BUTF program.
    #[arg(short = 'e', long = "expr")]
    expr: Option<String>,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step limit for the evaluator and for every engine run.
    #[arg(long, env = "BUTFPI_FUEL", default_value_t = 1_000_000)]
    fuel: u64,
    /// Leave `size` and `iota` steps unbulleted.
    #[arg(long)]
    no_strict_bullets: bool,
    /// Use the parallel counter form of the repeat encoding.
    #[arg(long)]
    paper_literal_repeat: bool,
    /// Collect unreachable replicated servers after each step.
    #[arg(long)]
    gc: bool,
    /// Drop faulting threads instead of stopping.
    #[arg(long)]
    permissive: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct Single {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Simulate {
    #[command(flatten)]
    input: Input,
    /// Inline Eπ process instead of a BUTF program.
    #[arg(long, conflicts_with_all = ["path", "expr"])]
    raw: Option<String>,
    /// Pick the least redex instead of a seeded random one.
    #[arg(long)]
    deterministic: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Seeded {
    #[command(flatten)]
    input: Input,
    /// Number of random schedules; 0 runs only the deterministic one.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Scale {
    /// `array-of-apps`, `nested-apps` or `map-over-iota[:BODY]`.
    #[arg(long, default_value = "map-over-iota")]
    family: String,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Explore {
    #[command(flatten)]
    input: Input,
    /// Inline Eπ process instead of a BUTF program.
    #[arg(long, conflicts_with_all = ["path", "expr"])]
    raw: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    max_states: usize,
    #[command(flatten)]
    common: Common,
}

/// Failures that map to exit status 2.
#[derive(Debug)]
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.into())
    }
}

/// A finished command: its report in each format and whether it passed.
struct Report {
    json: Value,
    text: String,
    csv: (Vec<&'static str>, Vec<Vec<String>>),
    ok: bool,
}

enum Source {
    Butf(Expr),
    Epi(Process),
}

impl Input {
    fn load(&self, raw: Option<&str>) -> Result<Source, Usage> {
        if let Some(p) = raw {
            return Ok(Source::Epi(parse_process(p)?));
        }
        if let Some(e) = &self.expr {
            return Ok(Source::Butf(parse(e)?));
        }
        let path = self
            .path
            .as_ref()
            .ok_or_else(|| anyhow!("no program given: pass a file or -e"))?;
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        if path.extension().is_some_and(|x| x == "epi") {
            Ok(Source::Epi(
                parse_process(&text).with_context(|| describe(path))?,
            ))
        } else {
            Ok(Source::Butf(parse(&text).with_context(|| describe(path))?))
        }
    }

    fn butf(&self) -> Result<Expr, Usage> {
        match self.load(None)? {
            Source::Butf(e) => Ok(e),
            Source::Epi(_) => Err(anyhow!("this command takes a BUTF program").into()),
        }
    }
}

fn describe(path: &Path) -> String {
    format!("in {}", path.display())
}

impl Common {
    fn translation(&self) -> TranslationOptions {
        TranslationOptions {
            strict_bullets: !self.no_strict_bullets,
            paper_literal_repeat: self.paper_literal_repeat,
        }
    }

    fn check_options(&self, seeds: u64) -> CheckOptions {
        CheckOptions {
            seeds,
            budget: self.fuel,
            fuel: self.fuel,
            translation: self.translation(),
            gc: self.gc,
        }
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            budget: self.fuel,
            strict: !self.permissive,
            gc: self.gc,
            ..RunOptions::default()
        }
    }
}

fn cmd_run(a: &Single) -> Result<Report, Usage> {
    let e = a.input.butf()?;
    let (result, trace) = eval_traced(&e, a.common.fuel);
    let mut rules: BTreeMap<Rule, u64> = BTreeMap::new();
    for t in &trace {
        *rules.entry(t.rule).or_default() += 1;
    }
    let (status, value, detail) = match &result {
        Ok(r) => ("value", Some(r.value.to_string()), None),
        Err(EvalError::Stuck { reason, .. }) => ("stuck", None, Some(reason.clone())),
        Err(EvalError::Diverged { .. }) => ("diverged", None, None),
    };
    let mut text = String::new();
    for t in &trace {
        writeln!(text, "{t}").unwrap();
    }
    match &result {
        Ok(r) => writeln!(text, "value {} after {} steps", r.value, r.steps),
        Err(err) => writeln!(text, "{err}"),
    }
    .unwrap();
    let rules_json: BTreeMap<String, u64> = rules.iter().map(|(r, n)| (r.to_string(), *n)).collect();
    Ok(Report {
        json: json!({
            "program": e.to_string(),
            "status": status,
            "value": value,
            "detail": detail,
            "steps": trace.len(),
            "rules": rules_json,
            "trace": trace,
        }),
        text,
        csv: (
            vec!["step", "rule", "expr"],
            trace
                .iter()
                .map(|t| vec![t.step.to_string(), t.rule.to_string(), t.result.clone()])
                .collect(),
        ),
        ok: result.is_ok(),
    })
}

fn cmd_translate(a: &Single) -> Result<Report, Usage> {
    let e = a.input.butf()?;
    let opts = a.common.translation();
    let p = translate(&e, &root(), &opts);
    Ok(Report {
        json: json!({ "program": e.to_string(), "options": opts, "process": p.to_string() }),
        text: format!("{}\n{p}\n", opts.header()),
        csv: (vec!["program", "process"], vec![vec![e.to_string(), p.to_string()]]),
        ok: true,
    })
}

fn cmd_simulate(a: &Simulate) -> Result<Report, Usage> {
    let (program, process) = match a.input.load(a.raw.as_deref())? {
        Source::Butf(e) => {
            let p = translate(&e, &root(), &a.common.translation());
            (Some(e), p)
        }
        Source::Epi(p) => (None, p),
    };
    let config = normalize(&process)?;
    let policy = if a.deterministic {
        Policy::PriorityDeterministic
    } else {
        Policy::SeededRandom(a.common.seed)
    };
    let trace = run(config, policy, &a.common.run_options());
    let readback = match (&program, trace.status) {
        (Some(e), RunStatus::Quiescent) => {
            let shape = butfpi_core::butf::eval(e, a.common.fuel).ok().map(|r| r.value);
            result_term(&trace.config, &root()).map(|t| {
                read_back(&trace.config, &t, shape.as_ref(), a.common.fuel)
                    .map_or_else(|err| format!("error: {err}"), |r| r.to_string())
            })
        }
        _ => None,
    };
    let mut json = trace.to_json();
    json["process"] = Value::from(process.to_string());
    json["policy"] = match policy {
        Policy::SeededRandom(s) => json!({ "seeded": s }),
        Policy::PriorityDeterministic => json!("deterministic"),
    };
    json["result"] = json!(readback);
    let mut text = String::new();
    for (i, s) in trace.steps.iter().enumerate() {
        let ch = s.channel.as_ref().map_or("-".to_string(), ToString::to_string);
        let kind = if s.is_important() { "*" } else { " " };
        writeln!(text, "#{} {kind} {} {ch} depth {}", i + 1, s.rule, s.depth_after).unwrap();
    }
    writeln!(
        text,
        "{} steps ({} important, span {}), {:?}",
        trace.steps.len(),
        trace.work,
        trace.span,
        trace.status
    )
    .unwrap();
    for f in &trace.faults {
        writeln!(text, "fault: {f}").unwrap();
    }
    if let Some(r) = &readback {
        writeln!(text, "result {r}").unwrap();
    }
    let rows = trace
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                (i + 1).to_string(),
                s.rule.to_string(),
                s.channel.as_ref().map_or(String::new(), ToString::to_string),
                s.is_important().to_string(),
                s.depth_after.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        json,
        text,
        csv: (vec!["idx", "rule", "channel", "important", "depth"], rows),
        ok: matches!(trace.status, RunStatus::Quiescent | RunStatus::StopBarb),
    })
}

fn cmd_check(a: &Seeded) -> Result<Report, Usage> {
    let e = a.input.butf()?;
    let opts = a.common.check_options(a.seeds);
    let r = match check_program(&e, &opts) {
        Ok(r) => r,
        Err(err) => return Ok(failure(&e, &err.to_string())),
    };
    let text = format!(
        "{} => {}\nvalue_match {} (read back {})\nimportant steps {}..{} (deterministic {}), expected {} from {} BUTF steps{}\n{}\n",
        r.program,
        r.value,
        r.value_match,
        r.readback.join(", "),
        r.important.min,
        r.important.max,
        r.important.deterministic,
        r.expected_important,
        r.butf_steps,
        r.deviations
            .iter()
            .map(|d| format!("\n  {:?} {:+}: {}", d.kind, d.adjustment, d.detail))
            .collect::<String>(),
        if r.passed() { "PASS" } else { "FAIL" },
    );
    let row = vec![
        r.program.clone(),
        r.value.clone(),
        r.value_match.to_string(),
        r.butf_steps.to_string(),
        r.important.min.to_string(),
        r.important.max.to_string(),
        r.expected_important.to_string(),
        r.passed().to_string(),
    ];
    Ok(Report {
        json: serde_json::to_value(&r)?,
        text,
        csv: (
            vec![
                "program",
                "value",
                "value_match",
                "butf_steps",
                "important_min",
                "important_max",
                "expected_important",
                "pass",
            ],
            vec![row],
        ),
        ok: r.passed(),
    })
}

fn failure(e: &Expr, err: &str) -> Report {
    Report {
        json: json!({ "program": e.to_string(), "status": "fail", "error": err }),
        text: format!("{e}\nFAIL: {err}\n"),
        csv: (vec!["program", "error"], vec![vec![e.to_string(), err.to_string()]]),
        ok: false,
    }
}

fn cmd_cost(a: &Seeded) -> Result<Report, Usage> {
    let e = a.input.butf()?;
    let r = match measure(&e, &a.common.check_options(a.seeds)) {
        Ok(r) => r,
        Err(err) => return Ok(failure(&e, &err.to_string())),
    };
    let rows = r
        .runs
        .iter()
        .map(|s| {
            vec![
                s.seed.map_or("deterministic".to_string(), |k| k.to_string()),
                s.work.to_string(),
                s.span.to_string(),
                s.admin_steps.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        text: format!(
            "{e}\nwork {} span {} administrative {} ({} runs)\n",
            r.work,
            r.span,
            r.admin_steps,
            r.runs.len()
        ),
        json: json!({ "program": e.to_string(), "cost": r }),
        csv: (vec!["seed", "work", "span", "admin_steps"], rows),
        ok: true,
    })
}

fn cmd_scale(a: &Scale) -> Result<Report, Usage> {
    let family: Family = a.family.parse().map_err(|e: String| anyhow!(e))?;
    let table = scaling_experiment(&family, &a.sizes, &a.common.check_options(a.seeds));
    let fit = fit_check(&table);
    let mut text = format!("{}\n     n   work   span\n", table.family);
    for (n, w, s) in table.summary() {
        writeln!(text, "{n:>6} {w:>6} {s:>6}").unwrap();
    }
    for (n, why) in &table.dropped {
        writeln!(text, "dropped n={n}: {why}").unwrap();
    }
    for v in &fit.verdicts {
        let mark = if v.pass { "ok" } else { "MISMATCH" };
        writeln!(text, "{} {:?}: {mark} ({})", v.metric, v.shape, v.detail).unwrap();
    }
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.family.clone(),
                r.n.to_string(),
                r.seed.map_or("deterministic".to_string(), |k| k.to_string()),
                r.work.to_string(),
                r.span.to_string(),
                r.admin_steps.to_string(),
            ]
        })
        .collect();
    Ok(Report {
        json: json!({ "table": table, "fit": fit }),
        text,
        csv: (vec!["family", "n", "seed", "work", "span", "admin_steps"], rows),
        ok: fit.pass(),
    })
}

fn cmd_explore(a: &Explore) -> Result<Report, Usage> {
    match a.input.load(a.raw.as_deref())? {
        Source::Butf(e) => {
            let r = confluence(&e, a.max_states, &a.common.check_options(0))?;
            let text = format!(
                "{}\n{} states, {} terminal{}\noutcomes: {}\n{}\n",
                r.program,
                r.states,
                r.terminals,
                if r.bound_hit { ", bound hit" } else { "" },
                r.outcomes.join(" | "),
                if r.confluent() { "confluent" } else { "NOT confluent" },
            );
            let rows = r.outcomes.iter().map(|o| vec![o.clone()]).collect();
            Ok(Report {
                json: serde_json::to_value(&r)?,
                text,
                csv: (vec!["outcome"], rows),
                ok: r.confluent() && !r.bound_hit,
            })
        }
        Source::Epi(p) => {
            let ex = explore(
                &normalize(&p)?,
                &ExploreOptions {
                    max_states: a.max_states,
                    strict: !a.common.permissive,
                    ..ExploreOptions::default()
                },
            );
            let terminals: Vec<String> = ex
                .terminals
                .iter()
                .map(|c| c.anonymized().join(" | "))
                .collect();
            let mut text = format!(
                "{}\n{} states, {} terminal{}\n",
                p,
                ex.states,
                terminals.len(),
                if ex.bound_hit { ", bound hit" } else { "" }
            );
            for t in &terminals {
                writeln!(text, "  {t}").unwrap();
            }
            for f in &ex.faults {
                writeln!(text, "fault: {f}").unwrap();
            }
            Ok(Report {
                json: json!({
                    "process": p.to_string(),
                    "states": ex.states,
                    "bound_hit": ex.bound_hit,
                    "terminals": terminals,
                    "faults": ex.faults,
                }),
                csv: (vec!["terminal"], terminals.iter().map(|t| vec![t.clone()]).collect()),
                text,
                ok: !ex.bound_hit,
            })
        }
    }
}

fn emit(r: &Report, format: Format) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    match format {
        Format::Text => out.write_all(r.text.as_bytes())?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&r.json)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&r.csv.0)?;
            for row in &r.csv.1 {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, format) = match &cli.command {
        Command::Run(a) => (cmd_run(a), a.common.format),
        Command::Translate(a) => (cmd_translate(a), a.common.format),
        Command::Simulate(a) => (cmd_simulate(a), a.common.format),
        Command::Check(a) => (cmd_check(a), a.common.format),
        Command::Cost(a) => (cmd_cost(a), a.common.format),
        Command::Scale(a) => (cmd_scale(a), a.common.format),
        Command::Explore(a) => (cmd_explore(a), a.common.format),
    };
    match result {
        Ok(report) => {
            if let Err(e) = emit(&report, format) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
