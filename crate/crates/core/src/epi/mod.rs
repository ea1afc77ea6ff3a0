//! Eπ: a polyadic pi-calculus with broadcast output and composite channel
//! names `h.i`, `h.all`, `h.tup`, `h.len`.
//!
//! A [`Process`] is flattened by [`normalize`] into a [`Config`]: the set of
//! restricted names plus a list of prefix-headed threads. Reduction fires a
//! [`Redex`] (a send/receive pair, a broadcast with every current receiver,
//! or a decidable match) and reports a [`Step`]. A step is important when it
//! consumes a bullet `*P`; otherwise it is administrative. Each thread
//! carries a causal depth, raised by one on important steps, from which runs
//! derive span.

mod config;
mod parse;
mod pretty;
mod reduce;
mod run;
mod syntax;

pub use config::{normalize, Barb, Config, Polarity, Thread};
pub use parse::{parse_process, KEYWORDS};
pub use reduce::{
    decide, eval_channel, eval_term, ChannelId, EvLabel, Fault, Redex, RuleKind, Step, StepKind,
};
pub use run::{
    explore, is_important, run, ExploreOptions, Exploration, Policy, RunOptions, RunStatus, Trace,
};
pub use syntax::{Action, Channel, Comparator, Label, Name, Pattern, Process, Subst, Term, Var};
