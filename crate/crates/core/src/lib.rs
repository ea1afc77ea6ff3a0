//! BUTF, a small untyped functional array language, and Epi, a polyadic
//! pi-calculus with broadcast and composite channel names.
//!
//! The crate provides:
//!
//! * [`butf`]: abstract and concrete syntax, capture-avoiding substitution and
//!   a call-by-value small-step evaluator with rule names.
//! * [`epi`]: process terms, structural normalization into a thread soup,
//!   labelled reduction (important / administrative), schedulers, barbs and
//!   an exhaustive state-space explorer.
//! * [`translate`]: the compositional encoding of BUTF programs as Epi
//!   processes, plus the syntactic well-behavedness check for its output.
//! * [`correspondence`]: runs a translation, reads its result back and
//!   compares value and important-step count with the evaluator.
//! * [`cost`]: work and span measurements over program families.

pub mod butf;
pub mod corpus;
pub mod correspondence;
pub mod cost;
pub mod epi;
pub mod error;
pub mod json;
mod text;
pub mod translate;

pub use butf::{ArithOp, Builtin, Expr};
pub use epi::{
    Action, Channel, ChannelId, Comparator, Config, Label, Name, Pattern, Policy, Process, Term,
};
pub use error::{EngineError, SyntaxError};
pub use translate::{translate, ChannelRole, TranslationOptions};
