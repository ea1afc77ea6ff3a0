//! Sort checking for translated processes.
//!
//! Every name gets a sort from its role prefix and every pattern variable
//! from the position that binds it. A process is well behaved when each
//! prefix is one of the forms the encoding produces:
//!
//! ```text
//! o(v).U   o<v>                      outputs, replies
//! h(v, o).U   !h(v, o).U   h<v, o>   function servers and calls
//! h.n(n, v).U   h.n<n, v>   !h.n<n, v>
//! h.len(n).U   h.len<n>   !h.len<n>
//! h.tup(v, ...).U   !h.tup<v, ...>
//! h.all(c).U   !h.all(c).U   h.all:<c>.U
//! c(n, v).U   !c(n, v).U   c<n, v>   collections
//! m(n).U   !m(n).U   m<n>             counters
//! d().U   d<>                         signals
//! [t op t] U, U   U | U   new a. U   *U   0
//! ```
//!
//! Sends may carry a continuation. Bullets are transparent.

use std::collections::HashMap;

use crate::epi::{Action, Channel, Label, Pattern, Process, Term, Thread, Var};

use super::ChannelRole;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sort {
    /// Output and reply channels.
    Omega,
    /// Function and data handles.
    Lambda,
    /// Completion signals.
    Delta,
    /// Element collections.
    Psi,
    Counter,
    /// Any transmissible value: a number or a handle.
    Theta,
    Num,
}

impl Sort {
    fn is_value(self) -> bool {
        matches!(self, Sort::Theta | Sort::Num | Sort::Lambda)
    }

    fn of_role(r: ChannelRole) -> Sort {
        match r {
            ChannelRole::Output | ChannelRole::ReplyR => Sort::Omega,
            ChannelRole::Handle | ChannelRole::Function => Sort::Lambda,
            ChannelRole::Signal => Sort::Delta,
            ChannelRole::Collection => Sort::Psi,
            ChannelRole::Counter => Sort::Counter,
        }
    }
}

type Env = HashMap<Var, Sort>;

pub fn well_behaved(p: &Process) -> bool {
    check_well_behaved(p).is_ok()
}

/// Checks `p`; on failure names the offending subterm.
pub fn check_well_behaved(p: &Process) -> Result<(), String> {
    check(p, &Env::new(), false)
}

impl Thread {
    /// Run-time check that a thread still has the shape of translated code.
    pub fn well_behaved(&self) -> bool {
        check_well_behaved(&self.to_process()).is_ok()
    }
}

fn sort_of(t: &Term, env: &Env) -> Result<Sort, String> {
    match t {
        Term::Num(_) => Ok(Sort::Num),
        Term::Name(n) => ChannelRole::of(n)
            .map(Sort::of_role)
            .ok_or_else(|| format!("name {n} has no known role")),
        Term::Var(x) => env
            .get(x)
            .copied()
            .ok_or_else(|| format!("variable {x} is unbound")),
        Term::BinOp(_, a, b) => {
            for side in [a, b] {
                if !sort_of(side, env)?.is_value() {
                    return Err(format!("arithmetic on a channel in {t}"));
                }
            }
            Ok(Sort::Num)
        }
    }
}

fn value(t: &Term, env: &Env) -> Result<(), String> {
    if sort_of(t, env)?.is_value() {
        Ok(())
    } else {
        Err(format!("{t} is a channel where a value is expected"))
    }
}

fn exactly(t: &Term, env: &Env, want: Sort) -> Result<(), String> {
    let s = sort_of(t, env)?;
    if s == want {
        Ok(())
    } else {
        Err(format!("{t} has sort {s:?}, expected {want:?}"))
    }
}

/// Sorts of the patterns a receive on `ch` binds.
fn receive_sorts(ch: &Channel, env: &Env, arity: usize) -> Result<Vec<Sort>, String> {
    let base = sort_of(&ch.base, env)?;
    let handle = base == Sort::Lambda || base == Sort::Theta;
    let sorts = match (&ch.label, base) {
        (None, Sort::Omega) => vec![Sort::Theta],
        (None, _) if handle => vec![Sort::Theta, Sort::Omega],
        (None, Sort::Psi) => vec![Sort::Num, Sort::Theta],
        (None, Sort::Counter) => vec![Sort::Num],
        (None, Sort::Delta) => vec![],
        (Some(Label::Index(i)), _) if handle => {
            value(i, env)?;
            vec![Sort::Num, Sort::Theta]
        }
        (Some(Label::Len), _) if handle => vec![Sort::Num],
        (Some(Label::Tup), _) if handle => vec![Sort::Theta; arity],
        (Some(Label::All), _) if handle => vec![Sort::Psi],
        _ => return Err(format!("no receive form on {ch}")),
    };
    if sorts.len() != arity {
        return Err(format!("receive on {ch} binds {arity}, expected {}", sorts.len()));
    }
    Ok(sorts)
}

fn check_send(ch: &Channel, args: &[Term], env: &Env) -> Result<(), String> {
    let base = sort_of(&ch.base, env)?;
    let handle = base == Sort::Lambda || base == Sort::Theta;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("send on {ch} carries {}, expected {n}", args.len()))
        }
    };
    let values = |n: usize| -> Result<(), String> {
        arity(n)?;
        args.iter().try_for_each(|a| value(a, env))
    };
    match &ch.label {
        None => match base {
            Sort::Omega | Sort::Counter => values(1),
            Sort::Psi => values(2),
            Sort::Delta => arity(0),
            _ if handle => {
                arity(2)?;
                value(&args[0], env)?;
                exactly(&args[1], env, Sort::Omega)
            }
            _ => Err(format!("no send form on {ch}")),
        },
        Some(Label::Index(i)) if handle => {
            value(i, env)?;
            values(2)
        }
        Some(Label::Len) if handle => values(1),
        Some(Label::Tup) if handle => values(args.len()),
        _ => Err(format!("no send form on {ch}")),
    }
}

fn bind(env: &Env, pats: &[Pattern], sorts: &[Sort]) -> Env {
    let mut inner = env.clone();
    for (p, s) in pats.iter().zip(sorts) {
        if let Pattern::Bind(x) = p {
            inner.insert(x.clone(), *s);
        }
    }
    inner
}

/// Forms that may sit under `!`.
fn replicable(a: &Action, env: &Env) -> bool {
    let base = sort_of(&a.channel().base, env).unwrap_or(Sort::Num);
    let handle = base == Sort::Lambda || base == Sort::Theta;
    match (a, &a.channel().label) {
        (Action::Recv(..), None) => handle || base == Sort::Psi || base == Sort::Counter,
        (Action::Recv(..), Some(Label::All)) => handle,
        (Action::Send(..), Some(Label::Index(_) | Label::Len | Label::Tup)) => handle,
        _ => false,
    }
}

fn check(p: &Process, env: &Env, replicated: bool) -> Result<(), String> {
    match p {
        Process::Nil => Ok(()),
        Process::Par(a, b) if !replicated => {
            check(a, env, false)?;
            check(b, env, false)
        }
        Process::New(n, body) if !replicated => {
            if ChannelRole::of(n).is_none() {
                return Err(format!("restricted name {n} has no known role"));
            }
            check(body, env, false)
        }
        Process::Bullet(body) => check(body, env, replicated),
        Process::Repl(body) if !replicated => check(body, env, true),
        Process::Match {
            lhs,
            rhs,
            then,
            otherwise,
            ..
        } if !replicated => {
            value(lhs, env)?;
            value(rhs, env)?;
            check(then, env, false)?;
            check(otherwise, env, false)
        }
        Process::Act(a, cont) => {
            if replicated && !replicable(a, env) {
                return Err(format!("{a} cannot be replicated"));
            }
            match a {
                Action::Recv(ch, pats) => {
                    let sorts = receive_sorts(ch, env, pats.len())?;
                    check(cont, &bind(env, pats, &sorts), false)
                }
                Action::Send(ch, args) => {
                    check_send(ch, args, env)?;
                    check(cont, env, false)
                }
                Action::Broadcast(ch, args) => {
                    let base = sort_of(&ch.base, env)?;
                    if ch.label != Some(Label::All) || !matches!(base, Sort::Lambda | Sort::Theta) {
                        return Err(format!("no broadcast form on {ch}"));
                    }
                    if args.len() != 1 {
                        return Err(format!("broadcast on {ch} must carry one collection"));
                    }
                    exactly(&args[0], env, Sort::Psi)?;
                    check(cont, env, false)
                }
            }
        }
        _ => Err(format!("{p} cannot be replicated")),
    }
}
