//! Property tests over randomly generated programs and processes.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use butfpi_core::butf::{parse, Expr};
use butfpi_core::epi::{normalize, parse_process, Config, Name, Process, Subst, Term};
use butfpi_core::translate::{bullet_census, well_behaved};
use butfpi_core::{translate, TranslationOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn both_modes() -> [TranslationOptions; 2] {
    let strict = TranslationOptions::default();
    [
        strict,
        TranslationOptions {
            strict_bullets: false,
            ..strict
        },
    ]
}

/// Locally nameless form: bound variables as binder distances, free
/// variables by name.
#[derive(Debug, Clone, PartialEq)]
enum Ln {
    Leaf(String),
    Bound(usize),
    Free(String),
    Lam(Box<Ln>),
    Node(&'static str, Vec<Ln>),
}

fn ln(e: &Expr, env: &mut Vec<String>) -> Ln {
    match e {
        Expr::Num(n) => Ln::Leaf(n.to_string()),
        Expr::Builtin(b) => Ln::Leaf(format!("{b:?}")),
        Expr::Var(x) => match env.iter().rev().position(|y| y == x) {
            Some(i) => Ln::Bound(i),
            None => Ln::Free(x.clone()),
        },
        Expr::Lambda(x, body) => {
            env.push(x.clone());
            let b = ln(body, env);
            env.pop();
            Ln::Lam(Box::new(b))
        }
        Expr::App(a, b) => Ln::Node("app", vec![ln(a, env), ln(b, env)]),
        Expr::Index(a, b) => Ln::Node("index", vec![ln(a, env), ln(b, env)]),
        Expr::If(a, b, c) => Ln::Node("if", vec![ln(a, env), ln(b, env), ln(c, env)]),
        Expr::Array(xs) => Ln::Node("array", xs.iter().map(|x| ln(x, env)).collect()),
        Expr::Tuple(xs) => Ln::Node("tuple", xs.iter().map(|x| ln(x, env)).collect()),
    }
}

/// Substitution in the locally nameless form cannot capture.
fn ln_subst(t: &Ln, x: &str, v: &Ln) -> Ln {
    match t {
        Ln::Free(y) if y == x => v.clone(),
        Ln::Leaf(_) | Ln::Bound(_) | Ln::Free(_) => t.clone(),
        Ln::Lam(b) => Ln::Lam(Box::new(ln_subst(b, x, v))),
        Ln::Node(k, xs) => Ln::Node(k, xs.iter().map(|c| ln_subst(c, x, v)).collect()),
    }
}

#[test]
fn substitution_matches_locally_nameless_oracle() {
    let mut r = rng(7);
    let mut captures = 0;
    for _ in 0..1500 {
        let e = common::random_open_expr(&mut r, 4, &["x", "y", "z"]);
        let v = common::random_open_expr(&mut r, 2, &["y", "z"]);
        let named = e.substitute("x", &v);
        let oracle = ln_subst(&ln(&e, &mut Vec::new()), "x", &ln(&v, &mut Vec::new()));
        assert_eq!(ln(&named, &mut Vec::new()), oracle, "{e} [x := {v}] = {named}");
        if named != e && e.to_string().contains("\\y.") && !v.free_vars().is_empty() {
            captures += 1;
        }
    }
    assert!(captures > 0, "generator never exercised a binder next to free variables");
}

#[test]
fn locally_nameless_identifies_alpha_variants() {
    let a = parse("\\x. \\y. x y").unwrap();
    let b = parse("\\p. \\q. p q").unwrap();
    assert_eq!(ln(&a, &mut Vec::new()), ln(&b, &mut Vec::new()));
    assert!(a.alpha_eq(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn butf_pretty_parse_round_trip(seed in any::<u64>()) {
        let e = common::random_expr(&mut rng(seed), 5);
        let text = e.to_string();
        let back = parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e);
    }

    #[test]
    fn epi_pretty_parse_round_trip(seed in any::<u64>()) {
        let e = common::random_expr(&mut rng(seed), 4);
        for opts in both_modes() {
            let p = translate(&e, &Name::new("o"), &opts);
            let text = p.to_string();
            let back = parse_process(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            prop_assert_eq!(back, p);
        }
    }

    #[test]
    fn translations_are_well_behaved(seed in any::<u64>()) {
        let e = common::random_expr(&mut rng(seed), 5);
        let p = translate(&e, &Name::new("o"), &TranslationOptions::default());
        prop_assert!(well_behaved(&p), "{}", p);
    }

    #[test]
    fn bullet_census_matches(seed in any::<u64>()) {
        let e = common::random_expr(&mut rng(seed), 5);
        for opts in both_modes() {
            let p = translate(&e, &Name::new("o"), &opts);
            prop_assert_eq!(p.bullets(), bullet_census(&e, &opts));
        }
    }

    /// Translating a substitution instance is substituting into the
    /// translation.
    #[test]
    fn translation_commutes_with_substitution(seed in any::<u64>(), n in -3i64..10) {
        let e = common::random_open_expr(&mut rng(seed), 4, &["x"]);
        let o = Name::new("o");
        let opts = TranslationOptions::default();
        let direct = translate(&e.substitute("x", &Expr::num(n)), &o, &opts);
        let mut s = Subst::default();
        s.vars.insert(Arc::from("x"), Term::num(n));
        let later = Arc::new(translate(&e, &o, &opts)).substitute(&s);
        prop_assert!(direct.alpha_eq(&later), "{}\nvs\n{}", direct, later);
    }

    /// Every step accounts for each bullet: consumed ones disappear,
    /// copies out of replicated servers appear, untaken branches vanish.
    #[test]
    fn bullet_accounting(seed in any::<u64>()) {
        let e = common::random_expr(&mut rng(seed), 4);
        let p = translate(&e, &Name::new("o"), &TranslationOptions::default());
        let mut c = normalize(&p).expect("closed");
        let mut pick = rng(seed ^ 1);
        for _ in 0..200 {
            let rs = c.enabled_redexes(false).expect("permissive");
            if rs.is_empty() {
                break;
            }
            let r = &rs[rand::Rng::gen_range(&mut pick, 0..rs.len())];
            let before = c.bullet_count();
            match c.apply(r) {
                Ok(step) => {
                    prop_assert_eq!(step.bullets_consumed, usize::from(step.is_important()));
                    prop_assert_eq!(
                        c.bullet_count() + step.bullets_consumed + step.bullets_discarded,
                        before + step.bullets_unfolded
                    );
                }
                Err(_) => break,
            }
        }
    }

    /// Renaming restricted names does not change which successors exist.
    #[test]
    fn steps_commute_with_renaming(seed in any::<u64>(), steps in 0usize..30) {
        let e = common::random_expr(&mut rng(seed), 3);
        let p = translate(&e, &Name::new("o"), &TranslationOptions::default());
        let mut a = normalize(&p).expect("closed");
        let mut pick = rng(seed ^ 2);
        for _ in 0..steps {
            let rs = match a.enabled_redexes(true) {
                Ok(rs) if !rs.is_empty() => rs,
                _ => break,
            };
            let r = rs[rand::Rng::gen_range(&mut pick, 0..rs.len())].clone();
            if a.apply(&r).is_err() {
                break;
            }
        }
        a.prune_restricted();
        let b = normalize(&rename_restricted(&a.to_process())).expect("closed");
        prop_assert_eq!(a.canonical_key(), b.canonical_key());
        prop_assume!(a.enabled_redexes(true).is_ok());
        prop_assert_eq!(successors(&a), successors(&b));
    }

    /// All current receivers join a broadcast; it takes a single step.
    #[test]
    fn broadcast_is_atomic(k in 0usize..40, replicated in any::<bool>()) {
        let mut parts = vec!["c:<7>.0".to_string()];
        parts.extend((0..k).map(|i| format!("c(x).d{i}<x>")));
        if replicated {
            parts.push("!c(y).r<y>".to_string());
        }
        let mut c = normalize(&parse_process(&parts.join(" | ")).unwrap()).unwrap();
        let rs = c.enabled_redexes(true).unwrap();
        prop_assert_eq!(rs.len(), 1);
        c.apply(&rs[0]).unwrap();
        prop_assert!(c.enabled_redexes(true).unwrap().is_empty());
        prop_assert_eq!(c.threads.len(), k + 2 * usize::from(replicated));
    }
}

fn successors(c: &Config) -> BTreeSet<u128> {
    c.enabled_redexes(true)
        .unwrap()
        .iter()
        .filter_map(|r| c.apply_redex(r).ok())
        .map(|(mut next, _)| {
            next.prune_restricted();
            next.canonical_key()
        })
        .collect()
}

/// Renames the outermost `new` binders injectively.
fn rename_restricted(p: &Process) -> Process {
    match p {
        Process::New(n, body) => {
            let fresh = Name::new(&format!("{}_r", n.as_str().replace('$', "_")));
            let mut s = Subst::default();
            s.names.insert(n.clone(), fresh.clone());
            let body = Arc::new(rename_restricted(body)).substitute(&s);
            Process::New(fresh, body)
        }
        _ => p.clone(),
    }
}
