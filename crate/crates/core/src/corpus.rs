//! The bundled program corpus.
//!
//! Every file starts with a `-- expect:` line giving either the value the
//! program evaluates to or `stuck`.

use crate::butf::{eval, parse, EvalError, Expr};
use crate::error::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Expect {
    Value(Expr),
    Stuck,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub name: &'static str,
    pub source: &'static str,
}

macro_rules! entry {
    ($name:literal) => {
        Program {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".butf")),
        }
    };
}

pub const PROGRAMS: &[Program] = &[
    entry!("01_num"),
    entry!("02_unit"),
    entry!("03_single"),
    entry!("04_empty_array"),
    entry!("05_nested_value"),
    entry!("06_identity_fn"),
    entry!("07_beta"),
    entry!("08_if_true"),
    entry!("09_if_false"),
    entry!("10_index"),
    entry!("11_size"),
    entry!("12_iota"),
    entry!("13_iota_zero"),
    entry!("14_map_double"),
    entry!("15_map_iota"),
    entry!("16_arith_prec"),
    entry!("17_div_trunc"),
    entry!("18_sub_left"),
    entry!("19_tuple_compute"),
    entry!("20_single_compute"),
    entry!("21_array_of_apps"),
    entry!("22_twice"),
    entry!("23_curried"),
    entry!("24_pair_arg"),
    entry!("25_size_as_value"),
    entry!("26_op_as_value"),
    entry!("27_nested_index"),
    entry!("28_size_iota"),
    entry!("29_shadowing"),
    entry!("30_if_size"),
    entry!("31_map_closure"),
    entry!("32_map_identity"),
    entry!("33_map_empty"),
    entry!("34_nested_map"),
    entry!("35_bignum"),
    entry!("36_concat"),
    entry!("37_reduce_pairwise"),
    entry!("38_reduce_fix"),
    entry!("39_out_of_bounds"),
    entry!("40_div_zero"),
    entry!("41_negative_index"),
    entry!("42_iota_negative"),
];

impl Program {
    pub fn expr(&self) -> Result<Expr, SyntaxError> {
        parse(self.source)
    }

    pub fn expect(&self) -> Result<Expect, SyntaxError> {
        expectation(self.source)
    }
}

/// Reads the `-- expect:` header of a source file.
pub fn expectation(source: &str) -> Result<Expect, SyntaxError> {
    let first = source.lines().next().unwrap_or("");
    let Some(rest) = first.strip_prefix("-- expect:") else {
        return Err(SyntaxError::new(1, 1, "missing `-- expect:` header"));
    };
    match rest.trim() {
        "stuck" => Ok(Expect::Stuck),
        value => parse(value).map(Expect::Value),
    }
}

pub fn get(name: &str) -> Option<&'static Program> {
    PROGRAMS.iter().find(|p| p.name == name)
}

/// Whether `e` meets `expect` within `fuel` steps.
pub fn meets(e: &Expr, expect: &Expect, fuel: u64) -> bool {
    match (eval(e, fuel), expect) {
        (Ok(r), Expect::Value(v)) => r.value.alpha_eq(v),
        (Err(EvalError::Stuck { .. }), Expect::Stuck) => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses_and_has_headers() {
        assert!(PROGRAMS.len() >= 30);
        for p in PROGRAMS {
            p.expr().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            p.expect().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn header_forms() {
        assert_eq!(expectation("-- expect: stuck\n1 / 0").unwrap(), Expect::Stuck);
        assert!(matches!(expectation("-- expect: [1]\n[1]").unwrap(), Expect::Value(_)));
        assert!(expectation("[1]").is_err());
    }
}
