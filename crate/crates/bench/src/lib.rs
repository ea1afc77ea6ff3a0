//! Workloads shared by the benchmarks.

use butfpi_core::butf::parse;
use butfpi_core::cost::Family;
use butfpi_core::Expr;

/// `map` over `iota n` with a body that does some arithmetic.
pub fn map_program(n: usize) -> Expr {
    Family::MapOverIota(parse("\\x. x * x + 1").expect("body parses")).program(n)
}

/// An array of `n` independent beta redexes.
pub fn array_program(n: usize) -> Expr {
    Family::ArrayOfApps.program(n)
}

/// A chain of `n` nested applications.
pub fn nested_program(n: usize) -> Expr {
    Family::NestedApps.program(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use butfpi_core::butf::eval;

    #[test]
    fn workloads_evaluate() {
        for e in [map_program(4), array_program(4), nested_program(4)] {
            assert!(eval(&e, 10_000).is_ok(), "{e}");
        }
    }
}
