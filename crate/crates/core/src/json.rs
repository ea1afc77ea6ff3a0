//! JSON helpers for arbitrary-precision integers.
//!
//! Integers that fit in an `i64` are written as JSON numbers, larger ones as
//! decimal strings, so that consumers never see a lossy float.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serializer;
use serde_json::Value;

pub fn bigint_value(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(k) => Value::from(k),
        None => Value::from(n.to_string()),
    }
}

/// For `#[serde(serialize_with = "...")]`.
pub fn serialize_bigint<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    match n.to_i64() {
        Some(k) => s.serialize_i64(k),
        None => s.serialize_str(&n.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_and_large() {
        assert_eq!(bigint_value(&BigInt::from(-7)), Value::from(-7));
        let big: BigInt = "123456789012345678901234567890".parse().unwrap();
        assert_eq!(
            bigint_value(&big),
            Value::from("123456789012345678901234567890")
        );
    }
}
