//! Diff-stable number formatting.

use serde_json::{json, Value};
use specedge::C64;

/// Rounds to nine significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Shortest text for `x` rounded to nine significant digits.
pub fn sig9(x: f64) -> String {
    format!("{}", round9(x))
}

pub fn complex_pair(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Rounds every float in a JSON tree to nine significant digits; non-finite
/// values become strings.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round9(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(82.0), "82");
        assert_eq!(sig9(0.30661049860), "0.306610499");
        assert_eq!(sig9(-1.0 / 3.0), "-0.333333333");
        assert_eq!(sig9(f64::INFINITY), "inf");
    }

    #[test]
    fn json_rounding() {
        let v = round_json(json!({"a": [1.0 / 3.0, 2], "b": {"c": 2.0f64.sqrt()}}));
        assert_eq!(v.to_string(), r#"{"a":[0.333333333,2],"b":{"c":1.41421356}}"#);
    }
}
