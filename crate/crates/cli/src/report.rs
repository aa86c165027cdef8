//! Report helpers. Every non-integer number is written with 17
//! significant digits.

use serde_json::{Number, Value};

pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let s = format!("{x:.16e}");
    Value::Number(s.parse::<Number>().expect("formatted float is a JSON number"))
}

/// Rewrites floating point numbers to the report precision.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn render(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&normalize(v)).expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seventeen_digits() {
        let out = render(json!({"a": std::f64::consts::LN_2, "b": 3, "c": [0.5, f64::NAN]}));
        assert!(out.contains("6.9314718055994529e-1"), "{out}");
        assert!(out.contains("\"b\": 3"));
        assert!(out.contains("5.0000000000000000e-1"));
        assert!(out.contains("null"));
        let back: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(back["a"].as_f64(), Some(std::f64::consts::LN_2));
    }
}
