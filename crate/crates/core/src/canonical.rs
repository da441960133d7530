//! Canonical JSON: object keys sorted at every depth, floats in shortest
//! round-trip form. Two equal values always serialize to the same bytes.

use serde::Serialize;
use serde_json::{Map, Value};

pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, canonicalize(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Result<Value, serde_json::Error> {
    serde_json::to_value(value).map(canonicalize)
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    serde_json::to_string(&to_value(value)?)
}

/// Indented form with a trailing newline, used for files on disk.
pub fn to_string_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String, serde_json::Error> {
    let mut s = serde_json::to_string_pretty(&to_value(value)?)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_recursively() {
        let v = json!({"b": 1, "a": {"z": [ {"y": 0.1, "x": 2.5e-7} ], "c": null}});
        assert_eq!(
            to_string(&v).unwrap(),
            r#"{"a":{"c":null,"z":[{"x":2.5e-7,"y":0.1}]},"b":1}"#
        );
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 1e300, 5e-324] {
            let s = to_string(&x).unwrap();
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
