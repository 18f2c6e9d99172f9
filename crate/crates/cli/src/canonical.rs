//! Byte-stable JSON: sorted object keys, two-space indentation, scalar arrays
//! on one line, floats with 17 significant digits (`{:.16e}`).

use std::fmt::Write;

use serde::Serialize;
use serde_json::Value;

pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if let Some(u) = n.as_u64() {
        write!(out, "{u}").unwrap();
    } else if let Some(i) = n.as_i64() {
        write!(out, "{i}").unwrap();
    } else {
        let f = n.as_f64().unwrap_or(f64::NAN);
        write!(out, "{f:.16e}").unwrap();
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, level);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push_str(": ");
                write_value(out, &map[*key], level + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_floats_fixed() {
        let v = json!({"b": 1, "a": [0.5, -2.0], "c": {"z": null, "y": "s"}});
        let s = to_string(&v).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [5.0000000000000000e-1, -2.0000000000000000e0],\n  \"b\": 1,\n  \"c\": {\n    \"y\": \"s\",\n    \"z\": null\n  }\n}\n"
        );
    }

    #[test]
    fn reparse_is_byte_stable() {
        let v = json!({"x": [[0.1, 1e-300], [std::f64::consts::PI, -0.0]], "n": -3});
        let first = to_string(&v).unwrap();
        let back: Value = serde_json::from_str(&first).unwrap();
        assert_eq!(to_string(&back).unwrap(), first);
        assert_eq!(back["x"][1][0].as_f64().unwrap(), std::f64::consts::PI);
    }
}
