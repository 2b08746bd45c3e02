//! Canonical JSON: object keys sorted by code point, no insignificant
//! whitespace, integers only.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("non-integer number {0} has no canonical form")]
    NonInteger(String),
}

pub fn to_canonical_bytes(value: &Value) -> Result<Vec<u8>, CanonicalError> {
    let mut out = Vec::new();
    write_value(value, &mut out)?;
    Ok(out)
}

fn write_value(value: &Value, out: &mut Vec<u8>) -> Result<(), CanonicalError> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(b) => out.extend_from_slice(if *b { b"true" } else { b"false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.extend_from_slice(i.to_string().as_bytes());
            } else if let Some(u) = n.as_u64() {
                out.extend_from_slice(u.to_string().as_bytes());
            } else {
                return Err(CanonicalError::NonInteger(n.to_string()));
            }
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(item, out)?;
            }
            out.push(b']');
        }
        Value::Object(map) => {
            // Rust string ordering is byte order, which for UTF-8 is code point order.
            let mut entries: Vec<_> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push(b'{');
            for (i, (k, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(k, out);
                out.push(b':');
                write_value(v, out)?;
            }
            out.push(b'}');
        }
    }
    Ok(())
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    serde_json::to_writer(&mut *out, s).expect("writing a string to a Vec cannot fail");
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorts_keys_recursively_without_whitespace() {
        let v = json!({"b": 1, "a": {"z": [1, 2], "y": "s"}, "é": null, "Z": true});
        let bytes = to_canonical_bytes(&v).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), r#"{"Z":true,"a":{"y":"s","z":[1,2]},"b":1,"é":null}"#);
    }

    #[test]
    fn insertion_order_is_irrelevant() {
        let mut a = serde_json::Map::new();
        a.insert("x".into(), json!(1));
        a.insert("a".into(), json!(2));
        let mut b = serde_json::Map::new();
        b.insert("a".into(), json!(2));
        b.insert("x".into(), json!(1));
        assert_eq!(to_canonical_bytes(&Value::Object(a)).unwrap(), to_canonical_bytes(&Value::Object(b)).unwrap());
    }

    #[test]
    fn rejects_floats_and_keeps_negative_integers() {
        assert!(to_canonical_bytes(&json!({"x": 1.5})).is_err());
        assert_eq!(to_canonical_bytes(&json!([-7, 0, u64::MAX])).unwrap(), b"[-7,0,18446744073709551615]");
    }

    #[test]
    fn escapes_strings() {
        assert_eq!(to_canonical_bytes(&json!("a\"b\n")).unwrap(), br#""a\"b\n""#);
    }
}
