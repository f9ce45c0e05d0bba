//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use regex::Regex;
use serde_json::Value;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn sample_config() -> PathBuf {
    data_dir().join("sample/run.conf")
}

pub fn report_schema() -> Value {
    let text = std::fs::read_to_string(data_dir().join("report.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Validate `value` against the JSON Schema subset used by the shipped
/// report schema. Returns one message per violation.
pub fn validate(schema: &Value, value: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    check(schema, value, "$", &mut errors);
    errors
}

fn type_matches(name: &str, v: &Value) -> bool {
    match name {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        other => panic!("unsupported type {other}"),
    }
}

fn check(schema: &Value, v: &Value, at: &str, errors: &mut Vec<String>) {
    let Some(s) = schema.as_object() else {
        return;
    };
    for key in s.keys() {
        assert!(
            [
                "$schema",
                "title",
                "type",
                "properties",
                "required",
                "additionalProperties",
                "items",
                "enum",
                "const",
                "minimum",
                "maximum",
                "exclusiveMinimum",
                "minItems",
                "maxItems",
                "pattern",
            ]
            .contains(&key.as_str()),
            "schema keyword {key} not supported"
        );
    }
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(name) => type_matches(name, v),
            Value::Array(names) => names.iter().any(|n| type_matches(n.as_str().unwrap(), v)),
            _ => panic!("bad type"),
        };
        if !ok {
            errors.push(format!("{at}: expected {t}, got {v}"));
            return;
        }
    }
    if let Some(options) = s.get("enum") {
        if !options.as_array().unwrap().contains(v) {
            errors.push(format!("{at}: {v} not in {options}"));
        }
    }
    if let Some(c) = s.get("const") {
        if c != v {
            errors.push(format!("{at}: expected {c}, got {v}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if let Some(m) = s.get("minimum").and_then(Value::as_f64) {
            if x < m {
                errors.push(format!("{at}: {x} < minimum {m}"));
            }
        }
        if let Some(m) = s.get("maximum").and_then(Value::as_f64) {
            if x > m {
                errors.push(format!("{at}: {x} > maximum {m}"));
            }
        }
        if let Some(m) = s.get("exclusiveMinimum").and_then(Value::as_f64) {
            if x <= m {
                errors.push(format!("{at}: {x} <= exclusive minimum {m}"));
            }
        }
    }
    if let (Some(p), Some(text)) = (s.get("pattern").and_then(Value::as_str), v.as_str()) {
        if !Regex::new(p).unwrap().is_match(text) {
            errors.push(format!("{at}: {text:?} does not match {p}"));
        }
    }
    if let Some(items) = v.as_array() {
        if let Some(n) = s.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < n {
                errors.push(format!("{at}: {} items < {n}", items.len()));
            }
        }
        if let Some(n) = s.get("maxItems").and_then(Value::as_u64) {
            if (items.len() as u64) > n {
                errors.push(format!("{at}: {} items > {n}", items.len()));
            }
        }
        if let Some(item_schema) = s.get("items") {
            for (i, item) in items.iter().enumerate() {
                check(item_schema, item, &format!("{at}[{i}]"), errors);
            }
        }
    }
    if let Some(obj) = v.as_object() {
        let props = s.get("properties").and_then(Value::as_object);
        if let Some(required) = s.get("required").and_then(Value::as_array) {
            for r in required {
                let r = r.as_str().unwrap();
                if !obj.contains_key(r) {
                    errors.push(format!("{at}: missing {r}"));
                }
            }
        }
        for (k, child) in obj {
            let path = format!("{at}.{k}");
            match props.and_then(|p| p.get(k)) {
                Some(sub) => check(sub, child, &path, errors),
                None => match s.get("additionalProperties") {
                    Some(Value::Bool(false)) => errors.push(format!("{path}: not allowed")),
                    Some(sub @ Value::Object(_)) => check(sub, child, &path, errors),
                    _ => {}
                },
            }
        }
    }
}

#[test]
fn validator_catches_violations() {
    let schema: Value = serde_json::json!({
        "type": "object",
        "properties": {
            "a": {"type": "integer", "minimum": 0},
            "b": {"type": "array", "items": {"enum": ["x", "y"]}, "maxItems": 2},
            "c": {"type": ["string", "null"], "pattern": "^[a-f]+$"}
        },
        "required": ["a"],
        "additionalProperties": false
    });
    assert!(validate(&schema, &serde_json::json!({"a": 1, "b": ["x"], "c": null})).is_empty());
    let bad = serde_json::json!({"a": -1, "b": ["z", "x", "y"], "c": "zz", "d": 0});
    assert_eq!(validate(&schema, &bad).len(), 5);
    assert_eq!(validate(&schema, &serde_json::json!({})).len(), 1);
}
