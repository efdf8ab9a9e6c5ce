//! Report assembly, input digests and output formats.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::scenario::Outcome;

/// SHA-256 of the compact JSON serialization. Object keys are sorted, so the
/// digest depends only on the content.
pub fn digest(inputs: &Value) -> String {
    let bytes = serde_json::to_vec(inputs).expect("values serialize");
    hex::encode(Sha256::digest(bytes))
}

pub fn assemble(outcome: Outcome, timings_ms: Option<f64>) -> Value {
    let mut report = Map::new();
    report.insert("inputs_digest".into(), json!(digest(&outcome.inputs)));
    report.insert("inputs".into(), outcome.inputs);
    report.insert("results".into(), outcome.results);
    report.insert("traces".into(), outcome.traces);
    if let Some(ms) = timings_ms {
        report.insert("timings".into(), json!({"total_ms": ms}));
    }
    Value::Object(report)
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, rows);
            }
        }
        Value::Array(a) => {
            for (i, child) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Two-column `key,value` table with one row per JSON leaf.
pub fn to_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, val) in rows {
        out.push_str(&csv_field(&k));
        out.push(',');
        out.push_str(&csv_field(&val));
        out.push('\n');
    }
    out
}
