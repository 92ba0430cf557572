//! The JSON result envelope and the bound linter.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const TOOL: &str = "cuspsum";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// An identity check exceeded its tolerance.
    IdentityFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultEnvelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub timing_seconds: f64,
    pub status: Status,
    pub result: Value,
    /// What each reported quantity is.
    pub provenance: BTreeMap<String, String>,
}

impl ResultEnvelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }

    /// The envelope without its timing field.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("envelope serializes");
        if let Value::Object(m) = &mut v {
            m.remove("timing_seconds");
        }
        v
    }
}

/// Keys holding configuration, counts or identifiers rather than computed
/// quantities.
const METADATA_KEYS: &[&str] = &[
    "abscissa",
    "bound",
    "calibrated_from",
    "calibrated_to",
    "chunk_size",
    "chunks",
    "height",
    "index",
    "m",
    "multiplicative_checked",
    "n",
    "n_max",
    "n_used",
    "nodes",
    "p",
    "prime_power_checked",
    "r",
    "step",
    "weight",
    "x",
    "used",
    "excluded",
    "grid",
    "theta_used",
    "timing_seconds",
];

/// Whether `key` names an error, tail or roundoff bound (or declares
/// exactness).
pub fn is_bound_key(key: &str) -> bool {
    [
        "bound",
        "error",
        "roundoff",
        "tolerance",
        "confidence",
        "discrepancy",
        "abs_diff",
        "rel_diff",
        "envelope",
    ]
    .iter()
    .any(|b| key.contains(b))
        && key != "bound_kind"
        || key == "exact"
}

/// Paths of numeric values in `v` whose enclosing object carries no bound
/// field. Metadata keys and keys under `config` are exempt.
pub fn lint_bounds(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    walk(v, "$", &mut out);
    out
}

fn has_number(v: &Value) -> bool {
    match v {
        Value::Number(_) => true,
        Value::Array(a) => a.iter().any(has_number),
        _ => false,
    }
}

fn walk(v: &Value, path: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            let bounded = m.keys().any(|k| is_bound_key(k));
            for (k, child) in m {
                let p = format!("{path}.{k}");
                if k == "config" || k == "provenance" || is_bound_key(k) {
                    continue;
                }
                if has_number(child) {
                    if !bounded && !is_bound_key(k) && !METADATA_KEYS.contains(&k.as_str()) {
                        out.push(p.clone());
                    }
                } else {
                    walk(child, &p, out);
                }
            }
        }
        Value::Array(a) => {
            for (i, child) in a.iter().enumerate() {
                walk(child, &format!("{path}[{i}]"), out);
            }
        }
        Value::Number(_) => out.push(path.to_string()),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn linter_flags_unbounded_values() {
        let ok = json!({"value": [1.0, 2.0], "truncation_bound": 1e-9, "n_used": 10});
        assert!(lint_bounds(&ok).is_empty());
        let bad = json!({"rows": [{"smoothed": 1.0, "main": 2.0}], "weight": 12});
        assert_eq!(lint_bounds(&bad), vec!["$.rows[0].main", "$.rows[0].smoothed"]);
        let nested = json!({"a": {"value": 1.0}, "config": {"x": 3.0}});
        assert_eq!(lint_bounds(&nested), vec!["$.a.value"]);
    }
}
