//! Run manifests and the consolidated report document.
//!
//! Every command emits a manifest: the command name, its parameters and
//! integrator settings, a content hash of those inputs, the result and the
//! wall time. Numbers in results are `{lo, hi, anchor}` triples.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::StokesError;
use crate::interval::RealInterval;

/// Git-style content hash: SHA-256 of `"blob <len>\0" + bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn triple(v: &RealInterval, anchor: &str) -> Value {
    json!({ "lo": v.lo(), "hi": v.hi(), "anchor": anchor })
}

pub fn point_triple(x: f64, anchor: &str) -> Value {
    json!({ "lo": x, "hi": x, "anchor": anchor })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub config: Value,
    pub config_hash: String,
    pub outputs: Vec<String>,
    pub verdict: Option<String>,
    pub result: Value,
    pub timing: Value,
}

impl RunManifest {
    pub fn new(command: &str, params: Value, config: Value) -> Self {
        let key = json!({ "command": command, "params": params, "config": config });
        let bytes = serde_json::to_vec(&key).expect("json");
        RunManifest {
            command: command.to_string(),
            config_hash: content_hash(&bytes),
            params,
            config,
            outputs: Vec::new(),
            verdict: None,
            result: Value::Null,
            timing: Value::Null,
        }
    }

    pub fn with_seconds(mut self, secs: f64) -> Self {
        self.timing = json!({ "seconds": secs });
        self
    }

    pub fn to_json_string(&self) -> String {
        // round-trip through Value so object keys come out sorted
        let v = serde_json::to_value(self).expect("json");
        serde_json::to_string_pretty(&v).expect("json")
    }

    pub fn load(path: &Path) -> Result<Self, StokesError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StokesError::MissingRun(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Merge manifests into one document, grouped by command. Timings are
/// dropped so identical inputs give identical documents.
pub fn consolidate(runs: &[RunManifest]) -> Value {
    let mut sections: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for r in runs {
        sections.entry(r.command.clone()).or_default().push(json!({
            "params": r.params,
            "config": r.config,
            "config_hash": r.config_hash,
            "outputs": r.outputs,
            "verdict": r.verdict,
            "result": r.result,
        }));
    }
    json!({ "runs": runs.len(), "sections": sections })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_git_blob_layout() {
        // sha256 of "blob 0\0"
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn empty_report() {
        let v = consolidate(&[]);
        assert_eq!(v["runs"], 0);
        assert!(v["sections"].as_object().unwrap().is_empty());
    }

    #[test]
    fn hash_depends_on_inputs_only() {
        let a = RunManifest::new("certify", json!({"kappa": 6.24}), json!({})).with_seconds(1.0);
        let b = RunManifest::new("certify", json!({"kappa": 6.24}), json!({})).with_seconds(2.0);
        let c = RunManifest::new("certify", json!({"kappa": 6.0}), json!({}));
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(consolidate(&[a]), consolidate(&[b]));
    }
}
