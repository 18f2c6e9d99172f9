use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        InputDigest {
            path: path.to_string(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub tolerance: f64,
    pub version: String,
    /// Command-specific options such as `alpha` or `assertExtremal`.
    pub options: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    InputError,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::InputError => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub passed: bool,
    pub summary: String,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub provenance: Provenance,
}

impl Report {
    pub fn outcome(&self) -> Outcome {
        match &self.error {
            Some(e) if e.kind == "input" => Outcome::InputError,
            _ if self.passed => Outcome::Pass,
            _ => Outcome::Fail,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}: {}\n{}\n",
            self.command,
            if self.passed { "PASS" } else { "FAIL" },
            self.summary
        );
        if let Some(e) = &self.error {
            out.push_str(&format!("error ({}): {}\n", e.kind, e.message));
        }
        for d in &self.provenance.inputs {
            out.push_str(&format!("input {} sha256 {}\n", d.path, d.sha256));
        }
        out.push_str(&format!(
            "seed {} tolerance {:e} version {}\n",
            self.provenance.seed, self.provenance.tolerance, self.provenance.version
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical;

    #[test]
    fn report_round_trip_is_lossless() {
        let r = Report {
            command: "xor".into(),
            passed: true,
            summary: "ok".into(),
            result: serde_json::json!({"c": [[0.6180339887498949, 0.1], [1.0, -0.3]], "rank": 2}),
            error: None,
            provenance: Provenance {
                inputs: vec![InputDigest::of("a.json", b"{}")],
                seed: 7,
                tolerance: 1e-9,
                version: "selftest 0.1.0".into(),
                options: BTreeMap::from([("alpha".to_string(), serde_json::json!(0.25))]),
            },
        };
        let text = canonical::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(canonical::to_string(&back).unwrap(), text);
        assert_eq!(
            r.provenance.inputs[0].sha256,
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
    }

    #[test]
    fn outcomes_map_to_exit_codes() {
        let mut r: Report = serde_json::from_value(serde_json::json!({
            "command": "validate", "passed": false, "summary": "", "result": null,
            "provenance": {"inputs": [], "seed": 0, "tolerance": 1e-9, "version": "v", "options": {}}
        }))
        .unwrap();
        assert_eq!(r.outcome().exit_code(), 1);
        r.passed = true;
        assert_eq!(r.outcome().exit_code(), 0);
        r.error = Some(ErrorInfo {
            kind: "input".into(),
            message: "bad".into(),
        });
        assert_eq!(r.outcome().exit_code(), 2);
    }
}
