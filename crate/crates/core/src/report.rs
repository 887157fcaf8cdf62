//! Machine-readable results of a CLI run.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::expr::Verdict;
use crate::oracle::OracleConfig;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Input {
    pub path: String,
    pub sha256: String,
}

impl Input {
    pub fn new(path: &str, contents: &[u8]) -> Input {
        let digest = Sha256::digest(contents);
        Input { path: path.to_string(), sha256: digest.iter().map(|b| format!("{b:02x}")).collect() }
    }
}

/// One decided question. `seed` and `trials` are set exactly when the
/// verdict is `ProbablyEqual`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub verdict: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn from_verdict(name: &str, v: &Verdict) -> Check {
        let (seed, trials) = match v {
            Verdict::ProbablyEqual { seed, trials } => (Some(*seed), Some(*trials)),
            _ => (None, None),
        };
        let detail = match v {
            Verdict::ProvedUnequal { witness: Some(w) } => Some(format!("witness: {} vs {}", w.lhs, w.rhs)),
            _ => None,
        };
        Check { name: name.to_string(), verdict: v.label().to_string(), passed: v.holds(), seed, trials, detail }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Check {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Output {
    pub label: String,
    pub text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<Input>,
    pub oracle: OracleConfig,
    pub checks: Vec<Check>,
    pub outputs: Vec<Output>,
    /// Step-by-step record of the computation (e.g. eliminations).
    pub audit: Vec<String>,
    /// Structured results specific to the command.
    pub data: serde_json::Value,
    pub error: Option<String>,
    pub elapsed_ms: f64,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, oracle: OracleConfig) -> Report {
        Report {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: Vec::new(),
            oracle,
            checks: Vec::new(),
            outputs: Vec::new(),
            audit: Vec::new(),
            data: serde_json::Value::Null,
            error: None,
            elapsed_ms: 0.0,
            passed: true,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    /// Adds a labelled result. Text labelled `file` is rendered verbatim.
    pub fn output(&mut self, label: &str, text: impl Into<String>) {
        self.outputs.push(Output { label: label.to_string(), text: text.into() });
    }

    pub fn fail(&mut self, error: impl Into<String>) {
        self.error = Some(error.into());
        self.passed = false;
    }

    /// Human-readable rendering.
    pub fn render(&self, color: bool) -> String {
        let mut s = String::new();
        for o in &self.outputs {
            if o.label == "file" {
                s.push_str(&o.text);
            } else if o.text.contains('\n') {
                s.push_str(&format!("{}:\n", o.label));
                for line in o.text.lines() {
                    s.push_str(&format!("  {line}\n"));
                }
            } else {
                s.push_str(&format!("{}: {}\n", o.label, o.text));
            }
        }
        if !self.audit.is_empty() {
            s.push_str("trail:\n");
            for (k, a) in self.audit.iter().enumerate() {
                s.push_str(&format!("  {}. {a}\n", k + 1));
            }
        }
        for c in &self.checks {
            let tag = match (c.passed, color) {
                (true, true) => "\x1b[32mPASS\x1b[0m",
                (false, true) => "\x1b[31mFAIL\x1b[0m",
                (true, false) => "PASS",
                (false, false) => "FAIL",
            };
            s.push_str(&format!("[{tag}] {}: {}", c.name, c.verdict));
            if let (Some(seed), Some(trials)) = (c.seed, c.trials) {
                s.push_str(&format!(" (seed {seed}, {trials} trials)"));
            }
            if let Some(d) = &c.detail {
                s.push_str(&format!(" ({d})"));
            }
            s.push('\n');
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("error: {e}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probable_verdicts_carry_seed() {
        let c = Check::from_verdict("x", &Verdict::ProbablyEqual { seed: 3, trials: 25 });
        assert_eq!((c.seed, c.trials, c.passed), (Some(3), Some(25), true));
        let c = Check::from_verdict("x", &Verdict::ProvedEqual);
        assert_eq!((c.seed, c.trials), (None, None));
        let mut r = Report::new("t", OracleConfig::default());
        r.check(Check::from_verdict("y", &Verdict::ProvedUnequal { witness: None }));
        assert!(!r.passed);
        assert!(r.render(false).contains("[FAIL] y: ProvedUnequal"));
    }

    #[test]
    fn digest_is_hex() {
        assert_eq!(
            Input::new("f", b"abc").sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
