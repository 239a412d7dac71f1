//! Input parsing and machine-readable reports shared by the command line
//! tool and the acceptance harness.

mod emit;
mod potential;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use emit::{emit_detsystem, parse_detsystem_json, DetFormat};
pub use potential::{parse_potential, PotentialParseError};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "symop";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Potential(#[from] PotentialParseError),
    #[error("unknown output format `{0}`")]
    UnknownFormat(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Sign and normalization conventions every report states explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub momentum: String,
    pub symmetrization: String,
    pub equation_form: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            momentum: "p_a = -i d/dx_a, so p^2 = -Laplacian; L = i d/dt + Laplacian/(2M) - V".into(),
            symmetrization: "index brackets (a b) average over permutations (factor 1/k!); {A,B} = AB + BA".into(),
            equation_form: "nonlinear Schroedinger equations are taken as i psi_t + Laplacian psi + F(psi, psi*) = 0 unless the report says otherwise".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: bool,
    pub checks: usize,
    pub failed: Vec<String>,
}

impl Summary {
    pub fn from_checks<S: Into<String>>(checks: impl IntoIterator<Item = (S, bool)>) -> Self {
        let mut n = 0;
        let mut failed = Vec::new();
        for (name, ok) in checks {
            n += 1;
            if !ok {
                failed.push(name.into());
            }
        }
        Summary {
            pass: failed.is_empty(),
            checks: n,
            failed,
        }
    }
}

/// Wall-clock data. Excluded from [`Report::canonical_json`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub conventions: Conventions,
    pub results: Value,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Report {
    pub fn new(
        command: &str,
        config: &impl Serialize,
        results: &impl Serialize,
        summary: Summary,
    ) -> Result<Self, ReportError> {
        Ok(Report {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config: serde_json::to_value(config)?,
            conventions: Conventions::default(),
            results: serde_json::to_value(results)?,
            summary,
            timing: None,
        })
    }

    pub fn with_timing(mut self, elapsed: Duration) -> Self {
        self.timing = Some(Timing {
            wall_seconds: elapsed.as_secs_f64(),
        });
        self
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// JSON with timing removed; identical inputs give identical bytes.
    pub fn canonical_json(&self) -> String {
        Report {
            timing: None,
            ..self.clone()
        }
        .to_json()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_drops_timing() {
        let s = Summary::from_checks([("a", true), ("b", false)]);
        assert!(!s.pass);
        assert_eq!(s.failed, vec!["b".to_string()]);
        let r = Report::new("x", &serde_json::json!({"k": 1}), &vec![1, 2], s).unwrap();
        let timed = r.clone().with_timing(Duration::from_millis(5));
        assert!(timed.to_json().contains("wall_seconds"));
        assert_eq!(timed.canonical_json(), r.to_json());
        let back: Report = serde_json::from_str(&timed.to_json()).unwrap();
        assert_eq!(back, timed);
    }

    #[test]
    fn conventions_present() {
        let r = Report::new("x", &(), &(), Summary::from_checks::<&str>([])).unwrap();
        let j = r.to_json();
        for key in ["momentum", "symmetrization", "equation_form"] {
            assert!(j.contains(key));
        }
    }
}
