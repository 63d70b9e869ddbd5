//! Pass/fail certificates, one per claim.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|measured − predicted| ≤ tolerance`.
    Within,
    /// `measured ≤ predicted + tolerance`.
    AtMost,
    /// `measured ≥ predicted − tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub predicted: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        comparison: Comparison,
        predicted: f64,
        tolerance: f64,
        measured: f64,
    ) -> Self {
        let pass = match comparison {
            Comparison::Within => (measured - predicted).abs() <= tolerance,
            Comparison::AtMost => measured <= predicted + tolerance,
            Comparison::AtLeast => measured >= predicted - tolerance,
        };
        Self {
            name: name.into(),
            predicted,
            measured,
            tolerance,
            comparison,
            pass,
        }
    }

    pub fn within(name: impl Into<String>, predicted: f64, tolerance: f64, measured: f64) -> Self {
        Self::new(name, Comparison::Within, predicted, tolerance, measured)
    }

    pub fn at_most(name: impl Into<String>, bound: f64, measured: f64) -> Self {
        Self::new(name, Comparison::AtMost, bound, 0.0, measured)
    }

    pub fn at_least(name: impl Into<String>, bound: f64, measured: f64) -> Self {
        Self::new(name, Comparison::AtLeast, bound, 0.0, measured)
    }

    /// A yes/no property recorded as `1 ≥ 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, 1.0, if ok { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub id: String,
    /// Acceptance criterion number this certificate answers, if any.
    pub criterion: Option<u8>,
    pub experiment: String,
    pub theorem: String,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub runtime_seconds: f64,
    pub config_hash: String,
    /// Why the run could not produce a measurement, when it could not.
    pub diagnostic: Option<String>,
}

impl Certificate {
    pub fn new(
        id: &str,
        criterion: Option<u8>,
        experiment: &str,
        theorem: &str,
        checks: Vec<Check>,
    ) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self {
            id: id.into(),
            criterion,
            experiment: experiment.into(),
            theorem: theorem.into(),
            checks,
            pass,
            runtime_seconds: 0.0,
            config_hash: String::new(),
            diagnostic: None,
        }
    }

    /// A failed certificate carrying the numerical error that prevented a measurement.
    pub fn failed(
        id: &str,
        criterion: Option<u8>,
        experiment: &str,
        theorem: &str,
        diagnostic: String,
    ) -> Self {
        Self {
            diagnostic: Some(diagnostic),
            ..Self::new(id, criterion, experiment, theorem, Vec::new())
        }
    }

    pub fn summary(&self) -> String {
        let label = self.criterion.map_or_else(
            || self.id.clone(),
            |c| format!("criterion {c:>2} [{}]", self.id),
        );
        let mut line = format!(
            "{} {label} ({:.2} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.runtime_seconds
        );
        for c in self.checks.iter().filter(|c| !c.pass) {
            line.push_str(&format!(
                "; {}: measured {:.6e} vs {:?} {:.6e} ± {:.1e}",
                c.name, c.measured, c.comparison, c.predicted, c.tolerance
            ));
        }
        if let Some(d) = &self.diagnostic {
            line.push_str(&format!("; {d}"));
        }
        line
    }
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configs serialize");
    Sha256::digest(&canonical)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
