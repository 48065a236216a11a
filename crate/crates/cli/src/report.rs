//! JSON report, schema `pv5-jacobi-lab/1`.
//!
//! Every number is a decimal string carrying the full working precision.
//! Unknown fields are rejected on load.

use std::fs;
use std::path::Path;

use pv5_jacobi::num;
use pv5_jacobi::verify::{IdentityReport, Status, Tier};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA: &str = "pv5-jacobi-lab/1";

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub timestamp: String,
    pub command: String,
    pub params: Params,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub alpha: String,
    pub k2: String,
    pub t_grid: Vec<String>,
    pub n_max: usize,
    pub bits: u32,
    pub rel_tol: String,
    pub suite: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub id: String,
    pub tier: String,
    pub n: usize,
    pub t: String,
    pub z: Option<String>,
    pub lhs_scale: Option<String>,
    pub residual: Option<String>,
    pub residual_half_step: Option<String>,
    /// `ok`, `skipped` or `error`.
    pub status: String,
    pub detail: Option<String>,
    pub pass: Option<bool>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub required_pass: bool,
    pub max_required_residual: Option<String>,
    pub diagnostics: Map<String, Value>,
}

impl Check {
    pub fn from_report(r: &IdentityReport) -> Self {
        let dec = |x: &Option<pv5_jacobi::Real>| x.as_ref().map(num::to_decimal);
        let detail = match &r.status {
            Status::Ok => None,
            Status::Skipped(m) | Status::Error(m) => Some(m.clone()),
        };
        Check {
            id: r.id.to_string(),
            tier: r.tier.as_str().to_string(),
            n: r.n,
            t: num::to_decimal(&r.t),
            z: dec(&r.z),
            lhs_scale: dec(&r.lhs_scale),
            residual: dec(&r.residual),
            residual_half_step: dec(&r.residual_half_step),
            status: r.status.label().to_string(),
            detail,
            pass: r.pass,
        }
    }
}

impl Report {
    /// Structural checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Schema(m));
        if self.schema != SCHEMA {
            return bad(format!("schema {:?}, expected {SCHEMA:?}", self.schema));
        }
        let number = |s: &str| s.trim().parse::<f64>().is_ok();
        for (i, c) in self.checks.iter().enumerate() {
            if c.tier != Tier::Required.as_str() && c.tier != Tier::Diagnostic.as_str() {
                return bad(format!("checks[{i}]: tier {:?}", c.tier));
            }
            if !["ok", "skipped", "error"].contains(&c.status.as_str()) {
                return bad(format!("checks[{i}]: status {:?}", c.status));
            }
            if c.tier == Tier::Diagnostic.as_str() && c.pass.is_some() {
                return bad(format!("checks[{i}]: pass set on a diagnostic"));
            }
            if c.status == "ok" && c.residual.is_none() {
                return bad(format!("checks[{i}]: ok without residual"));
            }
            if c.status != "ok" && c.detail.is_none() {
                return bad(format!("checks[{i}]: {} without detail", c.status));
            }
            let values = [Some(&c.t), c.z.as_ref(), c.lhs_scale.as_ref(), c.residual.as_ref(), c.residual_half_step.as_ref()];
            if values.into_iter().flatten().any(|s| !number(s)) {
                return bad(format!("checks[{i}]: non-numeric value"));
            }
            if c.residual.as_deref().is_some_and(|s| s.starts_with('-')) {
                return bad(format!("checks[{i}]: negative residual"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let report: Report = serde_json::from_str(s)?;
        report.validate()?;
        Ok(report)
    }
}

/// Writes `report` to `path`.
pub fn emit_report(report: &Report, path: &Path) -> Result<(), CliError> {
    fs::write(path, report.to_json()?)?;
    Ok(())
}

/// Reads and validates a report written by [`emit_report`].
pub fn load_report(path: &Path) -> Result<Report, CliError> {
    Report::from_json(&fs::read_to_string(path)?)
}

/// Drops the `timestamp` line so two runs can be compared byte for byte.
pub fn without_timestamp(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> Report {
        Report {
            schema: SCHEMA.into(),
            timestamp: "2026-01-01T00:00:00Z".into(),
            command: "verify".into(),
            params: Params {
                alpha: "1".into(),
                k2: "0.25".into(),
                t_grid: vec!["0.5".into()],
                n_max: 1,
                bits: 256,
                rel_tol: "1e-40".into(),
                suite: "required".into(),
                seed: 0,
            },
            checks: Vec::new(),
            summary: Summary { required_pass: true, max_required_residual: None, diagnostics: Map::new() },
        }
    }

    #[test]
    fn empty_check_list_round_trips() {
        let r = empty();
        let s = r.to_json().unwrap();
        assert!(s.contains("\"checks\": []"));
        assert_eq!(Report::from_json(&s).unwrap(), r);
    }

    #[test]
    fn unknown_fields_rejected() {
        let s = empty().to_json().unwrap().replacen("\"command\"", "\"extra\": 1,\n  \"command\"", 1);
        assert!(Report::from_json(&s).is_err());
        let wrong = empty().to_json().unwrap().replace(SCHEMA, "other/2");
        assert!(Report::from_json(&wrong).is_err());
    }
}
