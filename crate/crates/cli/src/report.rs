//! Serializable verification reports: versioned JSON and a text summary.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::row_order;

pub const SCHEMA_VERSION: u32 = 1;

/// Echo of the configuration that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub family: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sign: Option<String>,
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
    pub tolerances: BTreeMap<String, f64>,
}

/// One evaluated point: base point, direction, curvature values, residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub k_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_formula: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
}

/// Aggregates over the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Worst value seen for each evaluated residual row.
    pub max_residuals: BTreeMap<String, f64>,
    /// Rows not applicable to this family.
    pub skipped: Vec<String>,
    /// Rows whose worst value exceeded the tolerance.
    pub failed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_stddev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau_exponent: Option<String>,
    /// Extra draws spent on guard violations during sampling.
    pub resamples: usize,
    pub pass: bool,
}

/// Full machine-readable result of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub config: ConfigEcho,
    pub samples: Vec<SampleRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).context("serializing report")?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("parsing report JSON")
    }

    /// Human-readable table: one row per check with its worst residual,
    /// tolerance, and pass/fail status.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        out.push_str(&format!(
            "square metric verification: family={} dim={} samples={} seed={} radius={}\n",
            c.family, c.dim, c.samples, c.seed, c.radius
        ));
        let mut extras: Vec<String> = Vec::new();
        if let Some(mu) = c.mu {
            extras.push(format!("mu={mu}"));
        }
        if let Some(k) = c.k {
            extras.push(format!("k={k}"));
        }
        if let Some(a) = &c.a {
            extras.push(format!(
                "a=({})",
                a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ));
        }
        if let Some(sign) = &c.sign {
            extras.push(format!("sign={sign}"));
        }
        if !extras.is_empty() {
            out.push_str(&format!("parameters: {}\n", extras.join(" ")));
        }
        out.push('\n');
        out.push_str(&format!(
            "{:<18} {:>13} {:>10}  {}\n",
            "check", "max residual", "tolerance", "status"
        ));
        for name in row_order() {
            let tol = c.tolerances.get(name).copied();
            match self.summary.max_residuals.get(name) {
                Some(value) => {
                    let status = if self.summary.failed.iter().any(|f| f == name) {
                        "FAIL"
                    } else {
                        "pass"
                    };
                    let decorated = if name == "tau-exponent" {
                        match &self.summary.tau_exponent {
                            Some(v) => format!("{status} ({v})"),
                            None => status.to_string(),
                        }
                    } else {
                        status.to_string()
                    };
                    out.push_str(&format!(
                        "{:<18} {:>13.3e} {:>10.1e}  {}\n",
                        name,
                        value,
                        tol.unwrap_or(f64::NAN),
                        decorated
                    ));
                }
                None => {
                    out.push_str(&format!("{:<18} {:>13} {:>10}  skipped\n", name, "-", "-"));
                }
            }
        }
        out.push('\n');
        if let Some(mu_hat) = self.summary.mu_hat {
            out.push_str(&format!("deformed curvature fit: mu_hat = {mu_hat:.9}\n"));
        }
        if let (Some(mean), Some(std)) = (self.summary.delta_mean, self.summary.delta_stddev) {
            out.push_str(&format!("delta: mean {mean:.9} stddev {std:.3e}\n"));
        }
        out.push_str(&format!("resamples: {}\n", self.summary.resamples));
        out.push_str(&format!(
            "result: {}\n",
            if self.summary.pass { "PASS" } else { "FAIL" }
        ));
        out
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Text => Ok(self.to_text()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            other => anyhow::bail!("unknown format `{other}` (expected json or text)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_report() -> VerificationReport {
        let mut residuals = BTreeMap::new();
        residuals.insert("y1".to_string(), 3.0e-9);
        residuals.insert("weyl".to_string(), 1.2e-8);
        let mut max_residuals = residuals.clone();
        max_residuals.insert("deform-constcurv".to_string(), 4.0e-8);
        max_residuals.insert("tau-exponent".to_string(), 2.0e-12);
        let mut tolerances = BTreeMap::new();
        tolerances.insert("y1".to_string(), 1e-6);
        tolerances.insert("weyl".to_string(), 1e-6);
        tolerances.insert("deform-constcurv".to_string(), 1e-6);
        tolerances.insert("tau-exponent".to_string(), 1e-7);
        VerificationReport {
            schema: SCHEMA_VERSION,
            config: ConfigEcho {
                family: "square-scalar".into(),
                dim: 3,
                mu: Some(1.0),
                k: Some(0.3),
                a: Some(vec![0.1, 0.2, 0.05]),
                sign: None,
                samples: 1,
                seed: 7,
                radius: 0.4,
                tolerances,
            },
            samples: vec![SampleRecord {
                index: 0,
                x: vec![0.1, 0.0, -0.05],
                y: vec![0.3, 0.9, 0.2],
                k_hat: 0.97,
                k_formula: Some(0.97),
                residuals,
            }],
            summary: Summary {
                max_residuals,
                skipped: vec!["bounds".into()],
                failed: vec![],
                mu_hat: Some(1.0),
                delta_mean: Some(0.5),
                delta_stddev: Some(1e-12),
                tau_exponent: Some("sigma3".into()),
                resamples: 0,
                pass: true,
            },
        }
    }

    #[test]
    fn json_round_trips_field_for_field() {
        let report = tiny_report();
        let text = report.to_json().unwrap();
        let parsed = VerificationReport::from_json(&text).unwrap();
        assert_eq!(parsed, report);
        assert!(text.contains("\"schema\": 1"));
    }

    #[test]
    fn text_summary_lists_known_rows_and_verdict() {
        let report = tiny_report();
        let text = report.to_text();
        assert!(text.contains("y1"));
        assert!(text.contains("result: PASS"));
        assert!(text.contains("skipped"));
        assert!(text.contains("sigma3"));
    }

    #[test]
    fn serialization_is_deterministic() {
        let report = tiny_report();
        assert_eq!(report.to_json().unwrap(), report.to_json().unwrap());
    }
}
