//! Check records and the JSON / text report.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// One check. Residuals and tolerances are kept as `f64` here and written
/// as 17-significant-digit strings so reports are byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: &'static str,
    pub sample_count: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub value: Option<f64>,
    pub status: Status,
    pub reason: Option<String>,
}

impl CheckRecord {
    pub(crate) fn evaluated(
        id: &str,
        anchor: &'static str,
        samples: usize,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        CheckRecord {
            id: id.to_string(),
            anchor,
            sample_count: samples,
            max_residual: residual,
            tolerance,
            value: None,
            status: if residual < tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
            reason: None,
        }
    }

    pub(crate) fn skipped(
        id: &str,
        anchor: &'static str,
        tolerance: f64,
        reason: impl Into<String>,
    ) -> Self {
        CheckRecord {
            id: id.to_string(),
            anchor,
            sample_count: 0,
            max_residual: f64::NAN,
            tolerance,
            value: None,
            status: Status::Skipped,
            reason: Some(reason.into()),
        }
    }

    pub(crate) fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }

    pub(crate) fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = Some(reason.into());
        self
    }
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub scenario: String,
    pub engine_version: &'static str,
    pub seed: u64,
    pub samples: usize,
    /// Ordered by id.
    pub checks: Vec<CheckRecord>,
    pub wall_time: Option<f64>,
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    check_id: &'a str,
    anchor: &'a str,
    sample_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_residual: Option<String>,
    tolerance: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    scenario: &'a str,
    engine_version: &'a str,
    seed: u64,
    samples: usize,
    passed: bool,
    checks: Vec<JsonRecord<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<String>,
}

impl CheckReport {
    /// True iff every executed (non-skipped) check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        let checks = self
            .checks
            .iter()
            .map(|c| JsonRecord {
                check_id: &c.id,
                anchor: c.anchor,
                sample_count: c.sample_count,
                max_residual: (c.status != Status::Skipped).then(|| format_number(c.max_residual)),
                tolerance: format_number(c.tolerance),
                value: c.value.map(format_number),
                status: c.status,
                reason: c.reason.as_deref(),
            })
            .collect();
        let report = JsonReport {
            scenario: &self.scenario,
            engine_version: self.engine_version,
            seed: self.seed,
            samples: self.samples,
            passed: self.passed(),
            checks,
            wall_time_seconds: self.wall_time.map(|t| format!("{t:.3}")),
        };
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "scenario {} (seed {}, {} samples, engine {})\n",
            self.scenario, self.seed, self.samples, self.engine_version
        );
        let width = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(0);
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            out.push_str(&format!("{status}  {:width$}  ", c.id));
            match c.status {
                Status::Skipped => out.push_str(c.reason.as_deref().unwrap_or("")),
                _ => {
                    out.push_str(&format!(
                        "max {:.3e} (tol {:.1e}, n = {})",
                        c.max_residual, c.tolerance, c.sample_count
                    ));
                    if let Some(v) = c.value {
                        out.push_str(&format!("  value {v:.9}"));
                    }
                    if let Some(r) = &c.reason {
                        out.push_str(&format!("  [{r}]"));
                    }
                }
            }
            out.push('\n');
        }
        let failed = self
            .checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .count();
        let skipped = self
            .checks
            .iter()
            .filter(|c| c.status == Status::Skipped)
            .count();
        out.push_str(&format!(
            "{} checks: {} passed, {failed} failed, {skipped} skipped\n",
            self.checks.len(),
            self.checks.len() - failed - skipped
        ));
        if let Some(t) = self.wall_time {
            out.push_str(&format!("wall time {t:.3} s\n"));
        }
        out
    }
}
