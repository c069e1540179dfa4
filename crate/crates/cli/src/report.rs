//! Report data model: one JSON document per run, plus an optional CSV view.
//!
//! Field order is fixed by declaration order, so two runs of the same
//! scenario produce byte-identical reports except for the `seconds` timing
//! fields. Non-finite defect values (a stage that could not be measured)
//! serialize as JSON `null`.

use serde::Serialize;

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    /// Every defect stayed within its tolerance.
    Pass,
    /// At least one defect exceeded its tolerance.
    Fail,
    /// The check could not run to completion; see `error`.
    Error,
}

/// One measured defect with the tolerance it was judged against.
#[derive(Debug, Clone, Serialize)]
pub struct DefectLine {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// Where the worst value occurred (grid indices, fiber angle index, …).
    pub argmax: String,
    pub passed: bool,
}

impl DefectLine {
    /// A defect that passes iff `value <= tolerance` (the common case).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64, argmax: impl Into<String>) -> Self {
        DefectLine {
            name: name.into(),
            value,
            tolerance,
            argmax: argmax.into(),
            passed: value.is_finite() && value <= tolerance,
        }
    }

    /// A defect whose pass verdict was decided by the producing check
    /// (e.g. a lower bound, where bigger is better).
    pub fn judged(
        name: impl Into<String>,
        value: f64,
        tolerance: f64,
        argmax: impl Into<String>,
        passed: bool,
    ) -> Self {
        DefectLine { name: name.into(), value, tolerance, argmax: argmax.into(), passed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub status: CheckStatus,
    pub defects: Vec<DefectLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
}

impl CheckReport {
    pub fn from_defects(name: &'static str, defects: Vec<DefectLine>, seconds: f64) -> Self {
        let status = if defects.iter().all(|d| d.passed) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckReport { name, status, defects, error: None, seconds }
    }

    pub fn from_error(name: &'static str, message: String, seconds: f64) -> Self {
        CheckReport {
            name,
            status: CheckStatus::Error,
            defects: Vec::new(),
            error: Some(message),
            seconds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub config: ScenarioConfig,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
    pub seconds: f64,
}

impl Report {
    pub fn new(config: ScenarioConfig, checks: Vec<CheckReport>, seconds: f64) -> Self {
        let passed = checks.iter().all(|c| c.status == CheckStatus::Pass);
        Report {
            schema: crate::config::REPORT_SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            checks,
            passed,
            seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Flat CSV view: one row per defect line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,status,defect,value,tolerance,passed,argmax\n");
        for check in &self.checks {
            if let Some(error) = &check.error {
                out.push_str(&format!(
                    "{},error,,,,,{}\n",
                    csv_field(check.name),
                    csv_field(error)
                ));
                continue;
            }
            for d in &check.defects {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    csv_field(check.name),
                    match check.status {
                        CheckStatus::Pass => "pass",
                        CheckStatus::Fail => "fail",
                        CheckStatus::Error => "error",
                    },
                    csv_field(&d.name),
                    d.value,
                    d.tolerance,
                    d.passed,
                    csv_field(&d.argmax),
                ));
            }
        }
        out
    }
}

/// Quote a CSV field when it contains a delimiter, quote, or newline.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses_follow_defect_verdicts() {
        let pass = CheckReport::from_defects(
            "x",
            vec![DefectLine::at_most("a", 1e-9, 1e-6, "(0,0)")],
            0.0,
        );
        assert_eq!(pass.status, CheckStatus::Pass);
        let fail = CheckReport::from_defects(
            "x",
            vec![
                DefectLine::at_most("a", 1e-9, 1e-6, "(0,0)"),
                DefectLine::at_most("b", 2e-6, 1e-6, "(1,3)"),
            ],
            0.0,
        );
        assert_eq!(fail.status, CheckStatus::Fail);
    }

    #[test]
    fn non_finite_values_serialize_as_null_and_fail() {
        let line = DefectLine::at_most("w", f64::INFINITY, 1e-6, "n/a");
        assert!(!line.passed);
        let json = serde_json::to_string(&line).unwrap();
        assert!(json.contains("\"value\":null"), "{json}");
    }

    #[test]
    fn csv_quotes_fields_with_delimiters() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
