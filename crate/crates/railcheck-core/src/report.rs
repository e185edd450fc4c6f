//! Issue aggregation: per-type counts, element totals, error rate, and the
//! JSON / text renderings of a validation run.
//!
//! The error-rate denominator is the number of *annotation elements* —
//! annotations plus their attribute entries — not the number of
//! annotations. Tools that divide by annotations alone will report a rate
//! roughly an order of magnitude higher on attribute-heavy datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::issue::{Issue, IssueType};
use crate::model::{count_elements, ElementCount, Scene};

/// Version stamp of the report JSON schema.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Aggregated result of validating one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    /// Identifier of the validated scene (file stem when run via the CLI).
    pub scene_id: String,
    /// All issues, deterministically ordered.
    pub issues: Vec<Issue>,
    /// Issue count per type; types with zero issues are omitted.
    pub counts_by_type: BTreeMap<IssueType, u64>,
    pub elements: ElementCount,
    /// issues ÷ elements.total, stored at full precision (0 when empty).
    pub error_rate: f64,
    /// Number of distinct elements (annotation or attribute locations)
    /// implicated by at least one issue; an element with two issues counts
    /// once here but twice in `issues`.
    pub distinct_faulty_elements: u64,
    /// Non-fatal diagnostics: skipped sensors, unknown classes.
    pub warnings: Vec<String>,
}

/// Detail level of the text rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verbosity {
    /// Per-type counts and the error rate.
    Summary,
    /// Summary plus one line per issue.
    Full,
}

/// Aggregates issues over a scene into a [`Report`].
///
/// `scene_id` starts empty; callers that know a name (the CLI uses the file
/// stem) set it on the returned value.
pub fn build_report(scene: &Scene, mut issues: Vec<Issue>, warnings: Vec<String>) -> Report {
    issues.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    let mut counts_by_type = BTreeMap::new();
    for issue in &issues {
        *counts_by_type.entry(issue.issue_type).or_insert(0u64) += 1;
    }

    let mut faulty = BTreeSet::new();
    for issue in &issues {
        faulty.insert((
            issue.frame_index,
            issue.sensor.clone(),
            issue.object_uid.clone(),
            issue.annotation_uid.clone(),
            issue.details.get("attribute").cloned(),
        ));
    }

    let elements = count_elements(scene);
    let error_rate = if elements.total == 0 {
        0.0
    } else {
        issues.len() as f64 / elements.total as f64
    };

    Report {
        format_version: REPORT_FORMAT_VERSION,
        scene_id: String::new(),
        issues,
        counts_by_type,
        elements,
        error_rate,
        distinct_faulty_elements: faulty.len() as u64,
        warnings,
    }
}

/// Renders a rate like `0.02176…` as `"2.18%"`.
pub fn format_percent(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

/// Serializes a report as pretty JSON with stable field order; parsing it
/// back yields an equal report.
pub fn to_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialization");
    text.push('\n');
    text
}

/// Renders a report for humans.
pub fn to_text(report: &Report, verbosity: Verbosity) -> String {
    let mut out = String::new();
    let name = if report.scene_id.is_empty() {
        "scene"
    } else {
        report.scene_id.as_str()
    };
    let _ = writeln!(
        out,
        "{name}: {} issues / {} elements ({})",
        report.issues.len(),
        report.elements.total,
        format_percent(report.error_rate)
    );
    for (issue_type, count) in &report.counts_by_type {
        let _ = writeln!(out, "  {issue_type}: {count}");
    }
    for warning in &report.warnings {
        let _ = writeln!(out, "  warning: {warning}");
    }
    if verbosity == Verbosity::Full {
        for issue in &report.issues {
            let _ = writeln!(out, "{}", issue.to_line());
        }
    }
    out
}
