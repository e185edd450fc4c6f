//! The nine issue detectors.
//!
//! Each detector is a pure function `(Scene, RuleConfig) → Vec<Issue>`;
//! [`run_checks`] runs the selected ones, orders the combined issue list
//! deterministically, and aggregates a [`Report`]. Detectors never abort on
//! heterogeneous data: annotations of classes without a schema and cameras
//! without calibration are skipped and surfaced as report warnings.

mod attribute;
mod rail;
mod spatial;

pub use attribute::{
    check_inconsistent_attribute_scope, check_missing_attribute, check_unexpected_attribute,
};
pub use rail::{
    check_missing_ego_track, check_rail_side_count, check_rail_side_order,
    check_transition_identical_start_and_end,
};
pub use spatial::{check_annotation_above_horizon, check_dimension_invalid};

use std::collections::BTreeSet;

use crate::config::RuleConfig;
use crate::issue::IssueType;
use crate::model::Scene;
use crate::report::{build_report, Report};

/// Runs every selected detector and aggregates the results.
///
/// Output is deterministic: issues are ordered by (type, frame, sensor,
/// object, annotation, message, details) and warnings are sorted and
/// deduplicated, so identical inputs produce byte-identical reports.
pub fn run_checks(scene: &Scene, config: &RuleConfig) -> Report {
    let mut issues = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    if config.is_enabled(IssueType::MissingAttribute) {
        issues.extend(check_missing_attribute(scene, config));
    }
    if config.is_enabled(IssueType::UnexpectedAttribute) {
        issues.extend(check_unexpected_attribute(scene, config));
    }
    if config.is_enabled(IssueType::InconsistentAttributeScope) {
        issues.extend(check_inconsistent_attribute_scope(scene, config));
    }
    if config.is_enabled(IssueType::DimensionInvalid) {
        issues.extend(check_dimension_invalid(scene, config));
    }
    if config.is_enabled(IssueType::AnnotationAboveHorizon) {
        let (horizon_issues, horizon_warnings) =
            spatial::check_annotation_above_horizon_with_warnings(scene, config);
        issues.extend(horizon_issues);
        warnings.extend(horizon_warnings);
    }
    if config.is_enabled(IssueType::MissingEgoTrack) {
        issues.extend(check_missing_ego_track(scene, config));
    }
    if config.is_enabled(IssueType::RailSideCount) {
        issues.extend(check_rail_side_count(scene, config));
    }
    if config.is_enabled(IssueType::RailSideOrder) {
        issues.extend(check_rail_side_order(scene, config));
    }
    if config.is_enabled(IssueType::TransitionIdenticalStartAndEnd) {
        issues.extend(check_transition_identical_start_and_end(scene, config));
    }

    if config.is_enabled(IssueType::MissingAttribute)
        || config.is_enabled(IssueType::UnexpectedAttribute)
    {
        warnings.extend(unknown_class_warnings(scene, config));
    }

    warnings.sort();
    warnings.dedup();
    build_report(scene, issues, warnings)
}

/// One warning per annotated class without a schema.
fn unknown_class_warnings(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut unknown = BTreeSet::new();
    for (_, ann) in scene.annotations() {
        let class = scene.class_of(ann);
        if !class.is_empty() && config.schema_for(class).is_none() {
            unknown.insert(class.to_string());
        }
    }
    unknown
        .into_iter()
        .map(|class| {
            format!("class \"{class}\" has no schema; attribute checks skip its annotations")
        })
        .collect()
}
