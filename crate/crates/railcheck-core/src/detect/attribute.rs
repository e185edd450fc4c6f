//! Attribute detectors: missing required attributes, unexpected attributes
//! or values, and scope-consistency violations.

use std::collections::BTreeMap;

use crate::config::{RuleConfig, Scope, ANY_CLASS};
use crate::issue::{Issue, IssueType};
use crate::model::{AttrValue, Scene};

fn value_type_name(value: &AttrValue) -> &'static str {
    match value {
        AttrValue::Text(_) => "Text",
        AttrValue::Num(_) => "Num",
        AttrValue::Bool(_) => "Bool",
        AttrValue::Vec(_) => "Vec",
    }
}

/// One issue per (annotation, required attribute it lacks).
///
/// Annotations of classes without a schema are skipped; `applies_to`
/// filters on the spec decide whether a requirement binds a given geometry
/// kind and sensor modality.
pub fn check_missing_attribute(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (frame_index, ann) in scene.annotations() {
        let class = scene.class_of(ann);
        let Some(schema) = config.schema_for(class) else {
            continue;
        };
        let modality = scene.modality_of(ann);
        for spec in &schema.required {
            if !spec.applies(ann.kind(), modality) {
                continue;
            }
            if ann.attributes.contains_key(&spec.name) {
                continue;
            }
            issues.push(Issue {
                issue_type: IssueType::MissingAttribute,
                frame_index: Some(frame_index),
                sensor: Some(ann.sensor.clone()),
                object_uid: Some(ann.object_uid.clone()),
                annotation_uid: Some(ann.uid.clone()),
                message: format!(
                    "required attribute \"{}\" is missing for class \"{class}\"",
                    spec.name
                ),
                details: BTreeMap::from([
                    ("attribute".to_string(), spec.name.clone()),
                    ("class".to_string(), class.to_string()),
                ]),
            });
        }
    }
    issues
}

/// One issue per (annotation, attribute) that the class schema does not
/// sanction: unknown name, wrong value type, or a value outside
/// `allowed_values`.
pub fn check_unexpected_attribute(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (frame_index, ann) in scene.annotations() {
        let class = scene.class_of(ann);
        let Some(schema) = config.schema_for(class) else {
            continue;
        };
        let modality = scene.modality_of(ann);
        for (name, value) in &ann.attributes {
            let spec = schema
                .specs()
                .find(|s| s.name == *name && s.applies(ann.kind(), modality));
            let mut details = BTreeMap::from([
                ("attribute".to_string(), name.clone()),
                ("value".to_string(), value.canonical()),
            ]);
            let message = match spec {
                None => {
                    format!("attribute \"{name}\" is not defined for class \"{class}\"")
                }
                Some(spec) if !spec.value_type.matches(value) => {
                    details.insert("expected_type".to_string(), format!("{:?}", spec.value_type));
                    details.insert(
                        "actual_type".to_string(),
                        value_type_name(value).to_string(),
                    );
                    format!(
                        "attribute \"{name}\" has type {} but class \"{class}\" expects {:?}",
                        value_type_name(value),
                        spec.value_type
                    )
                }
                Some(spec) => {
                    let Some(allowed) = &spec.allowed_values else {
                        continue;
                    };
                    if allowed.contains(&value.canonical()) {
                        continue;
                    }
                    details.insert(
                        "allowed".to_string(),
                        allowed.iter().cloned().collect::<Vec<_>>().join(", "),
                    );
                    format!(
                        "attribute \"{name}\" has value \"{}\" outside the allowed set",
                        value.canonical()
                    )
                }
            };
            issues.push(Issue {
                issue_type: IssueType::UnexpectedAttribute,
                frame_index: Some(frame_index),
                sensor: Some(ann.sensor.clone()),
                object_uid: Some(ann.object_uid.clone()),
                annotation_uid: Some(ann.uid.clone()),
                message,
                details,
            });
        }
    }
    issues
}

/// First place a scoped value was seen, for the issue details.
struct SeenAt {
    frame: u64,
    sensor: String,
    annotation: String,
}

/// One issue per scope group holding more than one distinct value of a
/// scoped attribute.
///
/// `ObjectConstant` rules group all of an object's annotations together
/// (the issue has no frame index); `FrameConstant` rules group per frame.
/// Annotations lacking the attribute never conflict.
pub fn check_inconsistent_attribute_scope(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    for rule in &config.scoped_attributes {
        // (object, optional frame) → canonical value → first sighting.
        let mut groups: BTreeMap<(String, Option<u64>), BTreeMap<String, SeenAt>> =
            BTreeMap::new();
        for (frame_index, ann) in scene.annotations() {
            if rule.class_name != ANY_CLASS && scene.class_of(ann) != rule.class_name {
                continue;
            }
            let Some(value) = ann.attributes.get(&rule.attribute_name) else {
                continue;
            };
            let group_frame = match rule.scope {
                Scope::ObjectConstant => None,
                Scope::FrameConstant => Some(frame_index),
            };
            groups
                .entry((ann.object_uid.clone(), group_frame))
                .or_default()
                .entry(value.canonical())
                .or_insert_with(|| SeenAt {
                    frame: frame_index,
                    sensor: ann.sensor.clone(),
                    annotation: ann.uid.clone(),
                });
        }

        for ((object_uid, group_frame), values) in groups {
            if values.len() < 2 {
                continue;
            }
            let mut details = BTreeMap::from([
                ("attribute".to_string(), rule.attribute_name.clone()),
                (
                    "values".to_string(),
                    values.keys().cloned().collect::<Vec<_>>().join(" | "),
                ),
            ]);
            for (value, seen) in &values {
                details.insert(
                    format!("at[{value}]"),
                    format!(
                        "frame {}, sensor {}, annotation {}",
                        seen.frame, seen.sensor, seen.annotation
                    ),
                );
            }
            let domain = match rule.scope {
                Scope::ObjectConstant => "across all frames and sensors",
                Scope::FrameConstant => "across sensors within one frame",
            };
            issues.push(Issue {
                issue_type: IssueType::InconsistentAttributeScope,
                frame_index: group_frame,
                sensor: None,
                object_uid: Some(object_uid),
                annotation_uid: None,
                message: format!(
                    "attribute \"{}\" must stay constant {domain} but takes {} distinct values",
                    rule.attribute_name,
                    values.len()
                ),
                details,
            });
        }
    }
    issues
}
