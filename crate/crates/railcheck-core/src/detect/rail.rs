//! Rail topology detectors: ego-track presence, rail-side cardinality and
//! ordering, and degenerate track transitions.

use std::collections::BTreeMap;

use crate::config::RuleConfig;
use crate::geometry::{vertical_overlap, x_at_row};
use crate::issue::{Issue, IssueType};
use crate::model::{Annotation, Geometry, Modality, Scene};

/// One issue per (frame, required sensor) with no ego-track annotation.
///
/// An ego track is an annotation of the track class whose track-id attribute
/// equals the configured ego value; numeric strings count ("0" == 0).
pub fn check_missing_ego_track(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    let ego = &config.ego;
    let mut issues = Vec::new();
    for (&frame_index, frame) in &scene.frames {
        for sensor in &ego.required_sensors {
            let found = frame.annotations.iter().any(|ann| {
                ann.sensor == *sensor
                    && scene.class_of(ann) == ego.track_class
                    && ann
                        .attributes
                        .get(&ego.track_id_attribute)
                        .and_then(|v| v.as_number())
                        == Some(ego.ego_value)
            });
            if found {
                continue;
            }
            issues.push(Issue {
                issue_type: IssueType::MissingEgoTrack,
                frame_index: Some(frame_index),
                sensor: Some(sensor.clone()),
                object_uid: None,
                annotation_uid: None,
                message: format!(
                    "no {} annotation with {} = {} in sensor \"{sensor}\"",
                    ego.track_class, ego.track_id_attribute, ego.ego_value
                ),
                details: BTreeMap::from([
                    ("expected_class".to_string(), ego.track_class.clone()),
                    (
                        "expected_attribute".to_string(),
                        format!("{} = {}", ego.track_id_attribute, ego.ego_value),
                    ),
                ]),
            });
        }
    }
    issues
}

/// The rail polylines of one track in one camera frame, split by side.
#[derive(Default)]
struct RailGroup<'a> {
    left: Vec<&'a Annotation>,
    right: Vec<&'a Annotation>,
}

/// Track rail polylines grouped by (frame, sensor, object).
///
/// Only camera 2D polylines of the track class participate; a rail-side
/// value outside the configured left/right vocabulary is ignored here (the
/// unexpected-attribute check owns that complaint).
fn rail_groups<'a>(
    scene: &'a Scene,
    config: &RuleConfig,
) -> BTreeMap<(u64, &'a str, &'a str), RailGroup<'a>> {
    let rail = &config.rail;
    let mut groups: BTreeMap<(u64, &str, &str), RailGroup> = BTreeMap::new();
    for (frame_index, ann) in scene.annotations() {
        if !matches!(ann.geometry, Geometry::Poly2D { .. })
            || scene.class_of(ann) != rail.track_class
            || scene.modality_of(ann) != Modality::Camera
        {
            continue;
        }
        let Some(side) = ann.attributes.get(&rail.rail_side_attribute) else {
            continue;
        };
        let side = side.canonical();
        let group = groups
            .entry((frame_index, ann.sensor.as_str(), ann.object_uid.as_str()))
            .or_default();
        if side == rail.left_value {
            group.left.push(ann);
        } else if side == rail.right_value {
            group.right.push(ann);
        }
    }
    groups
}

fn uid_list(annotations: &[&Annotation]) -> String {
    annotations
        .iter()
        .map(|a| a.uid.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// One issue per (frame, sensor, track, side) drawn with more than one rail.
pub fn check_rail_side_count(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    for ((frame_index, sensor, object_uid), group) in rail_groups(scene, config) {
        for (side_value, rails) in [
            (&config.rail.left_value, &group.left),
            (&config.rail.right_value, &group.right),
        ] {
            if rails.len() <= 1 {
                continue;
            }
            issues.push(Issue {
                issue_type: IssueType::RailSideCount,
                frame_index: Some(frame_index),
                sensor: Some(sensor.to_string()),
                object_uid: Some(object_uid.to_string()),
                annotation_uid: None,
                message: format!(
                    "track has {} \"{side_value}\" rails in one frame and sensor, expected at most one",
                    rails.len()
                ),
                details: BTreeMap::from([
                    ("side".to_string(), side_value.clone()),
                    ("count".to_string(), rails.len().to_string()),
                    ("annotations".to_string(), uid_list(rails)),
                ]),
            });
        }
    }
    issues
}

/// One issue per rail pair whose left rail is not left of the right rail.
///
/// Compared at the bottom of the pair's common image-row range, where the
/// rails are nearest the camera — rails may legitimately cross higher up the
/// image on curves. Pairs without vertical overlap, and groups that are not
/// exactly one left + one right rail, are skipped.
pub fn check_rail_side_order(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    for ((frame_index, sensor, object_uid), group) in rail_groups(scene, config) {
        let ([left], [right]) = (group.left.as_slice(), group.right.as_slice()) else {
            continue;
        };
        let (Geometry::Poly2D { points: left_pts, .. }, Geometry::Poly2D { points: right_pts, .. }) =
            (&left.geometry, &right.geometry)
        else {
            continue;
        };
        let Some((_, row)) = vertical_overlap(left_pts, right_pts) else {
            continue;
        };
        let mean = |xs: Vec<f64>| {
            if xs.is_empty() {
                None
            } else {
                Some(xs.iter().sum::<f64>() / xs.len() as f64)
            }
        };
        let (Some(u_left), Some(u_right)) =
            (mean(x_at_row(left_pts, row)), mean(x_at_row(right_pts, row)))
        else {
            continue;
        };
        if u_left < u_right {
            continue;
        }
        issues.push(Issue {
            issue_type: IssueType::RailSideOrder,
            frame_index: Some(frame_index),
            sensor: Some(sensor.to_string()),
            object_uid: Some(object_uid.to_string()),
            annotation_uid: None,
            message: format!(
                "\"{}\" rail (u = {u_left:.1}) is not left of the \"{}\" rail (u = {u_right:.1}) at row {row:.1}",
                config.rail.left_value, config.rail.right_value
            ),
            details: BTreeMap::from([
                ("left_annotation".to_string(), left.uid.clone()),
                ("right_annotation".to_string(), right.uid.clone()),
                ("row".to_string(), format!("{row}")),
                ("u_left".to_string(), format!("{u_left}")),
                ("u_right".to_string(), format!("{u_right}")),
            ]),
        });
    }
    issues
}

/// One issue per transition annotation that starts and ends on the same
/// track id.
///
/// Annotations missing either endpoint attribute are left to the
/// missing-attribute check.
pub fn check_transition_identical_start_and_end(
    scene: &Scene,
    config: &RuleConfig,
) -> Vec<Issue> {
    let transition = &config.transition;
    let mut issues = Vec::new();
    for (frame_index, ann) in scene.annotations() {
        if scene.class_of(ann) != transition.transition_class {
            continue;
        }
        let (Some(from), Some(to)) = (
            ann.attributes.get(&transition.from_attribute),
            ann.attributes.get(&transition.to_attribute),
        ) else {
            continue;
        };
        let (from, to) = (from.canonical(), to.canonical());
        if from != to {
            continue;
        }
        issues.push(Issue {
            issue_type: IssueType::TransitionIdenticalStartAndEnd,
            frame_index: Some(frame_index),
            sensor: Some(ann.sensor.clone()),
            object_uid: Some(ann.object_uid.clone()),
            annotation_uid: Some(ann.uid.clone()),
            message: format!(
                "transition connects track {from} to itself ({} = {})",
                transition.from_attribute, transition.to_attribute
            ),
            details: BTreeMap::from([
                ("from".to_string(), from),
                ("to".to_string(), to),
                ("from_attribute".to_string(), transition.from_attribute.clone()),
                ("to_attribute".to_string(), transition.to_attribute.clone()),
            ]),
        });
    }
    issues
}
