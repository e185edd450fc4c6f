//! Spatial detectors: cuboid dimension limits and the flat-earth horizon
//! plausibility check.

use std::collections::BTreeMap;

use crate::config::{ExtrinsicsConvention, RuleConfig};
use crate::geometry::{horizon_line, ImageLine};
use crate::issue::{Issue, IssueType};
use crate::model::{Geometry, Modality, Pose, Scene, Sensor};

/// One issue per cuboid axis outside its configured size band.
///
/// Only lidar cuboids are measured — camera-frame cuboids inherit projection
/// error and are not trustworthy evidence of physical extent. Bounds are
/// inclusive: a person of exactly the maximum height is valid.
pub fn check_dimension_invalid(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (frame_index, ann) in scene.annotations() {
        let Geometry::Cuboid3D { size, .. } = &ann.geometry else {
            continue;
        };
        if scene.modality_of(ann) != Modality::Lidar {
            continue;
        }
        let class = scene.class_of(ann);
        let Some(limits) = config.dimension_limits.get(class) else {
            continue;
        };
        for ((axis, limit), measured) in limits.axes().into_iter().zip(size) {
            let violation = match (limit.min, limit.max) {
                (_, Some(max)) if *measured > max => Some(("max", max, "exceeds the maximum")),
                (Some(min), _) if *measured < min => Some(("min", min, "falls below the minimum")),
                _ => None,
            };
            let Some((bound, limit_value, verdict)) = violation else {
                continue;
            };
            issues.push(Issue {
                issue_type: IssueType::DimensionInvalid,
                frame_index: Some(frame_index),
                sensor: Some(ann.sensor.clone()),
                object_uid: Some(ann.object_uid.clone()),
                annotation_uid: Some(ann.uid.clone()),
                message: format!(
                    "cuboid {axis} = {measured} {verdict} of {limit_value} for class \"{class}\""
                ),
                details: BTreeMap::from([
                    ("axis".to_string(), axis.to_string()),
                    ("measured".to_string(), format!("{measured}")),
                    ("limit".to_string(), format!("{limit_value}")),
                    ("bound".to_string(), bound.to_string()),
                ]),
            });
        }
    }
    issues
}

/// Horizon line for one camera, or `None` when it cannot be computed (a
/// warning explains why).
fn sensor_horizon(
    sensor: &Sensor,
    config: &RuleConfig,
    warnings: &mut Vec<String>,
) -> Option<ImageLine> {
    let (Some(intrinsics), Some(pose)) = (&sensor.intrinsics, &sensor.pose) else {
        warnings.push(format!(
            "sensor \"{}\": horizon check skipped (missing calibration)",
            sensor.name
        ));
        return None;
    };
    let pose = match config.extrinsics {
        ExtrinsicsConvention::SensorToVehicle => pose.clone(),
        // The stored rotation maps vehicle→sensor; the horizon math wants
        // the inverse, and for a unit quaternion that is the conjugate.
        ExtrinsicsConvention::VehicleToSensor => {
            let [qw, qx, qy, qz] = pose.rotation;
            Pose {
                rotation: [qw, -qx, -qy, -qz],
                translation: pose.translation,
            }
        }
    };
    match horizon_line(intrinsics, &pose, &config.horizon) {
        Ok(line) => Some(line),
        Err(err) => {
            warnings.push(format!(
                "sensor \"{}\": horizon check skipped ({err})",
                sensor.name
            ));
            None
        }
    }
}

/// One issue per 2D polyline of a checked class whose worst point sits more
/// than `tolerance_px` on the sky side of its camera's horizon.
///
/// Cameras that cannot yield a horizon (no calibration, or one pointed along
/// the ground normal) are skipped once each, with a warning.
pub(crate) fn check_annotation_above_horizon_with_warnings(
    scene: &Scene,
    config: &RuleConfig,
) -> (Vec<Issue>, Vec<String>) {
    let mut issues = Vec::new();
    let mut warnings = Vec::new();
    let mut horizons: BTreeMap<&str, Option<ImageLine>> = BTreeMap::new();

    for (frame_index, ann) in scene.annotations() {
        let Geometry::Poly2D { points, .. } = &ann.geometry else {
            continue;
        };
        if !config.horizon.checked_classes.contains(scene.class_of(ann)) {
            continue;
        }
        let Some(sensor) = scene.sensors.get(&ann.sensor) else {
            continue;
        };
        if sensor.modality != Modality::Camera {
            continue;
        }
        let line = horizons
            .entry(ann.sensor.as_str())
            .or_insert_with(|| sensor_horizon(sensor, config, &mut warnings));
        let Some(line) = line else {
            continue;
        };

        let worst = points
            .iter()
            .map(|&[u, v]| (line.eval(u, v), [u, v]))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let Some((distance, [u, v])) = worst else {
            continue;
        };
        if distance <= config.horizon.tolerance_px {
            continue;
        }
        issues.push(Issue {
            issue_type: IssueType::AnnotationAboveHorizon,
            frame_index: Some(frame_index),
            sensor: Some(ann.sensor.clone()),
            object_uid: Some(ann.object_uid.clone()),
            annotation_uid: Some(ann.uid.clone()),
            message: format!(
                "polyline point ({u}, {v}) lies {distance:.1} px above the horizon"
            ),
            details: BTreeMap::from([
                ("point".to_string(), format!("({u}, {v})")),
                ("distance_px".to_string(), format!("{distance}")),
                (
                    "tolerance_px".to_string(),
                    format!("{}", config.horizon.tolerance_px),
                ),
            ]),
        });
    }
    (issues, warnings)
}

/// [`check_annotation_above_horizon_with_warnings`] without the warnings.
pub fn check_annotation_above_horizon(scene: &Scene, config: &RuleConfig) -> Vec<Issue> {
    check_annotation_above_horizon_with_warnings(scene, config).0
}
