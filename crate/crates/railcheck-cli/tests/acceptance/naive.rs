//! Deliberately naive reimplementations of all nine rules.
//!
//! Everything here is written the slow, obvious way — nested loops, linear
//! scans, `Vec`-based grouping, hand-rolled quaternion-to-matrix projection,
//! and a horizon estimated by projecting two far-away ground points instead
//! of deriving the vanishing line analytically. The point is to share as
//! little machinery as possible with the real detectors so that agreement
//! between the two is meaningful evidence, not an echo.
//!
//! Findings are reported as location keys (type, frame, sensor, object,
//! annotation, attribute, extra discriminator) and compared as multisets.

use railcheck_core::config::{AttributeSpec, RuleConfig, Scope, ValueType};
use railcheck_core::issue::Issue;
use railcheck_core::model::{
    Annotation, AnnotationKind, AttrItem, AttrValue, Geometry, Modality, Scene, Sensor,
};

/// One location key. Ordering is irrelevant — comparison is by multiset.
pub fn location_key(
    type_name: &str,
    frame: Option<u64>,
    sensor: Option<&str>,
    object: Option<&str>,
    annotation: Option<&str>,
    attribute: Option<&str>,
    extra: Option<&str>,
) -> String {
    format!(
        "{type_name} frame={frame:?} sensor={sensor:?} object={object:?} \
         annotation={annotation:?} attribute={attribute:?} extra={extra:?}"
    )
}

/// The same key, derived from a detector-produced issue.
pub fn issue_key(issue: &Issue) -> String {
    location_key(
        issue.issue_type.name(),
        issue.frame_index,
        issue.sensor.as_deref(),
        issue.object_uid.as_deref(),
        issue.annotation_uid.as_deref(),
        issue.details.get("attribute").map(String::as_str),
        issue
            .details
            .get("axis")
            .or_else(|| issue.details.get("side"))
            .map(String::as_str),
    )
}

/// Runs all nine naive rules and returns the combined key list.
pub fn all_rules(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    keys.extend(missing_attribute(scene, config));
    keys.extend(unexpected_attribute(scene, config));
    keys.extend(inconsistent_scope(scene, config));
    keys.extend(dimension_invalid(scene, config));
    keys.extend(above_horizon(scene, config));
    keys.extend(missing_ego_track(scene, config));
    keys.extend(rail_side_count(scene, config));
    keys.extend(rail_side_order(scene, config));
    keys.extend(transition_self_loop(scene, config));
    keys
}

fn class_of<'a>(scene: &'a Scene, ann: &Annotation) -> &'a str {
    match scene.objects.get(&ann.object_uid) {
        Some(decl) => decl.class_name.as_str(),
        None => "",
    }
}

fn modality_of(scene: &Scene, ann: &Annotation) -> Modality {
    match scene.sensors.get(&ann.sensor) {
        Some(sensor) => sensor.modality,
        None => Modality::Other,
    }
}

fn canonical(value: &AttrValue) -> String {
    match value {
        AttrValue::Text(s) => s.clone(),
        AttrValue::Num(n) => format!("{n}"),
        AttrValue::Bool(b) => format!("{b}"),
        AttrValue::Vec(items) => {
            let mut parts = Vec::new();
            for item in items {
                parts.push(match item {
                    AttrItem::Num(n) => format!("{n}"),
                    AttrItem::Text(s) => s.clone(),
                });
            }
            format!("[{}]", parts.join(", "))
        }
    }
}

fn spec_applies(spec: &AttributeSpec, kind: AnnotationKind, modality: Modality) -> bool {
    let Some(filter) = &spec.applies_to else {
        return true;
    };
    let kind_ok = match &filter.kinds {
        None => true,
        Some(kinds) => kinds.iter().any(|k| *k == kind),
    };
    let modality_ok = match &filter.modalities {
        None => true,
        Some(modalities) => modalities.iter().any(|m| *m == modality),
    };
    kind_ok && modality_ok
}

fn type_matches(value_type: ValueType, value: &AttrValue) -> bool {
    match (value_type, value) {
        (ValueType::Text, AttrValue::Text(_)) => true,
        (ValueType::Num, AttrValue::Num(_)) => true,
        (ValueType::Bool, AttrValue::Bool(_)) => true,
        (ValueType::Vec, AttrValue::Vec(_)) => true,
        _ => false,
    }
}

fn missing_attribute(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        for ann in &frame.annotations {
            let class = class_of(scene, ann);
            let Some(schema) = config.class_schemas.get(class) else {
                continue;
            };
            let modality = modality_of(scene, ann);
            for spec in &schema.required {
                if !spec_applies(spec, ann.kind(), modality) {
                    continue;
                }
                let mut present = false;
                for name in ann.attributes.keys() {
                    if *name == spec.name {
                        present = true;
                    }
                }
                if !present {
                    keys.push(location_key(
                        "MissingAttribute",
                        Some(*frame_index),
                        Some(&ann.sensor),
                        Some(&ann.object_uid),
                        Some(&ann.uid),
                        Some(&spec.name),
                        None,
                    ));
                }
            }
        }
    }
    keys
}

fn unexpected_attribute(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        for ann in &frame.annotations {
            let class = class_of(scene, ann);
            let Some(schema) = config.class_schemas.get(class) else {
                continue;
            };
            let modality = modality_of(scene, ann);
            for (name, value) in &ann.attributes {
                // First matching spec, required before optional.
                let mut spec = None;
                for candidate in schema.required.iter().chain(schema.optional.iter()) {
                    if candidate.name == *name && spec_applies(candidate, ann.kind(), modality) {
                        spec = Some(candidate);
                        break;
                    }
                }
                let bad = match spec {
                    None => true,
                    Some(spec) if !type_matches(spec.value_type, value) => true,
                    Some(spec) => match &spec.allowed_values {
                        None => false,
                        Some(allowed) => {
                            let rendered = canonical(value);
                            !allowed.iter().any(|a| *a == rendered)
                        }
                    },
                };
                if bad {
                    keys.push(location_key(
                        "UnexpectedAttribute",
                        Some(*frame_index),
                        Some(&ann.sensor),
                        Some(&ann.object_uid),
                        Some(&ann.uid),
                        Some(name),
                        None,
                    ));
                }
            }
        }
    }
    keys
}

fn inconsistent_scope(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for rule in &config.scoped_attributes {
        // Enumerate the scope groups first...
        let mut groups: Vec<(String, Option<u64>)> = Vec::new();
        for (frame_index, frame) in &scene.frames {
            for ann in &frame.annotations {
                if rule.class_name != "*" && class_of(scene, ann) != rule.class_name {
                    continue;
                }
                if !ann.attributes.contains_key(&rule.attribute_name) {
                    continue;
                }
                let group_frame = match rule.scope {
                    Scope::ObjectConstant => None,
                    Scope::FrameConstant => Some(*frame_index),
                };
                let group = (ann.object_uid.clone(), group_frame);
                if !groups.contains(&group) {
                    groups.push(group);
                }
            }
        }
        // ...then count distinct values inside each group by rescanning.
        for (object_uid, group_frame) in groups {
            let mut values: Vec<String> = Vec::new();
            for (frame_index, frame) in &scene.frames {
                if let Some(wanted) = group_frame {
                    if *frame_index != wanted {
                        continue;
                    }
                }
                for ann in &frame.annotations {
                    if ann.object_uid != object_uid {
                        continue;
                    }
                    if rule.class_name != "*" && class_of(scene, ann) != rule.class_name {
                        continue;
                    }
                    if let Some(value) = ann.attributes.get(&rule.attribute_name) {
                        let rendered = canonical(value);
                        if !values.contains(&rendered) {
                            values.push(rendered);
                        }
                    }
                }
            }
            if values.len() >= 2 {
                keys.push(location_key(
                    "InconsistentAttributeScope",
                    group_frame,
                    None,
                    Some(&object_uid),
                    None,
                    Some(&rule.attribute_name),
                    None,
                ));
            }
        }
    }
    keys
}

fn dimension_invalid(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        for ann in &frame.annotations {
            let Geometry::Cuboid3D { size, .. } = &ann.geometry else {
                continue;
            };
            if modality_of(scene, ann) != Modality::Lidar {
                continue;
            }
            let class = class_of(scene, ann);
            let Some(limits) = config.dimension_limits.get(class) else {
                continue;
            };
            let per_axis = [
                ("sx", limits.sx, size[0]),
                ("sy", limits.sy, size[1]),
                ("sz", limits.sz, size[2]),
            ];
            for (axis, limit, measured) in per_axis {
                let above = match limit.max {
                    Some(max) => measured > max,
                    None => false,
                };
                let below = match limit.min {
                    Some(min) => measured < min,
                    None => false,
                };
                if above || below {
                    keys.push(location_key(
                        "DimensionInvalid",
                        Some(*frame_index),
                        Some(&ann.sensor),
                        Some(&ann.object_uid),
                        Some(&ann.uid),
                        None,
                        Some(axis),
                    ));
                }
            }
        }
    }
    keys
}

/// Pinhole projection by explicit quaternion-to-matrix arithmetic — no
/// linear-algebra crate involved. The pose rotation maps sensor-frame
/// vectors into the vehicle frame, so the world-to-camera transform applies
/// the transposed matrix.
pub fn project_pinhole(sensor: &Sensor, point: [f64; 3]) -> Option<[f64; 2]> {
    let intr = sensor.intrinsics.as_ref()?;
    let pose = sensor.pose.as_ref()?;
    let [w, x, y, z] = pose.rotation;
    // Rows of the camera→vehicle rotation matrix.
    let r = [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ];
    let d = [
        point[0] - pose.translation[0],
        point[1] - pose.translation[1],
        point[2] - pose.translation[2],
    ];
    // Transpose applies vehicle→camera: column dot products.
    let cam_x = r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2];
    let cam_y = r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2];
    let cam_z = r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2];
    if cam_z <= 1e-6 {
        return None;
    }
    Some([
        intr.fx * cam_x / cam_z + intr.cx,
        intr.fy * cam_y / cam_z + intr.cy,
    ])
}

/// Horizon estimated from first principles: project two ground points far
/// enough away that their image positions are indistinguishable from the
/// vanishing line, draw the line through them, and orient it so a nearby
/// ground point comes out negative (below). Assumes the ground plane z = 0.
fn empirical_horizon(sensor: &Sensor) -> Option<(f64, f64, f64)> {
    const FAR: f64 = 1.0e8;
    let left = project_pinhole(sensor, [FAR * 0.96, FAR * 0.28, 0.0])?;
    let right = project_pinhole(sensor, [FAR * 0.96, -FAR * 0.28, 0.0])?;
    let a = left[1] - right[1];
    let b = right[0] - left[0];
    let norm = (a * a + b * b).sqrt();
    if norm < 1e-9 {
        return None;
    }
    let (a, b) = (a / norm, b / norm);
    let c = -(a * left[0] + b * left[1]);
    // Orient: some visible ground point ahead of the camera must be below.
    for ahead in [20.0, 50.0, 200.0, 2000.0] {
        if let Some([u, v]) = project_pinhole(sensor, [ahead, 0.0, 0.0]) {
            let side = a * u + b * v + c;
            if side > 0.0 {
                return Some((-a, -b, -c));
            }
            if side < 0.0 {
                return Some((a, b, c));
            }
        }
    }
    None
}

fn above_horizon(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        for ann in &frame.annotations {
            let Geometry::Poly2D { points, .. } = &ann.geometry else {
                continue;
            };
            let class = class_of(scene, ann);
            if !config.horizon.checked_classes.iter().any(|c| c == class) {
                continue;
            }
            let Some(sensor) = scene.sensors.get(&ann.sensor) else {
                continue;
            };
            if sensor.modality != Modality::Camera {
                continue;
            }
            let Some((a, b, c)) = empirical_horizon(sensor) else {
                continue;
            };
            let mut worst = f64::NEG_INFINITY;
            for &[u, v] in points {
                let distance = a * u + b * v + c;
                if distance > worst {
                    worst = distance;
                }
            }
            if worst > config.horizon.tolerance_px {
                keys.push(location_key(
                    "AnnotationAboveHorizon",
                    Some(*frame_index),
                    Some(&ann.sensor),
                    Some(&ann.object_uid),
                    Some(&ann.uid),
                    None,
                    None,
                ));
            }
        }
    }
    keys
}

fn attr_as_number(value: &AttrValue) -> Option<f64> {
    match value {
        AttrValue::Num(n) => Some(*n),
        AttrValue::Text(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn missing_ego_track(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let ego = &config.ego;
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        for sensor in &ego.required_sensors {
            let mut found = false;
            for ann in &frame.annotations {
                if ann.sensor != *sensor {
                    continue;
                }
                if class_of(scene, ann) != ego.track_class {
                    continue;
                }
                let Some(value) = ann.attributes.get(&ego.track_id_attribute) else {
                    continue;
                };
                if attr_as_number(value) == Some(ego.ego_value) {
                    found = true;
                    break;
                }
            }
            if !found {
                keys.push(location_key(
                    "MissingEgoTrack",
                    Some(*frame_index),
                    Some(sensor),
                    None,
                    None,
                    None,
                    None,
                ));
            }
        }
    }
    keys
}

/// True for annotations the rail-side rules look at: camera 2D polylines of
/// the track class carrying the rail-side attribute.
fn is_rail_candidate(scene: &Scene, config: &RuleConfig, ann: &Annotation) -> bool {
    matches!(ann.geometry, Geometry::Poly2D { .. })
        && class_of(scene, ann) == config.rail.track_class
        && modality_of(scene, ann) == Modality::Camera
        && ann.attributes.contains_key(&config.rail.rail_side_attribute)
}

fn side_of(config: &RuleConfig, ann: &Annotation) -> Option<&'static str> {
    let value = ann.attributes.get(&config.rail.rail_side_attribute)?;
    let rendered = canonical(value);
    if rendered == config.rail.left_value {
        Some("left")
    } else if rendered == config.rail.right_value {
        Some("right")
    } else {
        None
    }
}

fn rail_side_count(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        let mut groups: Vec<(String, String)> = Vec::new();
        for ann in &frame.annotations {
            if !is_rail_candidate(scene, config, ann) {
                continue;
            }
            let group = (ann.sensor.clone(), ann.object_uid.clone());
            if !groups.contains(&group) {
                groups.push(group);
            }
        }
        for (sensor, object_uid) in groups {
            let mut left = 0usize;
            let mut right = 0usize;
            for ann in &frame.annotations {
                if ann.sensor != sensor
                    || ann.object_uid != object_uid
                    || !is_rail_candidate(scene, config, ann)
                {
                    continue;
                }
                match side_of(config, ann) {
                    Some("left") => left += 1,
                    Some("right") => right += 1,
                    _ => {}
                }
            }
            for (count, side_value) in [
                (left, config.rail.left_value.as_str()),
                (right, config.rail.right_value.as_str()),
            ] {
                if count > 1 {
                    keys.push(location_key(
                        "RailSideCount",
                        Some(*frame_index),
                        Some(&sensor),
                        Some(&object_uid),
                        None,
                        None,
                        Some(side_value),
                    ));
                }
            }
        }
    }
    keys
}

/// Where a polyline crosses the horizontal line `v = row`, by walking every
/// segment. Endpoints on the row count; a horizontal segment on the row
/// contributes both of its endpoints.
fn crossings(points: &[[f64; 2]], row: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if points.len() < 2 {
        return out;
    }
    for i in 0..points.len() - 1 {
        let [u1, v1] = points[i];
        let [u2, v2] = points[i + 1];
        if v1 == v2 {
            if v1 == row {
                out.push(u1);
                out.push(u2);
            }
            continue;
        }
        let spans = (v1 <= row && row <= v2) || (v2 <= row && row <= v1);
        if spans {
            let t = (row - v1) / (v2 - v1);
            out.push(u1 + t * (u2 - u1));
        }
    }
    out
}

fn rail_side_order(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        let mut groups: Vec<(String, String)> = Vec::new();
        for ann in &frame.annotations {
            if !is_rail_candidate(scene, config, ann) {
                continue;
            }
            let group = (ann.sensor.clone(), ann.object_uid.clone());
            if !groups.contains(&group) {
                groups.push(group);
            }
        }
        for (sensor, object_uid) in groups {
            let mut lefts: Vec<&Annotation> = Vec::new();
            let mut rights: Vec<&Annotation> = Vec::new();
            for ann in &frame.annotations {
                if ann.sensor != sensor
                    || ann.object_uid != object_uid
                    || !is_rail_candidate(scene, config, ann)
                {
                    continue;
                }
                match side_of(config, ann) {
                    Some("left") => lefts.push(ann),
                    Some("right") => rights.push(ann),
                    _ => {}
                }
            }
            if lefts.len() != 1 || rights.len() != 1 {
                continue;
            }
            let (Geometry::Poly2D { points: lp, .. }, Geometry::Poly2D { points: rp, .. }) =
                (&lefts[0].geometry, &rights[0].geometry)
            else {
                continue;
            };
            let v_range = |pts: &[[f64; 2]]| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in pts {
                    if p[1] < lo {
                        lo = p[1];
                    }
                    if p[1] > hi {
                        hi = p[1];
                    }
                }
                (lo, hi)
            };
            let (l_lo, l_hi) = v_range(lp);
            let (r_lo, r_hi) = v_range(rp);
            let lo = l_lo.max(r_lo);
            let row = l_hi.min(r_hi);
            if lo > row {
                continue;
            }
            let mean = |xs: Vec<f64>| {
                if xs.is_empty() {
                    None
                } else {
                    Some(xs.iter().sum::<f64>() / xs.len() as f64)
                }
            };
            let (Some(u_left), Some(u_right)) = (mean(crossings(lp, row)), mean(crossings(rp, row)))
            else {
                continue;
            };
            if u_left >= u_right {
                keys.push(location_key(
                    "RailSideOrder",
                    Some(*frame_index),
                    Some(&sensor),
                    Some(&object_uid),
                    None,
                    None,
                    None,
                ));
            }
        }
    }
    keys
}

fn transition_self_loop(scene: &Scene, config: &RuleConfig) -> Vec<String> {
    let transition = &config.transition;
    let mut keys = Vec::new();
    for (frame_index, frame) in &scene.frames {
        for ann in &frame.annotations {
            if class_of(scene, ann) != transition.transition_class {
                continue;
            }
            let from = ann.attributes.get(&transition.from_attribute);
            let to = ann.attributes.get(&transition.to_attribute);
            let (Some(from), Some(to)) = (from, to) else {
                continue;
            };
            if canonical(from) == canonical(to) {
                keys.push(location_key(
                    "TransitionIdenticalStartAndEnd",
                    Some(*frame_index),
                    Some(&ann.sensor),
                    Some(&ann.object_uid),
                    Some(&ann.uid),
                    None,
                    None,
                ));
            }
        }
    }
    keys
}
