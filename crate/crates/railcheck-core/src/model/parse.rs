//! Strict JSON → [`Scene`] parser.
//!
//! The accepted layout is the OpenLABEL subset described in `docs/format.md`:
//! a root `"openlabel"` object holding `streams` (sensor declarations with
//! optional pinhole intrinsics), `coordinate_systems` (poses), `objects`
//! (uid → class) and `frames` (stringified index → per-object geometry
//! lists with attributes grouped by value type). Unknown fields are ignored
//! for forward compatibility; structural defects are reported as
//! [`ParseError`] carrying the path of the offending node.

use std::collections::BTreeMap;

use serde_json::{Map, Value};
use thiserror::Error;

use super::{
    Annotation, AnnotationKind, AttrItem, AttrValue, CameraIntrinsics, Frame, Geometry, Modality,
    ObjectDecl, Pose, Scene, Sensor,
};

/// Why a document was rejected.
#[derive(Debug, Error)]
pub enum ParseError {
    /// Not JSON at all.
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    /// JSON, but no `"openlabel"` object at the top level.
    #[error("missing root: no \"openlabel\" object at the top level")]
    MissingRoot,
    /// A specific node violates the format; `path` locates it.
    #[error("{path}: {reason}")]
    Node { path: String, reason: String },
}

impl ParseError {
    fn at(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ParseError::Node {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Parses one annotation document into a [`Scene`].
///
/// Guarantees on success: every annotation references a declared object and
/// a declared sensor, frame indices are strictly increasing, quaternions are
/// unit within 1e-6, sizes are positive, and polylines have ≥ 2 points.
/// Annotation order within a frame is preserved from the document.
pub fn parse_scene(document: &str) -> Result<Scene, ParseError> {
    let value: Value = serde_json::from_str(document)?;
    let root = value
        .get("openlabel")
        .and_then(Value::as_object)
        .ok_or(ParseError::MissingRoot)?;

    let schema_version = root
        .get("metadata")
        .and_then(|m| m.get("schema_version"))
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();

    // Poses come from coordinate_systems; a pose attaches to the stream of
    // the same name. Coordinate systems without a matching stream are kept
    // as sensors of modality Other so that geometry expressed in them (e.g.
    // a vehicle frame) still parses.
    let mut poses: BTreeMap<String, Option<Pose>> = BTreeMap::new();
    if let Some(systems) = root.get("coordinate_systems") {
        let systems = require_object(systems, "openlabel.coordinate_systems")?;
        for (name, decl) in systems {
            let path = format!("openlabel.coordinate_systems.{name}");
            let decl = require_object(decl, &path)?;
            let pose = match decl.get("pose_wrt_parent") {
                Some(p) => Some(parse_pose(p, &format!("{path}.pose_wrt_parent"))?),
                None => None,
            };
            poses.insert(name.clone(), pose);
        }
    }

    let mut sensors: BTreeMap<String, Sensor> = BTreeMap::new();
    if let Some(streams) = root.get("streams") {
        let streams = require_object(streams, "openlabel.streams")?;
        for (name, decl) in streams {
            let path = format!("openlabel.streams.{name}");
            let decl = require_object(decl, &path)?;
            let modality = match decl.get("type").and_then(Value::as_str) {
                Some(t) if t.eq_ignore_ascii_case("camera") => Modality::Camera,
                Some(t) if t.eq_ignore_ascii_case("lidar") => Modality::Lidar,
                Some(t) if t.eq_ignore_ascii_case("radar") => Modality::Radar,
                _ => Modality::Other,
            };
            let intrinsics = match decl
                .get("stream_properties")
                .and_then(|p| p.get("intrinsics_pinhole"))
            {
                Some(ip) => Some(parse_intrinsics(
                    require_object(ip, &format!("{path}.stream_properties.intrinsics_pinhole"))?,
                    &format!("{path}.stream_properties.intrinsics_pinhole"),
                )?),
                None => None,
            };
            sensors.insert(
                name.clone(),
                Sensor {
                    name: name.clone(),
                    modality,
                    intrinsics,
                    pose: poses.get(name).cloned().flatten(),
                },
            );
        }
    }
    for (name, pose) in &poses {
        if !sensors.contains_key(name) {
            sensors.insert(
                name.clone(),
                Sensor {
                    name: name.clone(),
                    modality: Modality::Other,
                    intrinsics: None,
                    pose: pose.clone(),
                },
            );
        }
    }

    let mut objects: BTreeMap<String, ObjectDecl> = BTreeMap::new();
    if let Some(decls) = root.get("objects") {
        let decls = require_object(decls, "openlabel.objects")?;
        for (uid, decl) in decls {
            let path = format!("openlabel.objects.{uid}");
            let decl = require_object(decl, &path)?;
            let class_name = decl
                .get("type")
                .and_then(Value::as_str)
                .ok_or_else(|| ParseError::at(&path, "object declaration lacks a \"type\" string"))?
                .to_string();
            let display_name = decl
                .get("name")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string();
            objects.insert(
                uid.clone(),
                ObjectDecl {
                    uid: uid.clone(),
                    class_name,
                    display_name,
                },
            );
        }
    }

    let mut frames: BTreeMap<u64, Frame> = BTreeMap::new();
    if let Some(frame_map) = root.get("frames") {
        let frame_map = require_object(frame_map, "openlabel.frames")?;
        for (key, fval) in frame_map {
            let path = format!("openlabel.frames.{key}");
            let index: u64 = key.parse().map_err(|_| {
                ParseError::at(&path, "frame key is not a non-negative integer")
            })?;
            let fobj = require_object(fval, &path)?;
            let timestamp = fobj
                .get("frame_properties")
                .and_then(|p| p.get("timestamp"))
                .and_then(|t| match t {
                    Value::Number(n) => n.as_f64(),
                    Value::String(s) => s.trim().parse().ok(),
                    _ => None,
                });
            let annotations = parse_frame_annotations(fobj, &path, &objects, &sensors)?;
            frames.insert(
                index,
                Frame {
                    index,
                    timestamp,
                    annotations,
                },
            );
        }
    }

    Ok(Scene {
        schema_version,
        sensors,
        objects,
        frames,
    })
}

/// Kinds in the order annotations are collected from each object entry.
const KIND_ORDER: [AnnotationKind; 4] = [
    AnnotationKind::Bbox2D,
    AnnotationKind::Cuboid3D,
    AnnotationKind::Poly2D,
    AnnotationKind::Poly3D,
];

fn parse_frame_annotations(
    frame: &Map<String, Value>,
    frame_path: &str,
    objects: &BTreeMap<String, ObjectDecl>,
    sensors: &BTreeMap<String, Sensor>,
) -> Result<Vec<Annotation>, ParseError> {
    let mut annotations = Vec::new();
    let mut seen_uids = std::collections::BTreeSet::new();
    let Some(frame_objects) = frame.get("objects") else {
        return Ok(annotations);
    };
    let frame_objects = require_object(frame_objects, &format!("{frame_path}.objects"))?;
    for (object_uid, entry) in frame_objects {
        let obj_path = format!("{frame_path}.objects.{object_uid}");
        if !objects.contains_key(object_uid) {
            return Err(ParseError::at(
                &obj_path,
                "references an object uid not declared in openlabel.objects",
            ));
        }
        let entry = require_object(entry, &obj_path)?;
        let Some(object_data) = entry.get("object_data") else {
            continue;
        };
        let object_data = require_object(object_data, &format!("{obj_path}.object_data"))?;
        for kind in KIND_ORDER {
            let Some(list) = object_data.get(kind.key()) else {
                continue;
            };
            let list_path = format!("{obj_path}.object_data.{}", kind.key());
            let list = list
                .as_array()
                .ok_or_else(|| ParseError::at(&list_path, "expected an array"))?;
            for (i, item) in list.iter().enumerate() {
                let item_path = format!("{list_path}[{i}]");
                let item = require_object(item, &item_path)?;
                let ann =
                    parse_annotation(item, &item_path, kind, object_uid, i, sensors)?;
                if !seen_uids.insert(ann.uid.clone()) {
                    return Err(ParseError::at(
                        &item_path,
                        format!("duplicate annotation uid \"{}\" within the frame", ann.uid),
                    ));
                }
                annotations.push(ann);
            }
        }
    }
    Ok(annotations)
}

fn parse_annotation(
    item: &Map<String, Value>,
    path: &str,
    kind: AnnotationKind,
    object_uid: &str,
    index_in_list: usize,
    sensors: &BTreeMap<String, Sensor>,
) -> Result<Annotation, ParseError> {
    let uid = item
        .get("uid")
        .or_else(|| item.get("name"))
        .and_then(Value::as_str)
        .map(str::to_string)
        .unwrap_or_else(|| format!("{object_uid}:{}:{index_in_list}", kind.key()));

    let sensor = item
        .get("coordinate_system")
        .or_else(|| item.get("stream"))
        .and_then(Value::as_str)
        .ok_or_else(|| {
            ParseError::at(path, "missing \"coordinate_system\" (or \"stream\") sensor reference")
        })?
        .to_string();
    if !sensors.contains_key(&sensor) {
        return Err(ParseError::at(
            path,
            format!("references undeclared sensor \"{sensor}\""),
        ));
    }

    let val = f64_array(
        item.get("val")
            .ok_or_else(|| ParseError::at(path, "missing \"val\" array"))?,
        &format!("{path}.val"),
    )?;

    let geometry = match kind {
        AnnotationKind::Bbox2D => {
            if val.len() != 4 {
                return Err(ParseError::at(
                    format!("{path}.val"),
                    format!("bbox expects 4 values (cx, cy, w, h), got {}", val.len()),
                ));
            }
            let (w, h) = (val[2], val[3]);
            if w <= 0.0 || h <= 0.0 {
                return Err(ParseError::at(
                    format!("{path}.val"),
                    format!("bbox size must be positive, got {w} × {h}"),
                ));
            }
            Geometry::Bbox2D {
                center: [val[0], val[1]],
                size: [w, h],
            }
        }
        AnnotationKind::Cuboid3D => {
            if val.len() != 10 {
                return Err(ParseError::at(
                    format!("{path}.val"),
                    format!(
                        "cuboid expects 10 values (x, y, z, qx, qy, qz, qw, sx, sy, sz), got {}",
                        val.len()
                    ),
                ));
            }
            let rotation = unit_quaternion(
                [val[6], val[3], val[4], val[5]],
                &format!("{path}.val"),
            )?;
            let size = [val[7], val[8], val[9]];
            if size.iter().any(|s| *s <= 0.0) {
                return Err(ParseError::at(
                    format!("{path}.val"),
                    format!("cuboid sizes must be positive, got {size:?}"),
                ));
            }
            Geometry::Cuboid3D {
                center: [val[0], val[1], val[2]],
                rotation,
                size,
            }
        }
        AnnotationKind::Poly2D => {
            if let Some(mode) = item.get("mode").and_then(Value::as_str) {
                if mode != "MODE_POLY2D_ABSOLUTE" {
                    return Err(ParseError::at(
                        format!("{path}.mode"),
                        format!("unsupported poly2d mode \"{mode}\""),
                    ));
                }
            }
            if val.len() % 2 != 0 || val.len() < 4 {
                return Err(ParseError::at(
                    format!("{path}.val"),
                    format!(
                        "poly2d expects an even number of values for ≥ 2 points, got {}",
                        val.len()
                    ),
                ));
            }
            Geometry::Poly2D {
                points: val.chunks(2).map(|c| [c[0], c[1]]).collect(),
                closed: item.get("closed").and_then(Value::as_bool).unwrap_or(false),
            }
        }
        AnnotationKind::Poly3D => {
            if val.len() % 3 != 0 || val.len() < 6 {
                return Err(ParseError::at(
                    format!("{path}.val"),
                    format!(
                        "poly3d expects a multiple of 3 values for ≥ 2 points, got {}",
                        val.len()
                    ),
                ));
            }
            Geometry::Poly3D {
                points: val.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
                closed: item.get("closed").and_then(Value::as_bool).unwrap_or(false),
            }
        }
    };

    let attributes = parse_attributes(item.get("attributes"), path)?;

    Ok(Annotation {
        uid,
        object_uid: object_uid.to_string(),
        geometry,
        sensor,
        attributes,
    })
}

fn parse_attributes(
    value: Option<&Value>,
    ann_path: &str,
) -> Result<BTreeMap<String, AttrValue>, ParseError> {
    let mut attributes = BTreeMap::new();
    let Some(value) = value else {
        return Ok(attributes);
    };
    let path = format!("{ann_path}.attributes");
    let groups = require_object(value, &path)?;
    for (group, parse_one) in [
        ("text", parse_text_attr as fn(&Value, &str) -> Result<AttrValue, ParseError>),
        ("num", parse_num_attr),
        ("boolean", parse_bool_attr),
        ("vec", parse_vec_attr),
    ] {
        let Some(list) = groups.get(group) else {
            continue;
        };
        let group_path = format!("{path}.{group}");
        let list = list
            .as_array()
            .ok_or_else(|| ParseError::at(&group_path, "expected an array"))?;
        for (i, item) in list.iter().enumerate() {
            let item_path = format!("{group_path}[{i}]");
            let item = require_object(item, &item_path)?;
            let name = item
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| ParseError::at(&item_path, "attribute lacks a \"name\" string"))?
                .to_string();
            let val = item
                .get("val")
                .ok_or_else(|| ParseError::at(&item_path, "attribute lacks a \"val\""))?;
            let parsed = parse_one(val, &format!("{item_path}.val"))?;
            if attributes.insert(name.clone(), parsed).is_some() {
                return Err(ParseError::at(
                    &item_path,
                    format!("duplicate attribute name \"{name}\" on one annotation"),
                ));
            }
        }
    }
    Ok(attributes)
}

fn parse_text_attr(val: &Value, path: &str) -> Result<AttrValue, ParseError> {
    val.as_str()
        .map(|s| AttrValue::Text(s.to_string()))
        .ok_or_else(|| ParseError::at(path, "text attribute value must be a string"))
}

fn parse_num_attr(val: &Value, path: &str) -> Result<AttrValue, ParseError> {
    val.as_f64()
        .map(AttrValue::Num)
        .ok_or_else(|| ParseError::at(path, "num attribute value must be a number"))
}

fn parse_bool_attr(val: &Value, path: &str) -> Result<AttrValue, ParseError> {
    val.as_bool()
        .map(AttrValue::Bool)
        .ok_or_else(|| ParseError::at(path, "boolean attribute value must be true or false"))
}

fn parse_vec_attr(val: &Value, path: &str) -> Result<AttrValue, ParseError> {
    let arr = val
        .as_array()
        .ok_or_else(|| ParseError::at(path, "vec attribute value must be an array"))?;
    let mut items = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        match item {
            Value::Number(n) => items.push(AttrItem::Num(n.as_f64().ok_or_else(|| {
                ParseError::at(format!("{path}[{i}]"), "number out of f64 range")
            })?)),
            Value::String(s) => items.push(AttrItem::Text(s.clone())),
            _ => {
                return Err(ParseError::at(
                    format!("{path}[{i}]"),
                    "vec attribute elements must be numbers or strings",
                ))
            }
        }
    }
    Ok(AttrValue::Vec(items))
}

fn parse_pose(value: &Value, path: &str) -> Result<Pose, ParseError> {
    let map = require_object(value, path)?;
    let translation = f64_array_exact(
        map.get("translation")
            .ok_or_else(|| ParseError::at(path, "pose lacks a \"translation\" array"))?,
        3,
        &format!("{path}.translation"),
    )?;
    let q = f64_array_exact(
        map.get("quaternion")
            .ok_or_else(|| ParseError::at(path, "pose lacks a \"quaternion\" array"))?,
        4,
        &format!("{path}.quaternion"),
    )?;
    // Wire order is (qx, qy, qz, qw); stored as (qw, qx, qy, qz).
    let rotation = unit_quaternion([q[3], q[0], q[1], q[2]], &format!("{path}.quaternion"))?;
    Ok(Pose {
        rotation,
        translation: [translation[0], translation[1], translation[2]],
    })
}

fn parse_intrinsics(
    map: &Map<String, Value>,
    path: &str,
) -> Result<CameraIntrinsics, ParseError> {
    let width = dimension_px(map, "width_px", path)?;
    let height = dimension_px(map, "height_px", path)?;
    let matrix_value = map
        .get("camera_matrix_3x4")
        .or_else(|| map.get("camera_matrix"))
        .ok_or_else(|| ParseError::at(path, "intrinsics lack a camera matrix"))?;
    let m = f64_array(matrix_value, &format!("{path}.camera_matrix"))?;
    let (fx, cx, fy, cy) = match m.len() {
        // Row-major 3×4 projection matrix.
        12 => (m[0], m[2], m[5], m[6]),
        // Row-major 3×3 intrinsic matrix.
        9 => (m[0], m[2], m[4], m[5]),
        n => {
            return Err(ParseError::at(
                format!("{path}.camera_matrix"),
                format!("camera matrix must have 9 or 12 entries, got {n}"),
            ))
        }
    };
    if fx <= 0.0 || fy <= 0.0 {
        return Err(ParseError::at(
            format!("{path}.camera_matrix"),
            format!("focal lengths must be positive, got fx={fx}, fy={fy}"),
        ));
    }
    if !(0.0..=width as f64).contains(&cx) || !(0.0..=height as f64).contains(&cy) {
        return Err(ParseError::at(
            format!("{path}.camera_matrix"),
            format!("principal point ({cx}, {cy}) outside the {width}×{height} image"),
        ));
    }
    let distortion = match map
        .get("distortion_coeffs_1xN")
        .or_else(|| map.get("distortion_coeffs"))
    {
        Some(d) => Some(f64_array(d, &format!("{path}.distortion_coeffs"))?),
        None => None,
    };
    Ok(CameraIntrinsics {
        fx,
        fy,
        cx,
        cy,
        width,
        height,
        distortion,
    })
}

fn dimension_px(map: &Map<String, Value>, key: &str, path: &str) -> Result<u32, ParseError> {
    let px = map
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| ParseError::at(path, format!("missing or non-integer \"{key}\"")))?;
    if px == 0 || px > u32::MAX as u64 {
        return Err(ParseError::at(
            path,
            format!("\"{key}\" must be a positive pixel count, got {px}"),
        ));
    }
    Ok(px as u32)
}

fn unit_quaternion(wxyz: [f64; 4], path: &str) -> Result<[f64; 4], ParseError> {
    let norm = wxyz.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(ParseError::at(
            path,
            format!("quaternion is not unit length (norm {norm})"),
        ));
    }
    Ok(wxyz)
}

fn require_object<'a>(value: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ParseError> {
    value
        .as_object()
        .ok_or_else(|| ParseError::at(path, "expected a JSON object"))
}

fn f64_array(value: &Value, path: &str) -> Result<Vec<f64>, ParseError> {
    let arr = value
        .as_array()
        .ok_or_else(|| ParseError::at(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64()
                .ok_or_else(|| ParseError::at(format!("{path}[{i}]"), "expected a number"))
        })
        .collect()
}

fn f64_array_exact(value: &Value, len: usize, path: &str) -> Result<Vec<f64>, ParseError> {
    let arr = f64_array(value, path)?;
    if arr.len() != len {
        return Err(ParseError::at(
            path,
            format!("expected {len} numbers, got {}", arr.len()),
        ));
    }
    Ok(arr)
}
