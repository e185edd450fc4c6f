//! Scene → JSON document writer for generated fixtures.
//!
//! Emits the same OpenLABEL subset the parser reads, arranged so that
//! `parse_scene(scene_to_json(scene))` reproduces the scene structurally:
//! frame annotations are grouped per object (keys in sorted uid order) and
//! per geometry kind, matching the parser's collection order.

use serde_json::{json, Map, Value};

use crate::model::{AttrItem, AttrValue, Geometry, Modality, Scene, Sensor};

fn modality_str(modality: Modality) -> &'static str {
    match modality {
        Modality::Camera => "camera",
        Modality::Lidar => "lidar",
        Modality::Radar => "radar",
        Modality::Other => "other",
    }
}

fn stream_json(sensor: &Sensor) -> Value {
    let mut stream = Map::new();
    stream.insert("type".into(), json!(modality_str(sensor.modality)));
    if let Some(k) = &sensor.intrinsics {
        let matrix = [
            k.fx, 0.0, k.cx, 0.0, //
            0.0, k.fy, k.cy, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        ];
        let mut pinhole = Map::new();
        pinhole.insert("camera_matrix_3x4".into(), json!(matrix));
        pinhole.insert("width_px".into(), json!(k.width));
        pinhole.insert("height_px".into(), json!(k.height));
        if let Some(d) = &k.distortion {
            pinhole.insert("distortion_coeffs_1xN".into(), json!(d));
        }
        stream.insert(
            "stream_properties".into(),
            json!({ "intrinsics_pinhole": pinhole }),
        );
    }
    Value::Object(stream)
}

fn attributes_json(ann: &crate::model::Annotation) -> Option<Value> {
    if ann.attributes.is_empty() {
        return None;
    }
    let mut text = Vec::new();
    let mut num = Vec::new();
    let mut boolean = Vec::new();
    let mut vec = Vec::new();
    for (name, value) in &ann.attributes {
        match value {
            AttrValue::Text(s) => text.push(json!({ "name": name, "val": s })),
            AttrValue::Num(n) => num.push(json!({ "name": name, "val": n })),
            AttrValue::Bool(b) => boolean.push(json!({ "name": name, "val": b })),
            AttrValue::Vec(items) => {
                let items: Vec<Value> = items
                    .iter()
                    .map(|item| match item {
                        AttrItem::Num(n) => json!(n),
                        AttrItem::Text(s) => json!(s),
                    })
                    .collect();
                vec.push(json!({ "name": name, "val": items }));
            }
        }
    }
    let mut groups = Map::new();
    for (key, list) in [
        ("text", text),
        ("num", num),
        ("boolean", boolean),
        ("vec", vec),
    ] {
        if !list.is_empty() {
            groups.insert(key.into(), Value::Array(list));
        }
    }
    Some(Value::Object(groups))
}

fn annotation_json(ann: &crate::model::Annotation) -> Value {
    let mut entry = Map::new();
    entry.insert("name".into(), json!(ann.uid));
    entry.insert("coordinate_system".into(), json!(ann.sensor));
    match &ann.geometry {
        Geometry::Bbox2D { center, size } => {
            entry.insert(
                "val".into(),
                json!([center[0], center[1], size[0], size[1]]),
            );
        }
        Geometry::Cuboid3D {
            center,
            rotation: [qw, qx, qy, qz],
            size,
        } => {
            entry.insert(
                "val".into(),
                json!([
                    center[0], center[1], center[2], //
                    qx, qy, qz, qw, //
                    size[0], size[1], size[2]
                ]),
            );
        }
        Geometry::Poly2D { points, closed } => {
            let flat: Vec<f64> = points.iter().flatten().copied().collect();
            entry.insert("val".into(), json!(flat));
            entry.insert("mode".into(), json!("MODE_POLY2D_ABSOLUTE"));
            entry.insert("closed".into(), json!(closed));
        }
        Geometry::Poly3D { points, closed } => {
            let flat: Vec<f64> = points.iter().flatten().copied().collect();
            entry.insert("val".into(), json!(flat));
            entry.insert("closed".into(), json!(closed));
        }
    }
    if let Some(attributes) = attributes_json(ann) {
        entry.insert("attributes".into(), attributes);
    }
    Value::Object(entry)
}

/// Serializes a scene to a pretty-printed OpenLABEL document.
pub fn scene_to_json(scene: &Scene) -> String {
    let mut streams = Map::new();
    let mut coordinate_systems = Map::new();
    for (name, sensor) in &scene.sensors {
        streams.insert(name.clone(), stream_json(sensor));
        if let Some(pose) = &sensor.pose {
            let [qw, qx, qy, qz] = pose.rotation;
            coordinate_systems.insert(
                name.clone(),
                json!({
                    "type": "sensor",
                    "parent": "base",
                    "pose_wrt_parent": {
                        "translation": pose.translation,
                        "quaternion": [qx, qy, qz, qw],
                    },
                }),
            );
        }
    }

    let mut objects = Map::new();
    for (uid, decl) in &scene.objects {
        objects.insert(
            uid.clone(),
            json!({ "name": decl.display_name, "type": decl.class_name }),
        );
    }

    let mut frames = Map::new();
    for (index, frame) in &scene.frames {
        let mut frame_json = Map::new();
        if let Some(ts) = frame.timestamp {
            frame_json.insert("frame_properties".into(), json!({ "timestamp": ts }));
        }
        // Annotations grouped by object, then by geometry kind — the order
        // the parser collects them back in. Generated scenes keep their
        // annotation lists in this order, so the round trip is exact.
        let mut frame_objects = Map::new();
        for ann in &frame.annotations {
            let object_entry = frame_objects
                .entry(ann.object_uid.clone())
                .or_insert_with(|| json!({ "object_data": {} }));
            let data = object_entry
                .get_mut("object_data")
                .and_then(Value::as_object_mut)
                .expect("object_data is always an object");
            let list = data
                .entry(ann.kind().key().to_string())
                .or_insert_with(|| Value::Array(Vec::new()))
                .as_array_mut()
                .expect("kind entry is always an array");
            list.push(annotation_json(ann));
        }
        frame_json.insert("objects".into(), Value::Object(frame_objects));
        frames.insert(index.to_string(), Value::Object(frame_json));
    }

    let document = json!({
        "openlabel": {
            "metadata": { "schema_version": scene.schema_version },
            "streams": streams,
            "coordinate_systems": coordinate_systems,
            "objects": objects,
            "frames": frames,
        }
    });
    let mut out = serde_json::to_string_pretty(&document).expect("in-memory JSON never fails");
    out.push('\n');
    out
}
