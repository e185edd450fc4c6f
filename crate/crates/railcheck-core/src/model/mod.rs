//! Domain types for the OpenLABEL-subset annotation format.
//!
//! A [`Scene`] is the parsed form of one annotation file: sensor declarations
//! with calibration, object declarations keyed by uid, and per-frame
//! annotation lists. Scenes are immutable after parsing and safe to share
//! read-only across workers.
//!
//! The accepted JSON layout is documented in `docs/format.md` and locked by
//! the fixture tests in this module.

mod parse;

pub use parse::{parse_scene, ParseError};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One parsed annotation document.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Schema version string from the document metadata; empty when absent.
    pub schema_version: String,
    /// Declared sensors, keyed by sensor (stream) name.
    pub sensors: BTreeMap<String, Sensor>,
    /// Declared objects, keyed by object uid.
    pub objects: BTreeMap<String, ObjectDecl>,
    /// Frames keyed by index; iteration order is strictly increasing.
    pub frames: BTreeMap<u64, Frame>,
}

impl Scene {
    /// Class name of the object an annotation belongs to.
    ///
    /// The parser guarantees every annotation references a declared object.
    pub fn class_of(&self, annotation: &Annotation) -> &str {
        self.objects
            .get(&annotation.object_uid)
            .map(|o| o.class_name.as_str())
            .unwrap_or("")
    }

    /// Modality of the sensor an annotation was drawn in.
    pub fn modality_of(&self, annotation: &Annotation) -> Modality {
        self.sensors
            .get(&annotation.sensor)
            .map(|s| s.modality)
            .unwrap_or(Modality::Other)
    }

    /// All annotations in frame order, with their frame index.
    pub fn annotations(&self) -> impl Iterator<Item = (u64, &Annotation)> {
        self.frames
            .iter()
            .flat_map(|(idx, frame)| frame.annotations.iter().map(move |a| (*idx, a)))
    }
}

/// Sensor kind, derived from the stream `type` string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Camera,
    Lidar,
    Radar,
    Other,
}

/// One declared sensor stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensor {
    pub name: String,
    pub modality: Modality,
    /// Pinhole calibration; present only for cameras that declare it.
    pub intrinsics: Option<CameraIntrinsics>,
    /// Sensor-to-vehicle pose; see `docs/config.md` for the convention.
    pub pose: Option<Pose>,
}

/// Pinhole camera calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraIntrinsics {
    /// Focal lengths in pixels, > 0.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels, inside the image.
    pub cx: f64,
    pub cy: f64,
    /// Image size in pixels, > 0.
    pub width: u32,
    pub height: u32,
    /// Raw distortion coefficients; unused by the checks.
    pub distortion: Option<Vec<f64>>,
}

/// Rigid transform of a sensor relative to the vehicle frame.
///
/// The rotation maps sensor-frame vectors into the vehicle frame
/// (sensor-to-vehicle); the config `extrinsics` flag inverts the
/// interpretation for datasets using the opposite convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    /// Unit quaternion (qw, qx, qy, qz), |q| = 1 within 1e-6.
    pub rotation: [f64; 4],
    /// Sensor origin in the vehicle frame, meters.
    pub translation: [f64; 3],
}

/// One declared object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectDecl {
    pub uid: String,
    /// Object class, e.g. "person", "track", "catenary_pole".
    pub class_name: String,
    pub display_name: String,
}

/// One frame of synchronized annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: u64,
    /// Seconds; optional and unused by all detectors.
    pub timestamp: Option<f64>,
    /// Annotations in document order; uids are unique within the frame.
    pub annotations: Vec<Annotation>,
}

/// Geometry kind of an annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnnotationKind {
    #[serde(rename = "bbox")]
    Bbox2D,
    #[serde(rename = "cuboid")]
    Cuboid3D,
    #[serde(rename = "poly2d")]
    Poly2D,
    #[serde(rename = "poly3d")]
    Poly3D,
}

impl AnnotationKind {
    /// The JSON key this kind is stored under in `object_data`.
    pub fn key(self) -> &'static str {
        match self {
            AnnotationKind::Bbox2D => "bbox",
            AnnotationKind::Cuboid3D => "cuboid",
            AnnotationKind::Poly2D => "poly2d",
            AnnotationKind::Poly3D => "poly3d",
        }
    }
}

/// Geometry payload of an annotation.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Axis-aligned 2D box: center (u, v) and size (w, h) in pixels, w, h > 0.
    Bbox2D { center: [f64; 2], size: [f64; 2] },
    /// Oriented 3D box: center (x, y, z) m, unit quaternion (qw, qx, qy, qz),
    /// sizes (sx, sy, sz) m, all > 0.
    Cuboid3D {
        center: [f64; 3],
        rotation: [f64; 4],
        size: [f64; 3],
    },
    /// 2D polyline or polygon with at least 2 points; closed = polygon.
    Poly2D { points: Vec<[f64; 2]>, closed: bool },
    /// 3D polyline or polygon with at least 2 points.
    Poly3D { points: Vec<[f64; 3]>, closed: bool },
}

impl Geometry {
    pub fn kind(&self) -> AnnotationKind {
        match self {
            Geometry::Bbox2D { .. } => AnnotationKind::Bbox2D,
            Geometry::Cuboid3D { .. } => AnnotationKind::Cuboid3D,
            Geometry::Poly2D { .. } => AnnotationKind::Poly2D,
            Geometry::Poly3D { .. } => AnnotationKind::Poly3D,
        }
    }
}

/// One geometric annotation element.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    /// Uid, unique within its frame.
    pub uid: String,
    /// Uid of the declared object this annotation marks.
    pub object_uid: String,
    pub geometry: Geometry,
    /// Name of the sensor the geometry lives in.
    pub sensor: String,
    /// Attribute name → value, in deterministic name order.
    pub attributes: BTreeMap<String, AttrValue>,
}

impl Annotation {
    pub fn kind(&self) -> AnnotationKind {
        self.geometry.kind()
    }
}

/// One attribute value.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Text(String),
    Num(f64),
    Bool(bool),
    Vec(Vec<AttrItem>),
}

/// Element of a vec-typed attribute.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrItem {
    Num(f64),
    Text(String),
}

impl AttrValue {
    /// Canonical string rendering, used for value comparison, allowed-value
    /// matching and issue details. Numbers use the shortest round-trip form.
    pub fn canonical(&self) -> String {
        match self {
            AttrValue::Text(s) => s.clone(),
            AttrValue::Num(n) => format!("{n}"),
            AttrValue::Bool(b) => format!("{b}"),
            AttrValue::Vec(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|item| match item {
                        AttrItem::Num(n) => format!("{n}"),
                        AttrItem::Text(s) => s.clone(),
                    })
                    .collect();
                format!("[{}]", parts.join(", "))
            }
        }
    }

    /// Numeric view: the number itself, or a text value that parses as one.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttrValue::Num(n) => Some(*n),
            AttrValue::Text(s) => s.trim().parse().ok(),
            _ => None,
        }
    }
}

/// Element totals used by the dataset error rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ElementCount {
    /// Number of geometric annotations across all frames.
    pub annotations: u64,
    /// Number of attribute entries across all annotations.
    pub attributes: u64,
    /// annotations + attributes.
    pub total: u64,
}

/// Counts annotation elements: every annotation plus every attribute entry.
pub fn count_elements(scene: &Scene) -> ElementCount {
    let mut annotations = 0u64;
    let mut attributes = 0u64;
    for frame in scene.frames.values() {
        annotations += frame.annotations.len() as u64;
        for ann in &frame.annotations {
            attributes += ann.attributes.len() as u64;
        }
    }
    ElementCount {
        annotations,
        attributes,
        total: annotations + attributes,
    }
}
