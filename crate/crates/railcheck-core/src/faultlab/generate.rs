//! Deterministic generation of scenes that are clean by construction.
//!
//! The generated world is deliberately simple: straight parallel tracks on a
//! flat ground plane, forward-looking cameras with randomized but valid
//! calibration, and a handful of trackside objects. That is enough to
//! exercise every rule — rails project below every camera horizon, left
//! rails land left of right rails, attributes match the default schemas —
//! without any pretense of sensor realism.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{forward_camera_rotation, project_point};
use crate::model::{
    Annotation, AttrValue, CameraIntrinsics, Frame, Geometry, Modality, ObjectDecl, Pose, Scene,
    Sensor,
};

/// Shape of a generated scene.
///
/// Camera calibration is randomized within valid bounds: pitch in
/// [−20°, −2°] (negative = nose down), roll in [−5°, 5°], so every camera
/// keeps the ground in view. The first camera is always named `rgb_center`
/// and, together with the lidar, carries the ego-track evidence the default
/// configuration requires — generate with `include_lidar: false` only when
/// validating under a config whose ego section does not demand a lidar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub seed: u64,
    /// Number of frames; at least 1 is always generated.
    pub frames: u32,
    /// Parallel tracks per frame; at least the ego track is always present.
    pub tracks_per_frame: u32,
    /// Cameras; at least `rgb_center` is always present.
    pub cameras: u32,
    pub persons: u32,
    pub poles: u32,
    pub animals: u32,
    pub include_lidar: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 0,
            frames: 2,
            tracks_per_frame: 2,
            cameras: 2,
            persons: 1,
            poles: 1,
            animals: 1,
            include_lidar: true,
        }
    }
}

/// Half of the standard gauge plus railhead width — lateral offset of each
/// rail from its track centerline, meters.
const RAIL_HALF_GAUGE: f64 = 0.7175;
/// Centerline distance between neighbouring tracks, meters.
const TRACK_SPACING: f64 = 4.0;

const PERSON_POSES: [&str; 3] = ["upright", "sitting", "bent"];
const POLE_TYPES: [&str; 2] = ["structured", "solid"];
const ANIMAL_SPECIES: [&str; 8] = [
    "bird", "boar", "cow", "deer", "dog", "fox", "horse", "sheep",
];

fn camera_name(index: u32) -> String {
    match index {
        0 => "rgb_center".into(),
        1 => "rgb_left".into(),
        2 => "rgb_right".into(),
        i => format!("rgb_cam{i}"),
    }
}

/// Track ids fan out from the ego track: 0, −1, 1, −2, 2, …
fn track_id(index: u32) -> i64 {
    if index == 0 {
        0
    } else if index % 2 == 1 {
        -(((index + 1) / 2) as i64)
    } else {
        (index / 2) as i64
    }
}

struct TrackSpec {
    uid: String,
    tid: i64,
    y: f64,
    /// Forward sampling stations along x, near to far.
    stations: Vec<f64>,
}

struct PlacedObject {
    uid: String,
    x: f64,
    y: f64,
}

fn attrs(pairs: &[(&str, AttrValue)]) -> BTreeMap<String, AttrValue> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn num(v: f64) -> AttrValue {
    AttrValue::Num(v)
}

fn text(v: &str) -> AttrValue {
    AttrValue::Text(v.into())
}

/// Generates a scene that yields zero issues under the default config (with
/// `include_lidar: true`). Deterministic per seed.
pub fn generate_scene(params: &GenParams) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let frames = params.frames.max(1);
    let track_count = params.tracks_per_frame.max(1);
    let camera_count = params.cameras.max(1);

    // Sensors.
    let mut sensors = BTreeMap::new();
    let mut camera_names = Vec::new();
    for i in 0..camera_count {
        let name = camera_name(i);
        let f = rng.random_range(800.0..1100.0);
        let cx = rng.random_range(940.0..980.0);
        let cy = rng.random_range(590.0..610.0);
        let pitch_deg: f64 = rng.random_range(-20.0..-2.0);
        let roll_deg: f64 = rng.random_range(-5.0..5.0);
        let height = rng.random_range(2.5..3.2);
        let tx = rng.random_range(0.0..0.5);
        let ty = match i {
            0 => 0.0,
            i if i % 2 == 1 => 0.45 + 0.15 * (i / 2) as f64,
            i => -(0.45 + 0.15 * (i / 2 - 1) as f64),
        };
        sensors.insert(
            name.clone(),
            Sensor {
                name: name.clone(),
                modality: Modality::Camera,
                intrinsics: Some(CameraIntrinsics {
                    fx: f,
                    fy: f,
                    cx,
                    cy,
                    width: 1920,
                    height: 1200,
                    distortion: None,
                }),
                pose: Some(Pose {
                    rotation: forward_camera_rotation((-pitch_deg).to_radians(), roll_deg.to_radians()),
                    translation: [tx, ty, height],
                }),
            },
        );
        camera_names.push(name);
    }
    if params.include_lidar {
        sensors.insert(
            "lidar".into(),
            Sensor {
                name: "lidar".into(),
                modality: Modality::Lidar,
                intrinsics: None,
                pose: Some(Pose {
                    rotation: [1.0, 0.0, 0.0, 0.0],
                    translation: [0.0, 0.0, 2.0],
                }),
            },
        );
    }

    // Static world catalog.
    let tracks: Vec<TrackSpec> = (0..track_count)
        .map(|i| {
            let tid = track_id(i);
            let n = rng.random_range(5..=9u32);
            let x_near = rng.random_range(5.0..8.0);
            let x_far = rng.random_range(80.0..140.0);
            let stations = (0..n)
                .map(|k| x_near + (x_far - x_near) * k as f64 / (n - 1) as f64)
                .collect();
            TrackSpec {
                uid: format!("track_{i:02}"),
                tid,
                y: tid as f64 * TRACK_SPACING,
                stations,
            }
        })
        .collect();

    let persons: Vec<(PlacedObject, [f64; 3], &str)> = (0..params.persons)
        .map(|i| {
            let place = PlacedObject {
                uid: format!("person_{i:02}"),
                x: rng.random_range(10.0..60.0),
                y: rng.random_range(-3.5..3.5),
            };
            let size = [
                rng.random_range(0.4..0.8),
                rng.random_range(0.4..0.8),
                rng.random_range(1.5..1.95),
            ];
            let pose = PERSON_POSES[rng.random_range(0..PERSON_POSES.len())];
            (place, size, pose)
        })
        .collect();

    let poles: Vec<(PlacedObject, &str)> = (0..params.poles)
        .map(|i| {
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            let place = PlacedObject {
                uid: format!("pole_{i:02}"),
                x: rng.random_range(10.0..100.0),
                y: side * (5.5 + 0.5 * i as f64),
            };
            let type_value = POLE_TYPES[rng.random_range(0..POLE_TYPES.len())];
            (place, type_value)
        })
        .collect();

    let animals: Vec<(PlacedObject, [f64; 3], &str)> = (0..params.animals)
        .map(|i| {
            let place = PlacedObject {
                uid: format!("animal_{i:02}"),
                x: rng.random_range(15.0..80.0),
                y: rng.random_range(-6.0..6.0),
            };
            let size = [
                rng.random_range(0.6..1.4),
                rng.random_range(0.3..0.8),
                rng.random_range(0.4..1.2),
            ];
            let species = ANIMAL_SPECIES[rng.random_range(0..ANIMAL_SPECIES.len())];
            (place, size, species)
        })
        .collect();

    let transition = (track_count >= 2).then(|| {
        let x_start = rng.random_range(10.0..40.0);
        ("transition_00".to_string(), x_start, tracks[0].y, tracks[1].y)
    });

    // Object declarations.
    let mut objects = BTreeMap::new();
    let mut declare = |uid: &str, class: &str| {
        objects.insert(
            uid.to_string(),
            ObjectDecl {
                uid: uid.to_string(),
                class_name: class.to_string(),
                display_name: uid.to_string(),
            },
        );
    };
    for track in &tracks {
        declare(&track.uid, "track");
    }
    for (place, _, _) in &persons {
        declare(&place.uid, "person");
    }
    for (place, _) in &poles {
        declare(&place.uid, "catenary_pole");
    }
    for (place, _, _) in &animals {
        declare(&place.uid, "animal");
    }
    if let Some((uid, _, _, _)) = &transition {
        declare(uid, "transition");
    }

    // Frames. The world is static, so frames differ only in timestamp.
    let project = |sensors: &BTreeMap<String, Sensor>, camera: &str, point: [f64; 3]| {
        let sensor = &sensors[camera];
        project_point(
            sensor.intrinsics.as_ref().expect("cameras are calibrated"),
            sensor.pose.as_ref().expect("cameras are posed"),
            point,
        )
    };

    let mut frames_map = BTreeMap::new();
    for frame_index in 0..u64::from(frames) {
        let mut annotations: Vec<Annotation> = Vec::new();

        for track in &tracks {
            let rail_attrs = |side: &str| {
                attrs(&[
                    ("trackID", num(track.tid as f64)),
                    ("railSide", text(side)),
                ])
            };
            for camera in &camera_names {
                for (side, offset) in [("leftRail", RAIL_HALF_GAUGE), ("rightRail", -RAIL_HALF_GAUGE)]
                {
                    let points: Vec<[f64; 2]> = track
                        .stations
                        .iter()
                        .filter_map(|&x| project(&sensors, camera, [x, track.y + offset, 0.0]))
                        .collect();
                    if points.len() < 2 {
                        continue;
                    }
                    let side_word = side.trim_end_matches("Rail");
                    annotations.push(Annotation {
                        uid: format!("{}/{camera}/{side_word}", track.uid),
                        object_uid: track.uid.clone(),
                        geometry: Geometry::Poly2D { points, closed: false },
                        sensor: camera.clone(),
                        attributes: rail_attrs(side),
                    });
                }
            }
            if params.include_lidar {
                for (side, offset) in [("leftRail", RAIL_HALF_GAUGE), ("rightRail", -RAIL_HALF_GAUGE)]
                {
                    let points: Vec<[f64; 3]> = track
                        .stations
                        .iter()
                        .map(|&x| [x, track.y + offset, 0.0])
                        .collect();
                    let side_word = side.trim_end_matches("Rail");
                    annotations.push(Annotation {
                        uid: format!("{}/lidar/{side_word}", track.uid),
                        object_uid: track.uid.clone(),
                        geometry: Geometry::Poly3D { points, closed: false },
                        sensor: "lidar".into(),
                        attributes: rail_attrs(side),
                    });
                }
            }
        }

        if let Some((uid, x_start, y_from, y_to)) = &transition {
            let camera = &camera_names[0];
            let points: Vec<[f64; 2]> = [0.0, 0.5, 1.0]
                .iter()
                .filter_map(|&t| {
                    let x = x_start + 8.0 * t;
                    let y = y_from + (y_to - y_from) * t;
                    project(&sensors, camera, [x, y, 0.0])
                })
                .collect();
            if points.len() >= 2 {
                annotations.push(Annotation {
                    uid: format!("{uid}/{camera}"),
                    object_uid: uid.clone(),
                    geometry: Geometry::Poly2D { points, closed: false },
                    sensor: camera.clone(),
                    attributes: attrs(&[
                        ("fromTrackID", num(0.0)),
                        ("toTrackID", num(track_id(1) as f64)),
                    ]),
                });
            }
        }

        for (place, size, pose) in &persons {
            for camera in &camera_names {
                let Some(center) = project(&sensors, camera, [place.x, place.y, size[2] / 2.0])
                else {
                    continue;
                };
                let sensor = &sensors[camera];
                let f = sensor.intrinsics.as_ref().unwrap().fx;
                annotations.push(Annotation {
                    uid: format!("{}/{camera}", place.uid),
                    object_uid: place.uid.clone(),
                    geometry: Geometry::Bbox2D {
                        center,
                        size: [f * size[0] / place.x, f * size[2] / place.x],
                    },
                    sensor: camera.clone(),
                    attributes: attrs(&[("pose", text(pose))]),
                });
            }
            if params.include_lidar {
                annotations.push(Annotation {
                    uid: format!("{}/lidar", place.uid),
                    object_uid: place.uid.clone(),
                    geometry: Geometry::Cuboid3D {
                        center: [place.x, place.y, size[2] / 2.0],
                        rotation: [1.0, 0.0, 0.0, 0.0],
                        size: *size,
                    },
                    sensor: "lidar".into(),
                    attributes: BTreeMap::new(),
                });
            }
        }

        for (place, type_value) in &poles {
            for camera in &camera_names {
                let Some(center) = project(&sensors, camera, [place.x, place.y, 4.0]) else {
                    continue;
                };
                let sensor = &sensors[camera];
                let f = sensor.intrinsics.as_ref().unwrap().fx;
                annotations.push(Annotation {
                    uid: format!("{}/{camera}", place.uid),
                    object_uid: place.uid.clone(),
                    geometry: Geometry::Bbox2D {
                        center,
                        size: [f * 0.35 / place.x, f * 8.0 / place.x],
                    },
                    sensor: camera.clone(),
                    attributes: attrs(&[("Type", text(type_value))]),
                });
            }
        }

        for (place, size, species) in &animals {
            for camera in &camera_names {
                let Some(center) = project(&sensors, camera, [place.x, place.y, size[2] / 2.0])
                else {
                    continue;
                };
                let sensor = &sensors[camera];
                let f = sensor.intrinsics.as_ref().unwrap().fx;
                annotations.push(Annotation {
                    uid: format!("{}/{camera}", place.uid),
                    object_uid: place.uid.clone(),
                    geometry: Geometry::Bbox2D {
                        center,
                        size: [f * size[0] / place.x, f * size[2] / place.x],
                    },
                    sensor: camera.clone(),
                    attributes: attrs(&[("Species", text(species))]),
                });
            }
            if params.include_lidar {
                annotations.push(Annotation {
                    uid: format!("{}/lidar", place.uid),
                    object_uid: place.uid.clone(),
                    geometry: Geometry::Cuboid3D {
                        center: [place.x, place.y, size[2] / 2.0],
                        rotation: [1.0, 0.0, 0.0, 0.0],
                        size: *size,
                    },
                    sensor: "lidar".into(),
                    attributes: attrs(&[("Species", text(species))]),
                });
            }
        }

        // Serialized documents group annotations per object and kind; keep
        // the in-memory order identical so round trips compare equal.
        let mut order: Vec<(String, crate::model::AnnotationKind, usize)> = annotations
            .iter()
            .enumerate()
            .map(|(i, a)| (a.object_uid.clone(), a.kind(), i))
            .collect();
        order.sort();
        let annotations = order
            .into_iter()
            .map(|(_, _, i)| annotations[i].clone())
            .collect();

        frames_map.insert(
            frame_index,
            Frame {
                index: frame_index,
                timestamp: Some(1_700_000_000.0 + frame_index as f64 * 0.1),
                annotations,
            },
        );
    }

    Scene {
        schema_version: "1.0.0".into(),
        sensors,
        objects,
        frames: frames_map,
    }
}
