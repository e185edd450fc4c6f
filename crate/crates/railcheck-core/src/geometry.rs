//! Camera and polyline geometry.
//!
//! The horizon of a calibrated pinhole camera under the flat-earth
//! assumption is the image of the ground plane's vanishing line: directions
//! `d` (vehicle frame) with `d · n = 0` for ground normal `n` project onto
//! a single image line `l ~ K⁻ᵀ · (Rᵀ n)`, where `R` maps camera-frame
//! vectors into the vehicle frame. Translation plays no role — vanishing
//! lines depend only on orientation and intrinsics.
//!
//! Also here: the polyline row-sampling and overlap helpers the rail-order
//! check is built on.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::config::HorizonConfig;
use crate::model::{CameraIntrinsics, Pose};

/// A line in pixel coordinates: `a·u + b·v + c = 0`, normalized so that
/// `√(a² + b²) = 1` and `eval(u, v) > 0` on the sky side. Because of the
/// normalization, `eval` is the signed distance in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ImageLine {
    /// Signed distance of a pixel from the line; positive = sky side.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.a * u + self.b * v + self.c
    }

    /// Row where the line crosses column `u` (`b ≠ 0` for any valid horizon
    /// of an upright-ish camera).
    pub fn row_at(&self, u: f64) -> f64 {
        -(self.a * u + self.c) / self.b
    }
}

/// Why a horizon line could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("horizon undefined: camera optical axis is parallel to the ground normal")]
    DegenerateHorizon,
}

/// Computes the flat-earth horizon of a camera.
///
/// `pose.rotation` must map camera-frame vectors into the vehicle frame
/// (callers holding the opposite convention invert the quaternion first).
/// Fails when the optical axis is parallel to the ground normal — a camera
/// looking straight down has no horizon in view.
pub fn horizon_line(
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    horizon: &HorizonConfig,
) -> Result<ImageLine, GeometryError> {
    let [qw, qx, qy, qz] = pose.rotation;
    let rotation = UnitQuaternion::from_quaternion(Quaternion::new(qw, qx, qy, qz));
    let n = horizon.ground_normal_vehicle;
    // Ground normal expressed in camera coordinates.
    let n_cam = rotation.inverse_transform_vector(&Vector3::new(n[0], n[1], n[2]));
    if n_cam.x.hypot(n_cam.y) < 1e-9 {
        return Err(GeometryError::DegenerateHorizon);
    }
    // l = K⁻ᵀ n_cam, scaled by fx·fy > 0 to keep level-camera arithmetic
    // exact: a = n_x·fy, b = n_y·fx, c = n_z·fx·fy − cx·fy·n_x − cy·fx·n_y.
    let (fx, fy) = (intrinsics.fx, intrinsics.fy);
    let a = n_cam.x * fy;
    let b = n_cam.y * fx;
    let c = n_cam.z * fx * fy - intrinsics.cx * fy * n_cam.x - intrinsics.cy * fx * n_cam.y;
    let norm = a.hypot(b);
    Ok(ImageLine {
        a: a / norm,
        b: b / norm,
        c: c / norm,
    })
}

/// True iff the point lies strictly more than `tolerance_px` above the line
/// (on the sky side).
pub fn point_above_line(line: &ImageLine, point: [f64; 2], tolerance_px: f64) -> bool {
    line.eval(point[0], point[1]) > tolerance_px
}

/// Intersections of a polyline with the horizontal line `v = row`.
///
/// Walks consecutive segments and linearly interpolates; segment endpoints
/// count (touching the row is an intersection). A fully horizontal segment
/// lying on the row contributes both of its endpoints. Returns an empty
/// list when no segment spans the row.
pub fn x_at_row(polyline: &[[f64; 2]], row: f64) -> Vec<f64> {
    let mut result = Vec::new();
    for pair in polyline.windows(2) {
        let [u1, v1] = pair[0];
        let [u2, v2] = pair[1];
        if v1 == v2 {
            if v1 == row {
                result.push(u1);
                result.push(u2);
            }
            continue;
        }
        if row < v1.min(v2) || row > v1.max(v2) {
            continue;
        }
        let t = ((row - v1) / (v2 - v1)).clamp(0.0, 1.0);
        result.push(u1 + t * (u2 - u1));
    }
    result
}

/// Camera-to-vehicle rotation (qw, qx, qy, qz) of a forward-looking camera.
///
/// At zero pitch and roll the camera's +Z (optical axis) points along the
/// vehicle's +x (forward), +X along −y (right), +Y along −z (down) — image
/// rows grow downward. `pitch_down` tilts the optical axis toward the
/// ground; `roll` turns about the optical axis. Radians.
pub fn forward_camera_rotation(pitch_down: f64, roll: f64) -> [f64; 4] {
    let mount = UnitQuaternion::from_quaternion(Quaternion::new(0.5, -0.5, 0.5, -0.5));
    let pitch = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), -pitch_down);
    let roll = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), roll);
    let q = mount * pitch * roll;
    [q.w, q.i, q.j, q.k]
}

/// Projects a vehicle-frame point through the full pose + pinhole chain.
/// `None` when the point is not in front of the camera.
pub fn project_point(
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    point: [f64; 3],
) -> Option<[f64; 2]> {
    let [qw, qx, qy, qz] = pose.rotation;
    let q = UnitQuaternion::from_quaternion(Quaternion::new(qw, qx, qy, qz));
    let rel = Vector3::new(
        point[0] - pose.translation[0],
        point[1] - pose.translation[1],
        point[2] - pose.translation[2],
    );
    let cam = q.inverse_transform_vector(&rel);
    (cam.z > 1e-6).then(|| {
        [
            intrinsics.fx * cam.x / cam.z + intrinsics.cx,
            intrinsics.fy * cam.y / cam.z + intrinsics.cy,
        ]
    })
}

/// Intersection of the two polylines' vertical (v) ranges, or `None` when
/// they are disjoint.
pub fn vertical_overlap(a: &[[f64; 2]], b: &[[f64; 2]]) -> Option<(f64, f64)> {
    let range = |poly: &[[f64; 2]]| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in poly {
            lo = lo.min(p[1]);
            hi = hi.max(p[1]);
        }
        (lo, hi)
    };
    let (a_lo, a_hi) = range(a);
    let (b_lo, b_hi) = range(b);
    let lo = a_lo.max(b_lo);
    let hi = a_hi.min(b_hi);
    (lo <= hi).then_some((lo, hi))
}
