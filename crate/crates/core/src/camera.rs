//! Pinhole cameras: intrinsics shared per sensor, poses per view.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Quat, Vec3};

/// Intrinsics of an undistorted pinhole sensor, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub camera_id: u32,
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::ZeroDimension);
        }
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && (0.0..=self.width as f64).contains(&self.cx)
            && (0.0..=self.height as f64).contains(&self.cy);
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "camera {}: focal lengths must be positive and the principal point inside the image",
                self.camera_id
            )));
        }
        Ok(())
    }

    /// Default synthetic intrinsics: principal point at the image center and
    /// a horizontal field of view of roughly 65 degrees.
    pub fn centered(camera_id: u32, width: usize, height: usize) -> Self {
        let f = width as f64 * (500.0 / 640.0);
        Self {
            camera_id,
            width,
            height,
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        }
    }

    /// Same field of view at a different resolution.
    pub fn rescaled(&self, width: usize, height: usize) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self {
            camera_id: self.camera_id,
            width,
            height,
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
        }
    }
}

/// World-to-camera rigid transform: `x_cam = R·x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// Scalar-first unit quaternion.
    pub rotation: Quat,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: linalg::QUAT_IDENTITY,
        translation: [0.0; 3],
    };

    pub fn rotation_matrix(&self) -> Mat3 {
        linalg::quat_to_mat(self.rotation)
    }

    /// Camera center in world coordinates, `-Rᵀt`.
    pub fn center(&self) -> Vec3 {
        let r = self.rotation_matrix();
        linalg::scale(linalg::mat_t_vec(&r, self.translation), -1.0)
    }

    /// Pose looking from `eye` at `target` with `up` as world vertical.
    /// Camera axes follow the x-right, y-down, z-forward convention.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Pose {
        let forward = linalg::normalize(linalg::sub(target, eye));
        let mut right = linalg::cross(forward, up);
        if linalg::norm(right) < 1e-12 {
            // looking straight along `up`; any perpendicular works
            let alt = if forward[0].abs() < 0.9 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 1.0, 0.0]
            };
            right = linalg::cross(forward, alt);
        }
        let right = linalg::normalize(right);
        let down = linalg::cross(forward, right);
        let r: Mat3 = [right, down, forward];
        let rotation = linalg::mat_to_quat(&r);
        let r = linalg::quat_to_mat(rotation);
        let translation = linalg::scale(linalg::mat_vec(&r, eye), -1.0);
        Pose {
            rotation,
            translation,
        }
    }
}

/// Intrinsics plus pose of one view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub intrinsics: Intrinsics,
    pub pose: Pose,
}

impl PinholeCamera {
    pub fn new(intrinsics: Intrinsics, pose: Pose) -> Result<Self> {
        intrinsics.validate()?;
        let n = linalg::quat_norm(pose.rotation);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitQuaternion {
                image_id: intrinsics.camera_id,
                norm: n,
            });
        }
        Ok(Self { intrinsics, pose })
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    pub fn center(&self) -> Vec3 {
        self.pose.center()
    }

    /// Pixel coordinates of a world point, or `None` behind the camera.
    pub fn project_point(&self, p: Vec3) -> Option<[f64; 2]> {
        let r = self.pose.rotation_matrix();
        let t = linalg::add(linalg::mat_vec(&r, p), self.pose.translation);
        if t[2] <= 0.0 {
            return None;
        }
        let k = &self.intrinsics;
        Some([k.fx * t[0] / t[2] + k.cx, k.fy * t[1] / t[2] + k.cy])
    }

    /// World-space ray through pixel coordinates `(u, v)`.
    pub fn ray(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        let k = &self.intrinsics;
        let d_cam = [(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0];
        let r = self.pose.rotation_matrix();
        let d = linalg::normalize(linalg::mat_t_vec(&r, d_cam));
        (self.center(), d)
    }
}
