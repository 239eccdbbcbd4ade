use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};

use super::PerceptionError;
use crate::math::Vec3;
use crate::scene::Workspace;

/// Pinhole camera. The camera frame follows the optical convention: x right,
/// y down, z forward. `pose` maps camera-frame points to the world frame.
/// Depth values are camera-frame z, so a pixel ray `origin + t * ray_dir`
/// reaches depth `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub pose: Isometry3<f64>,
}

pub const DEFAULT_RESOLUTION: u32 = 224;
const DEFAULT_FOCAL: f64 = 230.0;
const DEFAULT_DISTANCE: f64 = 0.7;
const DEFAULT_ELEVATION_DEG: f64 = 45.0;

impl CameraModel {
    /// Overhead camera at 45° elevation looking at the table center from the
    /// -y side.
    pub fn default_for(ws: &Workspace) -> Self {
        let target = ws.center();
        let el = DEFAULT_ELEVATION_DEG.to_radians();
        let eye = target + Vec3::new(0.0, -el.cos(), el.sin()) * DEFAULT_DISTANCE;
        Self::looking_at(eye, target, DEFAULT_RESOLUTION, DEFAULT_RESOLUTION, DEFAULT_FOCAL)
    }

    /// Camera at `eye` aimed at `target`, world +z up, principal point at
    /// the image center.
    pub fn looking_at(eye: Vec3, target: Vec3, width: u32, height: u32, focal: f64) -> Self {
        let fwd = (target - eye).normalize();
        let up = if fwd.cross(&Vec3::z()).norm() < 1e-9 { Vec3::y() } else { Vec3::z() };
        let right = fwd.cross(&up).normalize();
        let down = fwd.cross(&right);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[right, down, fwd]));
        CameraModel {
            fx: focal,
            fy: focal,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
            width,
            height,
            pose: Isometry3::from_parts(Translation3::from(eye), UnitQuaternion::from_rotation_matrix(&rot)),
        }
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(PerceptionError::InvalidCamera("focal lengths must be positive".into()));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64 && self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(PerceptionError::InvalidCamera("principal point outside the image".into()));
        }
        Ok(())
    }

    pub fn origin(&self) -> Vec3 {
        self.pose.translation.vector
    }

    /// World-frame direction of the ray through pixel (u, v), scaled so that
    /// its camera-frame z component is 1.
    pub fn ray_dir(&self, u: f64, v: f64) -> Vec3 {
        self.pose.rotation * Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Result<Vec3, PerceptionError> {
        if !(depth > 0.0) {
            return Err(PerceptionError::NonPositiveDepth(depth));
        }
        let p_cam = Vec3::new(depth * (u - self.cx) / self.fx, depth * (v - self.cy) / self.fy, depth);
        Ok(self.pose.transform_point(&p_cam.into()).coords)
    }

    /// World point to (u, v, camera-frame depth).
    pub fn project(&self, p: &Vec3) -> (f64, f64, f64) {
        let c = self.pose.inverse_transform_point(&(*p).into());
        (self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy, c.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn identity_cam(fx: f64) -> CameraModel {
        CameraModel {
            fx,
            fy: fx,
            cx: 112.0,
            cy: 112.0,
            width: 224,
            height: 224,
            pose: Isometry3::identity(),
        }
    }

    #[test]
    fn principal_point_maps_to_optical_axis() {
        let cam = identity_cam(200.0);
        let p = cam.backproject(cam.cx, cam.cy, 1.0).unwrap();
        assert_relative_eq!(p, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn doubling_focal_halves_x() {
        let a = identity_cam(200.0).backproject(180.0, 40.0, 0.8).unwrap();
        let b = identity_cam(400.0).backproject(180.0, 40.0, 0.8).unwrap();
        assert_relative_eq!(b.x, a.x / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn nonpositive_depth_rejected() {
        let cam = identity_cam(200.0);
        assert_eq!(cam.backproject(1.0, 1.0, 0.0), Err(PerceptionError::NonPositiveDepth(0.0)));
        assert!(cam.backproject(1.0, 1.0, -0.5).is_err());
    }

    #[test]
    fn default_camera_is_valid_and_sees_table_center() {
        let ws = Workspace::default();
        let cam = CameraModel::default_for(&ws);
        cam.validate().unwrap();
        let (u, v, z) = cam.project(&ws.center());
        assert_relative_eq!(u, cam.cx, epsilon = 1e-9);
        assert_relative_eq!(v, cam.cy, epsilon = 1e-9);
        assert_relative_eq!(z, 0.7, epsilon = 1e-9);
        // far side of the table is at the top of the image
        let (_, v_far, _) = cam.project(&Vec3::new(0.0, 0.2, 0.0));
        assert!(v_far < cam.cy);
    }

    #[test]
    fn bad_intrinsics_rejected() {
        let mut cam = identity_cam(200.0);
        cam.cx = 224.0;
        assert!(cam.validate().is_err());
        cam.cx = 100.0;
        cam.fy = 0.0;
        assert!(cam.validate().is_err());
    }

    proptest! {
        #[test]
        fn project_inverts_backproject(u in 0.0..224.0f64, v in 0.0..224.0f64, d in 0.05..3.0f64) {
            let cam = CameraModel::default_for(&Workspace::default());
            let p = cam.backproject(u, v, d).unwrap();
            let (u2, v2, d2) = cam.project(&p);
            prop_assert!((u - u2).abs() < 1e-6 && (v - v2).abs() < 1e-6 && (d - d2).abs() < 1e-9);
        }
    }
}
