//! Gripper volume model. In the grasp frame (x = closing axis, a = approach
//! axis, b = x × a, origin at the contact midpoint) each finger is a box just
//! outside its contact, reaching `FINGERTIP_OVERHANG` past the contact line and
//! `finger_depth` in total back toward the palm; the palm box sits behind
//! both fingers.

use super::{GraspCandidate, GripperSpec, PointCloud};
use crate::math::Vec3;

/// Inflation applied to every gripper box for collision checks, meters.
pub const CLEARANCE: f64 = 0.002;
const FINGERTIP_OVERHANG: f64 = 0.005;

/// Oriented box in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperBox {
    pub center: Vec3,
    /// Closing, approach and lateral axes.
    pub axes: [Vec3; 3],
    pub half: [f64; 3],
}

impl GripperBox {
    fn from_ranges(c: &GraspCandidate, x: (f64, f64), a: (f64, f64), b: (f64, f64)) -> Self {
        let axes = [c.closing_axis, c.approach_axis, c.closing_axis.cross(&c.approach_axis)];
        let mid = |r: (f64, f64)| (r.0 + r.1) / 2.0;
        GripperBox {
            center: c.center + axes[0] * mid(x) + axes[1] * mid(a) + axes[2] * mid(b),
            axes,
            half: [(x.1 - x.0) / 2.0, (a.1 - a.0) / 2.0, (b.1 - b.0) / 2.0],
        }
    }

    /// Containment with every half-extent grown by `inflate`.
    pub fn contains(&self, p: &Vec3, inflate: f64) -> bool {
        let d = p - self.center;
        (0..3).all(|i| d.dot(&self.axes[i]).abs() <= self.half[i] + inflate)
    }

    /// Strict interior test, no inflation.
    pub fn contains_strict(&self, p: &Vec3) -> bool {
        let d = p - self.center;
        (0..3).all(|i| d.dot(&self.axes[i]).abs() < self.half[i])
    }

    pub fn corners(&self, inflate: f64) -> [Vec3; 8] {
        std::array::from_fn(|i| {
            let mut p = self.center;
            for (k, bit) in [1usize, 2, 4].iter().enumerate() {
                let s = if i & bit == 0 { -1.0 } else { 1.0 };
                p += self.axes[k] * s * (self.half[k] + inflate);
            }
            p
        })
    }
}

impl GripperSpec {
    fn approach_range(&self) -> (f64, f64) {
        (FINGERTIP_OVERHANG - self.finger_depth, FINGERTIP_OVERHANG)
    }

    /// The two finger boxes followed by the palm box.
    pub fn boxes(&self, c: &GraspCandidate) -> [GripperBox; 3] {
        let hw = c.width / 2.0;
        let t = self.finger_thickness;
        let a = self.approach_range();
        let b = (-self.finger_width / 2.0, self.finger_width / 2.0);
        [
            GripperBox::from_ranges(c, (-hw - t, -hw), a, b),
            GripperBox::from_ranges(c, (hw, hw + t), a, b),
            GripperBox::from_ranges(c, (-hw - t, hw + t), (a.0 - self.palm_depth, a.0), b),
        ]
    }

    /// Region swept between the fingers while closing.
    pub fn closing_region(&self, c: &GraspCandidate) -> GripperBox {
        let hw = c.width / 2.0;
        GripperBox::from_ranges(
            c,
            (-hw, hw),
            self.approach_range(),
            (-self.finger_width / 2.0, self.finger_width / 2.0),
        )
    }
}

/// True when no point of `scene_cloud` lies inside a finger or palm box
/// inflated by [`CLEARANCE`].
pub fn collision_free(scene_cloud: &PointCloud, candidate: &GraspCandidate, gripper: &GripperSpec) -> bool {
    let boxes = gripper.boxes(candidate);
    let reach = boxes
        .iter()
        .map(|b| (b.center - candidate.center).norm() + Vec3::from(b.half).norm() + CLEARANCE)
        .fold(0.0, f64::max);
    !scene_cloud.points.iter().any(|p| {
        (p - candidate.center).norm() <= reach && boxes.iter().any(|b| b.contains(p, CLEARANCE))
    })
}
