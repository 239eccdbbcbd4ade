//! Two-finger grasp geometry: normal estimation, antipodal candidate
//! sampling, friction-cone scoring and gripper collision checks.

mod collision;
mod normals;
mod quality;
mod sampler;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use collision::{collision_free, GripperBox, CLEARANCE};
pub use normals::{estimate_normals, DEFAULT_NEIGHBORS};
pub use quality::{antipodal, force_closure_score, misalignment, MU_STEPS};
pub use sampler::{approach_axis, candidate_from_contacts, sample_candidates, DEFAULT_SAMPLE_BUDGET, OPPOSING_CONE_DEG};

use crate::math::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraspError {
    #[error("need at least {need} points for k = {k}, got {got}")]
    TooFewPoints { need: usize, got: usize, k: usize },
    #[error("friction coefficient must be positive, got {0}")]
    NonPositiveFriction(f64),
    #[error("contact points coincide")]
    ZeroLengthContact,
    #[error("contacts are not antipodal at mu = 1.0")]
    NotAntipodal,
    #[error("cloud needs at least two points with normals")]
    MissingNormals,
}

/// 3D points with optional per-point normals (unset where the neighborhood
/// was degenerate), colors and source pixels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Option<Vec3>>>,
    pub colors: Vec<[u8; 3]>,
    pub source_pixels: Vec<[u32; 2]>,
}

impl PointCloud {
    /// Bare points, with black color and pixel (0, 0) placeholders.
    pub fn from_points(points: Vec<Vec3>) -> Self {
        let n = points.len();
        PointCloud {
            points,
            normals: None,
            colors: vec![[0; 3]; n],
            source_pixels: vec![[0; 2]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn normal(&self, i: usize) -> Option<Vec3> {
        self.normals.as_ref().and_then(|n| n[i])
    }

    pub fn select(&self, idx: &[usize]) -> PointCloud {
        PointCloud {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            normals: self.normals.as_ref().map(|n| idx.iter().map(|&i| n[i]).collect()),
            colors: idx.iter().map(|&i| self.colors[i]).collect(),
            source_pixels: idx.iter().map(|&i| self.source_pixels[i]).collect(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.points.len();
        self.colors.len() == n
            && self.source_pixels.len() == n
            && self.normals.as_ref().is_none_or(|v| {
                v.len() == n && v.iter().flatten().all(|x| (x.norm() - 1.0).abs() <= 1e-6)
            })
    }
}

/// Force-closure score in tenths: `s = 1.1 - mu_min`, so 1 ..= 10 maps to
/// 0.1 ..= 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraspScore(u8);

impl GraspScore {
    pub const MAX: GraspScore = GraspScore(10);
    pub const MIN: GraspScore = GraspScore(1);

    pub fn from_tenths(tenths: u8) -> Option<Self> {
        (1..=10).contains(&tenths).then_some(GraspScore(tenths))
    }

    /// Score for the smallest friction coefficient (in tenths) that still
    /// holds the grasp.
    pub fn from_mu_tenths(mu_tenths: u8) -> Option<Self> {
        (1..=10).contains(&mu_tenths).then(|| GraspScore(11 - mu_tenths))
    }

    pub fn tenths(self) -> u8 {
        self.0
    }

    pub fn mu_min_tenths(self) -> u8 {
        11 - self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl Serialize for GraspScore {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for GraspScore {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let t = (v * 10.0).round();
        if (v * 10.0 - t).abs() > 1e-6 {
            return Err(serde::de::Error::custom(format!("score {v} is not a multiple of 0.1")));
        }
        GraspScore::from_tenths(t as u8)
            .ok_or_else(|| serde::de::Error::custom(format!("score {v} outside (0, 1]")))
    }
}

/// Parallel-jaw gripper geometry in meters. Defaults follow an 85 mm
/// two-finger adaptive gripper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperSpec {
    pub max_opening: f64,
    /// Finger length along the approach axis.
    pub finger_depth: f64,
    /// Finger extent along the closing axis.
    pub finger_thickness: f64,
    /// Finger extent across the closing and approach axes.
    pub finger_width: f64,
    /// Palm extent along the approach axis, behind the fingers.
    pub palm_depth: f64,
}

impl Default for GripperSpec {
    fn default() -> Self {
        GripperSpec {
            max_opening: 0.085,
            finger_depth: 0.04,
            finger_thickness: 0.008,
            finger_width: 0.02,
            palm_depth: 0.02,
        }
    }
}

impl GripperSpec {
    pub fn is_valid(&self) -> bool {
        [self.max_opening, self.finger_depth, self.finger_thickness, self.finger_width, self.palm_depth]
            .iter()
            .all(|v| *v > 0.0)
            && self.max_opening > self.finger_thickness
    }
}

/// Contact pair with outward surface normals at each contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contacts {
    pub p1: Vec3,
    pub n1: Vec3,
    pub p2: Vec3,
    pub n2: Vec3,
}

impl Contacts {
    pub fn swapped(&self) -> Contacts {
        Contacts { p1: self.p2, n1: self.n2, p2: self.p1, n2: self.n1 }
    }

    /// Positions scaled by `factor` about `about`; normals unchanged.
    pub fn scaled(&self, about: &Vec3, factor: f64) -> Contacts {
        Contacts {
            p1: about + (self.p1 - about) * factor,
            p2: about + (self.p2 - about) * factor,
            ..*self
        }
    }

    pub fn width(&self) -> f64 {
        (self.p2 - self.p1).norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub center: Vec3,
    pub closing_axis: Vec3,
    pub approach_axis: Vec3,
    pub width: f64,
    pub contacts: Contacts,
    pub score: Option<GraspScore>,
}
