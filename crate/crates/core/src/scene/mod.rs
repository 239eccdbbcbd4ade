//! Ground-truth world model.

pub mod catalog;
mod execute;
mod generate;
pub mod shape;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::GoalSpec;
pub use execute::{execute_grasp, goal_satisfied, ExecutionParams, FailureReason, GraspOutcome};
pub use generate::{generate_scene, ClutterLevel, GoalVisibility, SceneConfig};
pub use shape::{Footprint, Part, Pose, Shape, ShapeKind};

use crate::math::Vec3;

/// Maximum allowed interpenetration between two objects, meters.
pub const PENETRATION_TOL: f64 = 1e-3;
/// Vertical slack when deciding whether an object rests on a surface.
pub const SUPPORT_EPS: f64 = 1e-6;

pub type ObjectId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("object {0} not found")]
    UnknownObject(ObjectId),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("scene generation failed: {0}")]
    Generation(String),
    #[error("invalid goal: {0}")]
    InvalidGoal(String),
    #[error("invalid grasp candidate: {0}")]
    InvalidCandidate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub category: String,
    pub color: String,
    pub shape: Shape,
    pub pose: Pose,
    #[serde(default)]
    pub parts: Vec<Part>,
}

/// Axis-aligned table bounds; the table surface is the plane `z = min[2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace {
            min: [-0.3, -0.3, 0.0],
            max: [0.3, 0.3, 0.5],
        }
    }
}

impl Workspace {
    pub fn table_z(&self) -> f64 {
        self.min[2]
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
            self.min[2],
        )
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub workspace: Workspace,
    pub seed: u64,
    pub objects: Vec<ObjectInstance>,
}

impl Scene {
    pub fn empty(workspace: Workspace, seed: u64) -> Self {
        Scene { workspace, seed, objects: Vec::new() }
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn ids(&self) -> Vec<ObjectId> {
        self.objects.iter().map(|o| o.id).collect()
    }

    /// Remove one object; everything else is untouched until [`Scene::settle`].
    pub fn remove_object(&self, id: ObjectId) -> Result<Scene, SceneError> {
        if self.object(id).is_none() {
            return Err(SceneError::UnknownObject(id));
        }
        let mut next = self.clone();
        next.objects.retain(|o| o.id != id);
        Ok(next)
    }

    /// Height of the highest surface below `obj` that it would rest on,
    /// considering only `below` objects.
    fn rest_height<'a>(&self, obj: &ObjectInstance, below: impl Iterator<Item = &'a ObjectInstance>) -> f64 {
        let fp = obj.footprint();
        below
            .filter(|o| o.id != obj.id && o.footprint().overlaps(&fp, PENETRATION_TOL))
            .map(ObjectInstance::top_z)
            .fold(self.workspace.table_z(), f64::max)
    }

    /// Drop every unsupported object vertically onto the highest surface
    /// under its footprint. xy and yaw never change.
    pub fn settle(&self) -> Scene {
        let mut order: Vec<usize> = (0..self.objects.len()).collect();
        order.sort_by(|&a, &b| {
            let (oa, ob) = (&self.objects[a], &self.objects[b]);
            oa.bottom_z().total_cmp(&ob.bottom_z()).then(oa.id.cmp(&ob.id))
        });
        let mut settled: Vec<ObjectInstance> = Vec::with_capacity(order.len());
        for idx in order {
            let mut obj = self.objects[idx].clone();
            let rest = self.rest_height(&obj, settled.iter());
            if (obj.bottom_z() - rest).abs() > SUPPORT_EPS {
                obj.pose.pos[2] = rest + obj.shape.half_height();
            }
            settled.push(obj);
        }
        // restore original ordering so ids keep their positions
        let mut out = self.clone();
        for o in out.objects.iter_mut() {
            *o = settled.iter().find(|s| s.id == o.id).cloned().expect("settled object");
        }
        out
    }

    /// True when the object rests on the table or on the top surface of an
    /// object whose footprint overlaps its own.
    pub fn is_supported(&self, obj: &ObjectInstance) -> bool {
        let bottom = obj.bottom_z();
        if (bottom - self.workspace.table_z()).abs() <= SUPPORT_EPS {
            return true;
        }
        let fp = obj.footprint();
        self.objects.iter().any(|o| {
            o.id != obj.id
                && (o.top_z() - bottom).abs() <= SUPPORT_EPS
                && o.footprint().overlaps(&fp, PENETRATION_TOL)
        })
    }

    pub fn interpenetrates(a: &ObjectInstance, b: &ObjectInstance) -> bool {
        let dz = a.top_z().min(b.top_z()) - a.bottom_z().max(b.bottom_z());
        dz > PENETRATION_TOL && a.footprint().overlaps(&b.footprint(), PENETRATION_TOL)
    }

    /// Check every scene invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), SceneError> {
        let ws = &self.workspace;
        if (0..3).any(|i| ws.min[i] >= ws.max[i]) {
            return Err(SceneError::Invalid("workspace min must be below max".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            let at = format!("objects[{i}] (id {})", o.id);
            if !seen.insert(o.id) {
                return Err(SceneError::Invalid(format!("{at}: duplicate id")));
            }
            if o.shape.dims().iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(SceneError::Invalid(format!("{at}: dimensions must be positive")));
            }
            if !ws.contains(&o.position()) {
                return Err(SceneError::Invalid(format!("{at}: position outside workspace")));
            }
            if !o.pose.yaw.is_finite() {
                return Err(SceneError::Invalid(format!("{at}: yaw not finite")));
            }
            for p in &o.parts {
                let inside = p.bounds[3..].iter().all(|s| *s > 0.0)
                    && p.corners_local().iter().all(|c| o.shape.contains_local(c, 1e-9));
                if !inside {
                    return Err(SceneError::Invalid(format!(
                        "{at}: part {:?} not contained in the primitive",
                        p.name
                    )));
                }
            }
        }
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                if Self::interpenetrates(a, b) {
                    return Err(SceneError::Invalid(format!(
                        "objects {} and {} interpenetrate beyond {} m",
                        a.id, b.id, PENETRATION_TOL
                    )));
                }
            }
        }
        for o in &self.objects {
            if !self.is_supported(o) {
                return Err(SceneError::Invalid(format!("object {} is not supported", o.id)));
            }
        }
        Ok(())
    }
}
