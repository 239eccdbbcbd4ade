//! Grasp execution against ground truth.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GoalSpec, ObjectId, Scene, SceneError};
use crate::grasp::{collision_free, GraspCandidate, GripperSpec, PointCloud, CLEARANCE};

/// Contacts must lie within this distance of an object surface.
pub const CONTACT_TOL: f64 = 0.002;
/// Spacing of the ground-truth surface samples used for attribution and
/// collision.
const SURFACE_SPACING: f64 = 0.003;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Collision,
    LowQuality,
    EmptyGrip,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub grasped_id: Option<ObjectId>,
    pub success: bool,
    pub failure_reason: Option<FailureReason>,
}

impl GraspOutcome {
    fn failed(reason: FailureReason) -> Self {
        GraspOutcome { grasped_id: None, success: false, failure_reason: Some(reason) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutionParams {
    pub gripper: GripperSpec,
    /// Minimum force-closure score for a grasp to hold.
    pub quality_threshold: f64,
    pub failure_prob: f64,
    pub seed: u64,
}

impl Default for ExecutionParams {
    fn default() -> Self {
        ExecutionParams {
            gripper: GripperSpec::default(),
            quality_threshold: 0.4,
            failure_prob: 0.0,
            seed: 0,
        }
    }
}

fn contact_owner(scene: &Scene, p: &crate::math::Vec3) -> Option<ObjectId> {
    scene
        .objects
        .iter()
        .map(|o| (o.surface_distance(p).abs(), o.id))
        .filter(|(d, _)| *d <= CONTACT_TOL)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Execute a grasp. Success requires, in order: no collision with other
/// objects or the table, score at or above the threshold, width within the
/// gripper opening, and surviving the seeded failure draw. On success the
/// grasped object is removed and the scene settled; on failure the scene is
/// returned unchanged.
pub fn execute_grasp(
    scene: &Scene,
    candidate: &GraspCandidate,
    params: &ExecutionParams,
) -> Result<(GraspOutcome, Scene), SceneError> {
    let c = &candidate.contacts;
    let owner = contact_owner(scene, &c.p1)
        .or_else(|| contact_owner(scene, &c.p2))
        .ok_or_else(|| SceneError::InvalidCandidate("contacts lie on no object".into()))?;
    let gripper = &params.gripper;
    let boxes = gripper.boxes(candidate);
    let closing = gripper.closing_region(candidate);
    let reach = boxes
        .iter()
        .map(|b| (b.center - candidate.center).norm() + crate::math::Vec3::from(b.half).norm())
        .fold(0.0, f64::max)
        + CLEARANCE;

    // surface samples of every object the gripper could touch
    let mut samples: BTreeMap<ObjectId, Vec<crate::math::Vec3>> = BTreeMap::new();
    for o in &scene.objects {
        if (o.position() - candidate.center).norm() <= reach + o.shape.bounding_radius() {
            samples.insert(o.id, o.surface_samples(SURFACE_SPACING));
        }
    }
    let mut between: BTreeMap<ObjectId, usize> = BTreeMap::new();
    for (id, pts) in &samples {
        let n = pts.iter().filter(|p| closing.contains_strict(p)).count();
        if n > 0 {
            between.insert(*id, n);
        }
    }
    let top = between.values().copied().max().unwrap_or(0);
    let leaders: Vec<ObjectId> = between.iter().filter(|(_, n)| **n == top).map(|(id, _)| *id).collect();
    let grasped = match leaders.as_slice() {
        [] => owner,
        [one] => *one,
        _ if leaders.contains(&owner) => owner,
        _ => leaders[0],
    };

    let others: Vec<crate::math::Vec3> = samples
        .iter()
        .filter(|(id, _)| **id != grasped)
        .flat_map(|(_, pts)| pts.iter().copied())
        .collect();
    let others = PointCloud::from_points(others);
    let table_hit = boxes
        .iter()
        .flat_map(|b| b.corners(CLEARANCE))
        .any(|p| p.z < scene.workspace.table_z());
    let closing_blocked = others.points.iter().any(|p| closing.contains_strict(p));
    if table_hit || closing_blocked || !collision_free(&others, candidate, gripper) {
        return Ok((GraspOutcome::failed(FailureReason::Collision), scene.clone()));
    }
    let quality_ok = candidate
        .score
        .is_some_and(|s| s.value() + 1e-12 >= params.quality_threshold);
    if !quality_ok {
        return Ok((GraspOutcome::failed(FailureReason::LowQuality), scene.clone()));
    }
    if candidate.width > gripper.max_opening || between.is_empty() {
        return Ok((GraspOutcome::failed(FailureReason::EmptyGrip), scene.clone()));
    }
    if params.failure_prob > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        if rng.gen::<f64>() < params.failure_prob {
            return Ok((GraspOutcome::failed(FailureReason::Stochastic), scene.clone()));
        }
    }
    let next = scene.remove_object(grasped)?.settle();
    Ok((
        GraspOutcome { grasped_id: Some(grasped), success: true, failure_reason: None },
        next,
    ))
}

/// Whether the outcome put a goal-category object in hand. `scene` is the
/// scene the grasp was executed in (before removal).
pub fn goal_satisfied(outcome: &GraspOutcome, goal: &GoalSpec, scene: &Scene) -> bool {
    outcome.success
        && outcome
            .grasped_id
            .and_then(|id| scene.object(id))
            .is_some_and(|o| goal.matches(&o.category))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::{candidate_from_contacts, Contacts, GraspScore};
    use crate::math::Vec3;
    use crate::scene::{ObjectInstance, Pose, Shape, Workspace};

    fn ball(id: ObjectId, cat: &str, x: f64, y: f64, r: f64) -> ObjectInstance {
        ObjectInstance {
            id,
            category: cat.into(),
            color: "green".into(),
            shape: Shape::Sphere { radius: r },
            pose: Pose { pos: [x, y, r], yaw: 0.0 },
            parts: vec![],
        }
    }

    /// Opposed side contacts on a ball, approached from above.
    fn side_grasp(o: &ObjectInstance) -> GraspCandidate {
        let c = o.position();
        let r = o.shape.half_height();
        candidate_from_contacts(Contacts {
            p1: c - Vec3::x() * r,
            n1: -Vec3::x(),
            p2: c + Vec3::x() * r,
            n2: Vec3::x(),
        })
        .unwrap()
    }

    fn scene(objects: Vec<ObjectInstance>) -> Scene {
        Scene { workspace: Workspace::default(), seed: 0, objects }
    }

    #[test]
    fn clean_grasp_succeeds_and_removes_object() {
        let s = scene(vec![ball(1, "pear", 0.0, 0.0, 0.03), ball(2, "ball", 0.2, 0.0, 0.03)]);
        let cand = side_grasp(&s.objects[0]);
        assert_eq!(cand.score, Some(GraspScore::MAX));
        let (out, next) = execute_grasp(&s, &cand, &ExecutionParams::default()).unwrap();
        assert!(out.success && out.grasped_id == Some(1) && out.failure_reason.is_none());
        assert_eq!(next.ids(), vec![2]);
    }

    #[test]
    fn low_score_fails_with_low_quality() {
        let s = scene(vec![ball(1, "pear", 0.0, 0.0, 0.03)]);
        let mut cand = side_grasp(&s.objects[0]);
        cand.score = GraspScore::from_tenths(3);
        let (out, next) = execute_grasp(&s, &cand, &ExecutionParams::default()).unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::LowQuality));
        assert_eq!(next, s);
    }

    #[test]
    fn neighbor_inside_closing_region_is_a_collision() {
        // a small ball wedged against the pear's upper flank, between the fingers
        let mut s = scene(vec![ball(1, "pear", 0.0, 0.0, 0.035), ball(2, "ball", 0.0, 0.0, 0.004)]);
        s.objects[1].pose.pos = [0.029, 0.0, 0.062];
        let cand = side_grasp(&s.objects[0]);
        let (out, _) = execute_grasp(&s, &cand, &ExecutionParams::default()).unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::Collision));
    }

    #[test]
    fn stochastic_failure_is_seeded() {
        let s = scene(vec![ball(1, "pear", 0.0, 0.0, 0.03)]);
        let cand = side_grasp(&s.objects[0]);
        let p = ExecutionParams { failure_prob: 1.0, seed: 9, ..Default::default() };
        let (out, _) = execute_grasp(&s, &cand, &p).unwrap();
        assert_eq!(out.failure_reason, Some(FailureReason::Stochastic));
        let p = ExecutionParams { failure_prob: 0.5, seed: 9, ..Default::default() };
        let a = execute_grasp(&s, &cand, &p).unwrap().0;
        let b = execute_grasp(&s, &cand, &p).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn contacts_in_free_space_are_invalid() {
        let s = scene(vec![ball(1, "pear", 0.0, 0.0, 0.03)]);
        let mut cand = side_grasp(&s.objects[0]);
        cand.contacts.p1 += Vec3::new(0.0, 0.2, 0.0);
        cand.contacts.p2 += Vec3::new(0.0, 0.2, 0.0);
        assert!(matches!(
            execute_grasp(&s, &cand, &ExecutionParams::default()),
            Err(SceneError::InvalidCandidate(_))
        ));
    }

    #[test]
    fn goal_satisfaction() {
        let s = scene(vec![ball(1, "pear", 0.0, 0.0, 0.03), ball(2, "bottle", 0.2, 0.0, 0.03)]);
        let fruit = GoalSpec::from_instruction("I need a fruit").unwrap();
        let got = |id| GraspOutcome { grasped_id: Some(id), success: true, failure_reason: None };
        assert!(goal_satisfied(&got(1), &fruit, &s));
        assert!(!goal_satisfied(&got(2), &fruit, &s));
        assert!(!goal_satisfied(&GraspOutcome::failed(FailureReason::Collision), &fruit, &s));
    }
}
