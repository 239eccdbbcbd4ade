use serde::{Deserialize, Serialize};

use super::{plan_step, EpisodeConfig, Provenance, StepContext};
use crate::grasp::{GraspScore, GripperSpec};
use crate::math::mix_seed;
use crate::perception::{render, CameraModel};
use crate::scene::{execute_grasp, goal_satisfied, ExecutionParams, GoalSpec, GraspOutcome, Scene};
use crate::selector::HistoryEntry;

/// One motion of an episode. `outcome` is absent when the step produced no
/// grasp; `error` then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub selected_label: Option<String>,
    pub provenance: Option<Provenance>,
    pub score: Option<GraspScore>,
    pub outcome: Option<GraspOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub motions: u32,
    pub trace: Vec<StepRecord>,
    pub seed: u64,
    pub config_id: String,
}

/// Render, plan, execute and re-observe until a goal object is in hand or
/// `max_steps` motions are spent. Every executed grasp and every step that
/// failed to produce one counts as a motion.
pub fn run_episode(scene: &Scene, goal: &GoalSpec, config: &EpisodeConfig, seed: u64) -> EpisodeResult {
    let camera = CameraModel::default_for(&scene.workspace);
    let mut world = scene.clone();
    let mut trace = Vec::new();
    let mut history = Vec::new();
    let mut success = false;
    for step in 0..config.max_steps {
        let step_seed = mix_seed(seed, step as u64);
        let obs = render(&world, &camera);
        let ctx = StepContext { step, seed: step_seed, history: history.clone() };
        let record = match plan_step(&world, &obs, goal, config, &ctx) {
            Ok(action) => {
                let params = ExecutionParams {
                    gripper: GripperSpec::default(),
                    quality_threshold: config.quality_threshold,
                    failure_prob: config.failure_prob,
                    seed: mix_seed(step_seed, 0xe7),
                };
                let (outcome, error) = match execute_grasp(&world, &action.candidate, &params) {
                    Ok((outcome, next)) => {
                        success = goal_satisfied(&outcome, goal, &world);
                        world = next;
                        (Some(outcome), None)
                    }
                    Err(e) => (None, Some(e.to_string())),
                };
                history.push(HistoryEntry {
                    selected: action.target_label.clone(),
                    success: outcome.as_ref().is_some_and(|o| o.success),
                });
                StepRecord {
                    step,
                    selected_label: Some(action.target_label),
                    provenance: Some(action.provenance),
                    score: action.candidate.score,
                    outcome,
                    error,
                }
            }
            Err(f) => {
                if let Some(label) = &f.selected_label {
                    history.push(HistoryEntry { selected: label.clone(), success: false });
                }
                StepRecord {
                    step,
                    selected_label: f.selected_label,
                    provenance: f.provenance,
                    score: None,
                    outcome: None,
                    error: Some(f.error.to_string()),
                }
            }
        };
        trace.push(record);
        if success {
            break;
        }
    }
    EpisodeResult {
        success,
        motions: trace.len() as u32,
        trace,
        seed,
        config_id: config.id.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::visible_fraction;
    use crate::scene::{ObjectInstance, Pose, Shape, Workspace};

    fn obj(id: u32, cat: &str, color: &str, shape: Shape, x: f64, y: f64) -> ObjectInstance {
        let z = shape.half_height();
        ObjectInstance { id, category: cat.into(), color: color.into(), shape, pose: Pose { pos: [x, y, z], yaw: 0.0 }, parts: vec![] }
    }

    fn scene(objects: Vec<ObjectInstance>) -> Scene {
        Scene { workspace: Workspace::default(), seed: 0, objects }
    }

    #[test]
    fn visible_goal_takes_one_motion() {
        let s = scene(vec![
            obj(1, "apple", "red", Shape::Sphere { radius: 0.032 }, 0.0, 0.0),
            obj(2, "can", "blue", Shape::Cylinder { radius: 0.03, height: 0.11 }, 0.15, 0.1),
        ]);
        let goal = GoalSpec::from_instruction("I need a fruit").unwrap();
        let r = run_episode(&s, &goal, &EpisodeConfig::default(), 1);
        assert!(r.success, "{r:#?}");
        assert_eq!(r.motions, 1);
        assert_eq!(r.trace[0].selected_label.as_deref(), Some("red apple"));
    }

    #[test]
    fn goal_behind_one_occluder_takes_two() {
        let s = scene(vec![
            obj(1, "mango", "yellow", Shape::Sphere { radius: 0.03 }, 0.0, 0.05),
            obj(2, "bottle", "green", Shape::Cylinder { radius: 0.034, height: 0.2 }, 0.0, -0.02),
        ]);
        let cam = CameraModel::default_for(&s.workspace);
        assert_eq!(visible_fraction(&s, &cam, 1).unwrap(), 0.0);
        let goal = GoalSpec::from_instruction("I want a mango").unwrap();
        let r = run_episode(&s, &goal, &EpisodeConfig::default(), 2);
        assert!(r.success, "{r:#?}");
        assert_eq!(r.motions, 2);
        assert_eq!(r.trace[0].selected_label.as_deref(), Some("green bottle"));
    }

    #[test]
    fn ungraspable_goal_spends_the_whole_budget() {
        // a single wide box: no opposing faces in view, nothing to grasp
        let s = scene(vec![obj(1, "block", "red", Shape::Box { size: [0.06, 0.06, 0.06] }, 0.0, 0.0)]);
        let goal = GoalSpec::from_instruction("a block").unwrap();
        let cfg = EpisodeConfig { max_steps: 4, ..Default::default() };
        let r = run_episode(&s, &goal, &cfg, 3);
        assert!(!r.success);
        assert_eq!(r.motions, 4);
    }

    #[test]
    fn scripted_episodes_are_deterministic() {
        let s = scene(vec![
            obj(1, "pear", "green", Shape::Sphere { radius: 0.03 }, 0.05, 0.05),
            obj(2, "cup", "white", Shape::Cylinder { radius: 0.035, height: 0.08 }, -0.05, 0.0),
        ]);
        let goal = GoalSpec::from_instruction("I need a fruit").unwrap();
        let cfg = EpisodeConfig::default();
        assert_eq!(run_episode(&s, &goal, &cfg, 9), run_episode(&s, &goal, &cfg, 9));
    }
}
