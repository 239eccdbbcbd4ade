//! Closed-loop, language-conditioned grasp planning over a deterministic
//! tabletop clutter simulator.
//!
//! The pipeline is: pick a target (the goal itself, or the occluder most
//! likely to reveal it), segment it, crop the point cloud around it, sample
//! and score antipodal two-finger grasps, execute the best one near the
//! preferred grid cell, re-observe, and repeat until the goal is in hand or
//! the motion budget runs out.
//!
//! Modules:
//! - [`scene`]: ground-truth world, clutter generation, settling, grasp execution.
//! - [`perception`]: pinhole camera, ray-traced RGB-D, segmentation oracle, cropping.
//! - [`grasp`]: normals, antipodal sampling, friction-cone scoring, collision checks.
//! - [`selector`]: target selection (scripted oracle or remote service) and its text protocol.
//! - [`planner`]: 3×3 grid mapping, grasp selection, single step and closed loop.
//! - [`bench`]: scene/result files, seeded suites, metrics, policy comparison.

pub mod bench;
pub mod grasp;
pub mod math;
pub mod perception;
pub mod planner;
pub mod scene;
pub mod selector;

pub use grasp::{GraspCandidate, GraspScore, GripperSpec, PointCloud};
pub use math::Vec3;
pub use perception::{CameraModel, Observation, SegmentMask};
pub use planner::{EpisodeConfig, EpisodeResult, PlannedAction, Provenance};
pub use scene::{GoalSpec, GraspOutcome, ObjectInstance, Scene, SceneConfig};
pub use selector::{SelectorRequest, SelectorResponse};
