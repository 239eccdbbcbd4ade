//! One decision step and the closed loop around it.

mod episode;
mod grid;
mod step;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grasp::{GraspCandidate, GraspError, DEFAULT_SAMPLE_BUDGET};
use crate::math::Vec3;
use crate::perception::{PerceptionError, SegmentMask, SegmentNoise};
use crate::selector::{RemotePolicy, SelectorError};

pub use episode::{run_episode, EpisodeResult, StepRecord};
pub use grid::{cell_center, cell_of, GridCell};
pub use step::{plan_step, select_grasp, target_point_3d, StepContext, StepFailure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("degenerate box {0:?}")]
    DegenerateBox([u32; 4]),
    #[error("point {point:?} outside box {bbox:?}")]
    OutsideBox { point: [f64; 2], bbox: [u32; 4] },
    #[error("mask has no pixel with depth")]
    EmptyMask,
    #[error("no grasp candidates")]
    NoCandidates,
    #[error("candidate {0} has no score")]
    Unscored(usize),
    #[error("segmenter found nothing for {0:?}")]
    NoMask(String),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Grasp(#[from] GraspError),
}

/// How the executed target was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The selector named a part and the part segmenter found it.
    PartSegmenter,
    /// Whole-object segmentation, either as asked or after an empty part query.
    ObjectSegmenterFallback,
    /// The remote selector was exhausted and the scripted oracle stood in.
    ScriptedFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorKind {
    Scripted,
    Remote {
        endpoint: String,
        #[serde(default = "default_timeout_s")]
        timeout_s: f64,
        #[serde(default = "default_retries")]
        max_retries: u32,
    },
    /// Baseline that removes random occluders.
    RandomOccluder,
}

fn default_timeout_s() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    2
}

impl SelectorKind {
    pub fn remote_policy(&self) -> Option<(String, RemotePolicy)> {
        match self {
            SelectorKind::Remote { endpoint, timeout_s, max_retries } => Some((
                endpoint.clone(),
                RemotePolicy { timeout: Duration::from_secs_f64(*timeout_s), max_retries: *max_retries },
            )),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablations {
    /// Aim at the mask's bbox center instead of the preferred cell.
    pub no_grid: bool,
    /// Crop with the selector's box alone.
    pub crop_only: bool,
    /// Skip the selector: segment the goal text directly.
    pub no_selector: bool,
}

impl Ablations {
    pub fn parse(name: &str) -> Option<Ablations> {
        let mut a = Ablations::default();
        match name {
            "no_grid" => a.no_grid = true,
            "crop_only" => a.crop_only = true,
            "no_selector" => a.no_selector = true,
            _ => return None,
        }
        Some(a)
    }

    pub fn merge(self, o: Ablations) -> Ablations {
        Ablations {
            no_grid: self.no_grid || o.no_grid,
            crop_only: self.crop_only || o.crop_only,
            no_selector: self.no_selector || o.no_selector,
        }
    }

    /// "full" or the active flags joined with '+'.
    pub fn label(&self) -> String {
        let on: Vec<&str> = [(self.no_grid, "no_grid"), (self.crop_only, "crop_only"), (self.no_selector, "no_selector")]
            .into_iter()
            .filter_map(|(b, n)| b.then_some(n))
            .collect();
        if on.is_empty() {
            "full".into()
        } else {
            on.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// Carried into results to tell policies apart.
    pub id: String,
    pub max_steps: u32,
    pub top_k: usize,
    pub selector: SelectorKind,
    pub ablation: Ablations,
    pub sample_budget: usize,
    pub noise: SegmentNoise,
    /// Per-grasp probability of a seeded random slip.
    pub failure_prob: f64,
    /// Minimum force-closure score for a grasp to hold.
    pub quality_threshold: f64,
    /// Goal visible fraction at which the oracle grasps it directly.
    pub v_min: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            id: "full".into(),
            max_steps: 15,
            top_k: 10,
            selector: SelectorKind::Scripted,
            ablation: Ablations::default(),
            sample_budget: DEFAULT_SAMPLE_BUDGET,
            noise: SegmentNoise::default(),
            failure_prob: 0.0,
            quality_threshold: 0.4,
            v_min: 0.15,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_steps < 1 {
            return Err("max_steps must be at least 1".into());
        }
        if self.top_k < 1 {
            return Err("top_k must be at least 1".into());
        }
        if self.sample_budget < 1 {
            return Err("sample_budget must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.failure_prob) {
            return Err("failure_prob must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedAction {
    pub target_label: String,
    pub mask: SegmentMask,
    pub target_point: Vec3,
    pub candidate: GraspCandidate,
    pub provenance: Provenance,
}
