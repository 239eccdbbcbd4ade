//! Seeded procedural clutter.
//!
//! The goal is placed first. For occluded and buried goals a row of tall
//! occluders is then stood between the goal and the default camera. Fillers
//! follow: on the table only for light clutter, stacked by vertical drop for
//! heavy clutter. Every filler placement is re-checked against the requested
//! goal visibility, and a whole layout is redrawn if the occluder row misses
//! the target band.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{self, Category, CATEGORIES, PALETTE};
use super::{ObjectInstance, Pose, Scene, SceneError, Workspace, PENETRATION_TOL};
use crate::perception::{visible_fraction, CameraModel};

/// Visible-fraction threshold separating "visible" from "occluded" goals.
pub const VISIBLE_THRESHOLD: f64 = 0.15;

const MAX_LAYOUTS: usize = 200;
const MAX_FILLER_TRIES: usize = 60;
const OCCLUDER_CATEGORIES: [&str; 4] = ["bottle", "can", "mug", "cup"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClutterLevel {
    Light,
    Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalVisibility {
    Visible,
    Occluded,
    Buried,
}

impl GoalVisibility {
    fn admits(self, fraction: f64) -> bool {
        match self {
            GoalVisibility::Visible => fraction > VISIBLE_THRESHOLD,
            GoalVisibility::Occluded => fraction > 0.0 && fraction <= VISIBLE_THRESHOLD,
            GoalVisibility::Buried => fraction == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub n_objects: usize,
    pub clutter_level: ClutterLevel,
    pub goal_category: String,
    pub goal_visibility: GoalVisibility,
}

struct Layout<'a> {
    ws: Workspace,
    half_extent: f64,
    camera: &'a CameraModel,
    objects: Vec<ObjectInstance>,
}

impl Layout<'_> {
    fn scene(&self) -> Scene {
        Scene { workspace: self.ws, seed: 0, objects: self.objects.clone() }
    }

    fn goal_fraction(&self) -> f64 {
        visible_fraction(&self.scene(), self.camera, 0).unwrap_or(0.0)
    }

    /// Rest height at (x, y) for `obj`, or `None` if stacking is disallowed
    /// and the footprint overlaps something.
    fn drop_height(&self, obj: &ObjectInstance, stack: bool) -> Option<f64> {
        let fp = obj.footprint();
        let mut rest = self.ws.table_z();
        for o in &self.objects {
            if o.footprint().overlaps(&fp, PENETRATION_TOL) {
                if !stack {
                    return None;
                }
                rest = rest.max(o.top_z());
            }
        }
        Some(rest)
    }

    fn place(&mut self, mut obj: ObjectInstance, stack: bool) -> bool {
        let Some(rest) = self.drop_height(&obj, stack) else { return false };
        obj.pose.pos[2] = rest + obj.shape.half_height();
        if obj.top_z() > self.ws.max[2] - 0.05 {
            return false;
        }
        let (lo, hi) = obj.aabb();
        let m = self.half_extent;
        if lo.x < -m || lo.y < -m || hi.x > m || hi.y > m {
            return false;
        }
        self.objects.push(obj);
        true
    }
}

fn instance<R: Rng>(rng: &mut R, cat: &Category, id: u32, x: f64, y: f64) -> ObjectInstance {
    let shape = cat.sample_shape(rng);
    let color = PALETTE[rng.gen_range(0..PALETTE.len())].0;
    ObjectInstance {
        id,
        category: cat.name.to_string(),
        color: color.to_string(),
        parts: cat.parts_for(&shape),
        shape,
        pose: Pose { pos: [x, y, 0.0], yaw: rng.gen_range(0.0..std::f64::consts::PI) },
    }
}

fn try_layout(
    rng: &mut ChaCha8Rng,
    cfg: &SceneConfig,
    goal_cat: &Category,
    camera: &CameraModel,
) -> Option<Vec<ObjectInstance>> {
    let ws = Workspace::default();
    let heavy = cfg.clutter_level == ClutterLevel::Heavy;
    let mut layout = Layout { ws, half_extent: 0.16, camera, objects: Vec::new() };
    let hidden = cfg.goal_visibility != GoalVisibility::Visible;

    // goal, with room in front for an occluder row when it must be hidden
    let y_lo = if hidden { -0.02 } else { -0.12 };
    let (gx, gy) = (rng.gen_range(-0.1..0.1), rng.gen_range(y_lo..0.1));
    let goal = instance(rng, goal_cat, 0, gx, gy);
    let goal_r = goal.shape.bounding_radius().min(0.05);
    if !layout.place(goal, false) {
        return None;
    }

    let mut next_id = 1u32;
    if hidden {
        let pool: Vec<&Category> = OCCLUDER_CATEGORIES
            .iter()
            .filter(|n| **n != goal_cat.name)
            .filter_map(|n| catalog::category(n))
            .collect();
        let k = rng.gen_range(1..=3usize).min(cfg.n_objects - 1);
        let row: Vec<ObjectInstance> = (0..k)
            .map(|i| {
                let cat = pool[rng.gen_range(0..pool.len())];
                instance(rng, cat, i as u32 + 1, 0.0, 0.0)
            })
            .collect();
        let width: f64 = row.iter().map(|o| 2.0 * o.shape.bounding_radius_xy()).sum::<f64>() + 0.002 * (k - 1) as f64;
        let shift = match cfg.goal_visibility {
            GoalVisibility::Occluded => rng.gen_range(-1.2..1.2) * goal_r,
            _ => rng.gen_range(-0.3..0.3) * goal_r,
        };
        let max_r = row.iter().map(|o| o.shape.bounding_radius_xy()).fold(0.0, f64::max);
        let y = gy - goal_r - max_r - rng.gen_range(0.003..0.012);
        let mut x = gx + shift - width / 2.0;
        for mut o in row {
            let r = o.shape.bounding_radius_xy();
            o.pose.pos[0] = x + r;
            o.pose.pos[1] = y;
            x += 2.0 * r + 0.002;
            if !layout.place(o, false) {
                return None;
            }
        }
        next_id = k as u32 + 1;
        if !cfg.goal_visibility.admits(layout.goal_fraction()) {
            return None;
        }
    }

    let fillers: Vec<&Category> = CATEGORIES.iter().filter(|c| c.name != goal_cat.name).collect();
    while layout.objects.len() < cfg.n_objects {
        let cat = *fillers.choose(rng).expect("non-empty vocabulary");
        let mut placed = false;
        for _ in 0..MAX_FILLER_TRIES {
            let m = layout.half_extent - 0.02;
            let (x, y) = (rng.gen_range(-m..m), rng.gen_range(-m..m));
            let o = instance(rng, cat, next_id, x, y);
            let before = layout.objects.len();
            if !layout.place(o, heavy) {
                continue;
            }
            if cfg.goal_visibility.admits(layout.goal_fraction()) {
                placed = true;
                break;
            }
            layout.objects.truncate(before);
        }
        if !placed {
            return None;
        }
        next_id += 1;
    }
    Some(layout.objects)
}

/// Generate a cluttered scene containing exactly one goal-category object
/// whose visible fraction from the default camera matches
/// `config.goal_visibility`. Pure in `(config, seed)`.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<Scene, SceneError> {
    if config.n_objects == 0 {
        return Err(SceneError::Generation("n_objects must be at least 1".into()));
    }
    let goal_cat = catalog::category(&config.goal_category)
        .ok_or_else(|| SceneError::Generation(format!("unknown goal category {:?}", config.goal_category)))?;
    if config.goal_visibility != GoalVisibility::Visible && config.n_objects < 2 {
        return Err(SceneError::Generation("a hidden goal needs at least one occluder".into()));
    }
    let ws = Workspace::default();
    let camera = CameraModel::default_for(&ws);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_LAYOUTS {
        let Some(mut objects) = try_layout(&mut rng, config, goal_cat, &camera) else { continue };
        // hide placement order behind a seeded id permutation
        let mut ids: Vec<u32> = (1..=objects.len() as u32).collect();
        ids.shuffle(&mut rng);
        for (o, id) in objects.iter_mut().zip(ids) {
            o.id = id;
        }
        objects.sort_by_key(|o| o.id);
        let scene = Scene { workspace: ws, seed, objects };
        debug_assert!(scene.validate().is_ok(), "{:?}", scene.validate());
        return Ok(scene);
    }
    Err(SceneError::Generation(format!(
        "could not place {} objects with a {:?} goal after {MAX_LAYOUTS} layouts",
        config.n_objects, config.goal_visibility
    )))
}
