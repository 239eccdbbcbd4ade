//! Ground-truth selection oracles.
//!
//! The scripted oracle grasps the goal once enough of it shows; otherwise it
//! removes the occluder with the largest centrally placed visible area. Two
//! weaker policies share its output format: goal-only matching (no occlusion
//! reasoning) and uniformly random occluder removal.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ObjectProperty, SelectionKind, SelectorError, SelectorResponse};
use crate::grasp::{force_closure_score, Contacts, GripperSpec};
use crate::math::Vec3;
use crate::perception::{part_pixels, solo_pixels, BBox, Observation, PixelOwner};
use crate::planner::cell_of;
use crate::scene::{GoalSpec, ObjectId, ObjectInstance, Scene, Shape, PENETRATION_TOL};

/// Padding added around the selected target and its neighbors.
pub const CROP_PAD_PX: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedParams {
    /// Visible fraction at which the goal is grasped directly.
    pub v_min: f64,
    pub gripper: GripperSpec,
}

impl Default for ScriptedParams {
    fn default() -> Self {
        ScriptedParams { v_min: 0.15, gripper: GripperSpec::default() }
    }
}

/// Visible pixels per object, in row-major order.
fn visible_pixels(obs: &Observation) -> BTreeMap<ObjectId, Vec<usize>> {
    let mut out: BTreeMap<ObjectId, Vec<usize>> = BTreeMap::new();
    for (i, o) in obs.pixel_owner.iter().enumerate() {
        if let PixelOwner::Object(id) = o {
            out.entry(*id).or_default().push(i);
        }
    }
    out
}

fn pixel_box(obs: &Observation, pixels: &[usize]) -> Option<BBox> {
    BBox::of_pixels(pixels.iter().map(|&i| (i as u32 % obs.width, i as u32 / obs.width)))
}

/// Pixel-center centroid.
fn centroid(obs: &Observation, pixels: &[usize]) -> (f64, f64) {
    let n = pixels.len() as f64;
    let (su, sv) = pixels.iter().fold((0.0, 0.0), |(su, sv), &i| {
        (su + (i as u32 % obs.width) as f64, sv + (i as u32 / obs.width) as f64)
    });
    (su / n + 0.5, sv / n + 0.5)
}

fn preferred_cell(obs: &Observation, pixels: &[usize]) -> u8 {
    let bbox = pixel_box(obs, pixels).expect("non-empty pixel set");
    cell_of(&bbox, centroid(obs, pixels)).expect("centroid lies in its bbox").index()
}

/// Best analytic force-closure score, in percent, over the opposed face
/// pairs of a lone primitive that fit the gripper.
fn analytic_score(shape: &Shape, gripper: &GripperSpec) -> u8 {
    let widths: Vec<(Vec3, f64)> = match *shape {
        Shape::Sphere { radius } | Shape::Cylinder { radius, .. } => {
            vec![(Vec3::x(), 2.0 * radius), (Vec3::y(), 2.0 * radius)]
        }
        Shape::Box { size } => vec![(Vec3::x(), size[0]), (Vec3::y(), size[1])],
    };
    widths
        .into_iter()
        .filter(|(_, w)| *w <= gripper.max_opening)
        .filter_map(|(axis, w)| {
            let c = Contacts { p1: -axis * (w / 2.0), n1: -axis, p2: axis * (w / 2.0), n2: axis };
            force_closure_score(&c).ok()
        })
        .map(|s| s.tenths() * 10)
        .max()
        .unwrap_or(0)
}

fn part_shape(obj: &ObjectInstance, part: &str) -> Option<Shape> {
    obj.part(part).map(|p| Shape::Box { size: p.half_size().map(|h| 2.0 * h).into() })
}

/// Build the response for a chosen object (and optional part).
fn respond(
    obs: &Observation,
    scene: &Scene,
    visible: &BTreeMap<ObjectId, Vec<usize>>,
    target: ObjectId,
    part: Option<&str>,
    gripper: &GripperSpec,
) -> SelectorResponse {
    let obj = scene.object(target).expect("target comes from the scene");
    let obj_pixels = &visible[&target];
    let part_px = part
        .map(|p| part_pixels(obj, p, &obs.camera, &obs.depth, obj_pixels.iter().copied()))
        .filter(|px| !px.is_empty());
    let (kind, name, pixels, score) = match (part, part_px) {
        (Some(p), Some(px)) => {
            let shape = part_shape(obj, p).unwrap_or(obj.shape);
            (SelectionKind::Part, format!("{} {p}", obj.label()), px, analytic_score(&shape, gripper))
        }
        _ => (SelectionKind::Object, obj.label(), obj_pixels.clone(), analytic_score(&obj.shape, gripper)),
    };

    // selected bbox grown by every object with a pixel 4-adjacent to it
    let (w, h) = (obs.width, obs.height);
    let mut neighbors = BTreeSet::new();
    for &i in obj_pixels {
        let (u, v) = (i as u32 % w, i as u32 / w);
        let adj = [
            (u > 0).then(|| i - 1),
            (u + 1 < w).then(|| i + 1),
            (v > 0).then(|| i - w as usize),
            (v + 1 < h).then(|| i + w as usize),
        ];
        for j in adj.into_iter().flatten() {
            if let PixelOwner::Object(id) = obs.pixel_owner[j] {
                if id != target {
                    neighbors.insert(id);
                }
            }
        }
    }
    let mut crop = pixel_box(obs, &pixels).expect("non-empty");
    for id in &neighbors {
        crop = crop.union(&pixel_box(obs, &visible[id]).expect("visible"));
    }
    let crop_box = crop.pad(CROP_PAD_PX, w, h);

    let mut properties = vec![ObjectProperty {
        name: name.clone(),
        grasping_score: score,
        preferred_location: preferred_cell(obs, &pixels),
    }];
    for (id, px) in visible {
        let o = scene.object(*id).expect("rendered from scene");
        if *id == target || pixel_box(obs, px).and_then(|b| b.intersect(&crop_box)).is_none() {
            continue;
        }
        properties.push(ObjectProperty {
            name: o.label(),
            grasping_score: analytic_score(&o.shape, gripper),
            preferred_location: preferred_cell(obs, px),
        });
    }
    SelectorResponse { kind, selected: name, crop_box, properties }
}

/// Goal objects in id order, with their visible fraction (0 when fully
/// hidden or off-screen).
fn goal_fractions(
    obs: &Observation,
    scene: &Scene,
    goal: &GoalSpec,
    visible: &BTreeMap<ObjectId, Vec<usize>>,
) -> Vec<(ObjectId, f64, Vec<usize>)> {
    scene
        .objects
        .iter()
        .filter(|o| goal.matches(&o.category))
        .map(|o| {
            let solo = solo_pixels(scene, &obs.camera, o.id);
            let seen = visible.get(&o.id).map_or(0, Vec::len);
            let f = if solo.is_empty() { 0.0 } else { seen as f64 / solo.len() as f64 };
            (o.id, f, solo)
        })
        .collect()
}

/// Most visible goal object at or above `v_min`; ties go to the smaller id.
fn direct_goal(goals: &[(ObjectId, f64, Vec<usize>)], v_min: f64) -> Option<ObjectId> {
    goals
        .iter()
        .filter(|(_, f, _)| *f >= v_min && *f > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(id, _, _)| *id)
}

fn select_goal(
    obs: &Observation,
    scene: &Scene,
    visible: &BTreeMap<ObjectId, Vec<usize>>,
    id: ObjectId,
    gripper: &GripperSpec,
) -> SelectorResponse {
    let obj = scene.object(id).expect("goal in scene");
    let part = obj.parts.first().map(|p| p.name.clone());
    respond(obs, scene, visible, id, part.as_deref(), gripper)
}

/// Objects that hide some goal object: they either cover pixels the goal
/// would show alone, or sit above it on an overlapping footprint.
fn occluders(
    scene: &Scene,
    goals: &[(ObjectId, f64, Vec<usize>)],
    obs: &Observation,
    visible: &BTreeMap<ObjectId, Vec<usize>>,
) -> BTreeSet<ObjectId> {
    let mut out = BTreeSet::new();
    for (gid, _, solo) in goals {
        let g = scene.object(*gid).expect("goal in scene");
        for o in &scene.objects {
            if o.id == *gid || !visible.contains_key(&o.id) {
                continue;
            }
            let covers = solo.iter().any(|&i| obs.pixel_owner[i] == PixelOwner::Object(o.id));
            let above = o.position().z > g.position().z
                && o.footprint().overlaps(&g.footprint(), PENETRATION_TOL);
            if covers || above {
                out.insert(o.id);
            }
        }
    }
    out
}

/// Visible area × (1 − normalized centroid distance from the image center).
fn priority(obs: &Observation, pixels: &[usize]) -> f64 {
    let (cu, cv) = centroid(obs, pixels);
    let (hw, hh) = (obs.width as f64 / 2.0, obs.height as f64 / 2.0);
    let d = ((cu - hw).powi(2) + (cv - hh).powi(2)).sqrt() / hw.hypot(hh);
    pixels.len() as f64 * (1.0 - d)
}

fn best_by_priority(
    obs: &Observation,
    visible: &BTreeMap<ObjectId, Vec<usize>>,
    pool: impl Iterator<Item = ObjectId>,
) -> Option<ObjectId> {
    pool.map(|id| (priority(obs, &visible[&id]), id))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, id)| id)
}

/// Deterministic oracle selection from ground truth. The request history is
/// deliberately ignored.
pub fn scripted_select(
    obs: &Observation,
    goal: &GoalSpec,
    scene: &Scene,
    params: &ScriptedParams,
) -> Result<SelectorResponse, SelectorError> {
    let visible = visible_pixels(obs);
    if visible.is_empty() {
        return Err(SelectorError::NothingVisible);
    }
    let goals = goal_fractions(obs, scene, goal, &visible);
    if let Some(id) = direct_goal(&goals, params.v_min) {
        return Ok(select_goal(obs, scene, &visible, id, &params.gripper));
    }
    let blocking = occluders(scene, &goals, obs, &visible);
    let pick = if !goals.is_empty() && !blocking.is_empty() {
        best_by_priority(obs, &visible, blocking.into_iter())
    } else if let Some(id) = direct_goal(&goals, 0.0) {
        // a sliver of goal with nothing in front of it: take it anyway
        return Ok(select_goal(obs, scene, &visible, id, &params.gripper));
    } else {
        best_by_priority(obs, &visible, visible.keys().copied())
    };
    let id = pick.expect("visible set is non-empty");
    Ok(respond(obs, scene, &visible, id, None, &params.gripper))
}

/// Selection without occlusion reasoning: the most visible goal object,
/// whole-object only, or nothing.
pub fn goal_only_select(
    obs: &Observation,
    goal: &GoalSpec,
    scene: &Scene,
    params: &ScriptedParams,
) -> Result<SelectorResponse, SelectorError> {
    let visible = visible_pixels(obs);
    let id = visible
        .iter()
        .filter(|(id, _)| scene.object(**id).is_some_and(|o| goal.matches(&o.category)))
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .map(|(id, _)| *id)
        .ok_or(SelectorError::NothingVisible)?;
    Ok(respond(obs, scene, &visible, id, None, &params.gripper))
}

/// Baseline: grasp the goal when it is visible enough, otherwise remove a
/// uniformly random visible non-goal object.
pub fn random_occluder_select(
    obs: &Observation,
    goal: &GoalSpec,
    scene: &Scene,
    params: &ScriptedParams,
    seed: u64,
) -> Result<SelectorResponse, SelectorError> {
    let visible = visible_pixels(obs);
    if visible.is_empty() {
        return Err(SelectorError::NothingVisible);
    }
    let goals = goal_fractions(obs, scene, goal, &visible);
    if let Some(id) = direct_goal(&goals, params.v_min) {
        return Ok(select_goal(obs, scene, &visible, id, &params.gripper));
    }
    let others: Vec<ObjectId> = visible
        .keys()
        .copied()
        .filter(|id| scene.object(*id).is_some_and(|o| !goal.matches(&o.category)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match others.choose(&mut rng) {
        Some(&id) => Ok(respond(obs, scene, &visible, id, None, &params.gripper)),
        None => scripted_select(obs, goal, scene, params),
    }
}
