use std::collections::HashMap;

use super::{cell_center, EpisodeConfig, GridCell, PlanError, PlannedAction, Provenance, SelectorKind};
use crate::grasp::{collision_free, CLEARANCE, estimate_normals, sample_candidates, GraspCandidate, GripperSpec, PointCloud, DEFAULT_NEIGHBORS};
use crate::math::{mix_seed, Vec3};
use crate::perception::{
    crop_cloud, parse_query, segment_by_text, CropRegion, Observation, SegmentMask,
};
use crate::scene::{GoalSpec, Scene};
use crate::selector::{
    goal_only_select, random_occluder_select, remote_select, scripted_select, HistoryEntry, ScriptedParams,
    SelectionKind, SelectorRequest, SelectorResponse,
};

/// 3D point to aim the grasp at: the pixel at the preferred cell's center
/// when the mask owns it, else the nearest mask pixel with depth (ties go to
/// the smaller row-major index). With `no_grid` the bbox center replaces the
/// cell center.
pub fn target_point_3d(
    obs: &Observation,
    mask: &SegmentMask,
    cell: GridCell,
    no_grid: bool,
) -> Result<Vec3, PlanError> {
    let (cx, cy) = if no_grid { mask.bbox.center() } else { cell_center(&mask.bbox, cell)? };
    let b = mask.bbox;
    let u = (cx.floor() as u32).clamp(b.x1, b.x2 - 1);
    let v = (cy.floor() as u32).clamp(b.y1, b.y2 - 1);
    if mask.contains(u, v) {
        if let Some(p) = obs.point_at(u, v) {
            return Ok(p);
        }
    }
    let mut best: Option<(f64, u32, u32)> = None;
    for y in b.y1..b.y2 {
        for x in b.x1..b.x2 {
            if !mask.contains(x, y) || obs.point_at(x, y).is_none() {
                continue;
            }
            let d = (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2);
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, x, y));
            }
        }
    }
    let (_, x, y) = best.ok_or(PlanError::EmptyMask)?;
    Ok(obs.point_at(x, y).expect("checked above"))
}

/// Among the `k` candidates nearest to `target` (ties by index), the one
/// with the highest score; score ties go to the nearer, then the lower
/// index. Returns the winner's index.
pub fn select_grasp(candidates: &[GraspCandidate], target: &Vec3, k: usize) -> Result<usize, PlanError> {
    if candidates.is_empty() {
        return Err(PlanError::NoCandidates);
    }
    let mut ranked: Vec<(f64, usize, u8)> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = c.score.ok_or(PlanError::Unscored(i))?;
            Ok(((c.center - target).norm(), i, s.tenths()))
        })
        .collect::<Result<_, PlanError>>()?;
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(k.max(1));
    let best = ranked
        .iter()
        .enumerate()
        .max_by(|(ra, a), (rb, b)| a.2.cmp(&b.2).then(rb.cmp(ra)))
        .expect("non-empty");
    Ok(best.1 .1)
}

/// Per-step inputs beyond the world and the config.
#[derive(Debug, Clone, Default)]
pub struct StepContext {
    pub step: u32,
    pub seed: u64,
    pub history: Vec<HistoryEntry>,
}

/// A step that produced no executable grasp, with whatever was decided
/// before it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    pub selected_label: Option<String>,
    pub provenance: Option<Provenance>,
    pub error: PlanError,
}

impl StepFailure {
    fn bare(error: impl Into<PlanError>) -> Self {
        StepFailure { selected_label: None, provenance: None, error: error.into() }
    }
}

/// Run the selector chosen by the config. The flag is true when a remote
/// selector failed and the scripted oracle answered instead.
fn choose(
    scene: &Scene,
    obs: &Observation,
    goal: &GoalSpec,
    config: &EpisodeConfig,
    ctx: &StepContext,
) -> Result<(SelectorResponse, bool), StepFailure> {
    let params = ScriptedParams { v_min: config.v_min, gripper: GripperSpec::default() };
    if config.ablation.no_selector {
        return goal_only_select(obs, goal, scene, &params).map(|r| (r, false)).map_err(StepFailure::bare);
    }
    let result = match &config.selector {
        SelectorKind::Scripted => scripted_select(obs, goal, scene, &params).map(|r| (r, false)),
        SelectorKind::RandomOccluder => {
            random_occluder_select(obs, goal, scene, &params, mix_seed(ctx.seed, 0x5e1)).map(|r| (r, false))
        }
        remote @ SelectorKind::Remote { .. } => {
            let (endpoint, policy) = remote.remote_policy().expect("remote variant");
            let remote_result = SelectorRequest::new(obs, &goal.instruction, ctx.step, ctx.history.clone())
                .and_then(|req| remote_select(&req, &endpoint, &policy))
                .and_then(|r| r.validate(obs.width, obs.height).map(|_| r));
            match remote_result {
                Ok(r) => Ok((r, false)),
                Err(_) => scripted_select(obs, goal, scene, &params).map(|r| (r, true)),
            }
        }
    };
    result.map_err(StepFailure::bare)
}

/// "color category" from a part label such as "red knife handle".
fn object_query(selected: &str) -> String {
    match parse_query(selected) {
        Ok(q) => match q.color {
            Some(c) => format!("{c} {}", q.category),
            None => q.category,
        },
        Err(_) => selected.to_string(),
    }
}

/// Cloud of everything the grasp must not touch: all observed points not
/// owned by the object under the contacts (the table included).
fn obstacle_clouds(obs: &Observation) -> HashMap<Option<u32>, PointCloud> {
    let mut by_owner: HashMap<Option<u32>, Vec<usize>> = HashMap::new();
    for (i, px) in obs.cloud.source_pixels.iter().enumerate() {
        by_owner.entry(obs.owner(px[0], px[1]).object()).or_default().push(i);
    }
    let owners: Vec<Option<u32>> = by_owner.keys().copied().collect();
    owners
        .into_iter()
        .map(|owner| {
            let idx: Vec<usize> = (0..obs.cloud.len())
                .filter(|&i| {
                    let px = obs.cloud.source_pixels[i];
                    obs.owner(px[0], px[1]).object() != owner
                })
                .collect();
            (owner, obs.cloud.select(&idx))
        })
        .collect()
}

fn feasible(
    obs: &Observation,
    crop: &PointCloud,
    candidates: Vec<GraspCandidate>,
    gripper: &GripperSpec,
    table_z: f64,
) -> Vec<GraspCandidate> {
    let pixel_of: HashMap<[u64; 3], [u32; 2]> = crop
        .points
        .iter()
        .zip(&crop.source_pixels)
        .map(|(p, px)| ([p.x.to_bits(), p.y.to_bits(), p.z.to_bits()], *px))
        .collect();
    let obstacles = obstacle_clouds(obs);
    let lowest = |c: &GraspCandidate| {
        gripper.boxes(c).iter().flat_map(|b| b.corners(CLEARANCE)).map(|p| p.z).fold(f64::INFINITY, f64::min)
    };
    candidates
        .into_iter()
        .filter(|c| {
            let p = c.contacts.p1;
            let Some(px) = pixel_of.get(&[p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]) else {
                return false;
            };
            let owner = obs.owner(px[0], px[1]).object();
            if owner.is_none() {
                return false;
            }
            let others = &obstacles[&owner];
            let closing = gripper.closing_region(c);
            collision_free(others, c, gripper)
                && !others.points.iter().any(|q| closing.contains_strict(q))
                && lowest(c) >= table_z
        })
        .collect()
}

/// Select, segment, crop, sample, filter and pick one grasp.
pub fn plan_step(
    scene: &Scene,
    obs: &Observation,
    goal: &GoalSpec,
    config: &EpisodeConfig,
    ctx: &StepContext,
) -> Result<PlannedAction, StepFailure> {
    let (response, fell_back) = choose(scene, obs, goal, config, ctx)?;
    let label = response.selected.clone();
    let noise = crate::perception::SegmentNoise { seed: mix_seed(ctx.seed, 0x5e6), ..config.noise };
    let fail = |provenance: Option<Provenance>, error: PlanError| StepFailure {
        selected_label: Some(label.clone()),
        provenance,
        error,
    };

    let mut provenance = Provenance::ObjectSegmenterFallback;
    let mut masks = Vec::new();
    if response.kind == SelectionKind::Part {
        masks = segment_by_text(obs, scene, &label, noise).map_err(|e| fail(None, e.into()))?;
        if !masks.is_empty() {
            provenance = Provenance::PartSegmenter;
        }
    }
    if masks.is_empty() {
        let query = if response.kind == SelectionKind::Part { object_query(&label) } else { label.clone() };
        masks = segment_by_text(obs, scene, &query, noise).map_err(|e| fail(None, e.into()))?;
    }
    if fell_back {
        provenance = Provenance::ScriptedFallback;
    }
    let Some(mask) = masks.into_iter().next() else {
        return Err(fail(Some(provenance), PlanError::NoMask(label.clone())));
    };

    let image = obs.image_box();
    let region = if config.ablation.crop_only {
        response.crop_box.intersect(&image)
    } else {
        let joined = match response.crop_box.intersect(&image) {
            Some(c) => mask.bbox.union(&c),
            None => mask.bbox,
        };
        joined.intersect(&image)
    }
    .ok_or_else(|| fail(Some(provenance), PlanError::Perception(crate::perception::PerceptionError::RegionOutsideImage)))?;
    let crop = crop_cloud(obs, CropRegion::Box(region)).map_err(|e| fail(Some(provenance), e.into()))?;
    let crop = estimate_normals(&crop, DEFAULT_NEIGHBORS, &obs.camera.origin())
        .map_err(|e| fail(Some(provenance), e.into()))?;
    let gripper = GripperSpec::default();
    let sampled = sample_candidates(&crop, &gripper, config.sample_budget, mix_seed(ctx.seed, 0x5a3))
        .map_err(|e| fail(Some(provenance), e.into()))?;
    let candidates = feasible(obs, &crop, sampled, &gripper, scene.workspace.table_z());

    let cell = response
        .selected_property()
        .and_then(|p| GridCell::new(p.preferred_location))
        .unwrap_or(GridCell::CENTER);
    let target = target_point_3d(obs, &mask, cell, config.ablation.no_grid).map_err(|e| fail(Some(provenance), e))?;
    let best = select_grasp(&candidates, &target, config.top_k).map_err(|e| fail(Some(provenance), e))?;
    Ok(PlannedAction {
        target_label: label,
        mask,
        target_point: target,
        candidate: candidates[best].clone(),
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::{candidate_from_contacts, Contacts, GraspScore};
    use crate::perception::{render, BBox, CameraModel, PixelOwner};
    use crate::scene::{ObjectInstance, Pose, Shape, Workspace};
    use proptest::prelude::*;

    fn cand(center: Vec3, score: u8) -> GraspCandidate {
        let mut c = candidate_from_contacts(Contacts {
            p1: center - Vec3::x() * 0.01,
            n1: -Vec3::x(),
            p2: center + Vec3::x() * 0.01,
            n2: Vec3::x(),
        })
        .unwrap();
        c.score = GraspScore::from_tenths(score);
        c
    }

    #[test]
    fn select_grasp_worked_examples() {
        let t = Vec3::zeros();
        let set = vec![
            cand(Vec3::new(0.01, 0.0, 0.0), 3),
            cand(Vec3::new(0.05, 0.0, 0.0), 9),
            cand(Vec3::new(0.5, 0.0, 0.0), 10),
        ];
        assert_eq!(select_grasp(&set, &t, 2).unwrap(), 1);
        assert_eq!(select_grasp(&set, &t, 10).unwrap(), 2);
        assert_eq!(select_grasp(&set[..1], &t, 10).unwrap(), 0);
        assert_eq!(select_grasp(&[], &t, 10), Err(PlanError::NoCandidates));
    }

    fn oracle(cands: &[GraspCandidate], t: &Vec3, k: usize) -> usize {
        // brute force: all pairs compared by the full ordering
        let d = |i: usize| (cands[i].center - t).norm();
        let nearer = |a: usize, b: usize| d(a) < d(b) || (d(a) == d(b) && a < b);
        let pool: Vec<usize> = (0..cands.len())
            .filter(|&i| (0..cands.len()).filter(|&j| nearer(j, i)).count() < k)
            .collect();
        let s = |i: usize| cands[i].score.unwrap().tenths();
        *pool
            .iter()
            .find(|&&i| pool.iter().all(|&j| s(i) > s(j) || (s(i) == s(j) && !nearer(j, i))))
            .unwrap()
    }

    proptest! {
        #[test]
        fn select_grasp_matches_oracle(
            pts in prop::collection::vec((0u8..5, 0u8..5, 1u8..=10), 1..40),
            k in prop::sample::select(vec![1usize, 5, 10]),
        ) {
            // coarse lattice forces distance ties
            let cands: Vec<_> = pts.iter().map(|(x, y, s)| cand(Vec3::new(*x as f64 * 0.01, *y as f64 * 0.01, 0.0), *s)).collect();
            let t = Vec3::new(0.02, 0.02, 0.0);
            prop_assert_eq!(select_grasp(&cands, &t, k).unwrap(), oracle(&cands, &t, k));
        }
    }

    fn ball_scene() -> Scene {
        Scene {
            workspace: Workspace::default(),
            seed: 0,
            objects: vec![ObjectInstance {
                id: 1,
                category: "ball".into(),
                color: "blue".into(),
                shape: Shape::Sphere { radius: 0.03 },
                pose: Pose { pos: [0.0, 0.0, 0.03], yaw: 0.0 },
                parts: vec![],
            }],
        }
    }

    fn ball_mask(obs: &Observation) -> SegmentMask {
        let pixels = obs.pixel_owner.iter().map(|o| *o == PixelOwner::Object(1)).collect();
        SegmentMask::from_pixels(obs.width, obs.height, pixels, 1.0, "blue ball").unwrap()
    }

    #[test]
    fn target_point_on_object_and_in_hole() {
        let s = ball_scene();
        let obs = render(&s, &CameraModel::default_for(&s.workspace));
        let mask = ball_mask(&obs);
        let (cx, cy) = cell_center(&mask.bbox, GridCell::CENTER).unwrap();
        let p = target_point_3d(&obs, &mask, GridCell::CENTER, false).unwrap();
        assert_eq!(p, obs.point_at(cx as u32, cy as u32).unwrap());

        // punch a hole at the cell center: the nearest remaining pixel is used
        let mut holed = mask.clone();
        let i = (cy as u32 * obs.width + cx as u32) as usize;
        holed.pixels[i] = false;
        let q = target_point_3d(&obs, &holed, GridCell::CENTER, false).unwrap();
        assert_ne!(q, p);
        assert!((q - p).norm() < 0.005);

        // no_grid ignores the cell
        let a = target_point_3d(&obs, &mask, GridCell::new(1).unwrap(), true).unwrap();
        let b = target_point_3d(&obs, &mask, GridCell::new(9).unwrap(), true).unwrap();
        assert_eq!(a, b);
        let g1 = target_point_3d(&obs, &mask, GridCell::new(1).unwrap(), false).unwrap();
        let g9 = target_point_3d(&obs, &mask, GridCell::new(9).unwrap(), false).unwrap();
        assert!((g1 - g9).norm() > 0.01);
    }

    #[test]
    fn mask_without_depth_is_an_error() {
        let s = ball_scene();
        let obs = render(&s, &CameraModel::default_for(&s.workspace));
        let mut pixels = vec![false; (obs.width * obs.height) as usize];
        pixels[0] = true;
        let mask = SegmentMask::from_pixels(obs.width, obs.height, pixels, 1.0, "x").unwrap();
        assert_eq!(mask.bbox, BBox { x1: 0, y1: 0, x2: 1, y2: 1 });
        assert_eq!(target_point_3d(&obs, &mask, GridCell::CENTER, false), Err(PlanError::EmptyMask));
    }

    #[test]
    fn lone_goal_plans_on_itself() {
        let s = ball_scene();
        let obs = render(&s, &CameraModel::default_for(&s.workspace));
        let goal = GoalSpec::from_instruction("grasp a round object").unwrap();
        let a = plan_step(&s, &obs, &goal, &EpisodeConfig::default(), &StepContext::default()).unwrap();
        assert_eq!(a.target_label, "blue ball");
        assert_eq!(a.provenance, Provenance::ObjectSegmenterFallback);
        assert!(a.candidate.score.is_some());
        assert!(s.objects[0].surface_distance(&a.candidate.contacts.p1).abs() < 0.002);
    }
}
