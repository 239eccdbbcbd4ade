use std::collections::HashSet;

use kiddo::SquaredEuclidean;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normals::build_tree;
use super::quality::{antipodal, force_closure_score, misalignment};
use super::{Contacts, GraspCandidate, GraspError, GripperSpec, PointCloud};
use crate::math::{angle_between, Vec3};

pub const DEFAULT_SAMPLE_BUDGET: usize = 500;
/// A partner point qualifies when its normal is within this angle of the
/// seed point's reversed normal.
pub const OPPOSING_CONE_DEG: f64 = 60.0;
const MIN_WIDTH: f64 = 1e-3;

/// Unit approach direction (palm toward fingertips): the inward mean contact
/// normal with its closing-axis component removed. Falls back to world -z,
/// then world +y, projected the same way.
pub fn approach_axis(closing: &Vec3, n1: &Vec3, n2: &Vec3) -> Vec3 {
    let ortho = |v: Vec3| v - closing * v.dot(closing);
    let inward = -(n1 + n2) / 2.0;
    [inward, -Vec3::z(), Vec3::y()]
        .into_iter()
        .map(ortho)
        .find(|v| v.norm() > 1e-6)
        .map(|v| v.normalize())
        .expect("some fallback is not parallel to the closing axis")
}

/// Build a scored candidate from a contact pair; `None` when the pair is
/// not antipodal at mu = 1 or is degenerate.
pub fn candidate_from_contacts(c: Contacts) -> Option<GraspCandidate> {
    let width = c.width();
    if width <= f64::EPSILON || !antipodal(&c, 1.0).ok()? {
        return None;
    }
    let closing = (c.p2 - c.p1) / width;
    Some(GraspCandidate {
        center: (c.p1 + c.p2) / 2.0,
        closing_axis: closing,
        approach_axis: approach_axis(&closing, &c.n1, &c.n2),
        width,
        contacts: c,
        score: force_closure_score(&c).ok(),
    })
}

/// Draw up to `budget` seed points; pair each with the partner inside the
/// gripper opening whose normal opposes it best, and keep pairs that are
/// antipodal at mu = 1. Duplicate pairs are dropped. Deterministic in `seed`.
pub fn sample_candidates(
    cloud: &PointCloud,
    gripper: &GripperSpec,
    budget: usize,
    seed: u64,
) -> Result<Vec<GraspCandidate>, GraspError> {
    let with_normals: Vec<usize> = (0..cloud.len()).filter(|&i| cloud.normal(i).is_some()).collect();
    if with_normals.len() < 2 {
        return Err(GraspError::MissingNormals);
    }
    let pts: Vec<Vec3> = with_normals.iter().map(|&i| cloud.points[i]).collect();
    let tree = build_tree(&pts);
    let cone = OPPOSING_CONE_DEG.to_radians();
    let r2 = gripper.max_opening * gripper.max_opening;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for _ in 0..budget {
        let a = rng.gen_range(0..pts.len());
        let (pa, na) = (pts[a], cloud.normal(with_normals[a]).expect("filtered"));
        let mut near: Vec<usize> = tree
            .within_unsorted::<SquaredEuclidean>(&[pa.x, pa.y, pa.z], r2)
            .into_iter()
            .map(|n| n.item as usize)
            .collect();
        near.sort_unstable();
        let mut best: Option<(f64, usize, Contacts)> = None;
        for b in near {
            if b == a {
                continue;
            }
            let pb = pts[b];
            let width = (pb - pa).norm();
            if width < MIN_WIDTH || width > gripper.max_opening {
                continue;
            }
            let nb = cloud.normal(with_normals[b]).expect("filtered");
            if angle_between(&nb, &-na) > cone {
                continue;
            }
            let c = Contacts { p1: pa, n1: na, p2: pb, n2: nb };
            let Ok((t1, t2)) = misalignment(&c) else { continue };
            let worst = t1.max(t2);
            if best.as_ref().is_none_or(|(w, _, _)| worst < *w) {
                best = Some((worst, b, c));
            }
        }
        let Some((_, b, c)) = best else { continue };
        let key = (a.min(b), a.max(b));
        if seen.contains(&key) {
            continue;
        }
        if let Some(cand) = candidate_from_contacts(c) {
            seen.insert(key);
            out.push(cand);
        }
    }
    Ok(out)
}
