use std::num::NonZeroUsize;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use super::{GraspError, PointCloud};
use crate::math::Vec3;

pub const DEFAULT_NEIGHBORS: usize = 16;

/// Relative size of the middle covariance eigenvalue below which a
/// neighborhood counts as collinear.
const RANK_TOL: f64 = 1e-9;

pub(crate) fn build_tree(points: &[Vec3]) -> ImmutableKdTree<f64, 3> {
    let raw: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
    ImmutableKdTree::new_from_slice(&raw)
}

fn normal_of(neighbors: &[Vec3], point: &Vec3, viewpoint: &Vec3) -> Option<Vec3> {
    let n = neighbors.len() as f64;
    let centroid = neighbors.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for q in neighbors {
        let d = q - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (lo, mid, hi) = (order[0], order[1], order[2]);
    let lmax = eig.eigenvalues[hi];
    if lmax <= 0.0 || eig.eigenvalues[mid] <= RANK_TOL * lmax {
        return None;
    }
    let mut normal: Vec3 = eig.eigenvectors.column(lo).into_owned().normalize();
    if normal.dot(&(viewpoint - point)) < 0.0 {
        normal = -normal;
    }
    Some(normal)
}

/// Per-point normal from the covariance of the `k` nearest neighbors
/// (the point itself included), oriented toward `viewpoint`. Points whose
/// neighborhood is collinear get no normal.
pub fn estimate_normals(cloud: &PointCloud, k: usize, viewpoint: &Vec3) -> Result<PointCloud, GraspError> {
    if k < 3 || cloud.len() < k {
        return Err(GraspError::TooFewPoints { need: k.max(3), got: cloud.len(), k });
    }
    let tree = build_tree(&cloud.points);
    let k_nz = NonZeroUsize::new(k).expect("k >= 3");
    let normals: Vec<Option<Vec3>> = cloud
        .points
        .par_iter()
        .map(|p| {
            let nn = tree.nearest_n::<SquaredEuclidean>(&[p.x, p.y, p.z], k_nz);
            let neighbors: Vec<Vec3> = nn.iter().map(|n| cloud.points[n.item as usize]).collect();
            normal_of(&neighbors, p, viewpoint)
        })
        .collect();
    Ok(PointCloud { normals: Some(normals), ..cloud.clone() })
}
