//! Analytic primitive geometry: ray intersection, surface distance, xy
//! footprints and surface sampling. All primitives stand upright; the only
//! rotational degree of freedom is yaw about world z.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ObjectInstance;
use crate::math::{rot_z, vec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Sphere,
    Box,
    Cylinder,
}

/// Primitive shape with its dimensions in meters. Box sizes are full edge
/// lengths; cylinders are upright with `height` along z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShapeRepr", into = "ShapeRepr")]
pub enum Shape {
    Sphere { radius: f64 },
    Box { size: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
}

#[derive(Serialize, Deserialize)]
struct ShapeRepr {
    kind: ShapeKind,
    dims: Vec<f64>,
}

impl TryFrom<ShapeRepr> for Shape {
    type Error = String;

    fn try_from(repr: ShapeRepr) -> Result<Self, Self::Error> {
        let want = match repr.kind {
            ShapeKind::Sphere => 1,
            ShapeKind::Box => 3,
            ShapeKind::Cylinder => 2,
        };
        if repr.dims.len() != want {
            return Err(format!(
                "shape {:?} expects {want} dims, got {}",
                repr.kind,
                repr.dims.len()
            ));
        }
        let d = &repr.dims;
        Ok(match repr.kind {
            ShapeKind::Sphere => Shape::Sphere { radius: d[0] },
            ShapeKind::Box => Shape::Box {
                size: [d[0], d[1], d[2]],
            },
            ShapeKind::Cylinder => Shape::Cylinder {
                radius: d[0],
                height: d[1],
            },
        })
    }
}

impl From<Shape> for ShapeRepr {
    fn from(shape: Shape) -> Self {
        ShapeRepr {
            kind: shape.kind(),
            dims: shape.dims(),
        }
    }
}

impl Shape {
    pub fn kind(&self) -> ShapeKind {
        match self {
            Shape::Sphere { .. } => ShapeKind::Sphere,
            Shape::Box { .. } => ShapeKind::Box,
            Shape::Cylinder { .. } => ShapeKind::Cylinder,
        }
    }

    pub fn dims(&self) -> Vec<f64> {
        match *self {
            Shape::Sphere { radius } => vec![radius],
            Shape::Box { size } => size.to_vec(),
            Shape::Cylinder { radius, height } => vec![radius, height],
        }
    }

    pub fn half_height(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Box { size } => size[2] / 2.0,
            Shape::Cylinder { height, .. } => height / 2.0,
        }
    }

    /// Radius of the smallest sphere about the center containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Box { size } => 0.5 * (size[0].powi(2) + size[1].powi(2) + size[2].powi(2)).sqrt(),
            Shape::Cylinder { radius, height } => (radius.powi(2) + (height / 2.0).powi(2)).sqrt(),
        }
    }

    /// Radius of the smallest vertical cylinder about the center containing
    /// the shape, for any yaw.
    pub fn bounding_radius_xy(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } | Shape::Cylinder { radius, .. } => radius,
            Shape::Box { size } => 0.5 * size[0].hypot(size[1]),
        }
    }

    /// Whether a local-frame point lies inside (or on) the primitive.
    pub fn contains_local(&self, p: &Vec3, eps: f64) -> bool {
        match *self {
            Shape::Sphere { radius } => p.norm() <= radius + eps,
            Shape::Box { size } => (0..3).all(|i| p[i].abs() <= size[i] / 2.0 + eps),
            Shape::Cylinder { radius, height } => {
                (p.x * p.x + p.y * p.y).sqrt() <= radius + eps && p.z.abs() <= height / 2.0 + eps
            }
        }
    }

    /// Signed distance from a local-frame point to the surface (negative inside).
    pub fn signed_distance_local(&self, p: &Vec3) -> f64 {
        match *self {
            Shape::Sphere { radius } => p.norm() - radius,
            Shape::Box { size } => {
                let q = Vec3::new(
                    p.x.abs() - size[0] / 2.0,
                    p.y.abs() - size[1] / 2.0,
                    p.z.abs() - size[2] / 2.0,
                );
                let outside = Vec3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
                outside + q.x.max(q.y).max(q.z).min(0.0)
            }
            Shape::Cylinder { radius, height } => {
                let dr = (p.x * p.x + p.y * p.y).sqrt() - radius;
                let dz = p.z.abs() - height / 2.0;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                outside + dr.max(dz).min(0.0)
            }
        }
    }

    /// Nearest ray hit in the local frame: (t, outward local normal).
    pub fn intersect_local(&self, o: &Vec3, d: &Vec3) -> Option<(f64, Vec3)> {
        const T_MIN: f64 = 1e-9;
        match *self {
            Shape::Sphere { radius } => {
                let a = d.dot(d);
                let b = o.dot(d);
                let c = o.dot(o) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t = [(-b - sq) / a, (-b + sq) / a]
                    .into_iter()
                    .find(|t| *t > T_MIN)?;
                let n = (o + d * t) / radius;
                Some((t, n))
            }
            Shape::Box { size } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                let mut axis_near = 0;
                let mut axis_far = 0;
                for i in 0..3 {
                    let h = size[i] / 2.0;
                    if d[i].abs() < 1e-15 {
                        if o[i].abs() > h {
                            return None;
                        }
                        continue;
                    }
                    let mut t0 = (-h - o[i]) / d[i];
                    let mut t1 = (h - o[i]) / d[i];
                    if t0 > t1 {
                        std::mem::swap(&mut t0, &mut t1);
                    }
                    if t0 > t_near {
                        t_near = t0;
                        axis_near = i;
                    }
                    if t1 < t_far {
                        t_far = t1;
                        axis_far = i;
                    }
                    if t_near > t_far {
                        return None;
                    }
                }
                let (t, axis) = if t_near > T_MIN {
                    (t_near, axis_near)
                } else if t_far > T_MIN {
                    (t_far, axis_far)
                } else {
                    return None;
                };
                let mut n = Vec3::zeros();
                let hit = o + d * t;
                n[axis] = hit[axis].signum();
                Some((t, n))
            }
            Shape::Cylinder { radius, height } => {
                let h = height / 2.0;
                let mut best: Option<(f64, Vec3)> = None;
                let mut consider = |t: f64, n: Vec3| {
                    if t > T_MIN && best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, n));
                    }
                };
                let a = d.x * d.x + d.y * d.y;
                if a > 1e-15 {
                    let b = o.x * d.x + o.y * d.y;
                    let c = o.x * o.x + o.y * o.y - radius * radius;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / a, (-b + sq) / a] {
                            let p = o + d * t;
                            if p.z.abs() <= h {
                                consider(t, Vec3::new(p.x, p.y, 0.0) / radius);
                            }
                        }
                    }
                }
                if d.z.abs() > 1e-15 {
                    for (zc, nz) in [(h, 1.0), (-h, -1.0)] {
                        let t = (zc - o.z) / d.z;
                        let p = o + d * t;
                        if p.x * p.x + p.y * p.y <= radius * radius {
                            consider(t, Vec3::new(0.0, 0.0, nz));
                        }
                    }
                }
                best
            }
        }
    }

    /// Points on the surface in the local frame, roughly `spacing` apart.
    pub fn surface_samples_local(&self, spacing: f64) -> Vec<Vec3> {
        let mut out = Vec::new();
        match *self {
            Shape::Sphere { radius } => {
                let area = 4.0 * PI * radius * radius;
                let n = ((area / (spacing * spacing)).ceil() as usize).max(8);
                let golden = PI * (3.0 - 5f64.sqrt());
                for i in 0..n {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    out.push(Vec3::new(r * th.cos(), r * th.sin(), z) * radius);
                }
            }
            Shape::Box { size } => {
                let h = [size[0] / 2.0, size[1] / 2.0, size[2] / 2.0];
                for axis in 0..3 {
                    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                    let nu = ((size[u] / spacing).ceil() as usize).max(1);
                    let nv = ((size[v] / spacing).ceil() as usize).max(1);
                    for side in [-1.0, 1.0] {
                        for i in 0..=nu {
                            for j in 0..=nv {
                                let mut p = Vec3::zeros();
                                p[axis] = side * h[axis];
                                p[u] = -h[u] + size[u] * i as f64 / nu as f64;
                                p[v] = -h[v] + size[v] * j as f64 / nv as f64;
                                out.push(p);
                            }
                        }
                    }
                }
            }
            Shape::Cylinder { radius, height } => {
                let h = height / 2.0;
                let n_theta = ((2.0 * PI * radius / spacing).ceil() as usize).max(8);
                let n_z = ((height / spacing).ceil() as usize).max(1);
                for i in 0..n_theta {
                    let th = 2.0 * PI * i as f64 / n_theta as f64;
                    for j in 0..=n_z {
                        let z = -h + height * j as f64 / n_z as f64;
                        out.push(Vec3::new(radius * th.cos(), radius * th.sin(), z));
                    }
                }
                let n_r = ((radius / spacing).ceil() as usize).max(1);
                for zc in [-h, h] {
                    out.push(Vec3::new(0.0, 0.0, zc));
                    for k in 1..=n_r {
                        let r = radius * k as f64 / n_r as f64;
                        let n_ring = ((2.0 * PI * r / spacing).ceil() as usize).max(6);
                        for i in 0..n_ring {
                            let th = 2.0 * PI * i as f64 / n_ring as f64;
                            out.push(Vec3::new(r * th.cos(), r * th.sin(), zc));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Position of the primitive's center and its yaw about world z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub pos: [f64; 3],
    pub yaw: f64,
}

impl Pose {
    pub fn position(&self) -> Vec3 {
        vec3(self.pos)
    }
}

/// Named graspable sub-region of an object, as a local-frame box given by
/// center (x, y, z) followed by full edge lengths (sx, sy, sz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    #[serde(rename = "box")]
    pub bounds: [f64; 6],
}

impl Part {
    pub fn center(&self) -> Vec3 {
        Vec3::new(self.bounds[0], self.bounds[1], self.bounds[2])
    }

    pub fn half_size(&self) -> Vec3 {
        Vec3::new(self.bounds[3], self.bounds[4], self.bounds[5]) / 2.0
    }

    pub fn contains_local(&self, p: &Vec3, eps: f64) -> bool {
        let c = self.center();
        let h = self.half_size();
        (0..3).all(|i| (p[i] - c[i]).abs() <= h[i] + eps)
    }

    pub fn corners_local(&self) -> [Vec3; 8] {
        let c = self.center();
        let h = self.half_size();
        std::array::from_fn(|i| {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            c + Vec3::new(sx * h.x, sy * h.y, sz * h.z)
        })
    }
}

/// Projection of an object onto the table plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Footprint {
    Disk { center: [f64; 2], radius: f64 },
    Rect { center: [f64; 2], half: [f64; 2], yaw: f64 },
}

impl Footprint {
    /// True when the two footprints overlap by more than `tol` meters of
    /// penetration depth.
    pub fn overlaps(&self, other: &Footprint, tol: f64) -> bool {
        use Footprint::*;
        match (*self, *other) {
            (Disk { center: a, radius: ra }, Disk { center: b, radius: rb }) => {
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                d < ra + rb - tol
            }
            (Disk { center, radius }, rect @ Rect { .. }) | (rect @ Rect { .. }, Disk { center, radius }) => {
                rect.distance_to_point(center) < radius - tol
            }
            (Rect { .. }, Rect { .. }) => {
                let axes: Vec<[f64; 2]> = self.axes().into_iter().chain(other.axes()).collect();
                axes.iter().all(|ax| {
                    let (a0, a1) = self.project(ax);
                    let (b0, b1) = other.project(ax);
                    a1.min(b1) - a0.max(b0) > tol
                })
            }
        }
    }

    fn axes(&self) -> Vec<[f64; 2]> {
        match *self {
            Footprint::Rect { yaw, .. } => {
                let (s, c) = yaw.sin_cos();
                vec![[c, s], [-s, c]]
            }
            Footprint::Disk { .. } => Vec::new(),
        }
    }

    fn project(&self, ax: &[f64; 2]) -> (f64, f64) {
        match *self {
            Footprint::Rect { center, half, yaw } => {
                let (s, c) = yaw.sin_cos();
                let m = center[0] * ax[0] + center[1] * ax[1];
                let r = half[0] * (c * ax[0] + s * ax[1]).abs() + half[1] * (-s * ax[0] + c * ax[1]).abs();
                (m - r, m + r)
            }
            Footprint::Disk { center, radius } => {
                let m = center[0] * ax[0] + center[1] * ax[1];
                (m - radius, m + radius)
            }
        }
    }

    /// Distance from a point to the footprint region (0 when inside;
    /// negative values are never returned).
    fn distance_to_point(&self, p: [f64; 2]) -> f64 {
        match *self {
            Footprint::Disk { center, radius } => {
                (((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius).max(0.0)
            }
            Footprint::Rect { center, half, yaw } => {
                let (s, c) = yaw.sin_cos();
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let lx = c * dx + s * dy;
                let ly = -s * dx + c * dy;
                let qx = (lx.abs() - half[0]).max(0.0);
                let qy = (ly.abs() - half[1]).max(0.0);
                (qx * qx + qy * qy).sqrt()
            }
        }
    }
}

impl ObjectInstance {
    pub fn position(&self) -> Vec3 {
        self.pose.position()
    }

    pub fn bottom_z(&self) -> f64 {
        self.pose.pos[2] - self.shape.half_height()
    }

    pub fn top_z(&self) -> f64 {
        self.pose.pos[2] + self.shape.half_height()
    }

    pub fn footprint(&self) -> Footprint {
        let center = [self.pose.pos[0], self.pose.pos[1]];
        match self.shape {
            Shape::Sphere { radius } | Shape::Cylinder { radius, .. } => Footprint::Disk { center, radius },
            Shape::Box { size } => Footprint::Rect {
                center,
                half: [size[0] / 2.0, size[1] / 2.0],
                yaw: self.pose.yaw,
            },
        }
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        rot_z(-self.pose.yaw) * (p - self.position())
    }

    pub fn to_world(&self, p: &Vec3) -> Vec3 {
        rot_z(self.pose.yaw) * p + self.position()
    }

    pub fn to_world_dir(&self, d: &Vec3) -> Vec3 {
        rot_z(self.pose.yaw) * d
    }

    /// Nearest ray hit in world coordinates: (t, outward world normal).
    pub fn intersect_ray(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, Vec3)> {
        let o = self.to_local(origin);
        let d = rot_z(-self.pose.yaw) * dir;
        self.shape
            .intersect_local(&o, &d)
            .map(|(t, n)| (t, self.to_world_dir(&n)))
    }

    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        self.shape.signed_distance_local(&self.to_local(p))
    }

    pub fn surface_samples(&self, spacing: f64) -> Vec<Vec3> {
        self.shape
            .surface_samples_local(spacing)
            .iter()
            .map(|p| self.to_world(p))
            .collect()
    }

    /// World-space axis-aligned bounds.
    pub fn aabb(&self) -> (Vec3, Vec3) {
        let c = self.position();
        let e = match self.shape {
            Shape::Sphere { radius } => Vec3::new(radius, radius, radius),
            Shape::Cylinder { radius, height } => Vec3::new(radius, radius, height / 2.0),
            Shape::Box { size } => {
                let (s, co) = self.pose.yaw.sin_cos();
                let hx = size[0] / 2.0;
                let hy = size[1] / 2.0;
                Vec3::new(
                    hx * co.abs() + hy * s.abs(),
                    hx * s.abs() + hy * co.abs(),
                    size[2] / 2.0,
                )
            }
        };
        (c - e, c + e)
    }

    pub fn part(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }

    /// Color-and-name label, e.g. "green bottle".
    pub fn label(&self) -> String {
        format!("{} {}", self.color, self.category)
    }
}
