//! Virtual RGB-D camera over the ground-truth scene.
//!
//! Rendering is per-pixel ray casting against the analytic primitives with a
//! z-buffer. Each object only casts rays inside the screen rectangle covered
//! by its projected bounding box, which keeps a 224×224 frame cheap enough to
//! re-render after every motion.

mod camera;
mod export;
mod segment;

use std::collections::BTreeMap;

use thiserror::Error;

pub use camera::CameraModel;
pub use export::{write_depth_png, write_rgb_png};
pub(crate) use export::encode_rgb_png;
pub(crate) use segment::part_pixels;
pub use segment::{
    crop_cloud, parse_query, segment_by_text, visible_fraction, visible_fractions, CropRegion, SegmentMask,
    SegmentNoise, TextQuery,
};

use crate::grasp::PointCloud;
use crate::math::Vec3;
use crate::scene::{catalog, ObjectId, ObjectInstance, Scene};

pub const TABLE_RGB: [u8; 3] = [150, 120, 90];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("object {0} not in scene")]
    UnknownObject(ObjectId),
    #[error("object {0} projects to zero pixels")]
    ZeroProjection(ObjectId),
    #[error("query must not be empty")]
    EmptyQuery,
    #[error("crop region does not intersect the image")]
    RegionOutsideImage,
    #[error("crop region contains no points")]
    EmptyCrop,
}

/// What a pixel's ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelOwner {
    Background,
    Table,
    Object(ObjectId),
}

impl PixelOwner {
    pub fn object(self) -> Option<ObjectId> {
        match self {
            PixelOwner::Object(id) => Some(id),
            _ => None,
        }
    }

    pub fn is_hit(self) -> bool {
        self != PixelOwner::Background
    }
}

/// Half-open integer pixel rectangle `[x1, x2) × [y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct BBox {
    pub x1: u32,
    pub y1: u32,
    pub x2: u32,
    pub y2: u32,
}

impl BBox {
    pub fn new(x1: u32, y1: u32, x2: u32, y2: u32) -> Option<Self> {
        (x1 < x2 && y1 < y2).then_some(BBox { x1, y1, x2, y2 })
    }

    pub fn full(width: u32, height: u32) -> Self {
        BBox { x1: 0, y1: 0, x2: width, y2: height }
    }

    pub fn width(&self) -> u32 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> u32 {
        self.y2 - self.y1
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        u >= self.x1 && u < self.x2 && v >= self.y1 && v < self.y2
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            x1: self.x1.min(o.x1),
            y1: self.y1.min(o.y1),
            x2: self.x2.max(o.x2),
            y2: self.y2.max(o.y2),
        }
    }

    pub fn intersect(&self, o: &BBox) -> Option<BBox> {
        BBox::new(self.x1.max(o.x1), self.y1.max(o.y1), self.x2.min(o.x2), self.y2.min(o.y2))
    }

    pub fn pad(&self, px: u32, width: u32, height: u32) -> BBox {
        BBox {
            x1: self.x1.saturating_sub(px),
            y1: self.y1.saturating_sub(px),
            x2: (self.x2 + px).min(width),
            y2: (self.y2 + px).min(height),
        }
    }

    /// Tight bounds of a pixel set given as an iterator of (u, v).
    pub fn of_pixels(pixels: impl IntoIterator<Item = (u32, u32)>) -> Option<BBox> {
        let mut it = pixels.into_iter().peekable();
        it.peek()?;
        let (mut x1, mut y1, mut x2, mut y2) = (u32::MAX, u32::MAX, 0, 0);
        for (u, v) in it {
            x1 = x1.min(u);
            y1 = y1.min(v);
            x2 = x2.max(u + 1);
            y2 = y2.max(v + 1);
        }
        BBox::new(x1, y1, x2, y2)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) as f64 / 2.0, (self.y1 + self.y2) as f64 / 2.0)
    }

    pub fn as_array(&self) -> [u32; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }
}

#[derive(Debug, Clone)]
pub struct Observation {
    pub width: u32,
    pub height: u32,
    pub camera: CameraModel,
    pub rgb: Vec<[u8; 3]>,
    /// Camera-frame z in meters; 0 where the ray hit nothing.
    pub depth: Vec<f64>,
    /// Ground truth, for the segmentation oracle and tests only.
    pub pixel_owner: Vec<PixelOwner>,
    /// World-frame points, one per hit pixel, in row-major pixel order.
    pub cloud: PointCloud,
    /// Pixel index to cloud index.
    pub point_index: Vec<Option<u32>>,
}

impl Observation {
    pub fn index(&self, u: u32, v: u32) -> usize {
        (v * self.width + u) as usize
    }

    pub fn owner(&self, u: u32, v: u32) -> PixelOwner {
        self.pixel_owner[self.index(u, v)]
    }

    pub fn pixel_count(&self, id: ObjectId) -> usize {
        self.pixel_owner.iter().filter(|o| **o == PixelOwner::Object(id)).count()
    }

    /// Owned pixel counts per object.
    pub fn owned_counts(&self) -> BTreeMap<ObjectId, usize> {
        let mut m = BTreeMap::new();
        for o in &self.pixel_owner {
            if let PixelOwner::Object(id) = o {
                *m.entry(*id).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn image_box(&self) -> BBox {
        BBox::full(self.width, self.height)
    }

    pub fn point_at(&self, u: u32, v: u32) -> Option<Vec3> {
        self.point_index[self.index(u, v)].map(|i| self.cloud.points[i as usize])
    }
}

/// Raw z-buffer: camera-frame depth, owner and world normal per pixel.
pub(crate) struct Raster {
    pub depth: Vec<f64>,
    pub owner: Vec<PixelOwner>,
    pub normal: Vec<Vec3>,
}

/// Conservative screen rectangle covering an object's projection.
fn screen_rect(obj: &ObjectInstance, camera: &CameraModel) -> Option<BBox> {
    let (lo, hi) = obj.aabb();
    let mut umin = f64::INFINITY;
    let mut vmin = f64::INFINITY;
    let mut umax = f64::NEG_INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    for i in 0..8 {
        let c = Vec3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        );
        let (u, v, z) = camera.project(&c);
        if z <= 1e-6 {
            // behind the camera: fall back to the whole frame
            return Some(BBox::full(camera.width, camera.height));
        }
        umin = umin.min(u);
        vmin = vmin.min(v);
        umax = umax.max(u);
        vmax = vmax.max(v);
    }
    let x1 = (umin.floor() - 1.0).max(0.0);
    let y1 = (vmin.floor() - 1.0).max(0.0);
    let x2 = (umax.ceil() + 2.0).min(camera.width as f64);
    let y2 = (vmax.ceil() + 2.0).min(camera.height as f64);
    if x1 >= x2 || y1 >= y2 {
        return None;
    }
    BBox::new(x1 as u32, y1 as u32, x2 as u32, y2 as u32)
}

/// Z-buffer render of the objects accepted by `keep`, optionally with the table.
pub(crate) fn rasterize(
    scene: &Scene,
    camera: &CameraModel,
    with_table: bool,
    keep: impl Fn(&ObjectInstance) -> bool,
) -> Raster {
    let (w, h) = (camera.width, camera.height);
    let n = (w * h) as usize;
    let mut depth = vec![0.0; n];
    let mut owner = vec![PixelOwner::Background; n];
    let mut normal = vec![Vec3::zeros(); n];
    let origin = camera.origin();
    if with_table {
        let tz = scene.workspace.table_z();
        for v in 0..h {
            for u in 0..w {
                let d = camera.ray_dir(u as f64, v as f64);
                if d.z >= -1e-12 {
                    continue;
                }
                let t = (tz - origin.z) / d.z;
                let p = origin + d * t;
                if t > 0.0 && scene.workspace.contains_xy(p.x, p.y) {
                    let i = (v * w + u) as usize;
                    depth[i] = t;
                    owner[i] = PixelOwner::Table;
                    normal[i] = Vec3::z();
                }
            }
        }
    }
    let mut objects: Vec<&ObjectInstance> = scene.objects.iter().filter(|o| keep(o)).collect();
    objects.sort_by_key(|o| o.id);
    for obj in objects {
        let Some(rect) = screen_rect(obj, camera) else { continue };
        for v in rect.y1..rect.y2 {
            for u in rect.x1..rect.x2 {
                let d = camera.ray_dir(u as f64, v as f64);
                if let Some((t, nrm)) = obj.intersect_ray(&origin, &d) {
                    let i = (v * w + u) as usize;
                    let free = owner[i] == PixelOwner::Background;
                    if free || t < depth[i] {
                        depth[i] = t;
                        owner[i] = PixelOwner::Object(obj.id);
                        normal[i] = nrm;
                    }
                }
            }
        }
    }
    Raster { depth, owner, normal }
}

fn shade(base: [u8; 3], normal: &Vec3, view: &Vec3) -> [u8; 3] {
    let lambert = normal.dot(&(-view.normalize())).max(0.0);
    let k = 0.35 + 0.65 * lambert;
    base.map(|c| (c as f64 * k).round().clamp(0.0, 255.0) as u8)
}

/// Render the scene: z-buffered RGB-D plus the back-projected world cloud.
pub fn render(scene: &Scene, camera: &CameraModel) -> Observation {
    let raster = rasterize(scene, camera, true, |_| true);
    let (w, h) = (camera.width, camera.height);
    let colors: BTreeMap<ObjectId, [u8; 3]> = scene
        .objects
        .iter()
        .map(|o| (o.id, catalog::color_rgb(&o.color).unwrap_or([200, 200, 200])))
        .collect();
    let mut rgb = vec![[0u8; 3]; (w * h) as usize];
    let mut cloud = PointCloud::default();
    let mut point_index = vec![None; (w * h) as usize];
    for v in 0..h {
        for u in 0..w {
            let i = (v * w + u) as usize;
            let base = match raster.owner[i] {
                PixelOwner::Background => continue,
                PixelOwner::Table => TABLE_RGB,
                PixelOwner::Object(id) => colors[&id],
            };
            let view = camera.ray_dir(u as f64, v as f64);
            rgb[i] = shade(base, &raster.normal[i], &view);
            let p = camera
                .backproject(u as f64, v as f64, raster.depth[i])
                .expect("rendered depth is positive");
            point_index[i] = Some(cloud.points.len() as u32);
            cloud.points.push(p);
            cloud.colors.push(rgb[i]);
            cloud.source_pixels.push([u, v]);
        }
    }
    Observation {
        width: w,
        height: h,
        camera: camera.clone(),
        rgb,
        depth: raster.depth,
        pixel_owner: raster.owner,
        cloud,
        point_index,
    }
}

/// Pixels covered by one object when it is rendered alone.
pub(crate) fn solo_pixels(scene: &Scene, camera: &CameraModel, id: ObjectId) -> Vec<usize> {
    let raster = rasterize(scene, camera, false, |o| o.id == id);
    raster
        .owner
        .iter()
        .enumerate()
        .filter(|(_, o)| **o == PixelOwner::Object(id))
        .map(|(i, _)| i)
        .collect()
}

/// Back-project one pixel with known camera-frame depth into the world frame.
pub fn backproject(u: f64, v: f64, depth: f64, camera: &CameraModel) -> Result<Vec3, PerceptionError> {
    camera.backproject(u, v, depth)
}
