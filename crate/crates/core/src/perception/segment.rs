//! Text-conditioned segmentation oracle, visibility measurement and cloud
//! cropping.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rasterize, solo_pixels, BBox, CameraModel, Observation, PerceptionError, PixelOwner};
use crate::grasp::PointCloud;
use crate::math::mix_seed;
use crate::scene::{catalog, ObjectId, ObjectInstance, Scene};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMask {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<bool>,
    pub bbox: BBox,
    pub confidence: f64,
    pub matched_text: String,
}

impl SegmentMask {
    /// Build a mask from a pixel bitmap; `None` when the bitmap is empty.
    pub fn from_pixels(
        width: u32,
        height: u32,
        pixels: Vec<bool>,
        confidence: f64,
        matched_text: impl Into<String>,
    ) -> Option<Self> {
        let bbox = BBox::of_pixels(
            pixels
                .iter()
                .enumerate()
                .filter(|(_, on)| **on)
                .map(|(i, _)| (i as u32 % width, i as u32 / width)),
        )?;
        Some(SegmentMask {
            width,
            height,
            pixels,
            bbox,
            confidence,
            matched_text: matched_text.into(),
        })
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        u < self.width && v < self.height && self.pixels[(v * self.width + u) as usize]
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|p| **p).count()
    }

    /// Mean pixel coordinate of the mask.
    pub fn centroid(&self) -> (f64, f64) {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0.0);
        for (i, on) in self.pixels.iter().enumerate() {
            if *on {
                su += (i as u32 % self.width) as f64;
                sv += (i as u32 / self.width) as f64;
                n += 1.0;
            }
        }
        (su / n, sv / n)
    }
}

/// Noise knobs for the oracle segmenter. Positive `dilation_px` grows the
/// mask by that many 4-connected steps, negative erodes it.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SegmentNoise {
    pub dilation_px: i32,
    pub confidence_jitter: f64,
    pub seed: u64,
}

/// Parsed "color name [part]" query. Color is optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextQuery {
    pub color: Option<String>,
    pub category: String,
    pub part: Option<String>,
}

impl TextQuery {
    pub fn matches(&self, obj: &ObjectInstance) -> bool {
        obj.category == self.category && self.color.as_ref().is_none_or(|c| *c == obj.color)
    }
}

pub fn parse_query(query: &str) -> Result<TextQuery, PerceptionError> {
    let words: Vec<String> = query.split_whitespace().map(str::to_lowercase).collect();
    if words.is_empty() {
        return Err(PerceptionError::EmptyQuery);
    }
    let (color, rest) = if words.len() > 1 && catalog::is_color(&words[0]) {
        (Some(words[0].clone()), &words[1..])
    } else {
        (None, &words[..])
    };
    let part = (rest.len() > 1).then(|| rest[1..].join(" "));
    Ok(TextQuery {
        color,
        category: rest[0].clone(),
        part,
    })
}

fn morph(pixels: &[bool], width: u32, height: u32, steps: i32) -> Vec<bool> {
    let mut cur = pixels.to_vec();
    let grow = steps > 0;
    for _ in 0..steps.unsigned_abs() {
        let prev = cur.clone();
        for v in 0..height {
            for u in 0..width {
                let i = (v * width + u) as usize;
                let neighbors = [
                    (u > 0).then(|| i - 1),
                    (u + 1 < width).then(|| i + 1),
                    (v > 0).then(|| i - width as usize),
                    (v + 1 < height).then(|| i + width as usize),
                ];
                if grow {
                    if !prev[i] && neighbors.iter().flatten().any(|&j| prev[j]) {
                        cur[i] = true;
                    }
                } else if prev[i] && neighbors.iter().any(|n| n.is_none_or(|j| !prev[j])) {
                    cur[i] = false;
                }
            }
        }
    }
    cur
}

/// Indices of pixels whose hit point falls inside the named part of `obj`.
pub(crate) fn part_pixels(
    obj: &ObjectInstance,
    part: &str,
    camera: &CameraModel,
    depth: &[f64],
    owned: impl Iterator<Item = usize>,
) -> Vec<usize> {
    let Some(part) = obj.part(part) else { return Vec::new() };
    owned
        .filter(|&i| {
            let (u, v) = (i as u32 % camera.width, i as u32 / camera.width);
            camera
                .backproject(u as f64, v as f64, depth[i])
                .map(|p| part.contains_local(&obj.to_local(&p), 1e-6))
                .unwrap_or(false)
        })
        .collect()
}

/// One mask per visible object (or part) matching the query, sorted by
/// confidence descending. With noise disabled the confidence is exactly the
/// visible fraction of the object or part.
pub fn segment_by_text(
    obs: &Observation,
    scene: &Scene,
    query: &str,
    noise: SegmentNoise,
) -> Result<Vec<SegmentMask>, PerceptionError> {
    let q = parse_query(query)?;
    let camera = &obs.camera;
    let mut found: Vec<(f64, ObjectId, SegmentMask)> = Vec::new();
    let mut objects: Vec<&ObjectInstance> = scene.objects.iter().filter(|o| q.matches(o)).collect();
    objects.sort_by_key(|o| o.id);
    for obj in objects {
        let visible = obs
            .pixel_owner
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == PixelOwner::Object(obj.id))
            .map(|(i, _)| i);
        let (visible, solo_count): (Vec<usize>, usize) = match &q.part {
            None => {
                let v: Vec<usize> = visible.collect();
                if v.is_empty() {
                    continue;
                }
                (v, solo_pixels(scene, camera, obj.id).len())
            }
            Some(part) => {
                let v = part_pixels(obj, part, camera, &obs.depth, visible);
                if v.is_empty() {
                    continue;
                }
                let solo = rasterize(scene, camera, false, |o| o.id == obj.id);
                let solo_owned = solo
                    .owner
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| **o == PixelOwner::Object(obj.id))
                    .map(|(i, _)| i);
                let n = part_pixels(obj, part, camera, &solo.depth, solo_owned).len();
                (v, n)
            }
        };
        let mut conf = visible.len() as f64 / solo_count.max(1) as f64;
        let mut bitmap = vec![false; (obs.width * obs.height) as usize];
        for i in &visible {
            bitmap[*i] = true;
        }
        if noise.dilation_px != 0 {
            bitmap = morph(&bitmap, obs.width, obs.height, noise.dilation_px);
        }
        if noise.confidence_jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(noise.seed, obj.id as u64));
            conf *= 1.0 + noise.confidence_jitter * rng.gen_range(-1.0..=1.0);
            conf = conf.clamp(0.0, 1.0);
        }
        let label = match &q.part {
            Some(p) => format!("{} {} {}", obj.color, obj.category, p),
            None => obj.label(),
        };
        if let Some(mask) = SegmentMask::from_pixels(obs.width, obs.height, bitmap, conf, label) {
            found.push((conf, obj.id, mask));
        }
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(found.into_iter().map(|(_, _, m)| m).collect())
}

/// Visible fraction of every object that projects to at least one pixel
/// when rendered alone.
pub fn visible_fractions(scene: &Scene, camera: &CameraModel) -> BTreeMap<ObjectId, f64> {
    let full = rasterize(scene, camera, true, |_| true);
    let mut owned: BTreeMap<ObjectId, usize> = BTreeMap::new();
    for o in &full.owner {
        if let PixelOwner::Object(id) = o {
            *owned.entry(*id).or_default() += 1;
        }
    }
    scene
        .objects
        .iter()
        .filter_map(|o| {
            let alone = solo_pixels(scene, camera, o.id).len();
            (alone > 0).then(|| (o.id, owned.get(&o.id).copied().unwrap_or(0) as f64 / alone as f64))
        })
        .collect()
}

/// Pixels owned by `id` in the full render over pixels owned when rendered
/// alone.
pub fn visible_fraction(scene: &Scene, camera: &CameraModel, id: ObjectId) -> Result<f64, PerceptionError> {
    if scene.object(id).is_none() {
        return Err(PerceptionError::UnknownObject(id));
    }
    let alone = solo_pixels(scene, camera, id).len();
    if alone == 0 {
        return Err(PerceptionError::ZeroProjection(id));
    }
    let full = rasterize(scene, camera, true, |_| true);
    let owned = full.owner.iter().filter(|o| **o == PixelOwner::Object(id)).count();
    Ok(owned as f64 / alone as f64)
}

#[derive(Debug, Clone, Copy)]
pub enum CropRegion<'a> {
    Box(BBox),
    Mask(&'a SegmentMask),
}

/// Cloud points whose source pixel lies in the region, with their colors,
/// pixels and (if present) normals.
pub fn crop_cloud(obs: &Observation, region: CropRegion<'_>) -> Result<PointCloud, PerceptionError> {
    let keep: Box<dyn Fn(u32, u32) -> bool + '_> = match region {
        CropRegion::Box(b) => {
            let b = b.intersect(&obs.image_box()).ok_or(PerceptionError::RegionOutsideImage)?;
            Box::new(move |u, v| b.contains(u, v))
        }
        CropRegion::Mask(m) => {
            if m.width != obs.width || m.height != obs.height || m.bbox.intersect(&obs.image_box()).is_none() {
                return Err(PerceptionError::RegionOutsideImage);
            }
            Box::new(move |u, v| m.contains(u, v))
        }
    };
    let idx: Vec<usize> = obs
        .cloud
        .source_pixels
        .iter()
        .enumerate()
        .filter(|(_, px)| keep(px[0], px[1]))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(PerceptionError::EmptyCrop);
    }
    Ok(obs.cloud.select(&idx))
}
