use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

use super::Observation;

pub fn write_rgb_png(obs: &Observation, path: &Path) -> image::ImageResult<()> {
    let img = ImageBuffer::from_fn(obs.width, obs.height, |u, v| Rgb(obs.rgb[obs.index(u, v)]));
    img.save(path)
}

/// Depth as 16-bit millimeters; 0 where nothing was hit.
pub fn write_depth_png(obs: &Observation, path: &Path) -> image::ImageResult<()> {
    let img = ImageBuffer::from_fn(obs.width, obs.height, |u, v| {
        let mm = (obs.depth[obs.index(u, v)] * 1000.0).round().clamp(0.0, u16::MAX as f64);
        Luma([mm as u16])
    });
    img.save(path)
}

pub(crate) fn encode_rgb_png(obs: &Observation) -> Vec<u8> {
    let img: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_fn(obs.width, obs.height, |u, v| Rgb(obs.rgb[obs.index(u, v)]));
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .expect("in-memory png encoding");
    buf.into_inner()
}
