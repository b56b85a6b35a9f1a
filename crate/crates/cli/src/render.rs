//! Vorticity images through a blue-white-red diverging colormap.

use std::io::{self, BufWriter};
use std::path::Path;

use vortexmap::{GridDesc, VortField};

/// 8-bit RGB image, rows top to bottom.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

/// `-scale` maps to blue, zero to white, `+scale` to red; values beyond clamp.
pub fn colormap(v: f64, scale: f64) -> [u8; 3] {
    let t = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
    let t = if t.is_nan() { 0.0 } else { t };
    let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
    if t >= 0.0 {
        [255, fade(t), fade(t)]
    } else {
        [fade(t), fade(t), 255]
    }
}

/// The node field in 2D. In 3D the component along `slice_axis`, on its
/// middle plane, seen with the remaining axes increasing right and up.
pub fn vorticity_image(g: &GridDesc, w: &VortField, slice_axis: usize, scale: f64) -> Image {
    let (slot, normal) = if g.dim() == 2 { (0, 2) } else { (slice_axis, slice_axis) };
    let a = w.comp(slot);
    let shape = a.shape();
    let (p, q) = match normal {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mid = shape[normal] / 2;
    let (width, height) = (shape[p], shape[q]);
    let mut rgb = Vec::with_capacity(3 * width * height);
    for row in 0..height {
        for col in 0..width {
            let mut idx = [0; 3];
            idx[normal] = mid;
            idx[p] = col;
            idx[q] = height - 1 - row;
            rgb.extend_from_slice(&colormap(a.get(idx), scale));
        }
    }
    Image { width, height, rgb }
}

pub fn write_png(path: &Path, img: &Image) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(io::Error::other)?;
    writer.write_image_data(&img.rgb).map_err(io::Error::other)?;
    writer.finish().map_err(io::Error::other)
}
