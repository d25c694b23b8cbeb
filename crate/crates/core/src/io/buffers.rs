//! PNG output of render buffers and PNG input of target images.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageBuffer, Luma, RgbImage};

use crate::appearance::Rgb;
use crate::error::{Error, Result};
use crate::render::{Image, RenderBuffers};

pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn normal_to_rgb8(n: &Rgb) -> [u8; 3] {
    [0, 1, 2].map(|c| to_u8(n[c] * 0.5 + 0.5))
}

/// `(t − near)/(far − near)` clamped to `[0, 1]`, scaled to 16 bits.
pub fn depth_to_u16(t: f64, near: f64, far: f64) -> u16 {
    let x = ((t - near) / (far - near)).clamp(0.0, 1.0);
    (x * 65535.0).round() as u16
}

fn image_err(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_rgb(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = RgbImage::from_fn(img.width as u32, img.height as u32, |x, y| {
        let p = img.get(x as usize, y as usize);
        image::Rgb([to_u8(p.x), to_u8(p.y), to_u8(p.z)])
    });
    buf.save(path).map_err(|e| image_err(path, e))
}

pub fn save_mask(mask: &[bool], width: usize, height: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([if mask[y as usize * width + x as usize] { 255 } else { 0 }])
    });
    buf.save(path).map_err(|e| image_err(path, e))
}

/// Loads an 8- or 16-bit PNG as linear `[0, 1]` RGB.
pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => image_err(path, other),
    })?;
    let rgb = img.to_rgb32f();
    let pixels = rgb
        .pixels()
        .map(|p| Rgb::new(p[0] as f64, p[1] as f64, p[2] as f64))
        .collect();
    Image::new(rgb.width() as usize, rgb.height() as usize, pixels)
}

/// Writes `color.png`, `normal.png`, `depth.png` (16-bit) and
/// `transmittance.png` into `dir` and returns their paths.
pub fn save_buffers(buffers: &RenderBuffers, dir: impl AsRef<Path>, near: f64, far: f64) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if !(far > near) {
        return Err(Error::Config(format!("depth range [{near}, {far}] is empty")));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = (buffers.width as u32, buffers.height as u32);
    let at = |x: u32, y: u32| buffers.index(x as usize, y as usize);

    let color = dir.join("color.png");
    save_rgb(&buffers.color_image(), &color)?;

    let normal = dir.join("normal.png");
    RgbImage::from_fn(w, h, |x, y| image::Rgb(normal_to_rgb8(&buffers.normal[at(x, y)])))
        .save(&normal)
        .map_err(|e| image_err(&normal, e))?;

    let depth = dir.join("depth.png");
    ImageBuffer::<Luma<u16>, Vec<u16>>::from_fn(w, h, |x, y| Luma([depth_to_u16(buffers.depth[at(x, y)], near, far)]))
        .save(&depth)
        .map_err(|e| image_err(&depth, e))?;

    let trans = dir.join("transmittance.png");
    GrayImage::from_fn(w, h, |x, y| Luma([to_u8(buffers.transmittance[at(x, y)])]))
        .save(&trans)
        .map_err(|e| image_err(&trans, e))?;

    Ok(vec![color, normal, depth, trans])
}
