use rayon::prelude::*;

use crate::appearance::{total_color, Rgb, SpecularHead};
use crate::error::{Error, Result};
use crate::mat3::Vec3;
use crate::mesh::Point;
use crate::rig::DeformedSurfel;

use super::camera::{Camera, CameraBasis};
use super::image::Image;

pub const DEFAULT_CUTOFF: f64 = 3.0;
pub const T_NEAR: f64 = 1e-4;
pub const EARLY_STOP: f64 = 1e-4;
/// `|dir·n̂|` below which a ray counts as parallel to the splat plane.
pub const PARALLEL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub background: Rgb,
    /// Depth reported for pixels without any hit.
    pub far: f64,
    pub cutoff: f64,
    /// Worker count; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            background: Rgb::zeros(),
            far: 100.0,
            cutoff: DEFAULT_CUTOFF,
            threads: None,
        }
    }
}

/// Intersection of a pixel ray with one splat.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatHit {
    pub index: usize,
    pub u: f64,
    pub v: f64,
    pub t: f64,
    /// `exp(−(u²+v²)/2)`.
    pub g: f64,
    /// `α·G`.
    pub alpha: f64,
}

/// A hit after compositing, with its blending weight `ωᵢ = αᵢGᵢ·Πⱼ<ᵢ(1−αⱼGⱼ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedHit {
    pub index: usize,
    pub weight: f64,
    pub t: f64,
    pub normal: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PixelRecord {
    pub color: Rgb,
    pub depth: f64,
    /// Unit, or zero when nothing was hit.
    pub normal: Vec3,
    pub transmittance: f64,
    pub hits: Vec<WeightedHit>,
}

/// Solves `o + t·d = μ + u·h₁ + v·h₂`.
///
/// The returned hit has `index` 0; callers that track surfels fill it in.
pub fn ray_splat_intersect(origin: &Point, dir: &Vec3, ds: &DeformedSurfel, cutoff: f64) -> Option<SplatHit> {
    let (h1, h2) = ds.tangents();
    let n = h1.cross(&h2);
    let nn = n.norm_squared();
    if !(nn > 0.0) {
        return None;
    }
    let denom = dir.dot(&n);
    if denom.abs() <= PARALLEL_EPS * nn.sqrt() {
        return None;
    }
    let t = (ds.position - origin).dot(&n) / denom;
    if !(t > T_NEAR) {
        return None;
    }
    let p = origin + t * dir - ds.position;
    let u = p.cross(&h2).dot(&n) / nn;
    let v = h1.cross(&p).dot(&n) / nn;
    let r2 = u * u + v * v;
    if r2 > cutoff * cutoff {
        return None;
    }
    let g = (-0.5 * r2).exp();
    Some(SplatHit {
        index: 0,
        u,
        v,
        t,
        g,
        alpha: ds.opacity * g,
    })
}

/// Front-to-back compositing of one pixel.
///
/// `colors[i]` and `normals[i]` are the shaded color and camera-facing
/// normal of surfel `i`. Hits are sorted by depth with ties broken by surfel
/// index, and accumulation stops once transmittance drops below `1e-4`.
pub fn composite_pixel(
    hits: &mut [SplatHit],
    colors: &[Rgb],
    normals: &[Vec3],
    background: &Rgb,
    far: f64,
) -> PixelRecord {
    hits.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.index.cmp(&b.index)));
    let mut color = Rgb::zeros();
    let mut normal = Vec3::zeros();
    let mut depth_acc = 0.0;
    let mut weight_acc = 0.0;
    let mut trans = 1.0;
    let mut out = Vec::with_capacity(hits.len());
    for h in hits.iter() {
        let w = h.alpha * trans;
        color += w * colors[h.index];
        normal += w * normals[h.index];
        depth_acc += w * h.t;
        weight_acc += w;
        trans *= 1.0 - h.alpha;
        out.push(WeightedHit {
            index: h.index,
            weight: w,
            t: h.t,
            normal: normals[h.index],
        });
        if trans < EARLY_STOP {
            break;
        }
    }
    color += trans * background;
    let depth = if weight_acc > 0.0 { depth_acc / weight_acc } else { far };
    let norm = normal.norm();
    PixelRecord {
        color,
        depth,
        normal: if norm > 0.0 { normal / norm } else { Vec3::zeros() },
        transmittance: trans,
        hits: out,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderBuffers {
    pub width: usize,
    pub height: usize,
    pub color: Vec<Rgb>,
    pub depth: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub transmittance: Vec<f64>,
    pub hits: Vec<Vec<WeightedHit>>,
}

impl RenderBuffers {
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn alpha(&self, i: usize) -> f64 {
        1.0 - self.transmittance[i]
    }

    pub fn color_image(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.color.clone(),
        }
    }

    /// Largest `|Σωᵢ + T − 1|` over all pixels.
    pub fn max_closure_residual(&self) -> f64 {
        self.hits
            .iter()
            .zip(&self.transmittance)
            .map(|(h, t)| (h.iter().map(|h| h.weight).sum::<f64>() + t - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn from_rows(width: usize, height: usize, rows: Vec<Vec<PixelRecord>>) -> Self {
        let n = width * height;
        let mut b = RenderBuffers {
            width,
            height,
            color: Vec::with_capacity(n),
            depth: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            transmittance: Vec::with_capacity(n),
            hits: Vec::with_capacity(n),
        };
        for p in rows.into_iter().flatten() {
            b.color.push(p.color);
            b.depth.push(p.depth);
            b.normal.push(p.normal);
            b.transmittance.push(p.transmittance);
            b.hits.push(p.hits);
        }
        b
    }
}

/// Per-surfel color and camera-facing normal.
///
/// The view direction runs from the surfel toward the camera. The specular
/// head, when given, only shades eye surfels.
pub fn shade_surfels(
    surfels: &[DeformedSurfel],
    head: Option<&SpecularHead>,
    camera: &Camera,
) -> Result<(Vec<Rgb>, Vec<Vec3>)> {
    let mut colors = Vec::with_capacity(surfels.len());
    let mut normals = Vec::with_capacity(surfels.len());
    for s in surfels {
        let to_cam = camera.position - s.position;
        let d = if to_cam.norm() > 0.0 { to_cam.normalize() } else { -camera.basis().forward };
        let n = if s.normal.dot(&d) < 0.0 { -s.normal } else { s.normal };
        let n_rot = s.blend_rotation.transpose() * n;
        let c = total_color(&s.sh, head.filter(|_| s.eye), &d, &s.blend_rotation, &n_rot)?;
        colors.push(c.map(|v| v.clamp(0.0, 1.0)));
        normals.push(n);
    }
    Ok((colors, normals))
}

/// Inclusive pixel rectangle a splat's cutoff disk can touch.
#[derive(Clone, Copy, Debug)]
struct ScreenBox {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

fn screen_box(s: &DeformedSurfel, camera: &Camera, basis: &CameraBasis, cutoff: f64) -> Option<ScreenBox> {
    let (h1, h2) = s.tangents();
    let mut b = ScreenBox {
        x0: f64::INFINITY,
        x1: f64::NEG_INFINITY,
        y0: f64::INFINITY,
        y1: f64::NEG_INFINITY,
    };
    for (a, c) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let corner = s.position + cutoff * (a * h1 + c * h2);
        // a corner behind the eye makes the projected hull unbounded
        let (x, y, _) = camera.project(basis, &corner)?;
        b.x0 = b.x0.min(x);
        b.x1 = b.x1.max(x);
        b.y0 = b.y0.min(y);
        b.y1 = b.y1.max(y);
    }
    Some(ScreenBox {
        x0: b.x0 - 1.0,
        x1: b.x1 + 1.0,
        y0: b.y0 - 1.0,
        y1: b.y1 + 1.0,
    })
}

pub fn render(surfels: &[DeformedSurfel], camera: &Camera, opts: &RenderOptions) -> Result<RenderBuffers> {
    render_with_specular(surfels, None, camera, opts)
}

/// Renders every pixel independently; output does not depend on the thread count.
pub fn render_with_specular(
    surfels: &[DeformedSurfel],
    head: Option<&SpecularHead>,
    camera: &Camera,
    opts: &RenderOptions,
) -> Result<RenderBuffers> {
    camera.validate()?;
    if let Some(h) = head {
        h.validate()?;
    }
    let (colors, normals) = shade_surfels(surfels, head, camera)?;
    let basis = camera.basis();
    let boxes: Vec<Option<ScreenBox>> = surfels
        .iter()
        .map(|s| screen_box(s, camera, &basis, opts.cutoff))
        .collect();
    let row = |y: usize| -> Vec<PixelRecord> {
        let yf = y as f64;
        let candidates: Vec<usize> = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_none_or(|b| yf >= b.y0 && yf <= b.y1))
            .map(|(i, _)| i)
            .collect();
        let mut hits = Vec::new();
        (0..camera.width)
            .map(|x| {
                let xf = x as f64;
                let dir = camera.ray_dir(&basis, xf, yf);
                hits.clear();
                for &i in &candidates {
                    if boxes[i].is_some_and(|b| xf < b.x0 || xf > b.x1) {
                        continue;
                    }
                    if let Some(h) = ray_splat_intersect(&camera.position, &dir, &surfels[i], opts.cutoff) {
                        hits.push(SplatHit { index: i, ..h });
                    }
                }
                composite_pixel(&mut hits, &colors, &normals, &opts.background, opts.far)
            })
            .collect()
    };
    let rows: Vec<Vec<PixelRecord>> = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| (0..camera.height).into_par_iter().map(row).collect()),
        None => (0..camera.height).into_par_iter().map(row).collect(),
    };
    Ok(RenderBuffers::from_rows(camera.width, camera.height, rows))
}
