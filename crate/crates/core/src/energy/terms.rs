use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::Vec3;
use crate::mesh::{TriMesh, TriangleFrame};
use crate::render::{Camera, Image, RenderBuffers};
use crate::rig::Surfel;

use super::ssim::dssim;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub lambda_depth: f64,
    pub lambda_normal: f64,
    pub lambda_eye: f64,
    /// Weight of L1 in the photometric mix; D-SSIM gets `1 − beta`.
    pub beta: f64,
    pub eps_pos: f64,
    pub eps_scale: f64,
    pub lambda_position: f64,
    pub lambda_scaling: f64,
    /// Keep eye surfels' position and rotation out of the fit.
    pub freeze_eyes: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            lambda_depth: 100.0,
            lambda_normal: 0.05,
            lambda_eye: 0.1,
            beta: 0.8,
            eps_pos: 1.0,
            eps_scale: 0.6,
            lambda_position: 0.01,
            lambda_scaling: 0.01,
            freeze_eyes: true,
        }
    }
}

impl EnergyConfig {
    /// Only the photometric term is active.
    pub fn photometric_only() -> Self {
        EnergyConfig {
            lambda_depth: 0.0,
            lambda_normal: 0.0,
            lambda_eye: 0.0,
            lambda_position: 0.0,
            lambda_scaling: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            ("lambda_depth", self.lambda_depth),
            ("lambda_normal", self.lambda_normal),
            ("lambda_eye", self.lambda_eye),
            ("lambda_position", self.lambda_position),
            ("lambda_scaling", self.lambda_scaling),
            ("eps_pos", self.eps_pos),
            ("eps_scale", self.eps_scale),
        ];
        for (name, v) in lambdas {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        Ok(())
    }
}

/// Unweighted term values and their weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub photo: f64,
    pub depth: f64,
    pub normal: f64,
    pub eye: f64,
    pub position: f64,
    pub scaling: f64,
    pub total: f64,
}

pub const TERM_NAMES: [&str; 6] = ["photo", "depth", "normal", "eye", "position", "scaling"];

impl EnergyBreakdown {
    pub fn from_terms(terms: [f64; 6], cfg: &EnergyConfig) -> Self {
        let mut b = EnergyBreakdown {
            photo: terms[0],
            depth: terms[1],
            normal: terms[2],
            eye: terms[3],
            position: terms[4],
            scaling: terms[5],
            total: 0.0,
        };
        b.total = compensated_sum(&b.weighted(cfg));
        b
    }

    pub fn terms(&self) -> [f64; 6] {
        [self.photo, self.depth, self.normal, self.eye, self.position, self.scaling]
    }

    /// Per-term contributions to the total.
    pub fn weighted(&self, cfg: &EnergyConfig) -> [f64; 6] {
        [
            self.photo,
            cfg.lambda_depth * self.depth,
            cfg.lambda_normal * self.normal,
            cfg.lambda_eye * self.eye,
            cfg.lambda_position * self.position,
            cfg.lambda_scaling * self.scaling,
        ]
    }

    /// First term that is not finite.
    pub fn non_finite(&self) -> Option<&'static str> {
        let t = self.terms();
        TERM_NAMES
            .iter()
            .zip(t)
            .find(|(_, v)| !v.is_finite())
            .map(|(n, _)| *n)
            .or((!self.total.is_finite()).then_some("total"))
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn l1(a: &Image, b: &Image) -> Result<f64> {
    a.same_shape(b)?;
    let s: f64 = a.pixels.iter().zip(&b.pixels).map(|(p, q)| (p - q).abs().sum()).sum();
    Ok(s / (3 * a.pixels.len()).max(1) as f64)
}

/// `β·L1 + (1 − β)·DSSIM`.
pub fn photometric_loss(rendered: &Image, target: &Image, beta: f64) -> Result<f64> {
    Ok(beta * l1(rendered, target)? + (1.0 - beta) * dssim(rendered, target)?)
}

/// Ordered-pair sum `Σ_{i≠j} ωᵢωⱼ|tᵢ − tⱼ|` for one pixel.
pub fn pixel_distortion(weights: &[f64], depths: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..weights.len() {
        for j in 0..weights.len() {
            if i != j {
                s += weights[i] * weights[j] * (depths[i] - depths[j]).abs();
            }
        }
    }
    s
}

/// Pixel-averaged depth distortion.
pub fn depth_distortion(buffers: &RenderBuffers) -> f64 {
    let n = buffers.hits.len();
    if n == 0 {
        return 0.0;
    }
    let s: f64 = buffers
        .hits
        .iter()
        .map(|h| {
            let w: Vec<f64> = h.iter().map(|h| h.weight).collect();
            let t: Vec<f64> = h.iter().map(|h| h.t).collect();
            pixel_distortion(&w, &t)
        })
        .sum();
    s / n as f64
}

/// Per-pixel normal consistency `Σωᵢ(1 − nᵢ·N)`.
///
/// `N` is the camera-facing normal of the surface obtained by
/// back-projecting the depth buffer, with central differences. Pixels
/// without hits, or with an uncovered 4-neighbor, are `None`.
pub fn normal_consistency_map(buffers: &RenderBuffers, camera: &Camera) -> Vec<Option<f64>> {
    let (w, h) = (buffers.width, buffers.height);
    let basis = camera.basis();
    let covered = |x: usize, y: usize| !buffers.hits[y * w + x].is_empty();
    let point = |x: usize, y: usize| {
        let d = camera.ray_dir(&basis, x as f64, y as f64);
        camera.position.coords + buffers.depth[y * w + x] * d
    };
    let mut out = vec![None; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            if !(covered(x, y) && covered(x - 1, y) && covered(x + 1, y) && covered(x, y - 1) && covered(x, y + 1)) {
                continue;
            }
            let dx = point(x + 1, y) - point(x - 1, y);
            let dy = point(x, y + 1) - point(x, y - 1);
            let c = dx.cross(&dy);
            if !(c.norm() > 0.0) {
                continue;
            }
            let mut n: Vec3 = c.normalize();
            if n.dot(&camera.ray_dir(&basis, x as f64, y as f64)) > 0.0 {
                n = -n;
            }
            let v: f64 = buffers.hits[y * w + x]
                .iter()
                .map(|hit| hit.weight * (1.0 - hit.normal.dot(&n)))
                .sum();
            out[y * w + x] = Some(v);
        }
    }
    out
}

/// Mean of the per-pixel map over the pixels where it is defined.
pub fn normal_consistency(buffers: &RenderBuffers, camera: &Camera) -> f64 {
    let map = normal_consistency_map(buffers, camera);
    let vals: Vec<f64> = map.into_iter().flatten().collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// `Σ_{i∈E} (1 − αᵢ)²`.
pub fn eye_opacity_loss(surfels: &[Surfel]) -> f64 {
    surfels.iter().filter(|s| s.eye).fold(0.0, |acc, s| acc + (1.0 - s.opacity).powi(2))
}

/// Single-view energy of rendered buffers against a target image.
pub fn total_energy(
    buffers: &RenderBuffers,
    target: &Image,
    camera: &Camera,
    surfels: &[Surfel],
    mesh: &TriMesh,
    frames: &[TriangleFrame],
    cfg: &EnergyConfig,
) -> Result<EnergyBreakdown> {
    let photo = photometric_loss(&buffers.color_image(), target, cfg.beta)?;
    let (position, scaling) = binding_regularizers(surfels, mesh, frames, cfg.eps_pos, cfg.eps_scale);
    Ok(EnergyBreakdown::from_terms(
        [
            photo,
            depth_distortion(buffers),
            normal_consistency(buffers, camera),
            eye_opacity_loss(surfels),
            position,
            scaling,
        ],
        cfg,
    ))
}

/// Hinge penalties on offsets and scales, both in units of the parent's
/// mean edge length. Offsets are measured along the parent's frame axes.
///
/// Returns `(L_position, L_scaling)`, each a mean over surfels.
pub fn binding_regularizers(
    surfels: &[Surfel],
    mesh: &TriMesh,
    frames: &[TriangleFrame],
    eps_pos: f64,
    eps_scale: f64,
) -> (f64, f64) {
    if surfels.is_empty() {
        return (0.0, 0.0);
    }
    let hinge = |v: f64, eps: f64| (v.abs() - eps).max(0.0).powi(2);
    let (mut pos, mut scale) = (0.0, 0.0);
    for s in surfels {
        let ell = mesh.mean_edge_length(s.parent);
        let local = frames[s.parent].ga.rotation.transpose() * s.offset / ell;
        pos += local.iter().map(|&v| hinge(v, eps_pos)).sum::<f64>();
        scale += s.scales.iter().map(|&v| hinge(v / ell, eps_scale)).sum::<f64>();
    }
    let n = surfels.len() as f64;
    (pos / n, scale / n)
}
