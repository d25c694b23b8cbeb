//! Desk-scale optimizer: central finite-difference gradients over selected
//! parameter groups, gradient steps with backtracking so the loss never
//! increases.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appearance::SpecularHead;
use crate::error::{Error, Result};
use crate::mat3::{rotation_exp, AxisAngle, Mat3, Vec3};
use crate::mesh::TriMesh;
use crate::render::{render_with_specular, Camera, Image, RenderBuffers, RenderOptions};
use crate::rig::{DeformMethod, DeformedSurfel, PoseCache, Rig};

use super::terms::{
    binding_regularizers, depth_distortion, eye_opacity_loss, normal_consistency, photometric_loss, EnergyBreakdown,
    EnergyConfig,
};

#[derive(Clone, Debug)]
pub struct View {
    pub camera: Camera,
    pub target: Image,
}

/// Everything a fit needs: the rig, one deformed pose and the views.
#[derive(Clone, Debug)]
pub struct FitScene {
    pub rig: Rig,
    pub pose: TriMesh,
    pub method: DeformMethod,
    pub head: Option<SpecularHead>,
    pub views: Vec<View>,
    pub render: RenderOptions,
    cache: PoseCache,
}

impl FitScene {
    pub fn new(
        rig: Rig,
        pose: TriMesh,
        method: DeformMethod,
        head: Option<SpecularHead>,
        views: Vec<View>,
        render: RenderOptions,
    ) -> Result<Self> {
        let cache = rig.pose(&pose)?;
        for v in &views {
            v.camera.validate()?;
            if v.target.width != v.camera.width || v.target.height != v.camera.height {
                return Err(Error::DimensionMismatch(format!(
                    "target {}x{} for a {}x{} camera",
                    v.target.width, v.target.height, v.camera.width, v.camera.height
                )));
            }
        }
        Ok(FitScene {
            rig,
            pose,
            method,
            head,
            views,
            render,
            cache,
        })
    }

    pub fn deformed(&self) -> Result<Vec<DeformedSurfel>> {
        self.rig.deform_with(&self.cache, self.method)
    }

    pub fn render_views(&self) -> Result<Vec<RenderBuffers>> {
        let surfels = self.deformed()?;
        self.views
            .iter()
            .map(|v| render_with_specular(&surfels, self.head.as_ref(), &v.camera, &self.render))
            .collect()
    }

    /// Image terms averaged over views plus the surfel-only terms.
    pub fn energy(&self, cfg: &EnergyConfig) -> Result<EnergyBreakdown> {
        let buffers = self.render_views()?;
        let n = self.views.len().max(1) as f64;
        let (mut photo, mut depth, mut normal) = (0.0, 0.0, 0.0);
        for (b, v) in buffers.iter().zip(&self.views) {
            photo += photometric_loss(&b.color_image(), &v.target, cfg.beta)?;
            if cfg.lambda_depth > 0.0 {
                depth += depth_distortion(b);
            }
            if cfg.lambda_normal > 0.0 {
                normal += normal_consistency(b, &v.camera);
            }
        }
        let s = &self.rig.surfels;
        let (position, scaling) = binding_regularizers(s, &self.rig.canonical, &self.rig.frames, cfg.eps_pos, cfg.eps_scale);
        Ok(EnergyBreakdown::from_terms(
            [photo / n, depth / n, normal / n, eye_opacity_loss(s), position, scaling],
            cfg,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    /// Opacity through its logit.
    Opacity,
    /// All SH coefficients.
    Color,
    BlendLogits,
    /// Lobe sharpness and amplitude through softplus, network weights raw.
    Specular,
    Position,
    /// Axis-angle increment applied on the left of the starting frame.
    Rotation,
    /// Log of the tangent scales.
    Scale,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 7] = [
        ParamGroup::Opacity,
        ParamGroup::Color,
        ParamGroup::BlendLogits,
        ParamGroup::Specular,
        ParamGroup::Position,
        ParamGroup::Rotation,
        ParamGroup::Scale,
    ];

    /// Central-difference half step.
    ///
    /// Steps are large enough that the small jumps at the splat cutoff and
    /// at early termination stay below the true slope.
    pub fn fd_step(self) -> f64 {
        match self {
            ParamGroup::BlendLogits => 0.05,
            ParamGroup::Specular => 1e-4,
            _ => 1e-3,
        }
    }

    pub fn default_rate(self) -> f64 {
        match self {
            ParamGroup::Opacity | ParamGroup::Color | ParamGroup::BlendLogits => 1.0,
            ParamGroup::Specular => 0.1,
            ParamGroup::Position => 0.01,
            ParamGroup::Rotation | ParamGroup::Scale => 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub iterations: usize,
    pub groups: Vec<ParamGroup>,
    /// Base gradient step per group; missing groups use their default.
    pub rates: BTreeMap<ParamGroup, f64>,
    pub max_backtracks: usize,
    pub grow: f64,
    pub shrink: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            iterations: 100,
            groups: vec![ParamGroup::Opacity, ParamGroup::Color],
            rates: BTreeMap::new(),
            max_backtracks: 30,
            grow: 1.2,
            shrink: 0.5,
        }
    }
}

impl FitOptions {
    pub fn rate(&self, g: ParamGroup) -> f64 {
        self.rates.get(&g).copied().unwrap_or_else(|| g.default_rate())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Slot {
    Opacity(usize),
    Color(usize, usize, usize),
    Logit(usize, usize),
    Specular(usize),
    Position(usize, usize),
    Rotation(usize, usize),
    Scale(usize, usize),
}

impl Slot {
    fn group(self) -> ParamGroup {
        match self {
            Slot::Opacity(..) => ParamGroup::Opacity,
            Slot::Color(..) => ParamGroup::Color,
            Slot::Logit(..) => ParamGroup::BlendLogits,
            Slot::Specular(..) => ParamGroup::Specular,
            Slot::Position(..) => ParamGroup::Position,
            Slot::Rotation(..) => ParamGroup::Rotation,
            Slot::Scale(..) => ParamGroup::Scale,
        }
    }
}

const OPACITY_CLAMP: f64 = 1e-6;

fn logit(p: f64) -> f64 {
    let p = p.clamp(OPACITY_CLAMP, 1.0 - OPACITY_CLAMP);
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn inv_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.max(1e-12).exp_m1().ln()
    }
}

/// Flat view of the trainable parameters of a starting scene.
struct Layout {
    slots: Vec<Slot>,
    base_rotation: Vec<Mat3>,
    lobe_params: usize,
}

impl Layout {
    fn new(scene: &FitScene, groups: &[ParamGroup], freeze_eyes: bool) -> Self {
        let has = |g| groups.contains(&g);
        let mut slots = Vec::new();
        let surfels = &scene.rig.surfels;
        for (i, s) in surfels.iter().enumerate() {
            let frozen = freeze_eyes && s.eye;
            if has(ParamGroup::Opacity) {
                slots.push(Slot::Opacity(i));
            }
            if has(ParamGroup::Color) {
                for k in 0..s.sh.coeffs.len() {
                    for c in 0..3 {
                        slots.push(Slot::Color(i, k, c));
                    }
                }
            }
            if has(ParamGroup::Position) && !frozen {
                slots.extend((0..3).map(|a| Slot::Position(i, a)));
            }
            if has(ParamGroup::Rotation) && !frozen {
                slots.extend((0..3).map(|a| Slot::Rotation(i, a)));
            }
            if has(ParamGroup::Scale) {
                slots.extend((0..2).map(|a| Slot::Scale(i, a)));
            }
        }
        if has(ParamGroup::BlendLogits) && scene.method == DeformMethod::Jbs {
            for (t, row) in scene.rig.topology.logits.iter().enumerate() {
                slots.extend((0..row.len()).map(|j| Slot::Logit(t, j)));
            }
        }
        let mut lobe_params = 0;
        if let (true, Some(head)) = (has(ParamGroup::Specular), &scene.head) {
            lobe_params = 3 * head.lobes.len();
            slots.extend((0..head.param_count()).map(Slot::Specular));
        }
        Layout {
            slots,
            base_rotation: surfels.iter().map(|s| s.rotation()).collect(),
            lobe_params,
        }
    }

    fn pack(&self, scene: &FitScene) -> Vec<f64> {
        let head_params = scene.head.as_ref().map(|h| h.params());
        self.slots
            .iter()
            .map(|&slot| {
                let s = &scene.rig.surfels;
                match slot {
                    Slot::Opacity(i) => logit(s[i].opacity),
                    Slot::Color(i, k, c) => s[i].sh.coeffs[k][c],
                    Slot::Logit(t, j) => scene.rig.topology.logits[t][j],
                    Slot::Specular(p) => {
                        let v = head_params.as_ref().map_or(0.0, |h| h[p]);
                        if p < self.lobe_params {
                            inv_softplus(v)
                        } else {
                            v
                        }
                    }
                    Slot::Position(i, a) => s[i].offset[a],
                    Slot::Rotation(..) => 0.0,
                    Slot::Scale(i, a) => s[i].scales[a].ln(),
                }
            })
            .collect()
    }

    fn unpack(&self, base: &FitScene, x: &[f64]) -> Result<FitScene> {
        let mut scene = base.clone();
        let mut head_params = scene.head.as_ref().map(|h| h.params());
        let mut omegas: BTreeMap<usize, Vec3> = BTreeMap::new();
        for (&slot, &v) in self.slots.iter().zip(x) {
            let s = &mut scene.rig.surfels;
            match slot {
                Slot::Opacity(i) => s[i].opacity = sigmoid(v),
                Slot::Color(i, k, c) => s[i].sh.coeffs[k][c] = v,
                Slot::Logit(t, j) => scene.rig.topology.logits[t][j] = v,
                Slot::Specular(p) => {
                    if let Some(h) = head_params.as_mut() {
                        h[p] = if p < self.lobe_params { softplus(v) } else { v };
                    }
                }
                Slot::Position(i, a) => s[i].offset[a] = v,
                Slot::Rotation(i, a) => omegas.entry(i).or_insert_with(Vec3::zeros)[a] = v,
                Slot::Scale(i, a) => s[i].scales[a] = v.exp(),
            }
        }
        for (i, w) in omegas {
            let r = rotation_exp(&AxisAngle(w)) * self.base_rotation[i];
            scene.rig.surfels[i].set_rotation(&r);
        }
        if let (Some(h), Some(p)) = (scene.head.as_mut(), head_params) {
            h.set_params(&p)?;
        }
        Ok(scene)
    }
}

/// One line of the fit log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iteration: usize,
    pub photo: f64,
    pub depth: f64,
    pub normal: f64,
    pub eye: f64,
    pub position: f64,
    pub scaling: f64,
    pub total: f64,
    pub accepted: bool,
    pub backtracks: usize,
    pub step_scale: f64,
    pub steps: BTreeMap<ParamGroup, f64>,
}

impl LogRecord {
    fn new(iteration: usize, b: &EnergyBreakdown, accepted: bool, backtracks: usize, scale: f64, opts: &FitOptions) -> Self {
        LogRecord {
            iteration,
            photo: b.photo,
            depth: b.depth,
            normal: b.normal,
            eye: b.eye,
            position: b.position,
            scaling: b.scaling,
            total: b.total,
            accepted,
            backtracks,
            step_scale: scale,
            steps: opts.groups.iter().map(|&g| (g, opts.rate(g) * scale)).collect(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("log records serialize")
    }
}

#[derive(Clone, Debug)]
pub struct FitState {
    pub iteration: usize,
    pub initial: EnergyBreakdown,
    pub breakdown: EnergyBreakdown,
    /// Multiplier applied to every group's base step.
    pub step_scale: f64,
    pub log: Vec<LogRecord>,
    pub scene: FitScene,
}

impl FitState {
    pub fn log_lines(&self) -> String {
        self.log.iter().map(|r| r.to_json_line() + "\n").collect()
    }
}

fn checked(iteration: usize, b: EnergyBreakdown) -> Result<EnergyBreakdown> {
    match b.non_finite() {
        Some(term) => Err(Error::DivergedLoss {
            iteration,
            term: term.to_string(),
        }),
        None => Ok(b),
    }
}

/// Central-difference gradient of the total at `x`.
fn gradient(layout: &Layout, base: &FitScene, x: &[f64], cfg: &EnergyConfig, iteration: usize) -> Result<Vec<f64>> {
    (0..x.len())
        .into_par_iter()
        .map(|k| {
            let h = layout.slots[k].group().fd_step();
            let probe = |sign: f64| -> Result<f64> {
                let mut xp = x.to_vec();
                xp[k] += sign * h;
                let e = checked(iteration, layout.unpack(base, &xp)?.energy(cfg)?)?;
                Ok(e.total)
            };
            Ok((probe(1.0)? - probe(-1.0)?) / (2.0 * h))
        })
        .collect()
}

/// Minimizes the total energy over the groups in `opts`.
///
/// Eye surfels keep their position and rotation when `cfg.freeze_eyes`
/// is set. With zero iterations the scene is returned untouched.
pub fn fit(scene: FitScene, cfg: &EnergyConfig, opts: &FitOptions) -> Result<FitState> {
    cfg.validate()?;
    let layout = Layout::new(&scene, &opts.groups, cfg.freeze_eyes);
    let initial = checked(0, scene.energy(cfg)?)?;
    let mut state = FitState {
        iteration: 0,
        initial,
        breakdown: initial,
        step_scale: 1.0,
        log: vec![LogRecord::new(0, &initial, true, 0, 1.0, opts)],
        scene,
    };
    if opts.iterations == 0 || layout.slots.is_empty() {
        return Ok(state);
    }
    let base = state.scene.clone();
    let mut x = layout.pack(&base);
    let rates: Vec<f64> = layout.slots.iter().map(|s| opts.rate(s.group())).collect();
    for it in 1..=opts.iterations {
        let g = gradient(&layout, &base, &x, cfg, it)?;
        let mut accepted = None;
        let mut backtracks = 0;
        while backtracks <= opts.max_backtracks {
            let trial: Vec<f64> = x
                .iter()
                .zip(&g)
                .zip(&rates)
                .map(|((xi, gi), r)| xi - state.step_scale * r * gi)
                .collect();
            let candidate = layout.unpack(&base, &trial)?;
            let e = checked(it, candidate.energy(cfg)?)?;
            if e.total < state.breakdown.total {
                accepted = Some((trial, candidate, e));
                break;
            }
            state.step_scale *= opts.shrink;
            backtracks += 1;
        }
        let ok = accepted.is_some();
        if let Some((trial, candidate, e)) = accepted {
            x = trial;
            state.scene = candidate;
            state.breakdown = e;
            state.step_scale *= opts.grow;
        }
        state.iteration = it;
        state
            .log
            .push(LogRecord::new(it, &state.breakdown, ok, backtracks, state.step_scale, opts));
        if !ok && state.step_scale < 1e-12 {
            break;
        }
    }
    Ok(state)
}
