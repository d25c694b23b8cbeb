use crate::energy::{fit, FitScene, FitState, ParamGroup, View};
use crate::error::{Error, Result};
use crate::io::{load_png, save_surfel_set, SurfelSetFile};

use super::{write, Context, Outcome};

/// Fits the configured groups against the target image and writes
/// `fitted.json` and the line-JSON `fit_log.jsonl`.
pub fn cmd_fit(ctx: &Context) -> Result<(Outcome, FitState)> {
    let fit_cfg = ctx
        .config
        .fit
        .as_ref()
        .ok_or_else(|| Error::Config("fit block is required".into()))?;
    let target = load_png(&fit_cfg.target)?;
    let loaded = ctx.rig()?;
    let camera = ctx.camera()?;
    let pose = match ctx.deformed_mesh()? {
        Some(m) => m,
        None => loaded.rig.canonical.clone(),
    };
    let scene = FitScene::new(
        loaded.rig,
        pose,
        ctx.config.method,
        loaded.head,
        vec![View { camera, target }],
        ctx.render_options(),
    )?;
    let opts = &fit_cfg.options;
    let state = fit(scene, &ctx.config.energy, opts)?;

    let dir = ctx.out_dir()?;
    let mut files = Vec::new();
    let keep_blend = loaded.had_blend || opts.groups.contains(&ParamGroup::BlendLogits);
    let rig = &state.scene.rig;
    let set = SurfelSetFile::new(&rig.surfels, keep_blend.then_some(&rig.topology), state.scene.head.as_ref());
    let fitted = dir.join("fitted.json");
    save_surfel_set(&set, &fitted)?;
    files.push(fitted);
    write(dir.join("fit_log.jsonl"), &state.log_lines(), &mut files)?;

    let summary = format!(
        "fit {} iterations: total {:.6e} -> {:.6e}, photometric {:.6e} -> {:.6e}",
        state.iteration, state.initial.total, state.breakdown.total, state.initial.photo, state.breakdown.photo
    );
    Ok((Outcome { summary, files }, state))
}
