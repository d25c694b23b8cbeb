use crate::error::Result;
use crate::io::save_buffers;
use crate::render::{render_with_specular, RenderBuffers};

use super::{Context, Outcome};

/// Deforms (when a pose is configured), renders and saves the buffers.
pub fn cmd_render(ctx: &Context) -> Result<(Outcome, RenderBuffers)> {
    let loaded = ctx.rig()?;
    let camera = ctx.camera()?;
    let surfels = match ctx.deformed_mesh()? {
        Some(pose) => loaded.rig.deform(&pose, ctx.config.method)?,
        None => loaded.rig.rest()?,
    };
    let buffers = render_with_specular(&surfels, loaded.head.as_ref(), &camera, &ctx.render_options())?;
    let [near, far] = ctx.config.depth_range;
    let files = save_buffers(&buffers, ctx.out_dir()?, near, far)?;
    let summary = format!(
        "rendered {} surfels at {}x{}; max weight-closure residual {:.3e}",
        surfels.len(),
        camera.width,
        camera.height,
        buffers.max_closure_residual()
    );
    Ok((Outcome { summary, files }, buffers))
}
