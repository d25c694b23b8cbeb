//! Fits per-triangle blend logits on the hinge seam and compares the result
//! with the uniform-weight starting point.

use surfhead::energy::{fit, EnergyConfig, FitOptions, ParamGroup};
use surfhead::scenes;

fn main() -> surfhead::Result<()> {
    let cfg = EnergyConfig::photometric_only();
    let gray = fit(
        scenes::gray_patch(0.8)?,
        &cfg,
        &FitOptions {
            iterations: 200,
            groups: vec![ParamGroup::Color],
            ..Default::default()
        },
    )?;
    println!("gray patch: color {:.4} after {} iterations", gray.scene.rig.surfels[0].sh.dc_color().x, gray.iteration);

    let scene = scenes::hinge_logit_scene()?;
    let start = scene.energy(&cfg)?.photo;
    let st = fit(
        scene,
        &cfg,
        &FitOptions {
            iterations: 200,
            groups: vec![ParamGroup::BlendLogits],
            ..Default::default()
        },
    )?;
    for r in st.log.iter().step_by(25) {
        println!("{}", r.to_json_line());
    }
    println!("hinge seam: photometric {start:.4e} -> {:.4e} ({:.2}%)", st.breakdown.photo, 100.0 * st.breakdown.photo / start);
    Ok(())
}
