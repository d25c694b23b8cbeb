//! Renders a slightly perturbed copy of the toy scene and prints every
//! energy term against the unperturbed render.

use surfhead::energy::{depth_distortion, normal_consistency, photometric_loss, EnergyBreakdown, EnergyConfig, TERM_NAMES};
use surfhead::mesh::Point;
use surfhead::render::{render, RenderOptions};
use surfhead::scenes;

fn main() -> surfhead::Result<()> {
    let camera = scenes::camera(Point::new(0.0, 0.0, 3.0), 96, 72, 40.0);
    let opts = RenderOptions::default();
    let mut rig = scenes::golden_scene()?;
    let target = render(&rig.rest()?, &camera, &opts)?.color_image();
    rig.surfels[0].opacity = 0.4;
    rig.surfels[1].offset.x += 0.05;
    let b = render(&rig.rest()?, &camera, &opts)?;

    let cfg = EnergyConfig::default();
    let terms = [
        photometric_loss(&b.color_image(), &target, cfg.beta)?,
        depth_distortion(&b),
        normal_consistency(&b, &camera),
        0.0,
        0.0,
        0.0,
    ];
    let e = EnergyBreakdown::from_terms(terms, &cfg);
    for (name, (raw, w)) in TERM_NAMES.iter().zip(terms.iter().zip(e.weighted(&cfg))) {
        println!("{name:>8}: {raw:.6e} (weighted {w:.6e})");
    }
    println!("   total: {:.6e}", e.total);
    Ok(())
}
