//! Renders the three-surfel toy scene and writes its buffers.
//!
//! `cargo run --example render_scene -- out_dir`

use surfhead::appearance::Rgb;
use surfhead::io::save_buffers;
use surfhead::mesh::Point;
use surfhead::render::{render, RenderOptions};
use surfhead::scenes;

fn main() -> surfhead::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "render_out".into());
    std::fs::create_dir_all(&dir).map_err(|e| surfhead::Error::Io { path: dir.clone().into(), source: e })?;
    let rig = scenes::golden_scene()?;
    let camera = scenes::camera(Point::new(0.0, 0.0, 3.0), 160, 120, 40.0);
    let opts = RenderOptions {
        background: Rgb::new(0.1, 0.1, 0.2),
        ..Default::default()
    };
    let b = render(&rig.rest()?, &camera, &opts)?;
    let covered = b.transmittance.iter().filter(|&&t| t < 0.5).count();
    println!("{covered} of {} pixels covered, closure residual {:.1e}", b.transmittance.len(), b.max_closure_residual());
    for p in save_buffers(&b, &dir, 0.0, 6.0)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
