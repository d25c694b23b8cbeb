//! Drives the command layer end to end in a scratch directory: writes a mesh
//! pair and config, then deforms, renders and refits.

use serde_json::json;

use surfhead::commands::{cmd_deform, cmd_fit, cmd_render, Context};
use surfhead::io::{save_obj, RunConfig};
use surfhead::scenes;

fn main() -> surfhead::Result<()> {
    let dir = std::env::temp_dir().join("surfhead_run_commands");
    let io = |e| surfhead::Error::Io { path: dir.clone(), source: e };
    std::fs::create_dir_all(&dir).map_err(io)?;
    save_obj(&scenes::hinge_mesh(), dir.join("rest.obj"))?;
    save_obj(&scenes::bent_hinge(40.0), dir.join("pose.obj"))?;

    let mut cfg = json!({
        "canonical_mesh": "rest.obj",
        "deformed_mesh": "pose.obj",
        "camera": { "position": [0.6, 0.3, 3.0], "look_at": [0.6, 0.3, 0.0], "fov_y": 45.0, "width": 64, "height": 48 },
        "sh_degree": 1,
        "asg": { "theta_steps": 2, "phi_steps": 4 },
        "seed": 3
    });
    let path = dir.join("run.json");
    std::fs::write(&path, cfg.to_string()).map_err(io)?;
    let ctx = Context::load(&path, Some(dir.join("out")), None)?;
    let (o, diag) = cmd_deform(&ctx)?;
    println!("{}\n  max condition {:.3}", o.summary, diag.max_condition);
    let (o, _) = cmd_render(&ctx)?;
    println!("{}", o.summary);

    cfg["fit"] = json!({ "target": "out/color.png", "options": { "iterations": 10 } });
    cfg["seed"] = json!(4);
    let ctx = Context::new(
        {
            let mut c = RunConfig::parse(&cfg.to_string(), &path)?;
            c.resolve(&dir);
            c.validate()?;
            c
        },
        Some(dir.join("fit")),
        None,
    );
    let (o, _) = cmd_fit(&ctx)?;
    println!("{}", o.summary);
    for f in o.files {
        println!("  wrote {}", f.display());
    }
    Ok(())
}
