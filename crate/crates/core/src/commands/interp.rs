use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::Result;
use crate::io::{save_mask, save_rgb};
use crate::mat3::{condition_number, rotation_z, Mat3, DEFAULT_TOL};
use crate::mesh::TriMesh;
use crate::render::{mesh_mask, render, Camera, RenderOptions};
use crate::rig::{jbs, lerp_blend, DeformMethod, Rig};
use crate::scenes;

use super::{write, Context, Outcome};

/// Alpha above which a rendered pixel counts as covered.
pub const COVERAGE_ALPHA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpRow {
    pub t: f64,
    pub lerp_det: f64,
    pub lerp_condition: f64,
    pub jbs_det: f64,
    pub jbs_condition: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageRow {
    pub method: DeformMethod,
    pub silhouette: usize,
    /// Silhouette pixels the render leaves uncovered.
    pub gap: usize,
    /// Covered pixels outside the silhouette.
    pub spill: usize,
}

/// Blends `a` and `b` with weights `(1 − t, t)` for `t = 0, 0.1, …, 1`.
pub fn interp_table(a: &Mat3, b: &Mat3) -> Result<Vec<InterpRow>> {
    (0..=10)
        .map(|k| {
            let t = k as f64 / 10.0;
            let w = [1.0 - t, t];
            let l = lerp_blend(&[*a, *b], &w);
            let j = jbs(&[*a, *b], &w, DEFAULT_TOL)?.matrix();
            Ok(InterpRow {
                t,
                lerp_det: l.determinant(),
                lerp_condition: condition_number(&l),
                jbs_det: j.determinant(),
                jbs_condition: condition_number(&j),
            })
        })
        .collect()
}

/// Silhouette of `pose` against the rendered coverage of `rig` deformed
/// into it.
pub fn coverage_gap(rig: &Rig, pose: &TriMesh, camera: &Camera, method: DeformMethod) -> Result<(CoverageRow, Vec<bool>)> {
    let mask = mesh_mask(pose, camera);
    let b = render(&rig.deform(pose, method)?, camera, &RenderOptions::default())?;
    let covered: Vec<bool> = (0..mask.len()).map(|i| b.alpha(i) > COVERAGE_ALPHA).collect();
    let row = CoverageRow {
        method,
        silhouette: mask.iter().filter(|&&m| m).count(),
        gap: mask.iter().zip(&covered).filter(|(m, c)| **m && !**c).count(),
        spill: mask.iter().zip(&covered).filter(|(m, c)| !**m && **c).count(),
    };
    Ok((row, covered))
}

/// Stretch factors of the built-in anisotropic hinge pose.
pub const STRETCH: (f64, f64) = (2.0, 1.0);

/// Writes `interp.csv` (lerp vs blended determinant and conditioning for
/// `{I, Rz(π − 0.01)}`) and `coverage.csv` plus silhouette and coverage
/// PNGs for the stretched hinge under both deformation paths.
pub fn cmd_interp_demo(ctx: &Context) -> Result<(Outcome, Vec<InterpRow>, Vec<CoverageRow>)> {
    let dir = ctx.out_dir()?;
    let mut files = Vec::new();

    let rows = interp_table(&Mat3::identity(), &rotation_z(PI - 0.01))?;
    let mut csv = String::from("t,lerp_det,lerp_cond,jbs_det,jbs_cond\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{:.1},{:.12},{:.12},{:.12},{:.12}",
            r.t, r.lerp_det, r.lerp_condition, r.jbs_det, r.jbs_condition
        );
    }
    write(dir.join("interp.csv"), &csv, &mut files)?;

    let rig = scenes::stretch_rig()?;
    let pose = scenes::stretched_hinge(STRETCH.0, STRETCH.1);
    let camera = scenes::stretch_camera();
    let mut coverage = Vec::new();
    let mut csv = String::from("method,silhouette,gap,spill\n");
    for method in [DeformMethod::Ga, DeformMethod::Jacobian] {
        let (row, covered) = coverage_gap(&rig, &pose, &camera, method)?;
        let _ = writeln!(csv, "{},{},{},{}", method_name(method), row.silhouette, row.gap, row.spill);
        let png = dir.join(format!("coverage_{}.png", method_name(method)));
        save_mask(&covered, camera.width, camera.height, &png)?;
        files.push(png);
        let img = render(&rig.deform(&pose, method)?, &camera, &RenderOptions::default())?.color_image();
        let png = dir.join(format!("hinge_{}.png", method_name(method)));
        save_rgb(&img, &png)?;
        files.push(png);
        coverage.push(row);
    }
    write(dir.join("coverage.csv"), &csv, &mut files)?;
    let png = dir.join("silhouette.png");
    save_mask(&mesh_mask(&pose, &camera), camera.width, camera.height, &png)?;
    files.push(png);

    let mid = &rows[5];
    let summary = format!(
        "t=0.5: lerp det {:.6}, jbs det {:.6}; coverage gap ga {} vs jacobian {} of {} silhouette pixels",
        mid.lerp_det, mid.jbs_det, coverage[0].gap, coverage[1].gap, coverage[0].silhouette
    );
    Ok((Outcome { summary, files }, rows, coverage))
}

fn method_name(m: DeformMethod) -> &'static str {
    match m {
        DeformMethod::Ga => "ga",
        DeformMethod::Jacobian => "jacobian",
        DeformMethod::Jbs => "jbs",
    }
}
