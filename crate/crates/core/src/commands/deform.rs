use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{save_ply, DeformedSetFile};
use crate::mat3::{condition_number, is_psd, min_symmetric_eigenvalue};
use crate::rig::DeformMethod;

use super::{write, Context, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceDiagnostics {
    pub face: usize,
    pub det: f64,
    pub condition: f64,
    pub stretch_psd: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: DeformMethod,
    pub faces: Vec<FaceDiagnostics>,
    pub min_det: f64,
    pub max_det: f64,
    pub max_condition: f64,
    pub surfels: usize,
    pub covariance_psd_failures: usize,
    pub min_covariance_eigenvalue: f64,
    pub max_normal_orthogonality_error: f64,
}

const PSD_TOL: f64 = 1e-10;

/// Deforms the rig into the configured pose and writes `deformed.json`,
/// `deformed.ply` and `diagnostics.json`.
pub fn cmd_deform(ctx: &Context) -> Result<(Outcome, Diagnostics)> {
    let loaded = ctx.rig()?;
    let rig = loaded.rig;
    let pose_mesh = ctx
        .deformed_mesh()?
        .ok_or_else(|| Error::Config("deformed_mesh is required".into()))?;
    let pose = rig.pose(&pose_mesh)?;
    let method = ctx.config.method;
    let deformed = rig.deform_with(&pose, method)?;

    let faces: Vec<FaceDiagnostics> = pose
        .factors
        .iter()
        .enumerate()
        .map(|(face, f)| FaceDiagnostics {
            face,
            det: f.jacobian.determinant(),
            condition: condition_number(&f.jacobian),
            stretch_psd: is_psd(&f.polar.stretch, PSD_TOL * f.polar.stretch.amax().max(1.0)),
        })
        .collect();
    let covs: Vec<_> = deformed.iter().map(|d| d.covariance()).collect();
    let diag = Diagnostics {
        method,
        min_det: faces.iter().map(|f| f.det).fold(f64::INFINITY, f64::min),
        max_det: faces.iter().map(|f| f.det).fold(f64::NEG_INFINITY, f64::max),
        max_condition: faces.iter().map(|f| f.condition).fold(0.0, f64::max),
        faces,
        surfels: deformed.len(),
        covariance_psd_failures: covs.iter().filter(|c| !is_psd(c, PSD_TOL * c.amax().max(1.0))).count(),
        min_covariance_eigenvalue: covs.iter().map(min_symmetric_eigenvalue).fold(f64::INFINITY, f64::min),
        max_normal_orthogonality_error: deformed.iter().map(|d| d.orthogonality_error()).fold(0.0, f64::max),
    };

    let dir = ctx.out_dir()?;
    let mut files = Vec::new();
    let set = dir.join("deformed.json");
    DeformedSetFile::new(&deformed).save(&set)?;
    files.push(set);
    let ply = dir.join("deformed.ply");
    save_ply(&deformed, &ply)?;
    files.push(ply);
    let text = serde_json::to_string_pretty(&diag).expect("diagnostics serialize") + "\n";
    write(dir.join("diagnostics.json"), &text, &mut files)?;

    let summary = format!(
        "deformed {} surfels over {} faces ({:?}); det(J) in [{:.6}, {:.6}], max cond {:.3}, {} PSD failures",
        diag.surfels,
        diag.faces.len(),
        method,
        diag.min_det,
        diag.max_det,
        diag.max_condition,
        diag.covariance_psd_failures
    );
    Ok((Outcome { summary, files }, diag))
}
