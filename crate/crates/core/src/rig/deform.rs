use crate::error::{Error, Result};
use crate::mat3::{inverse_transpose, polar_decompose, Mat3, Vec3, DEFAULT_TOL};
use crate::mesh::{GaFrame, Point};

use super::blend::BlendedJacobian;
use super::surfel::{DeformedSurfel, Surfel};

/// Deformation gradient `J = Ẽ·E⁻¹`.
pub fn jacobian(e: &Mat3, e_def: &Mat3) -> Result<Mat3> {
    let it = inverse_transpose(e, DEFAULT_TOL)?;
    Ok(e_def * it.transpose())
}

/// `n_d = normalize(J⁻ᵀ·n_c)`.
pub fn deform_normal(n_c: &Vec3, j: &Mat3) -> Result<Vec3> {
    let n = inverse_transpose(j, DEFAULT_TOL)? * n_c;
    Ok(n.normalize())
}

/// Affine deformation with an already factored `J_b`.
pub fn deform_surfel_blended(s: &Surfel, jb: &BlendedJacobian, t_p: &Point) -> Result<DeformedSurfel> {
    let j = jb.matrix();
    Ok(DeformedSurfel {
        position: t_p + j * s.offset,
        half_covariance: j * s.canonical_half_covariance(),
        normal: deform_normal(&s.normal(), &j)?,
        opacity: s.opacity,
        sh: s.sh.clone(),
        eye: s.eye,
        blend_rotation: jb.rotation,
    })
}

/// `Σ^{1/2} = J_b·R_c·S_c`, `μ = J_b·μ_c + T_p`, `n_d = normalize(J_b⁻ᵀ n_c)`.
pub fn deform_surfel(s: &Surfel, j_b: &Mat3, t_p: &Point) -> Result<DeformedSurfel> {
    inverse_transpose(j_b, DEFAULT_TOL)?;
    let polar = polar_decompose(j_b, DEFAULT_TOL).map_err(|e| match e {
        Error::SingularOrInverted { det } => Error::SingularMatrix { det },
        other => other,
    })?;
    let mut d = deform_surfel_blended(
        s,
        &BlendedJacobian {
            rotation: polar.rotation,
            stretch: polar.stretch,
        },
        t_p,
    )?;
    // keep H and μ on the caller's exact matrix rather than U·P
    d.position = t_p + j_b * s.offset;
    d.half_covariance = j_b * s.canonical_half_covariance();
    Ok(d)
}

/// Similarity-transform baseline driven by the parent's orthonormal frames.
///
/// `R = R_def·R_canᵀ`, `k = s_def / s_can`; position `k·R·μ_c + T_def`,
/// half covariance `k·R·R_c·S_c`, normal `R·n_c`.
pub fn ga_deform_surfel(s: &Surfel, canonical: &GaFrame, deformed: &GaFrame) -> DeformedSurfel {
    let r = deformed.rotation * canonical.rotation.transpose();
    let k = deformed.scale / canonical.scale;
    DeformedSurfel {
        position: deformed.barycenter + k * (r * s.offset),
        half_covariance: k * r * s.canonical_half_covariance(),
        normal: r * s.normal(),
        opacity: s.opacity,
        sh: s.sh.clone(),
        eye: s.eye,
        blend_rotation: r,
    }
}

/// `d_rot = U_bᵀ·d`.
pub fn rotate_view_dir(d: &Vec3, u_b: &Mat3) -> Vec3 {
    u_b.transpose() * d
}
