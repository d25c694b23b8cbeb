//! View-dependent surfel color: diffuse SH plus a monochrome ASG specular
//! term, both queried with the view direction rotated back by the blended
//! rotation `U_b`.

pub mod asg;
pub mod sh;
pub mod specular;

pub use asg::{eval_asg, reflect, sample_lobes, AsgLobe};
pub use sh::{eval_sh, ShBlock};
pub use specular::{eval_specular, SpecularGradient, SpecularHead};

use crate::error::Result;
use crate::mat3::{Mat3, Vec3};

pub type Rgb = Vec3;

/// `c = c_d + c_s` for a surfel seen along `d`.
///
/// `d` is the unit direction from the surfel toward the viewer in world
/// space. It is rotated into the surfel's canonical frame as `d_rot = U_bᵀd`.
/// `n` must already be expressed in that same frame. The sum is returned
/// unclamped; clamping to `[0, 1]` happens at render time.
pub fn total_color(
    sh: &ShBlock,
    head: Option<&SpecularHead>,
    d: &Vec3,
    blend_rotation: &Mat3,
    n: &Vec3,
) -> Result<Rgb> {
    let d_rot = blend_rotation.transpose() * d;
    let diffuse = eval_sh(sh, &d_rot);
    let specular = match head {
        Some(head) => eval_specular(head, &reflect(&d_rot, n), &d_rot, n)?,
        None => 0.0,
    };
    Ok(diffuse + Rgb::repeat(specular))
}
