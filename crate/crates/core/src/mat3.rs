//! Exact 3×3 kernels used by the deformation code: polar decomposition,
//! SO(3) logarithm/exponential (Rodrigues), normal transport by the
//! inverse transpose, and a PSD test.
//!
//! Everything here is a pure function on `nalgebra` value types.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Default relative tolerance for singularity checks.
///
/// Determinant thresholds are `tol · s³` where `s` is the largest entry
/// magnitude, so the test is invariant to uniform scaling of the input.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Distance of `trace(R)` from −1 below which the rotation logarithm is
/// rejected as ambiguous.
pub const BRANCH_EPS: f64 = 1e-6;

const SMALL_ANGLE: f64 = 1e-8;

/// `M = U·P` with `U` a proper rotation and `P` symmetric positive definite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarFactors {
    pub rotation: Mat3,
    pub stretch: Mat3,
}

impl PolarFactors {
    pub fn compose(&self) -> Mat3 {
        self.rotation * self.stretch
    }
}

/// Element of so(3): direction is the axis, norm is the angle in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle(pub Vec3);

impl AxisAngle {
    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn zero() -> Self {
        AxisAngle(Vec3::zeros())
    }
}

fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn det_threshold(m: &Mat3, tol: f64) -> f64 {
    let s = max_abs(m);
    tol * s * s * s
}

/// Polar decomposition through the symmetric eigendecomposition of `MᵀM`.
///
/// `P = V·√Λ·Vᵀ`, `U = M·P⁻¹`, followed by Newton polishing of `U` so that
/// orthogonality holds to machine precision even for ill-conditioned input.
/// The stretch is then recomputed as the symmetric part of `Uᵀ·M`.
pub fn polar_decompose(m: &Mat3, tol: f64) -> Result<PolarFactors> {
    let det = m.determinant();
    if !det.is_finite() || det <= det_threshold(m, tol) {
        return Err(Error::SingularOrInverted { det });
    }
    // Work on a unit-scaled copy so MᵀM stays well inside the f64 range.
    let scale = max_abs(m);
    let a = m / scale;
    let eig = SymmetricEigen::new(a.transpose() * a);
    let v = eig.eigenvectors;
    let inv_sqrt = Mat3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt()));
    let mut u = a * (v * inv_sqrt * v.transpose());
    for _ in 0..4 {
        let next = 0.5 * (u + cofactor(&u) / u.determinant());
        let delta = (next - u).norm();
        u = next;
        if delta < 1e-15 {
            break;
        }
    }
    Ok(PolarFactors {
        rotation: u,
        stretch: symmetrize(&(u.transpose() * m)),
    })
}

/// Polar decomposition by the scaled Newton iteration
/// `X ← (γX + γ⁻¹X⁻ᵀ)/2`.
///
/// Same contract as [`polar_decompose`]; kept as an independent route for
/// cross-checking and for callers that prefer an eigen-free path.
pub fn polar_decompose_iterative(m: &Mat3, tol: f64) -> Result<PolarFactors> {
    let det = m.determinant();
    if !det.is_finite() || det <= det_threshold(m, tol) {
        return Err(Error::SingularOrInverted { det });
    }
    let mut x = *m;
    let mut scaled = true;
    for _ in 0..100 {
        let inv_t = cofactor(&x) / x.determinant();
        let gamma = if scaled {
            (inv_t.norm() / x.norm()).sqrt()
        } else {
            1.0
        };
        let next = 0.5 * (gamma * x + inv_t / gamma);
        let delta = (next - x).norm();
        x = next;
        if delta < 1e-2 {
            scaled = false;
        }
        if delta <= 1e-15 * x.norm() {
            break;
        }
    }
    Ok(PolarFactors {
        rotation: x,
        stretch: symmetrize(&(x.transpose() * m)),
    })
}

pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn vee_antisymmetric(r: &Mat3) -> Vec3 {
    0.5 * Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)])
}

/// Principal logarithm of a rotation matrix.
///
/// Fails with [`Error::NearPiRotation`] when `trace(R) ≤ −1 + BRANCH_EPS`,
/// where the axis sign is ambiguous.
pub fn rotation_log(r: &Mat3) -> Result<AxisAngle> {
    let trace = r.trace();
    if !trace.is_finite() || trace <= -1.0 + BRANCH_EPS {
        return Err(Error::NearPiRotation { trace });
    }
    let cos = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    let w = vee_antisymmetric(r);
    let sin = w.norm();
    let angle = sin.atan2(cos);

    if angle < SMALL_ANGLE {
        return Ok(AxisAngle(w * (1.0 + angle * angle / 6.0)));
    }
    if cos > -0.5 {
        return Ok(AxisAngle(w * (angle / sin)));
    }
    // Past 2π/3 the antisymmetric part loses relative precision; take the
    // axis from the symmetric part (1 − cos)·a·aᵀ instead.
    let b = symmetrize(r) - Mat3::identity() * cos;
    let k = (0..3)
        .max_by(|&i, &j| b[(i, i)].total_cmp(&b[(j, j)]))
        .unwrap_or(0);
    let mut axis = b.column(k).into_owned().normalize();
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    Ok(AxisAngle(axis * angle))
}

/// Rodrigues' formula. Uses the series limit below an angle of 1e−8.
pub fn rotation_exp(omega: &AxisAngle) -> Mat3 {
    let w = omega.0;
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(&w);
    Mat3::identity() + k * a + k * k * b
}

/// Cofactor matrix, `det(M)·M⁻ᵀ`.
pub fn cofactor(m: &Mat3) -> Mat3 {
    let c0 = m.column(1).cross(&m.column(2));
    let c1 = m.column(2).cross(&m.column(0));
    let c2 = m.column(0).cross(&m.column(1));
    Mat3::from_columns(&[c0, c1, c2])
}

static FLIP_INVERSE_TRANSPOSE: AtomicBool = AtomicBool::new(false);

/// Mutation hook for the self-test: while set, `inverse_transpose` negates
/// its `(0, 1)` entry. Process-wide.
#[doc(hidden)]
pub fn set_inverse_transpose_mutation(on: bool) {
    FLIP_INVERSE_TRANSPOSE.store(on, Ordering::SeqCst);
}

/// `(M⁻¹)ᵀ`, the matrix that carries normals when `M` carries tangents.
pub fn inverse_transpose(m: &Mat3, tol: f64) -> Result<Mat3> {
    let det = m.determinant();
    if !det.is_finite() || det.abs() <= det_threshold(m, tol) {
        return Err(Error::SingularMatrix { det });
    }
    let mut out = cofactor(m) / det;
    if FLIP_INVERSE_TRANSPOSE.load(Ordering::Relaxed) {
        out[(0, 1)] = -out[(0, 1)];
    }
    Ok(out)
}

pub fn symmetrize(m: &Mat3) -> Mat3 {
    0.5 * (m + m.transpose())
}

/// Smallest eigenvalue of the symmetric part of `s`.
pub fn min_symmetric_eigenvalue(s: &Mat3) -> f64 {
    symmetrize(s)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// True iff every eigenvalue of the symmetric part of `s` is `≥ −tol`.
pub fn is_psd(s: &Mat3, tol: f64) -> bool {
    min_symmetric_eigenvalue(s) >= -tol
}

/// Ratio of largest to smallest singular value (infinite when singular).
pub fn condition_number(m: &Mat3) -> f64 {
    let sv = m.singular_values();
    let (lo, hi) = sv
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn rotation_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation about a (not necessarily unit) axis.
pub fn rotation_about(axis: &Vec3, angle: f64) -> Mat3 {
    rotation_exp(&AxisAngle(axis.normalize() * angle))
}

pub fn orthogonality_residual(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).abs().max()
}
