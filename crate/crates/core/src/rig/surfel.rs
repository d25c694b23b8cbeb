use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::appearance::ShBlock;
use crate::error::Result;
use crate::mat3::{Mat3, Vec3};
use crate::mesh::{triangle_frames, Point, TriMesh};

pub const DEFAULT_OPACITY: f64 = 0.9;
pub const DEFAULT_SH_DEGREE: usize = 3;

/// A flat 2D Gaussian disk bound to one parent triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Surfel {
    pub parent: usize,
    /// Offset from the canonical parent barycenter, world axes.
    pub offset: Vec3,
    /// Canonical tangent frame `R_c = [r₁ r₂ n]` as a `(w, x, y, z)`
    /// quaternion. Stored as read so serialization is lossless; it is
    /// normalized whenever the matrix is formed.
    pub orientation: Quaternion<f64>,
    /// Tangent scales `(s₁, s₂)`; the normal scale is fixed at 1.
    pub scales: [f64; 2],
    pub opacity: f64,
    pub sh: ShBlock,
    pub eye: bool,
}

impl Surfel {
    pub fn rotation(&self) -> Mat3 {
        UnitQuaternion::from_quaternion(self.orientation)
            .to_rotation_matrix()
            .into_inner()
    }

    pub fn set_rotation(&mut self, r: &Mat3) {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
        self.orientation = canonical_quaternion(q.into_inner());
    }

    pub fn scale_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(self.scales[0], self.scales[1], 1.0))
    }

    pub fn normal(&self) -> Vec3 {
        self.rotation().column(2).into_owned()
    }

    /// `R_c·S_c`.
    pub fn canonical_half_covariance(&self) -> Mat3 {
        self.rotation() * self.scale_matrix()
    }
}

/// Sign convention for stored quaternions: `w ≥ 0`.
pub fn canonical_quaternion(q: Quaternion<f64>) -> Quaternion<f64> {
    if q.w < 0.0 {
        -q
    } else {
        q
    }
}

/// Surfel after deformation into world space.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformedSurfel {
    pub position: Point,
    /// `Σ^{1/2}`; columns 0 and 1 are the scaled tangents.
    pub half_covariance: Mat3,
    pub normal: Vec3,
    pub opacity: f64,
    pub sh: ShBlock,
    pub eye: bool,
    /// Rotation factor used to bring view directions back to the canonical frame.
    pub blend_rotation: Mat3,
}

impl DeformedSurfel {
    pub fn covariance(&self) -> Mat3 {
        self.half_covariance * self.half_covariance.transpose()
    }

    pub fn tangents(&self) -> (Vec3, Vec3) {
        (
            self.half_covariance.column(0).into_owned(),
            self.half_covariance.column(1).into_owned(),
        )
    }

    /// `|n·h₁| + |n·h₂|`, zero when the normal is orthogonal to the splat plane.
    pub fn orthogonality_error(&self) -> f64 {
        let (h1, h2) = self.tangents();
        self.normal.dot(&h1).abs() + self.normal.dot(&h2).abs()
    }
}

/// Seeds `per_triangle` surfels on every face.
///
/// The first surfel of a face sits on the barycenter, the rest at uniformly
/// random points inside the triangle. Frames start at the parent's baseline
/// frame and tangent scales at a third of the mean edge length. Color starts
/// as mid gray.
pub fn bind_surfels(mesh: &TriMesh, per_triangle: usize, seed: u64) -> Result<Vec<Surfel>> {
    let frames = triangle_frames(mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut surfels = Vec::with_capacity(mesh.faces.len() * per_triangle);
    for (f, frame) in frames.iter().enumerate() {
        let [v0, v1, v2] = mesh.triangle(f);
        let ell = mesh.mean_edge_length(f);
        for k in 0..per_triangle {
            let offset = if k == 0 {
                Vec3::zeros()
            } else {
                let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
                if a + b > 1.0 {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                let p = v0 + (v1 - v0) * a + (v2 - v0) * b;
                p - frame.barycenter
            };
            let mut s = Surfel {
                parent: f,
                offset,
                orientation: Quaternion::identity(),
                scales: [ell / 3.0, ell / 3.0],
                opacity: DEFAULT_OPACITY,
                sh: ShBlock::constant(DEFAULT_SH_DEGREE, [0.5; 3]),
                eye: false,
            };
            s.set_rotation(&frame.ga.rotation);
            surfels.push(s);
        }
    }
    Ok(surfels)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn unit_triangle() -> TriMesh {
        TriMesh::new(
            vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_surfel_sits_on_barycenter() {
        let s = bind_surfels(&unit_triangle(), 1, 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].offset, Vec3::zeros());
        assert_relative_eq!(s[0].rotation(), Mat3::identity(), epsilon = 1e-15);
        let ell = (2.0 + 2.0_f64.sqrt()) / 3.0;
        assert_relative_eq!(s[0].scales[0], ell / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn counts_and_parents() {
        let m = TriMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let s = bind_surfels(&m, 3, 4).unwrap();
        let parents: Vec<usize> = s.iter().map(|s| s.parent).collect();
        assert_eq!(parents, vec![0, 0, 0, 1, 1, 1]);
        for s in &s {
            // in-plane jitter only
            assert!(s.offset.z.abs() < 1e-15);
            assert!(s.rotation().column(2).z > 0.999);
        }
    }

    #[test]
    fn binding_is_deterministic() {
        let m = crate::mesh::icosahedron();
        let a = bind_surfels(&m, 4, 42).unwrap();
        let b = bind_surfels(&m, 4, 42).unwrap();
        assert_eq!(a, b);
        let c = bind_surfels(&m, 4, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn stored_quaternion_has_non_negative_w() {
        let mut s = bind_surfels(&unit_triangle(), 1, 0).unwrap().remove(0);
        let r = crate::mat3::rotation_about(&Vec3::new(1.0, 2.0, 0.5), 3.0);
        s.set_rotation(&r);
        assert!(s.orientation.w >= 0.0);
        assert_relative_eq!(s.rotation(), r, epsilon = 1e-14);
    }
}
