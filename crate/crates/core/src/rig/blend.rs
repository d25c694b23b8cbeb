use crate::error::{Error, Result};
use crate::mat3::{polar_decompose, rotation_exp, rotation_log, AxisAngle, Mat3, PolarFactors, Vec3};
use crate::mesh::{build_adjacency, Adjacency, AdjacencyMode, TriMesh};

/// Per-triangle blend sets with one learnable logit per (triangle, neighbor).
#[derive(Clone, Debug, PartialEq)]
pub struct BlendTopology {
    pub adjacency: Adjacency,
    pub logits: Vec<Vec<f64>>,
}

impl BlendTopology {
    /// All logits zero, i.e. uniform weights over each blend set.
    pub fn uniform(adjacency: Adjacency) -> Self {
        let logits = adjacency.neighbors.iter().map(|n| vec![0.0; n.len()]).collect();
        BlendTopology { adjacency, logits }
    }

    pub fn for_mesh(mesh: &TriMesh, mode: AdjacencyMode) -> Self {
        Self::uniform(build_adjacency(mesh, mode))
    }

    pub fn weights(&self, triangle: usize) -> Vec<f64> {
        blend_weights(&self.logits[triangle])
    }

    pub fn logit_count(&self) -> usize {
        self.logits.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.logits.len() != self.adjacency.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} logit rows for {} triangles",
                self.logits.len(),
                self.adjacency.len()
            )));
        }
        for (t, (row, nbrs)) in self.logits.iter().zip(&self.adjacency.neighbors).enumerate() {
            if row.len() != nbrs.len() {
                return Err(Error::DimensionMismatch(format!(
                    "triangle {t}: {} logits for {} blend neighbors",
                    row.len(),
                    nbrs.len()
                )));
            }
        }
        Ok(())
    }
}

/// `ln σ(x) = −softplus(−x)`, stable for large `|x|`.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `wᵢ = σ(ℓᵢ) / Σⱼ σ(ℓⱼ)`, normalized in the log domain so that very
/// negative logits do not underflow to `0/0`.
pub fn blend_weights(logits: &[f64]) -> Vec<f64> {
    let ls: Vec<f64> = logits.iter().map(|&l| log_sigmoid(l)).collect();
    let m = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: Vec<f64> = ls.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = s.iter().sum();
    s.into_iter().map(|v| v / total).collect()
}

/// Polar factors of one triangle's Jacobian together with the rotation log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianFactors {
    pub jacobian: Mat3,
    pub polar: PolarFactors,
    pub log: AxisAngle,
}

impl JacobianFactors {
    pub fn new(jacobian: &Mat3, tol: f64) -> Result<Self> {
        let polar = polar_decompose(jacobian, tol)?;
        let log = rotation_log(&polar.rotation)?;
        Ok(JacobianFactors {
            jacobian: *jacobian,
            polar,
            log,
        })
    }
}

/// `J_b = U_b·P_b` kept in factored form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlendedJacobian {
    pub rotation: Mat3,
    pub stretch: Mat3,
}

impl BlendedJacobian {
    pub fn matrix(&self) -> Mat3 {
        self.rotation * self.stretch
    }
}

/// Blend of precomputed factors: rotations averaged in so(3), stretches linearly.
///
/// A blend whose only non-zero weight is exactly 1 returns that Jacobian
/// untouched.
pub fn jbs_factors(factors: &[&JacobianFactors], weights: &[f64]) -> Result<BlendedJacobian> {
    if factors.len() != weights.len() || factors.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} Jacobians for {} weights",
            factors.len(),
            weights.len()
        )));
    }
    let mut active = weights.iter().enumerate().filter(|(_, &w)| w != 0.0);
    if let (Some((i, &w)), None) = (active.next(), active.next()) {
        if w == 1.0 {
            return Ok(BlendedJacobian {
                rotation: factors[i].polar.rotation,
                stretch: factors[i].polar.stretch,
            });
        }
    }
    let mut omega = Vec3::zeros();
    let mut stretch = Mat3::zeros();
    for (f, &w) in factors.iter().zip(weights) {
        omega += w * f.log.0;
        stretch += w * f.polar.stretch;
    }
    Ok(BlendedJacobian {
        rotation: rotation_exp(&AxisAngle(omega)),
        stretch,
    })
}

/// Jacobian Blend Skinning, `J_b = exp(Σ wᵢ log Uᵢ) · Σ wᵢ Pᵢ`.
pub fn jbs(jacobians: &[Mat3], weights: &[f64], tol: f64) -> Result<BlendedJacobian> {
    let factors = jacobians
        .iter()
        .enumerate()
        .map(|(i, j)| JacobianFactors::new(j, tol).map_err(|e| Error::neighbor(i, e)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&JacobianFactors> = factors.iter().collect();
    jbs_factors(&refs, weights)
}

/// Element-wise weighted sum of Jacobians.
pub fn lerp_blend(jacobians: &[Mat3], weights: &[f64]) -> Mat3 {
    jacobians
        .iter()
        .zip(weights)
        .fold(Mat3::zeros(), |acc, (j, &w)| acc + w * j)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use super::*;
    use crate::mat3::{rotation_z, DEFAULT_TOL};

    #[test]
    fn weights_uniform_and_saturated() {
        let w = blend_weights(&[0.0; 4]);
        assert!(w.iter().all(|&w| w == 0.25));
        let w = blend_weights(&[20.0, -20.0, -20.0]);
        assert!((w[0] - 1.0).abs() < 1e-8);
        let w = blend_weights(&[-800.0, -800.0]);
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn degenerate_blend_returns_first_jacobian() {
        let j0 = Mat3::new(1.0, 0.3, 0.0, 0.1, 2.0, 0.2, 0.0, 0.0, 0.7);
        let j1 = rotation_z(0.6);
        let b = jbs(&[j0, j1], &[1.0, 0.0], DEFAULT_TOL).unwrap();
        assert_relative_eq!(b.matrix(), j0, epsilon = 1e-14);
    }

    #[test]
    fn rotation_midpoint_is_geodesic() {
        let b = jbs(&[Mat3::identity(), rotation_z(FRAC_PI_2)], &[0.5, 0.5], DEFAULT_TOL).unwrap();
        assert_relative_eq!(b.matrix(), rotation_z(FRAC_PI_4), epsilon = 1e-12);
    }

    #[test]
    fn pure_stretches_average() {
        let a = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        let b = Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 1.0));
        let blended = jbs(&[a, b], &[0.5, 0.5], DEFAULT_TOL).unwrap();
        assert_relative_eq!(
            blended.matrix(),
            Mat3::from_diagonal(&Vec3::new(1.5, 1.5, 1.0)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn lerp_collapses_where_jbs_does_not() {
        let l = lerp_blend(&[Mat3::identity(), rotation_z(PI)], &[0.5, 0.5]);
        assert_relative_eq!(l, Mat3::from_diagonal(&Vec3::new(0.0, 0.0, 1.0)), epsilon = 1e-15);
        let near = rotation_z(PI - 0.01);
        let jb = jbs(&[Mat3::identity(), near], &[0.5, 0.5], DEFAULT_TOL).unwrap();
        assert!((jb.matrix().determinant() - 1.0).abs() < 1e-12);
        assert!(lerp_blend(&[Mat3::identity(), near], &[0.5, 0.5]).determinant() < 0.02);
    }

    #[test]
    fn errors_name_the_offending_neighbor() {
        let bad = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        let err = jbs(&[Mat3::identity(), bad], &[0.5, 0.5], DEFAULT_TOL).unwrap_err();
        match err {
            Error::Neighbor { index, source } => {
                assert_eq!(index, 1);
                assert!(matches!(*source, Error::SingularOrInverted { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = jbs(&[rotation_z(PI), Mat3::identity()], &[0.5, 0.5], DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, Error::Neighbor { index: 0, .. }));
    }

    proptest! {
        #[test]
        fn weights_are_convex(logits in prop::collection::vec(-30.0..30.0f64, 1..8)) {
            let w = blend_weights(&logits);
            prop_assert!(w.iter().all(|&w| w > 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn blended_stretch_is_symmetric_and_rotation_proper(
            entries in prop::collection::vec(-0.4..0.4f64, 18),
            logits in prop::collection::vec(-3.0..3.0f64, 2),
        ) {
            let a = Mat3::identity() + Mat3::from_iterator(entries[..9].iter().copied());
            let b = Mat3::identity() + Mat3::from_iterator(entries[9..].iter().copied());
            let w = blend_weights(&logits);
            let r = jbs(&[a, b], &w, DEFAULT_TOL).unwrap();
            prop_assert!((r.rotation.determinant() - 1.0).abs() < 1e-12);
            prop_assert!((r.stretch - r.stretch.transpose()).norm() < 1e-12);
            prop_assert!(crate::mat3::is_psd(&r.stretch, 1e-12));
        }
    }
}
