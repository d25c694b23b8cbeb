use std::f64::consts::{FRAC_PI_2, PI};

use crate::mat3::{rotation_about, Vec3};

/// Anisotropic spherical Gaussian lobe with frame `{tangent, bitangent, axis}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsgLobe {
    pub axis: Vec3,
    pub tangent: Vec3,
    pub bitangent: Vec3,
    pub lambda: f64,
    pub mu: f64,
    pub amplitude: f64,
}

pub const DEFAULT_SHARPNESS: f64 = 8.0;

impl AsgLobe {
    /// Lobe value without the amplitude factor, `max(ν·z, 0)·exp(−λ(ν·x)² − μ(ν·y)²)`.
    pub fn shape(&self, nu: &Vec3) -> f64 {
        let smooth = nu.dot(&self.axis);
        if smooth <= 0.0 {
            return 0.0;
        }
        let u = nu.dot(&self.tangent);
        let v = nu.dot(&self.bitangent);
        smooth * (-self.lambda * u * u - self.mu * v * v).exp()
    }

    pub fn frame_error(&self) -> f64 {
        let (x, y, z) = (self.tangent, self.bitangent, self.axis);
        x.dot(&z).abs()
            + y.dot(&z).abs()
            + x.dot(&y).abs()
            + (x.norm() - 1.0).abs()
            + (y.norm() - 1.0).abs()
            + (z.norm() - 1.0).abs()
            + (x.cross(&y) - z).norm()
    }
}

pub fn eval_asg(lobe: &AsgLobe, nu: &Vec3) -> f64 {
    lobe.amplitude * lobe.shape(nu)
}

/// Mirror `d_rot` about `n`: `2(d·n)n − d`.
pub fn reflect(d_rot: &Vec3, n: &Vec3) -> Vec3 {
    2.0 * d_rot.dot(n) * n - d_rot
}

fn spherical(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

/// Lobes on a regular `(θ, φ)` grid over the frontal hemisphere `z ≥ 0`.
///
/// The tangent is the direction at `(θ + π/2, φ)` and the bitangent is the
/// tangent rotated about the lobe axis by π/2. Cells are sampled at their
/// centers, so no lobe sits exactly on the horizon.
pub fn sample_lobes(theta_steps: usize, phi_steps: usize) -> Vec<AsgLobe> {
    let mut lobes = Vec::with_capacity(theta_steps * phi_steps);
    for i in 0..theta_steps {
        let theta = (i as f64 + 0.5) * FRAC_PI_2 / theta_steps as f64;
        for j in 0..phi_steps {
            let phi = (j as f64 + 0.5) * 2.0 * PI / phi_steps as f64;
            let axis = spherical(theta, phi);
            let tangent = spherical(theta + FRAC_PI_2, phi);
            let bitangent = rotation_about(&axis, FRAC_PI_2) * tangent;
            lobes.push(AsgLobe {
                axis,
                tangent,
                bitangent,
                lambda: DEFAULT_SHARPNESS,
                mu: DEFAULT_SHARPNESS,
                amplitude: 1.0,
            });
        }
    }
    lobes
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn axis_lobe(lambda: f64, mu: f64, amplitude: f64) -> AsgLobe {
        AsgLobe {
            axis: Vec3::z(),
            tangent: Vec3::x(),
            bitangent: Vec3::y(),
            lambda,
            mu,
            amplitude,
        }
    }

    #[test]
    fn peak_and_back_hemisphere() {
        let lobe = axis_lobe(3.0, 5.0, 0.7);
        assert_eq!(eval_asg(&lobe, &Vec3::z()), 0.7);
        assert_eq!(eval_asg(&lobe, &Vec3::new(0.1, 0.2, -1.0).normalize()), 0.0);
        assert_eq!(eval_asg(&lobe, &Vec3::x()), 0.0);
    }

    #[test]
    fn forty_five_degrees() {
        let lobe = axis_lobe(1.0, 0.0, 1.0);
        let nu = (Vec3::z() + Vec3::x()).normalize();
        let expected = std::f64::consts::FRAC_1_SQRT_2 * (-0.5_f64).exp();
        assert_relative_eq!(eval_asg(&lobe, &nu), expected, epsilon = 1e-15);
        assert_relative_eq!(expected, 0.428_881, epsilon = 1e-6);
    }

    #[test]
    fn reflect_cases() {
        let n = Vec3::z();
        assert_relative_eq!(reflect(&n, &n), n);
        assert_relative_eq!(reflect(&Vec3::x(), &n), -Vec3::x());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let d = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
            let n = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
            let w = reflect(&d, &n);
            assert!((w.dot(&n) - d.dot(&n)).abs() < 1e-12);
            assert!((w.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_lobes_are_orthonormal_frontal_and_deterministic() {
        let lobes = sample_lobes(4, 4);
        assert_eq!(lobes.len(), 16);
        for l in &lobes {
            let (x, y, z) = (l.tangent, l.bitangent, l.axis);
            assert!(x.dot(&z).abs() + y.dot(&z).abs() + x.dot(&y).abs() < 1e-10);
            assert!(l.frame_error() < 1e-10);
            assert!(z.z >= 0.0);
        }
        assert_eq!(lobes, sample_lobes(4, 4));
    }
}
