//! Specular intensity head: ASG responses to the reflected direction,
//! a positional encoding of the rotated view direction and `n·d_rot`,
//! fed through a two-hidden-layer MLP with a monochrome output.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat3::Vec3;

use super::asg::{reflect, AsgLobe};

pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_PE_FREQS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SpecularHead {
    pub lobes: Vec<AsgLobe>,
    pub pe_freqs: usize,
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub w3: DVector<f64>,
    pub b3: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Output activation: softplus shifted so that 0 maps to 0, clamped at 0.
fn output_activation(z: f64) -> (f64, f64) {
    if z > 0.0 {
        (softplus(z) - LN_2, sigmoid(z))
    } else {
        (0.0, 0.0)
    }
}

pub fn input_dim(lobes: usize, pe_freqs: usize) -> usize {
    lobes + 6 * pe_freqs + 1
}

/// `sin`/`cos` of `2^k·π·d` for `k < pe_freqs`, per component.
pub fn positional_encoding(d: &Vec3, pe_freqs: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 * pe_freqs);
    for k in 0..pe_freqs {
        let f = (1u64 << k) as f64 * PI;
        out.extend(d.iter().map(|c| (f * c).sin()));
        out.extend(d.iter().map(|c| (f * c).cos()));
    }
    out
}

/// Gradient of the head output with respect to every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecularGradient {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub w3: DVector<f64>,
    pub b3: f64,
}

impl SpecularGradient {
    /// Flattened in the same order as [`SpecularHead::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.lambda.len() {
            out.extend([self.lambda[i], self.mu[i], self.amplitude[i]]);
        }
        push_row_major(&mut out, &self.w1);
        out.extend(self.b1.iter());
        push_row_major(&mut out, &self.w2);
        out.extend(self.b2.iter());
        out.extend(self.w3.iter());
        out.push(self.b3);
        out
    }
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        out.extend(m.row(r).iter());
    }
}

fn read_row_major(m: &mut DMatrix<f64>, src: &mut impl Iterator<Item = f64>) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            m[(r, c)] = src.next().unwrap_or(0.0);
        }
    }
}

struct Forward {
    features: DVector<f64>,
    h1: DVector<f64>,
    h2: DVector<f64>,
    value: f64,
    slope: f64,
}

impl SpecularHead {
    /// Head whose weights and biases are all zero. Its output is 0 everywhere.
    pub fn zeros(lobes: Vec<AsgLobe>, pe_freqs: usize, hidden: usize) -> Self {
        let n_in = input_dim(lobes.len(), pe_freqs);
        SpecularHead {
            lobes,
            pe_freqs,
            w1: DMatrix::zeros(hidden, n_in),
            b1: DVector::zeros(hidden),
            w2: DMatrix::zeros(hidden, hidden),
            b2: DVector::zeros(hidden),
            w3: DVector::zeros(hidden),
            b3: 0.0,
        }
    }

    /// Uniform fan-in initialization with a small positive output bias.
    pub fn random(lobes: Vec<AsgLobe>, pe_freqs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut head = Self::zeros(lobes, pe_freqs, hidden);
        let fill = |m: &mut DMatrix<f64>, rng: &mut ChaCha8Rng| {
            let bound = 1.0 / (m.ncols() as f64).sqrt();
            m.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
        };
        fill(&mut head.w1, &mut rng);
        fill(&mut head.w2, &mut rng);
        let bound = 1.0 / (hidden as f64).sqrt();
        head.w3.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
        head.b3 = 0.1;
        head
    }

    pub fn input_dim(&self) -> usize {
        input_dim(self.lobes.len(), self.pe_freqs)
    }

    pub fn validate(&self) -> Result<()> {
        let n_in = self.input_dim();
        let h1 = self.w1.nrows();
        let h2 = self.w2.nrows();
        let ok = self.w1.ncols() == n_in
            && self.b1.len() == h1
            && self.w2.ncols() == h1
            && self.b2.len() == h2
            && self.w3.len() == h2;
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "specular head layers do not chain: input {n_in}, w1 {}x{}, b1 {}, w2 {}x{}, b2 {}, w3 {}",
                self.w1.nrows(),
                self.w1.ncols(),
                self.b1.len(),
                self.w2.nrows(),
                self.w2.ncols(),
                self.b2.len(),
                self.w3.len()
            )))
        }
    }

    pub fn features(&self, omega_o: &Vec3, d_rot: &Vec3, n: &Vec3) -> DVector<f64> {
        let mut f: Vec<f64> = self
            .lobes
            .iter()
            .map(|l| l.amplitude * l.shape(omega_o))
            .collect();
        f.extend(positional_encoding(d_rot, self.pe_freqs));
        f.push(n.dot(d_rot));
        DVector::from_vec(f)
    }

    fn forward(&self, omega_o: &Vec3, d_rot: &Vec3, n: &Vec3) -> Forward {
        let features = self.features(omega_o, d_rot, n);
        let h1 = (&self.w1 * &features + &self.b1).map(f64::tanh);
        let h2 = (&self.w2 * &h1 + &self.b2).map(f64::tanh);
        let z = self.w3.dot(&h2) + self.b3;
        let (value, slope) = output_activation(z);
        Forward {
            features,
            h1,
            h2,
            value,
            slope,
        }
    }

    /// Monochrome specular intensity, `≥ 0`.
    pub fn eval(&self, omega_o: &Vec3, d_rot: &Vec3, n: &Vec3) -> Result<f64> {
        self.validate()?;
        Ok(self.forward(omega_o, d_rot, n).value)
    }

    /// Output value and its analytic gradient.
    pub fn gradient(&self, omega_o: &Vec3, d_rot: &Vec3, n: &Vec3) -> Result<(f64, SpecularGradient)> {
        self.validate()?;
        let fw = self.forward(omega_o, d_rot, n);
        let dz = fw.slope;
        let w3 = &fw.h2 * dz;
        let da2 = self.w3.component_mul(&fw.h2.map(|h| 1.0 - h * h)) * dz;
        let w2 = &da2 * fw.h1.transpose();
        let da1 = (self.w2.transpose() * &da2).component_mul(&fw.h1.map(|h| 1.0 - h * h));
        let w1 = &da1 * fw.features.transpose();
        let dfeat = self.w1.transpose() * &da1;

        let n_lobes = self.lobes.len();
        let mut lambda = vec![0.0; n_lobes];
        let mut mu = vec![0.0; n_lobes];
        let mut amplitude = vec![0.0; n_lobes];
        for (i, lobe) in self.lobes.iter().enumerate() {
            let shape = lobe.shape(omega_o);
            let u = omega_o.dot(&lobe.tangent);
            let v = omega_o.dot(&lobe.bitangent);
            amplitude[i] = dfeat[i] * shape;
            lambda[i] = -dfeat[i] * lobe.amplitude * shape * u * u;
            mu[i] = -dfeat[i] * lobe.amplitude * shape * v * v;
        }
        Ok((
            fw.value,
            SpecularGradient {
                lambda,
                mu,
                amplitude,
                w1,
                b1: da1,
                w2,
                b2: da2,
                w3,
                b3: dz,
            },
        ))
    }

    pub fn param_count(&self) -> usize {
        3 * self.lobes.len()
            + self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.w3.len()
            + 1
    }

    /// Lobe `(λ, μ, ξ)` triples, then `W1` (row-major), `b1`, `W2`, `b2`, `w3`, `b3`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.lobes {
            out.extend([l.lambda, l.mu, l.amplitude]);
        }
        push_row_major(&mut out, &self.w1);
        out.extend(self.b1.iter());
        push_row_major(&mut out, &self.w2);
        out.extend(self.b2.iter());
        out.extend(self.w3.iter());
        out.push(self.b3);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} specular parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for l in &mut self.lobes {
            l.lambda = it.next().unwrap_or(0.0);
            l.mu = it.next().unwrap_or(0.0);
            l.amplitude = it.next().unwrap_or(0.0);
        }
        read_row_major(&mut self.w1, &mut it);
        self.b1.iter_mut().for_each(|v| *v = it.next().unwrap_or(0.0));
        read_row_major(&mut self.w2, &mut it);
        self.b2.iter_mut().for_each(|v| *v = it.next().unwrap_or(0.0));
        self.w3.iter_mut().for_each(|v| *v = it.next().unwrap_or(0.0));
        self.b3 = it.next().unwrap_or(0.0);
        Ok(())
    }
}

/// `c_s = F(⊕ ASGᵢ(ω_o), γ(d_rot), n·d_rot)` with `ω_o = reflect(d_rot, n)`
/// supplied by the caller.
pub fn eval_specular(head: &SpecularHead, omega_o: &Vec3, d_rot: &Vec3, n: &Vec3) -> Result<f64> {
    head.eval(omega_o, d_rot, n)
}

/// Convenience: reflect then evaluate.
pub fn specular_for_view(head: &SpecularHead, d_rot: &Vec3, n: &Vec3) -> Result<f64> {
    head.eval(&reflect(d_rot, n), d_rot, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appearance::asg::sample_lobes;

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            if v.norm() > 0.1 {
                return v.normalize();
            }
        }
    }

    #[test]
    fn zero_head_outputs_zero() {
        let head = SpecularHead::zeros(sample_lobes(4, 4), DEFAULT_PE_FREQS, DEFAULT_HIDDEN);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let d = random_unit(&mut rng);
            let n = random_unit(&mut rng);
            assert_eq!(specular_for_view(&head, &d, &n).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimensions_chain() {
        let head = SpecularHead::random(sample_lobes(4, 4), 4, 32, 1);
        assert_eq!(head.input_dim(), 16 + 24 + 1);
        head.validate().unwrap();
        let mut bad = head.clone();
        bad.w2 = DMatrix::zeros(32, 31);
        assert!(matches!(
            bad.eval(&Vec3::z(), &Vec3::z(), &Vec3::z()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn params_round_trip() {
        let head = SpecularHead::random(sample_lobes(2, 2), 2, 5, 9);
        let mut other = SpecularHead::zeros(sample_lobes(2, 2), 2, 5);
        other.set_params(&head.params()).unwrap();
        assert_eq!(other, head);
        assert!(other.set_params(&[0.0; 3]).is_err());
    }

    #[test]
    fn lobe_permutation_symmetry() {
        let head = SpecularHead::random(sample_lobes(4, 4), 4, 32, 5);
        let mut swapped = head.clone();
        swapped.lobes.swap(2, 9);
        swapped.w1.swap_columns(2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let d = random_unit(&mut rng);
            let n = random_unit(&mut rng);
            let a = specular_for_view(&head, &d, &n).unwrap();
            let b = specular_for_view(&swapped, &d, &n).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut draws = 0;
        while draws < 5 {
            let mut head = SpecularHead::random(sample_lobes(2, 2), 2, 6, rng.random());
            head.b3 = 0.5;
            let d = random_unit(&mut rng);
            let n = random_unit(&mut rng);
            let omega = reflect(&d, &n);
            let (value, grad) = head.gradient(&omega, &d, &n).unwrap();
            if value < 1e-3 {
                continue;
            }
            draws += 1;
            let analytic = grad.flatten();
            let base = head.params();
            let h = 1e-5;
            for (k, a) in analytic.iter().enumerate() {
                let mut p = base.clone();
                p[k] += h;
                head.set_params(&p).unwrap();
                let up = head.eval(&omega, &d, &n).unwrap();
                p[k] -= 2.0 * h;
                head.set_params(&p).unwrap();
                let down = head.eval(&omega, &d, &n).unwrap();
                head.set_params(&base).unwrap();
                let fd = (up - down) / (2.0 * h);
                let scale = a.abs().max(fd.abs()).max(1e-6);
                assert!((fd - a).abs() / scale < 1e-4 || (fd - a).abs() < 1e-9, "param {k}: fd {fd} vs {a}");
            }
        }
    }
}
