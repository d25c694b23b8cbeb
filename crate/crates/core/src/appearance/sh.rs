//! Real spherical harmonics up to degree 3, using the sign and ordering
//! convention of common Gaussian-splatting code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::Vec3;

use super::Rgb;

pub const MAX_DEGREE: usize = 3;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

pub const fn coefficient_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Per-channel SH coefficients, `(degree + 1)²` RGB triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShBlock {
    pub degree: usize,
    pub coeffs: Vec<[f64; 3]>,
}

impl ShBlock {
    pub fn new(degree: usize, coeffs: Vec<[f64; 3]>) -> Result<Self> {
        let block = ShBlock { degree, coeffs };
        block.validate()?;
        Ok(block)
    }

    /// View-independent color: only the DC term is set.
    pub fn constant(degree: usize, rgb: [f64; 3]) -> Self {
        let mut coeffs = vec![[0.0; 3]; coefficient_count(degree.min(MAX_DEGREE))];
        coeffs[0] = [rgb[0] / SH_C0, rgb[1] / SH_C0, rgb[2] / SH_C0];
        ShBlock {
            degree: degree.min(MAX_DEGREE),
            coeffs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree > MAX_DEGREE {
            return Err(Error::DimensionMismatch(format!(
                "SH degree {} exceeds {MAX_DEGREE}",
                self.degree
            )));
        }
        if self.coeffs.len() != coefficient_count(self.degree) {
            return Err(Error::DimensionMismatch(format!(
                "degree {} needs {} SH coefficients per channel, got {}",
                self.degree,
                coefficient_count(self.degree),
                self.coeffs.len()
            )));
        }
        Ok(())
    }

    /// Color from the DC term alone.
    pub fn dc_color(&self) -> Rgb {
        Rgb::new(self.coeffs[0][0], self.coeffs[0][1], self.coeffs[0][2]) * SH_C0
    }
}

/// Basis values `Y_0 .. Y_15`; entries above `degree` are zero.
pub fn sh_basis(degree: usize, d: &Vec3) -> [f64; 16] {
    let (x, y, z) = (d.x, d.y, d.z);
    let mut b = [0.0; 16];
    b[0] = SH_C0;
    if degree >= 1 {
        b[1] = -SH_C1 * y;
        b[2] = SH_C1 * z;
        b[3] = -SH_C1 * x;
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[4] = SH_C2[0] * x * y;
        b[5] = SH_C2[1] * y * z;
        b[6] = SH_C2[2] * (2.0 * zz - xx - yy);
        b[7] = SH_C2[3] * x * z;
        b[8] = SH_C2[4] * (xx - yy);
        if degree >= 3 {
            b[9] = SH_C3[0] * y * (3.0 * xx - yy);
            b[10] = SH_C3[1] * x * y * z;
            b[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
            b[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
            b[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
            b[14] = SH_C3[5] * z * (xx - yy);
            b[15] = SH_C3[6] * x * (xx - 3.0 * yy);
        }
    }
    b
}

/// SH expansion in direction `d`, clamped below at zero per channel.
pub fn eval_sh(block: &ShBlock, d: &Vec3) -> Rgb {
    let basis = sh_basis(block.degree, d);
    let mut c = Rgb::zeros();
    for (coef, b) in block.coeffs.iter().zip(basis.iter()) {
        c += Rgb::new(coef[0], coef[1], coef[2]) * *b;
    }
    c.map(|v| v.max(0.0))
}
