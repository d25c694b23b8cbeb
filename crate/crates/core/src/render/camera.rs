use crate::error::{Error, Result};
use crate::mat3::Vec3;
use crate::mesh::Point;

/// Pinhole camera looking from `position` toward `look_at`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub position: Point,
    pub look_at: Point,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub fov_y: f64,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal camera axes; `forward` points into the scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.fov_y > 0.0 && self.fov_y < 180.0) {
            return Err(Error::InvalidCamera(format!("fov_y {} outside (0, 180)", self.fov_y)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera(format!(
                "image size {}x{}",
                self.width, self.height
            )));
        }
        let f = self.look_at - self.position;
        if !(f.norm() > 0.0) || !f.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera("position and look_at coincide".into()));
        }
        let c = f.normalize().cross(&self.up);
        if !(c.norm() > 1e-9 * self.up.norm()) || !(self.up.norm() > 0.0) {
            return Err(Error::InvalidCamera("up is parallel to the view direction".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> CameraBasis {
        let forward = (self.look_at - self.position).normalize();
        let right = forward.cross(&self.up).normalize();
        let up = right.cross(&forward);
        CameraBasis { right, up, forward }
    }

    fn half_extent(&self) -> (f64, f64) {
        let ty = (self.fov_y.to_radians() * 0.5).tan();
        (ty * self.width as f64 / self.height as f64, ty)
    }

    /// Unit direction through the center of pixel `(x, y)`; row 0 is the top.
    pub fn ray_dir(&self, basis: &CameraBasis, x: f64, y: f64) -> Vec3 {
        let (tx, ty) = self.half_extent();
        let sx = ((x + 0.5) / self.width as f64 * 2.0 - 1.0) * tx;
        let sy = (1.0 - (y + 0.5) / self.height as f64 * 2.0) * ty;
        (basis.forward + sx * basis.right + sy * basis.up).normalize()
    }

    /// Continuous pixel coordinates of `p` and its depth along `forward`.
    /// `None` if `p` is not in front of the camera.
    pub fn project(&self, basis: &CameraBasis, p: &Point) -> Option<(f64, f64, f64)> {
        let rel = p - self.position;
        let z = rel.dot(&basis.forward);
        if z <= 0.0 {
            return None;
        }
        let (tx, ty) = self.half_extent();
        let sx = rel.dot(&basis.right) / (z * tx);
        let sy = rel.dot(&basis.up) / (z * ty);
        let x = (sx + 1.0) * 0.5 * self.width as f64 - 0.5;
        let y = (1.0 - sy) * 0.5 * self.height as f64 - 0.5;
        Some((x, y, z))
    }
}
