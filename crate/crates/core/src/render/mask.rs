use crate::mat3::Vec3;
use crate::mesh::{Point, TriMesh};

use super::camera::Camera;

fn ray_hits_triangle(o: &Point, d: &Vec3, [a, b, c]: [Point; 3]) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return false;
    }
    let s = o - a;
    let u = s.dot(&p) / det;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) / det;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(&q) / det > 0.0
}

/// Pixels whose center ray hits any face of `mesh`.
pub fn mesh_mask(mesh: &TriMesh, camera: &Camera) -> Vec<bool> {
    let basis = camera.basis();
    let mut out = Vec::with_capacity(camera.width * camera.height);
    for y in 0..camera.height {
        for x in 0..camera.width {
            let d = camera.ray_dir(&basis, x as f64, y as f64);
            out.push((0..mesh.faces.len()).any(|f| ray_hits_triangle(&camera.position, &d, mesh.triangle(f))));
        }
    }
    out
}
