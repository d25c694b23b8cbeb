//! Small built-in scenes used by the demos, the self-test and the examples.

use nalgebra::Quaternion;

use crate::appearance::{Rgb, ShBlock};
use crate::energy::{FitScene, View};
use crate::error::Result;
use crate::mat3::{rotation_about, Mat3, Vec3};
use crate::mesh::{triangle_frames, AdjacencyMode, Point, TriMesh};
use crate::render::{render, Camera, Image, RenderOptions};
use crate::rig::{BlendTopology, DeformMethod, Rig, Surfel};

pub fn camera(position: Point, width: usize, height: usize, fov_y: f64) -> Camera {
    Camera {
        position,
        look_at: Point::origin(),
        up: Vec3::y(),
        fov_y,
        width,
        height,
    }
}

/// A surfel with a constant SH color.
pub fn surfel(parent: usize, offset: Vec3, rotation: &Mat3, scales: [f64; 2], opacity: f64, rgb: [f64; 3]) -> Surfel {
    let mut s = Surfel {
        parent,
        offset,
        orientation: Quaternion::identity(),
        scales,
        opacity,
        sh: ShBlock::constant(0, rgb),
        eye: false,
    };
    s.set_rotation(rotation);
    s
}

/// One large triangle centered on the origin in the `z = 0` plane.
pub fn patch_mesh() -> TriMesh {
    TriMesh::new(
        vec![Point::new(-1.0, -1.0, 0.0), Point::new(2.0, -1.0, 0.0), Point::new(-1.0, 2.0, 0.0)],
        vec![[0, 1, 2]],
    )
    .expect("patch mesh is valid")
}

fn single_triangle_rig(surfels: Vec<Surfel>) -> Rig {
    let mesh = patch_mesh();
    let topo = BlendTopology::for_mesh(&mesh, AdjacencyMode::Edge);
    Rig::new(mesh, surfels, topo).expect("patch rig is valid")
}

fn target_of(rig: &Rig, cam: &Camera, opts: &RenderOptions) -> Result<Image> {
    Ok(render(&rig.rest()?, cam, opts)?.color_image())
}

/// One fronto-parallel opaque surfel filling a 24×24 view, starting at
/// gray 0.5, with a target rendered at gray `target`.
pub fn gray_patch(target: f64) -> Result<FitScene> {
    let cam = camera(Point::new(0.0, 0.0, 3.0), 24, 24, 40.0);
    let opts = RenderOptions::default();
    let mk = |g| single_triangle_rig(vec![surfel(0, Vec3::zeros(), &Mat3::identity(), [2.0, 2.0], 1.0, [g; 3])]);
    let target = target_of(&mk(target), &cam, &opts)?;
    FitScene::new(
        mk(0.5),
        patch_mesh(),
        DeformMethod::Jacobian,
        None,
        vec![View { camera: cam, target }],
        opts,
    )
}

/// One surfel over a gray background; opacity starts at 0.9 and the target
/// is rendered at `alpha`.
pub fn opacity_patch(alpha: f64) -> Result<FitScene> {
    let cam = camera(Point::new(0.0, 0.0, 3.0), 24, 24, 40.0);
    let opts = RenderOptions {
        background: Rgb::repeat(0.2),
        ..Default::default()
    };
    let mk = |a| single_triangle_rig(vec![surfel(0, Vec3::zeros(), &Mat3::identity(), [0.4, 0.4], a, [0.9; 3])]);
    let target = target_of(&mk(alpha), &cam, &opts)?;
    FitScene::new(
        mk(0.9),
        patch_mesh(),
        DeformMethod::Jacobian,
        None,
        vec![View { camera: cam, target }],
        opts,
    )
}

/// Two surfels, the second flagged as eye, with a slightly shifted target.
pub fn eye_patch() -> Result<FitScene> {
    let cam = camera(Point::new(0.0, 0.0, 3.0), 20, 20, 40.0);
    let opts = RenderOptions::default();
    let mk = |dx: f64, op: f64| {
        let mut a = surfel(0, Vec3::new(-0.3 + dx, 0.0, 0.0), &Mat3::identity(), [0.3, 0.3], op, [0.7, 0.4, 0.2]);
        let mut b = surfel(0, Vec3::new(0.35, 0.1, 0.0), &rotation_about(&Vec3::z(), 0.4), [0.25, 0.15], op, [0.9; 3]);
        a.sh = ShBlock::constant(1, [0.7, 0.4, 0.2]);
        b.eye = true;
        single_triangle_rig(vec![a, b])
    };
    let target = target_of(&mk(0.1, 1.0), &cam, &opts)?;
    FitScene::new(
        mk(0.0, 0.8),
        patch_mesh(),
        DeformMethod::Jacobian,
        None,
        vec![View { camera: cam, target }],
        opts,
    )
}

/// Flat two-triangle hinge sharing the edge `x = 0`.
///
/// The wings differ in shape so that no pose makes them coplanar by accident.
pub fn hinge_mesh() -> TriMesh {
    TriMesh::new(
        vec![
            Point::new(-1.0, 0.0, 0.0),
            Point::new(0.0, -1.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.3, 0.4, 0.0),
        ],
        vec![[0, 1, 2], [3, 2, 1]],
    )
    .expect("hinge mesh is valid")
}

/// The right wing rotated about the shared edge by `degrees`.
pub fn bent_hinge(degrees: f64) -> TriMesh {
    let r = rotation_about(&Vec3::y(), -degrees.to_radians());
    let mut m = hinge_mesh();
    m.vertices[3] = Point::from(r * m.vertices[3].coords);
    m
}

/// Hinge with every vertex scaled by `(sx, sy, 1)`.
pub fn stretched_hinge(sx: f64, sy: f64) -> TriMesh {
    hinge_mesh().transformed(|p| Point::new(sx * p.x, sy * p.y, p.z))
}

const LATTICE_LIFT: f64 = 0.05;

/// Surfels on a barycentric lattice of every face, including edge points.
///
/// `steps` subdivisions per edge; each disk gets the lattice spacing times
/// `radius` as both tangent scales. Color varies smoothly with the
/// canonical position, so neighboring disks look alike. Alternate points sit
/// slightly above or below the face so overlapping disks have a stable order.
pub fn lattice_surfels(mesh: &TriMesh, steps: usize, radius: f64, opacity: f64) -> Result<Vec<Surfel>> {
    let frames = triangle_frames(mesh)?;
    let mut out = Vec::new();
    for (f, frame) in frames.iter().enumerate() {
        let [v0, v1, v2] = mesh.triangle(f);
        let spacing = mesh.mean_edge_length(f) / steps as f64;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
                let lift = if (i + j) % 2 == 0 { 1.0 } else { -1.0 } * LATTICE_LIFT * spacing;
                let p = v0 + (v1 - v0) * a + (v2 - v0) * b + frame.ga.rotation.column(2) * lift;
                let rgb = [0.5 + 0.4 * p.x.tanh(), 0.5 + 0.4 * p.y.tanh(), 0.5 - 0.3 * (p.x + p.y).tanh()];
                out.push(surfel(
                    f,
                    p - frame.barycenter,
                    &frame.ga.rotation,
                    [spacing * radius; 2],
                    opacity,
                    rgb,
                ));
            }
        }
    }
    Ok(out)
}

pub fn hinge_camera() -> Camera {
    camera(Point::new(0.0, -0.6, 3.2), 40, 40, 50.0)
}

/// Blend logits favoring each triangle's own Jacobian.
pub fn parent_dominant_logits(topo: &BlendTopology, strength: f64) -> Vec<Vec<f64>> {
    topo.adjacency
        .neighbors
        .iter()
        .map(|n| n.iter().enumerate().map(|(k, _)| if k == 0 { strength } else { -strength }).collect())
        .collect()
}

/// The hinge bent 60°, rendered with parent-dominant blend logits as the
/// target. The fit starts from uniform logits.
pub fn hinge_logit_scene() -> Result<FitScene> {
    let mesh = hinge_mesh();
    let surfels = lattice_surfels(&mesh, 5, 0.45, 0.95)?;
    let topo = BlendTopology::for_mesh(&mesh, AdjacencyMode::Edge);
    let pose = bent_hinge(60.0);
    let cam = hinge_camera();
    let opts = RenderOptions::default();
    let mut truth = Rig::new(mesh.clone(), surfels.clone(), topo.clone())?;
    truth.topology.logits = parent_dominant_logits(&topo, 2.2);
    let target = render(&truth.deform(&pose, DeformMethod::Jbs)?, &cam, &opts)?.color_image();
    FitScene::new(
        Rig::new(mesh, surfels, topo)?,
        pose,
        DeformMethod::Jbs,
        None,
        vec![View { camera: cam, target }],
        opts,
    )
}

/// Rig on the flat hinge used for the stretch comparison.
pub fn stretch_rig() -> Result<Rig> {
    let mesh = hinge_mesh();
    let surfels = lattice_surfels(&mesh, 6, 0.5, 1.0)?;
    let topo = BlendTopology::for_mesh(&mesh, AdjacencyMode::Edge);
    Rig::new(mesh, surfels, topo)
}

pub fn stretch_camera() -> Camera {
    camera(Point::new(0.0, 0.0, 4.0), 64, 40, 45.0)
}

/// Three overlapping surfels in front of a dark background.
pub fn golden_scene() -> Result<Rig> {
    let mesh = patch_mesh();
    let surfels = vec![
        surfel(0, Vec3::new(-0.2, 0.1, 0.1), &rotation_about(&Vec3::new(0.2, 1.0, 0.0), 0.3), [0.4, 0.25], 0.8, [0.9, 0.3, 0.2]),
        surfel(0, Vec3::new(0.15, -0.1, 0.0), &rotation_about(&Vec3::x(), -0.4), [0.3, 0.45], 0.7, [0.2, 0.8, 0.3]),
        surfel(0, Vec3::new(0.05, 0.2, -0.2), &Mat3::identity(), [0.5, 0.5], 0.9, [0.2, 0.3, 0.9]),
    ];
    let topo = BlendTopology::for_mesh(&mesh, AdjacencyMode::Edge);
    Rig::new(mesh, surfels, topo)
}
