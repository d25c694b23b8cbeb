//! Per-triangle geometry: edge matrices with the synthetic fourth vertex,
//! the orthonormal frames used by the similarity-transform baseline, and
//! triangle adjacency.

use std::collections::{BTreeSet, HashMap};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::{Mat3, Vec3, DEFAULT_TOL};

/// Smallest triangle area accepted as non-degenerate.
pub const AREA_EPS: f64 = 1e-12;

pub type Point = Point3<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh and checks index ranges and per-face area.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriMesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        for (f, face) in self.faces.iter().enumerate() {
            if face.iter().any(|&i| i >= self.vertices.len()) {
                return Err(Error::TopologyMismatch(format!(
                    "face {f} references a vertex out of range ({} vertices)",
                    self.vertices.len()
                )));
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::TopologyMismatch(format!("face {f} repeats a vertex index")));
            }
            let area = self.area(f);
            if !(area >= AREA_EPS) {
                return Err(Error::DegenerateTriangle { face: Some(f), area });
            }
        }
        Ok(())
    }

    pub fn triangle(&self, face: usize) -> [Point; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn face_normal(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Mean of the three edge lengths of a face.
    pub fn mean_edge_length(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        ((b - a).norm() + (c - b).norm() + (a - c).norm()) / 3.0
    }

    pub fn transformed(&self, f: impl Fn(&Point) -> Point) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Orthonormal frame of the similarity baseline: columns are the unit base
/// edge, the unit in-plane height direction and the unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaFrame {
    pub rotation: Mat3,
    /// Mean of base length and height length.
    pub scale: f64,
    pub barycenter: Point,
}

/// Local geometry descriptor of one triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleFrame {
    pub edge_matrix: Mat3,
    pub barycenter: Point,
    pub ga: GaFrame,
}

fn cross_and_area(v0: &Point, v1: &Point, v2: &Point) -> (Vec3, f64) {
    let c = (v1 - v0).cross(&(v2 - v0));
    let area = 0.5 * c.norm();
    (c, area)
}

fn check_area(area: f64) -> Result<()> {
    if area >= AREA_EPS {
        Ok(())
    } else {
        Err(Error::DegenerateTriangle { face: None, area })
    }
}

/// `[v1−v0, v2−v0, v3−v0]` with `v3 = v0 + c/√‖c‖`, `c = (v1−v0)×(v2−v0)`.
///
/// The third column has the direction of the unit normal and length
/// `√‖c‖`, so the whole matrix scales linearly with the triangle.
pub fn build_edge_matrix(v0: &Point, v1: &Point, v2: &Point) -> Result<Mat3> {
    let (c, area) = cross_and_area(v0, v1, v2);
    check_area(area)?;
    let e3 = c / c.norm().sqrt();
    Ok(Mat3::from_columns(&[v1 - v0, v2 - v0, e3]))
}

pub fn build_ga_frame(v0: &Point, v1: &Point, v2: &Point) -> Result<GaFrame> {
    let (c, area) = cross_and_area(v0, v1, v2);
    check_area(area)?;
    let base = v1 - v0;
    let base_len = base.norm();
    let normal = c / c.norm();
    let tangent = base / base_len;
    let bitangent = normal.cross(&tangent);
    let height = c.norm() / base_len;
    Ok(GaFrame {
        rotation: Mat3::from_columns(&[tangent, bitangent, normal]),
        scale: 0.5 * (base_len + height),
        barycenter: barycenter(v0, v1, v2),
    })
}

pub fn barycenter(v0: &Point, v1: &Point, v2: &Point) -> Point {
    Point::from((v0.coords + v1.coords + v2.coords) / 3.0)
}

pub fn triangle_frame(v0: &Point, v1: &Point, v2: &Point) -> Result<TriangleFrame> {
    Ok(TriangleFrame {
        edge_matrix: build_edge_matrix(v0, v1, v2)?,
        barycenter: barycenter(v0, v1, v2),
        ga: build_ga_frame(v0, v1, v2)?,
    })
}

/// Frames for every face, tagging degenerate faces with their index.
pub fn triangle_frames(mesh: &TriMesh) -> Result<Vec<TriangleFrame>> {
    (0..mesh.faces.len())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            triangle_frame(&a, &b, &c).map_err(|e| match e {
                Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { face: Some(f), area },
                other => other,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjacencyMode {
    /// Neighbors share an edge.
    #[default]
    Edge,
    /// Neighbors share at least one vertex.
    Vertex,
}

/// Per-triangle neighbor lists. Entry 0 of every list is the triangle itself,
/// the rest are in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    pub neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn of(&self, triangle: usize) -> &[usize] {
        &self.neighbors[triangle]
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

pub fn build_adjacency(mesh: &TriMesh, mode: AdjacencyMode) -> Adjacency {
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); mesh.faces.len()];
    match mode {
        AdjacencyMode::Edge => {
            let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for (f, face) in mesh.faces.iter().enumerate() {
                for k in 0..3 {
                    let (a, b) = (face[k], face[(k + 1) % 3]);
                    by_edge.entry((a.min(b), a.max(b))).or_default().push(f);
                }
            }
            link_groups(&mut sets, by_edge.into_values());
        }
        AdjacencyMode::Vertex => {
            let mut by_vertex: HashMap<usize, Vec<usize>> = HashMap::new();
            for (f, face) in mesh.faces.iter().enumerate() {
                for &v in face {
                    by_vertex.entry(v).or_default().push(f);
                }
            }
            link_groups(&mut sets, by_vertex.into_values());
        }
    }
    let neighbors = sets
        .into_iter()
        .enumerate()
        .map(|(f, set)| {
            let mut list = Vec::with_capacity(set.len() + 1);
            list.push(f);
            list.extend(set.into_iter().filter(|&g| g != f));
            list
        })
        .collect();
    Adjacency { neighbors }
}

fn link_groups(sets: &mut [BTreeSet<usize>], groups: impl Iterator<Item = Vec<usize>>) {
    for group in groups {
        for &a in &group {
            for &b in &group {
                if a != b {
                    sets[a].insert(b);
                }
            }
        }
    }
}

/// Checks that a canonical/deformed pair can drive a rig.
///
/// Requires identical topology, non-degenerate faces on both sides and
/// orientation consistency. Orientation is checked two ways: the sign of
/// `det(Ẽ·E⁻¹)` per face, and fold-over detection, where a face whose normal
/// agreed with the majority of its edge neighbors in the canonical mesh but
/// opposes them after deformation is reported as inverted. The second test is
/// needed because the fourth-vertex construction makes `det(Ẽ)` positive for
/// every non-degenerate triangle.
pub fn validate_pair(canonical: &TriMesh, deformed: &TriMesh) -> Result<()> {
    if canonical.vertices.len() != deformed.vertices.len() {
        return Err(Error::TopologyMismatch(format!(
            "vertex count {} vs {}",
            canonical.vertices.len(),
            deformed.vertices.len()
        )));
    }
    if canonical.faces.len() != deformed.faces.len() {
        return Err(Error::TopologyMismatch(format!(
            "face count {} vs {}",
            canonical.faces.len(),
            deformed.faces.len()
        )));
    }
    if let Some(f) = (0..canonical.faces.len()).find(|&f| canonical.faces[f] != deformed.faces[f]) {
        return Err(Error::TopologyMismatch(format!("face {f} has different vertex indices")));
    }
    canonical.validate()?;
    deformed.validate()?;

    let can = triangle_frames(canonical)?;
    let def = triangle_frames(deformed)?;
    for (f, (c, d)) in can.iter().zip(&def).enumerate() {
        let e = c.edge_matrix;
        let inv = e.try_inverse().ok_or(Error::SingularMatrix { det: e.determinant() })?;
        let det = (d.edge_matrix * inv).determinant();
        if det <= DEFAULT_TOL {
            return Err(Error::InvertedTriangle { face: f });
        }
    }

    let adjacency = build_adjacency(canonical, AdjacencyMode::Edge);
    for f in 0..canonical.faces.len() {
        let others = &adjacency.of(f)[1..];
        if others.is_empty() {
            continue;
        }
        let nc = canonical.face_normal(f);
        let nd = deformed.face_normal(f);
        let flipped = others
            .iter()
            .filter(|&&g| nc.dot(&canonical.face_normal(g)) > 0.0 && nd.dot(&deformed.face_normal(g)) < 0.0)
            .count();
        if 2 * flipped > others.len() {
            return Err(Error::InvertedTriangle { face: f });
        }
    }
    Ok(())
}

/// Unit icosahedron, 12 vertices and 20 outward-oriented faces.
pub fn icosahedron() -> TriMesh {
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let vertices = raw
        .iter()
        .map(|p| Point::from(Vec3::new(p[0], p[1], p[2]).normalize()))
        .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::mat3::rotation_about;

    fn p(x: f64, y: f64, z: f64) -> Point {
        Point::new(x, y, z)
    }

    fn unit_tri() -> [Point; 3] {
        [p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)]
    }

    #[test]
    fn edge_matrix_of_unit_triangle() {
        let [a, b, c] = unit_tri();
        assert_eq!(build_edge_matrix(&a, &b, &c).unwrap(), Mat3::identity());
        let e2 = build_edge_matrix(&(a * 2.0), &(b * 2.0), &(c * 2.0)).unwrap();
        assert_relative_eq!(e2, Mat3::identity() * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn collinear_is_degenerate() {
        let r = build_edge_matrix(&p(0.0, 0.0, 0.0), &p(1.0, 0.0, 0.0), &p(2.0, 0.0, 0.0));
        assert!(matches!(r, Err(Error::DegenerateTriangle { .. })));
        assert!(build_ga_frame(&p(0.0, 0.0, 0.0), &p(1.0, 1.0, 1.0), &p(2.0, 2.0, 2.0)).is_err());
    }

    #[test]
    fn ga_frame_of_unit_triangle() {
        let [a, b, c] = unit_tri();
        let f = build_ga_frame(&a, &b, &c).unwrap();
        assert_relative_eq!(f.rotation, Mat3::identity(), epsilon = 1e-15);
        assert_relative_eq!(f.barycenter, p(1.0 / 3.0, 1.0 / 3.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(f.scale, 1.0);
    }

    #[test]
    fn ga_scale_ratios() {
        let [a, b, c] = unit_tri();
        let can = build_ga_frame(&a, &b, &c).unwrap();
        let uniform = build_ga_frame(&(a * 2.0), &(b * 2.0), &(c * 2.0)).unwrap();
        assert_relative_eq!(uniform.scale / can.scale, 2.0, epsilon = 1e-15);
        let stretch = |q: &Point| p(2.0 * q.x, q.y, q.z);
        let s = build_ga_frame(&stretch(&a), &stretch(&b), &stretch(&c)).unwrap();
        // base 2, height 1
        assert_relative_eq!(s.scale / can.scale, 1.5, epsilon = 1e-15);
    }

    fn two_triangles() -> TriMesh {
        TriMesh::new(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(1.0, 1.0, 0.0), p(0.0, 1.0, 0.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    fn strip() -> TriMesh {
        TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(2.0, 0.0, 0.0),
                p(0.0, 1.0, 0.0),
                p(1.0, 1.0, 0.0),
                p(2.0, 1.0, 0.0),
            ],
            vec![[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4]],
        )
        .unwrap()
    }

    #[test]
    fn adjacency_small_cases() {
        let [a, b, c] = unit_tri();
        let single = TriMesh::new(vec![a, b, c], vec![[0, 1, 2]]).unwrap();
        assert_eq!(build_adjacency(&single, AdjacencyMode::Edge).neighbors, vec![vec![0]]);
        let two = two_triangles();
        let adj = build_adjacency(&two, AdjacencyMode::Edge);
        assert_eq!(adj.neighbors, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn vertex_adjacency_is_superset_of_edge_adjacency() {
        let m = strip();
        let e = build_adjacency(&m, AdjacencyMode::Edge);
        let v = build_adjacency(&m, AdjacencyMode::Vertex);
        assert_eq!(e.of(0), &[0, 1, 3]);
        assert_eq!(v.of(0), &[0, 1, 2, 3]);
        for f in 0..m.faces.len() {
            assert!(e.of(f).iter().all(|g| v.of(f).contains(g)));
        }
    }

    #[test]
    fn icosahedron_has_three_edge_neighbors_per_face() {
        let m = icosahedron();
        m.validate().unwrap();
        let adj = build_adjacency(&m, AdjacencyMode::Edge);
        for f in 0..m.faces.len() {
            // brute-force shared-edge count
            let brute = (0..m.faces.len())
                .filter(|&g| g != f)
                .filter(|&g| m.faces[f].iter().filter(|v| m.faces[g].contains(v)).count() == 2)
                .count();
            assert_eq!(brute, 3);
            assert_eq!(adj.of(f).len(), 4);
            assert_eq!(adj.of(f)[0], f);
        }
    }

    #[test]
    fn validate_pair_cases() {
        let m = strip();
        validate_pair(&m, &m).unwrap();

        let mut reindexed = m.clone();
        reindexed.faces[2] = [2, 5, 1];
        assert!(matches!(validate_pair(&m, &reindexed), Err(Error::TopologyMismatch(_))));

        let mut fewer = m.clone();
        fewer.faces.pop();
        assert!(matches!(validate_pair(&m, &fewer), Err(Error::TopologyMismatch(_))));

        // Fold vertex 2 through the shared edge 1-5: face 2 is mirrored onto
        // the other side.
        let mut folded = m.clone();
        folded.vertices[2] = p(0.5, 0.0, 0.0);
        assert!(matches!(
            validate_pair(&m, &folded),
            Err(Error::InvertedTriangle { face: 2 })
        ));

        let mut collapsed = m.clone();
        collapsed.vertices[2] = p(1.5, 0.5, 0.0);
        assert!(matches!(
            validate_pair(&m, &collapsed),
            Err(Error::DegenerateTriangle { face: Some(2), .. })
        ));
    }

    #[test]
    fn rigid_motion_is_not_an_inversion() {
        let m = strip();
        let r = rotation_about(&Vec3::new(1.0, 0.0, 0.0), std::f64::consts::PI);
        let turned = m.transformed(|q| Point::from(r * q.coords));
        validate_pair(&m, &turned).unwrap();
    }

    fn tri_strategy() -> impl Strategy<Value = [Point; 3]> {
        proptest::array::uniform9(-2.0f64..2.0)
            .prop_map(|c| [p(c[0], c[1], c[2]), p(c[3], c[4], c[5]), p(c[6], c[7], c[8])])
            .prop_filter("non-degenerate", |[a, b, c]| (b - a).cross(&(c - a)).norm() > 1e-3)
    }

    proptest! {
        #[test]
        fn edge_matrix_scale_covariance(tri in tri_strategy(), k in 0.01f64..10.0) {
            let [a, b, c] = tri;
            let e = build_edge_matrix(&a, &b, &c).unwrap();
            let ek = build_edge_matrix(&(a * k), &(b * k), &(c * k)).unwrap();
            prop_assert!((ek - e * k).abs().max() < 1e-10 * k.max(1.0));
        }

        #[test]
        fn edge_matrix_rotation_equivariance(tri in tri_strategy(), axis in proptest::array::uniform3(-1.0f64..1.0), angle in -3.0f64..3.0) {
            let axis = Vec3::from(axis);
            prop_assume!(axis.norm() > 1e-3);
            let r = rotation_about(&axis, angle);
            let [a, b, c] = tri;
            let rot = |q: &Point| Point::from(r * q.coords);
            let e = build_edge_matrix(&a, &b, &c).unwrap();
            let er = build_edge_matrix(&rot(&a), &rot(&b), &rot(&c)).unwrap();
            prop_assert!((er - r * e).abs().max() < 1e-10);
        }

        #[test]
        fn adjacency_is_symmetric_and_self_first(
            jitter in proptest::collection::vec(-0.3f64..0.3, 32),
            vertex_mode in any::<bool>(),
        ) {
            // random 4x4 grid triangulation
            let n = 4;
            let mut vertices = Vec::new();
            for j in 0..n {
                for i in 0..n {
                    let k = j * n + i;
                    vertices.push(p(i as f64 + jitter[2 * k] , j as f64 + jitter[2 * k + 1], 0.0));
                }
            }
            let mut faces = Vec::new();
            for j in 0..n - 1 {
                for i in 0..n - 1 {
                    let v = j * n + i;
                    if (i + j + (jitter[v].to_bits() as usize)) % 2 == 0 {
                        faces.push([v, v + 1, v + n + 1]);
                        faces.push([v, v + n + 1, v + n]);
                    } else {
                        faces.push([v, v + 1, v + n]);
                        faces.push([v + 1, v + n + 1, v + n]);
                    }
                }
            }
            let mesh = TriMesh { vertices, faces };
            let mode = if vertex_mode { AdjacencyMode::Vertex } else { AdjacencyMode::Edge };
            let adj = build_adjacency(&mesh, mode);
            for f in 0..mesh.faces.len() {
                let list = adj.of(f);
                prop_assert_eq!(list[0], f);
                prop_assert!(list[1..].windows(2).all(|w| w[0] < w[1]));
                for &g in &list[1..] {
                    prop_assert!(adj.of(g)[1..].contains(&f));
                }
            }
        }
    }
}
