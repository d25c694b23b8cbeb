//! Wavefront OBJ, triangles only.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: "vertex needs three coordinates".into(),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad coordinate `{tok}`"),
    })
}

// `f` tokens look like `7`, `7/2`, `7//3` or `7/2/3`; only the position
// index matters. Negative indices count back from the last vertex.
fn parse_index(tok: &str, seen: usize, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let bad = || Error::Parse {
        line,
        message: format!("bad face index `{tok}`"),
    };
    let i: i64 = head.parse().map_err(|_| bad())?;
    let idx = match i {
        0 => return Err(bad()),
        i if i > 0 => i - 1,
        i => seen as i64 + i,
    };
    if idx < 0 {
        return Err(bad());
    }
    Ok(idx as usize)
}

/// Parses `v` and `f` records; everything else is ignored.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push(Point::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| parse_index(t, vertices.len(), line))
                    .collect::<Result<_>>()?;
                if idx.len() > 3 {
                    return Err(Error::NonTriangleFace { line, count: idx.len() });
                }
                if idx.len() < 3 {
                    return Err(Error::Parse {
                        line,
                        message: format!("face has {} vertices", idx.len()),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}

pub fn format_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn save_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_obj(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosahedron;

    #[test]
    fn single_triangle() {
        let m = parse_obj("# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nusemtl skin\nf 1/1/1 2/1/1 3/1/1\n").unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn quad_is_rejected() {
        let e = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap_err();
        assert!(matches!(e, Error::NonTriangleFace { line: 5, count: 4 }));
    }

    #[test]
    fn parse_errors_carry_line() {
        let e = parse_obj("v 0 0 0\nv 1 x 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn negative_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn round_trip() {
        let m = icosahedron();
        let back = parse_obj(&format_obj(&m)).unwrap();
        assert_eq!(back.faces, m.faces);
        for (a, b) in m.vertices.iter().zip(&back.vertices) {
            assert!((a - b).norm() < 1e-6);
        }
    }
}
