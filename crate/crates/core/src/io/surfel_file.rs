//! JSON surfel sets: canonical surfels with their blend logits and an
//! optional specular head, and deformed surfel dumps.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Quaternion};
use serde::{Deserialize, Serialize};

use crate::appearance::{AsgLobe, ShBlock, SpecularHead};
use crate::error::{Error, Result};
use crate::mat3::Vec3;
use crate::mesh::Adjacency;
use crate::rig::{BlendTopology, DeformedSurfel, Surfel};

pub const SCHEMA_VERSION: u32 = 1;
pub const QUATERNION_UNIT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfelRecord {
    pub parent: usize,
    /// Offset from the parent barycenter.
    pub offset: [f64; 3],
    /// Unit quaternion `[w, x, y, z]` with `w ≥ 0`.
    pub rotation: [f64; 4],
    pub scales: [f64; 2],
    pub opacity: f64,
    pub sh: ShBlock,
    #[serde(default)]
    pub eye: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlendRecord {
    pub neighbors: Vec<Vec<usize>>,
    pub logits: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LobeRecord {
    pub axis: [f64; 3],
    pub tangent: [f64; 3],
    pub bitangent: [f64; 3],
    pub lambda: f64,
    pub mu: f64,
    pub amplitude: f64,
}

/// Weight matrices are stored row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecularRecord {
    pub lobes: Vec<LobeRecord>,
    pub pe_freqs: usize,
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfelSetFile {
    pub schema_version: u32,
    pub surfels: Vec<SurfelRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blend: Option<BlendRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specular: Option<SpecularRecord>,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidSurfelSet(format!("ragged matrix `{name}`")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl SurfelRecord {
    pub fn from_surfel(s: &Surfel) -> Self {
        let q = s.orientation;
        SurfelRecord {
            parent: s.parent,
            offset: arr(&s.offset),
            rotation: [q.w, q.i, q.j, q.k],
            scales: s.scales,
            opacity: s.opacity,
            sh: s.sh.clone(),
            eye: s.eye,
        }
    }

    /// Checks the record and builds the surfel. A quaternion with `w < 0`
    /// is negated, which leaves the rotation unchanged.
    pub fn to_surfel(&self, index: usize) -> Result<Surfel> {
        let bad = |m: String| Error::InvalidSurfelSet(format!("surfel {index}: {m}"));
        let [w, x, y, z] = self.rotation;
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_UNIT_TOL {
            return Err(bad(format!("quaternion norm {norm} is not 1")));
        }
        if self.scales.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(bad(format!("scales {:?} must be positive", self.scales)));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(bad(format!("opacity {} outside [0, 1]", self.opacity)));
        }
        if self.offset.iter().any(|v| !v.is_finite()) {
            return Err(bad("offset is not finite".into()));
        }
        self.sh.validate().map_err(|e| bad(e.to_string()))?;
        let sign = if w < 0.0 { -1.0 } else { 1.0 };
        Ok(Surfel {
            parent: self.parent,
            offset: Vec3::from(self.offset),
            orientation: Quaternion::new(sign * w, sign * x, sign * y, sign * z),
            scales: self.scales,
            opacity: self.opacity,
            sh: self.sh.clone(),
            eye: self.eye,
        })
    }
}

impl BlendRecord {
    pub fn from_topology(t: &BlendTopology) -> Self {
        BlendRecord {
            neighbors: t.adjacency.neighbors.clone(),
            logits: t.logits.clone(),
        }
    }

    pub fn to_topology(&self) -> Result<BlendTopology> {
        let t = BlendTopology {
            adjacency: Adjacency {
                neighbors: self.neighbors.clone(),
            },
            logits: self.logits.clone(),
        };
        t.validate()?;
        Ok(t)
    }
}

impl SpecularRecord {
    pub fn from_head(h: &SpecularHead) -> Self {
        SpecularRecord {
            lobes: h
                .lobes
                .iter()
                .map(|l| LobeRecord {
                    axis: arr(&l.axis),
                    tangent: arr(&l.tangent),
                    bitangent: arr(&l.bitangent),
                    lambda: l.lambda,
                    mu: l.mu,
                    amplitude: l.amplitude,
                })
                .collect(),
            pe_freqs: h.pe_freqs,
            w1: rows(&h.w1),
            b1: h.b1.iter().copied().collect(),
            w2: rows(&h.w2),
            b2: h.b2.iter().copied().collect(),
            w3: h.w3.iter().copied().collect(),
            b3: h.b3,
        }
    }

    pub fn to_head(&self) -> Result<SpecularHead> {
        let head = SpecularHead {
            lobes: self
                .lobes
                .iter()
                .map(|l| AsgLobe {
                    axis: Vec3::from(l.axis),
                    tangent: Vec3::from(l.tangent),
                    bitangent: Vec3::from(l.bitangent),
                    lambda: l.lambda,
                    mu: l.mu,
                    amplitude: l.amplitude,
                })
                .collect(),
            pe_freqs: self.pe_freqs,
            w1: from_rows("w1", &self.w1)?,
            b1: DVector::from_vec(self.b1.clone()),
            w2: from_rows("w2", &self.w2)?,
            b2: DVector::from_vec(self.b2.clone()),
            w3: DVector::from_vec(self.w3.clone()),
            b3: self.b3,
        };
        head.validate()?;
        Ok(head)
    }
}

/// Surfels, blend topology and specular head decoded from a file.
#[derive(Clone, Debug)]
pub struct SurfelSet {
    pub surfels: Vec<Surfel>,
    pub topology: Option<BlendTopology>,
    pub head: Option<SpecularHead>,
}

impl SurfelSetFile {
    pub fn new(surfels: &[Surfel], topology: Option<&BlendTopology>, head: Option<&SpecularHead>) -> Self {
        SurfelSetFile {
            schema_version: SCHEMA_VERSION,
            surfels: surfels.iter().map(SurfelRecord::from_surfel).collect(),
            blend: topology.map(BlendRecord::from_topology),
            specular: head.map(SpecularRecord::from_head),
        }
    }

    pub fn decode(&self) -> Result<SurfelSet> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidSurfelSet(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Ok(SurfelSet {
            surfels: self
                .surfels
                .iter()
                .enumerate()
                .map(|(i, r)| r.to_surfel(i))
                .collect::<Result<_>>()?,
            topology: self.blend.as_ref().map(BlendRecord::to_topology).transpose()?,
            head: self.specular.as_ref().map(SpecularRecord::to_head).transpose()?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("surfel sets serialize") + "\n"
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn load_surfel_set(path: impl AsRef<Path>) -> Result<SurfelSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SurfelSetFile::from_json(&text, path)?.decode()
}

pub fn save_surfel_set(file: &SurfelSetFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, file.to_json()).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformedRecord {
    pub position: [f64; 3],
    /// `Σ^{1/2}` row by row.
    pub half_covariance: [[f64; 3]; 3],
    pub normal: [f64; 3],
    pub opacity: f64,
    pub eye: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformedSetFile {
    pub schema_version: u32,
    pub surfels: Vec<DeformedRecord>,
}

impl DeformedSetFile {
    pub fn new(surfels: &[DeformedSurfel]) -> Self {
        DeformedSetFile {
            schema_version: SCHEMA_VERSION,
            surfels: surfels
                .iter()
                .map(|d| {
                    let h = &d.half_covariance;
                    DeformedRecord {
                        position: [d.position.x, d.position.y, d.position.z],
                        half_covariance: [0, 1, 2].map(|r| [h[(r, 0)], h[(r, 1)], h[(r, 2)]]),
                        normal: arr(&d.normal),
                        opacity: d.opacity,
                        eye: d.eye,
                    }
                })
                .collect(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("deformed sets serialize") + "\n";
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appearance::{sample_lobes, specular::DEFAULT_PE_FREQS};
    use crate::mesh::{icosahedron, AdjacencyMode};
    use crate::rig::bind_surfels;

    fn sample() -> SurfelSetFile {
        let mesh = icosahedron();
        let mut surfels = bind_surfels(&mesh, 2, 7).unwrap();
        surfels[3].eye = true;
        let mut topo = BlendTopology::for_mesh(&mesh, AdjacencyMode::Edge);
        topo.logits[0][1] = 0.25;
        let head = SpecularHead::random(sample_lobes(2, 3), DEFAULT_PE_FREQS, 8, 3);
        SurfelSetFile::new(&surfels, Some(&topo), Some(&head))
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = sample();
        let text = f.to_json();
        let back = SurfelSetFile::from_json(&text, Path::new("x")).unwrap();
        assert_eq!(back, f);
        let set = back.decode().unwrap();
        let again = SurfelSetFile::new(&set.surfels, set.topology.as_ref(), set.head.as_ref());
        assert_eq!(again.to_json(), text);
    }

    #[test]
    fn rejects_non_unit_quaternion() {
        let mut f = sample();
        f.surfels[0].rotation = [1.0, 0.0, 0.0, 1e-2];
        assert!(matches!(f.decode(), Err(Error::InvalidSurfelSet(_))));
        f.surfels[0].rotation = [1.0, 0.0, 0.0, 1e-7];
        assert!(f.decode().is_ok());
    }

    #[test]
    fn negative_w_is_canonicalized() {
        let mut f = sample();
        f.surfels[0].rotation = [-0.6, 0.0, 0.8, 0.0];
        let s = &f.decode().unwrap().surfels[0];
        assert_eq!(s.orientation, Quaternion::new(0.6, 0.0, -0.8, 0.0));
    }

    #[test]
    fn schema_version_checked() {
        let mut f = sample();
        f.schema_version = 9;
        assert!(f.decode().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"schema_version":1,"surfels":[],"extra":1}"#;
        assert!(SurfelSetFile::from_json(text, Path::new("x")).is_err());
    }
}
