//! Surfels bound to mesh triangles and their deformation under a posed mesh.

pub mod blend;
pub mod deform;
pub mod surfel;

pub use blend::{blend_weights, jbs, jbs_factors, lerp_blend, BlendTopology, BlendedJacobian, JacobianFactors};
pub use deform::{deform_normal, deform_surfel, deform_surfel_blended, ga_deform_surfel, jacobian, rotate_view_dir};
pub use surfel::{bind_surfels, DeformedSurfel, Surfel};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::DEFAULT_TOL;
use crate::mesh::{triangle_frames, validate_pair, TriMesh, TriangleFrame};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformMethod {
    /// Similarity transform from the parent's orthonormal frame.
    Ga,
    /// Parent Jacobian only.
    Jacobian,
    /// Blended Jacobians over each triangle's neighbors.
    #[default]
    Jbs,
}

/// Per-triangle quantities of one deformed pose, built once and shared by
/// every surfel deformed into that pose.
#[derive(Clone, Debug)]
pub struct PoseCache {
    pub frames: Vec<TriangleFrame>,
    pub factors: Vec<JacobianFactors>,
}

impl PoseCache {
    pub fn build(canonical: &[TriangleFrame], deformed: &TriMesh) -> Result<Self> {
        let frames = triangle_frames(deformed)?;
        if frames.len() != canonical.len() {
            return Err(Error::TopologyMismatch(format!(
                "{} canonical faces, {} deformed",
                canonical.len(),
                frames.len()
            )));
        }
        let factors = canonical
            .par_iter()
            .zip(&frames)
            .enumerate()
            .map(|(f, (c, d))| {
                jacobian(&c.edge_matrix, &d.edge_matrix)
                    .and_then(|j| JacobianFactors::new(&j, DEFAULT_TOL))
                    .map_err(|e| Error::neighbor(f, e))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PoseCache { frames, factors })
    }

    /// `J_b` for every triangle from the cached factors.
    pub fn blended(&self, topology: &BlendTopology) -> Result<Vec<BlendedJacobian>> {
        topology.validate()?;
        (0..self.factors.len())
            .map(|t| {
                let nbrs = topology.adjacency.of(t);
                let refs: Vec<&JacobianFactors> = nbrs.iter().map(|&n| &self.factors[n]).collect();
                jbs_factors(&refs, &topology.weights(t))
            })
            .collect()
    }
}

/// Canonical mesh, its bound surfels and the blend topology.
#[derive(Clone, Debug)]
pub struct Rig {
    pub canonical: TriMesh,
    pub frames: Vec<TriangleFrame>,
    pub surfels: Vec<Surfel>,
    pub topology: BlendTopology,
}

impl Rig {
    pub fn new(canonical: TriMesh, surfels: Vec<Surfel>, topology: BlendTopology) -> Result<Self> {
        let frames = triangle_frames(&canonical)?;
        topology.validate()?;
        if topology.adjacency.len() != frames.len() {
            return Err(Error::DimensionMismatch(format!(
                "blend topology covers {} triangles, mesh has {}",
                topology.adjacency.len(),
                frames.len()
            )));
        }
        if let Some(s) = surfels.iter().find(|s| s.parent >= frames.len()) {
            return Err(Error::InvalidSurfelSet(format!(
                "surfel parent {} out of range ({} faces)",
                s.parent,
                frames.len()
            )));
        }
        Ok(Rig {
            canonical,
            frames,
            surfels,
            topology,
        })
    }

    pub fn pose(&self, deformed: &TriMesh) -> Result<PoseCache> {
        validate_pair(&self.canonical, deformed)?;
        PoseCache::build(&self.frames, deformed)
    }

    pub fn deform(&self, deformed: &TriMesh, method: DeformMethod) -> Result<Vec<DeformedSurfel>> {
        let pose = self.pose(deformed)?;
        self.deform_with(&pose, method)
    }

    pub fn deform_with(&self, pose: &PoseCache, method: DeformMethod) -> Result<Vec<DeformedSurfel>> {
        let blended: Vec<BlendedJacobian> = match method {
            DeformMethod::Jbs => pose.blended(&self.topology)?,
            _ => pose
                .factors
                .iter()
                .map(|f| BlendedJacobian {
                    rotation: f.polar.rotation,
                    stretch: f.polar.stretch,
                })
                .collect(),
        };
        self.surfels
            .iter()
            .map(|s| {
                let p = s.parent;
                match method {
                    DeformMethod::Ga => Ok(ga_deform_surfel(s, &self.frames[p].ga, &pose.frames[p].ga)),
                    DeformMethod::Jacobian => {
                        let mut d = deform_surfel_blended(s, &blended[p], &pose.frames[p].barycenter)?;
                        let j = pose.factors[p].jacobian;
                        d.position = pose.frames[p].barycenter + j * s.offset;
                        d.half_covariance = j * s.canonical_half_covariance();
                        Ok(d)
                    }
                    DeformMethod::Jbs => deform_surfel_blended(s, &blended[p], &pose.frames[p].barycenter),
                }
            })
            .collect()
    }

    /// Surfels placed at their canonical positions.
    pub fn rest(&self) -> Result<Vec<DeformedSurfel>> {
        let canonical = self.canonical.clone();
        self.deform(&canonical, DeformMethod::Jacobian)
    }
}
