//! The command-line operations, callable as library functions.

mod deform;
mod fit;
mod interp;
mod render;

pub use deform::{cmd_deform, Diagnostics, FaceDiagnostics};
pub use fit::cmd_fit;
pub use interp::{cmd_interp_demo, coverage_gap, interp_table, CoverageRow, InterpRow};
pub use render::cmd_render;

use std::fs;
use std::path::{Path, PathBuf};

use crate::appearance::specular::{DEFAULT_HIDDEN, DEFAULT_PE_FREQS};
use crate::appearance::{sample_lobes, Rgb, ShBlock, SpecularHead};
use crate::error::{Error, Result};
use crate::io::{load_obj, load_surfel_set, RunConfig};
use crate::mesh::TriMesh;
use crate::render::{Camera, RenderOptions};
use crate::rig::{bind_surfels, BlendTopology, Rig};

/// Resolved inputs shared by every command.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
}

/// What a command printed and wrote.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Context {
    /// `out` falls back to the config's output dir, then `./out`; `seed`
    /// replaces the config seed when given.
    pub fn new(mut config: RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            config.seed = s;
        }
        let out = out
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Context { config, out }
    }

    pub fn load(path: impl AsRef<Path>, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self> {
        Ok(Self::new(RunConfig::load(path)?, out, seed))
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        Ok(&self.out)
    }

    fn canonical_mesh(&self) -> Result<TriMesh> {
        let p = self
            .config
            .canonical_mesh
            .as_ref()
            .ok_or_else(|| Error::Config("canonical_mesh is required".into()))?;
        load_obj(p)
    }

    fn deformed_mesh(&self) -> Result<Option<TriMesh>> {
        self.config.deformed_mesh.as_ref().map(load_obj).transpose()
    }

    fn camera(&self) -> Result<Camera> {
        let c = self
            .config
            .camera
            .as_ref()
            .ok_or_else(|| Error::Config("camera is required".into()))?
            .camera();
        c.validate()?;
        Ok(c)
    }

    fn render_options(&self) -> RenderOptions {
        RenderOptions {
            background: Rgb::from(self.config.background),
            far: self.config.depth_range[1],
            ..Default::default()
        }
    }

    fn grid_head(&self) -> Option<SpecularHead> {
        self.config.asg.map(|g| {
            SpecularHead::random(
                sample_lobes(g.theta_steps, g.phi_steps),
                DEFAULT_PE_FREQS,
                DEFAULT_HIDDEN,
                self.config.seed,
            )
        })
    }

    /// The rig and specular head, from the surfel file when one is given,
    /// otherwise freshly bound to the canonical mesh.
    fn rig(&self) -> Result<LoadedRig> {
        let mesh = self.canonical_mesh()?;
        let default_topology = || BlendTopology::for_mesh(&mesh, self.config.adjacency);
        match &self.config.surfels {
            Some(p) => {
                let set = load_surfel_set(p)?;
                let had_blend = set.topology.is_some();
                let topology = set.topology.unwrap_or_else(default_topology);
                let head = set.head.or_else(|| self.grid_head());
                Ok(LoadedRig {
                    rig: Rig::new(mesh, set.surfels, topology)?,
                    head,
                    had_blend,
                })
            }
            None => {
                let mut surfels = bind_surfels(&mesh, self.config.surfels_per_triangle, self.config.seed)?;
                for s in &mut surfels {
                    s.sh = ShBlock::constant(self.config.sh_degree, [0.5; 3]);
                }
                let topology = default_topology();
                Ok(LoadedRig {
                    rig: Rig::new(mesh, surfels, topology)?,
                    head: self.grid_head(),
                    had_blend: false,
                })
            }
        }
    }
}

struct LoadedRig {
    rig: Rig,
    head: Option<SpecularHead>,
    had_blend: bool,
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}
