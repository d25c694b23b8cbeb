//! JSON run configuration. Relative paths are resolved against the
//! directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::appearance::sh::MAX_DEGREE;
use crate::energy::{EnergyConfig, FitOptions};
use crate::error::{Error, Result};
use crate::mat3::Vec3;
use crate::mesh::{AdjacencyMode, Point};
use crate::render::Camera;
use crate::rig::DeformMethod;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub position: [f64; 3],
    #[serde(default)]
    pub look_at: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    /// Degrees.
    pub fov_y: f64,
    pub width: usize,
    pub height: usize,
}

fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

impl CameraConfig {
    pub fn camera(&self) -> Camera {
        Camera {
            position: Point::from(self.position),
            look_at: Point::from(self.look_at),
            up: Vec3::from(self.up),
            fov_y: self.fov_y,
            width: self.width,
            height: self.height,
        }
    }
}

impl From<&Camera> for CameraConfig {
    fn from(c: &Camera) -> Self {
        CameraConfig {
            position: c.position.coords.into(),
            look_at: c.look_at.coords.into(),
            up: c.up.into(),
            fov_y: c.fov_y,
            width: c.width,
            height: c.height,
        }
    }
}

/// Lobe axes on a `theta_steps × phi_steps` grid over the frontal hemisphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsgGrid {
    pub theta_steps: usize,
    pub phi_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub target: PathBuf,
    #[serde(default)]
    pub options: FitOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub canonical_mesh: Option<PathBuf>,
    #[serde(default)]
    pub deformed_mesh: Option<PathBuf>,
    /// Surfel set file; when absent surfels are bound to the canonical mesh.
    #[serde(default)]
    pub surfels: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub camera: Option<CameraConfig>,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub adjacency: AdjacencyMode,
    #[serde(default = "default_per_triangle")]
    pub surfels_per_triangle: usize,
    #[serde(default)]
    pub asg: Option<AsgGrid>,
    #[serde(default = "default_sh_degree")]
    pub sh_degree: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub background: [f64; 3],
    #[serde(default)]
    pub method: DeformMethod,
    /// `[near, far]`; `far` is also the depth of uncovered pixels.
    #[serde(default = "default_depth_range")]
    pub depth_range: [f64; 2],
    #[serde(default)]
    pub fit: Option<FitConfig>,
}

fn default_per_triangle() -> usize {
    4
}

fn default_sh_degree() -> usize {
    3
}

fn default_depth_range() -> [f64; 2] {
    [0.0, 100.0]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            canonical_mesh: None,
            deformed_mesh: None,
            surfels: None,
            output_dir: None,
            camera: None,
            energy: EnergyConfig::default(),
            adjacency: AdjacencyMode::default(),
            surfels_per_triangle: default_per_triangle(),
            asg: None,
            sh_degree: default_sh_degree(),
            seed: 0,
            background: [0.0; 3],
            method: DeformMethod::default(),
            depth_range: default_depth_range(),
            fit: None,
        }
    }
}

fn must_exist(p: &Path) -> Result<()> {
    fs::metadata(p).map(|_| ()).map_err(|e| Error::io(p, e))
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads, resolves paths and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve(&base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.canonical_mesh,
            &mut self.deformed_mesh,
            &mut self.surfels,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let Some(f) = &mut self.fit {
            fix(&mut f.target);
        }
    }

    /// Checks that input paths exist and numeric fields are in range.
    pub fn validate(&self) -> Result<()> {
        for p in [&self.canonical_mesh, &self.deformed_mesh, &self.surfels].into_iter().flatten() {
            must_exist(p)?;
        }
        if let Some(f) = &self.fit {
            must_exist(&f.target)?;
            let o = &f.options;
            if !(o.grow >= 1.0) || !(o.shrink > 0.0 && o.shrink < 1.0) {
                return Err(Error::Config("fit needs grow ≥ 1 and shrink in (0, 1)".into()));
            }
            if let Some((g, r)) = o.rates.iter().find(|(_, r)| !(**r > 0.0 && r.is_finite())) {
                return Err(Error::Config(format!("rate for {g:?} must be positive, got {r}")));
            }
        }
        if let Some(c) = &self.camera {
            c.camera().validate()?;
        }
        self.energy.validate()?;
        if self.surfels_per_triangle == 0 {
            return Err(Error::Config("surfels_per_triangle must be at least 1".into()));
        }
        if self.sh_degree > MAX_DEGREE {
            return Err(Error::Config(format!("sh_degree {} exceeds {MAX_DEGREE}", self.sh_degree)));
        }
        if let Some(g) = &self.asg {
            if g.theta_steps == 0 || g.phi_steps == 0 {
                return Err(Error::Config("asg grid needs at least one step per axis".into()));
            }
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config(format!("background {:?} outside [0, 1]", self.background)));
        }
        let [near, far] = self.depth_range;
        if !(near.is_finite() && far.is_finite() && far > near) {
            return Err(Error::Config(format!("depth_range [{near}, {far}] is empty")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse("{}", Path::new("x")).unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("m.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let cfg = dir.path().join("run.json");
        fs::write(&cfg, r#"{"canonical_mesh": "m.obj", "output_dir": "out"}"#).unwrap();
        let c = RunConfig::load(&cfg).unwrap();
        assert_eq!(c.canonical_mesh.unwrap(), dir.path().join("m.obj"));
        assert_eq!(c.output_dir.unwrap(), dir.path().join("out"));
    }

    #[test]
    fn missing_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        fs::write(&cfg, r#"{"canonical_mesh": "nope.obj"}"#).unwrap();
        assert!(matches!(RunConfig::load(&cfg), Err(Error::Io { .. })));
    }

    #[test]
    fn range_checks() {
        let bad = [
            r#"{"sh_degree": 4}"#,
            r#"{"surfels_per_triangle": 0}"#,
            r#"{"background": [0, 2, 0]}"#,
            r#"{"depth_range": [3, 1]}"#,
            r#"{"energy": {"beta": 1.5}}"#,
            r#"{"camera": {"position": [0, 0, 0], "fov_y": 40, "width": 4, "height": 4}}"#,
        ];
        for text in bad {
            let c = RunConfig::parse(text, Path::new("x")).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
        assert!(RunConfig::parse(r#"{"bogus": 1}"#, Path::new("x")).is_err());
    }
}
