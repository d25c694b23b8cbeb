//! File formats: OBJ meshes, JSON surfel sets and run configs, PNG buffers
//! and PLY export.

pub mod buffers;
pub mod config;
pub mod obj;
pub mod ply;
pub mod surfel_file;

pub use buffers::{load_png, save_buffers, save_mask, save_rgb};
pub use config::{AsgGrid, CameraConfig, FitConfig, RunConfig};
pub use obj::{format_obj, load_obj, parse_obj, save_obj};
pub use ply::{encode_ply, save_ply};
pub use surfel_file::{load_surfel_set, save_surfel_set, DeformedSetFile, SurfelSet, SurfelSetFile};
