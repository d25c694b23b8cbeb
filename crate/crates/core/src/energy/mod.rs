//! Training energies and the finite-difference fitter.

pub mod fit;
pub mod ssim;
pub mod terms;

pub use fit::{fit, FitOptions, FitScene, FitState, LogRecord, ParamGroup, View};
pub use ssim::{dssim, ssim};
pub use terms::{
    binding_regularizers, compensated_sum, depth_distortion, eye_opacity_loss, l1, normal_consistency,
    normal_consistency_map, photometric_loss, pixel_distortion, total_energy, EnergyBreakdown, EnergyConfig, TERM_NAMES,
};
