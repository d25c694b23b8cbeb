//! CPU splat renderer: exact per-pixel ray-splat intersection and
//! front-to-back alpha compositing.

pub mod camera;
pub mod image;
pub mod mask;
pub mod raster;

pub use camera::{Camera, CameraBasis};
pub use image::Image;
pub use mask::mesh_mask;
pub use raster::{
    composite_pixel, ray_splat_intersect, render, render_with_specular, shade_surfels, PixelRecord, RenderBuffers,
    RenderOptions, SplatHit, WeightedHit, DEFAULT_CUTOFF,
};
