#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod appearance;
pub mod commands;
pub mod energy;
pub mod error;
pub mod io;
pub mod mat3;
pub mod mesh;
pub mod render;
pub mod rig;
pub mod scenes;
pub mod selftest;

pub use error::{Error, Result};
