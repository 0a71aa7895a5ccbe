//! Compressible Oldroyd–B flow with stress diffusion in two dimensions,
//! with energy, relative-entropy and blow-up diagnostics.

pub mod cli_io;
pub mod diagnostics;
pub mod dynamics;
pub mod entropy;
pub mod fields;
pub mod model;
pub mod verify;
