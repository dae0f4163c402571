//! Explicit geometry from scalar fields: lattice sampling, marching squares
//! and cubes, and heatmaps.
//!
//! Grid values exactly equal to the iso-value are raised by `1e-12` before
//! extraction, so every corner is strictly on one side.

mod cubes;
mod grid;
mod heatmap;
mod squares;
mod tables;

pub use cubes::marching_cubes;
pub use grid::{lattice, sample_fn, sample_gradient_norm, sample_grid, GridField, SliceField};
pub use heatmap::{colormap, emit_heatmap, grid_csv, heatmap_image, VIRIDIS};
pub use squares::marching_squares;
