//! Provably 1-Lipschitz neural distance fields.
//!
//! The crate trains residual SLL networks with the hinge-Kantorovich-Rubinstein
//! loss on inside/outside labels derived from generalized winding numbers, and
//! runs geometric queries (projection, sphere tracing, medial-axis sampling,
//! CSG, iso-surface extraction) that stay sound because every field involved is
//! 1-Lipschitz.
//!
//! Module map:
//! - [`lipnet`]: the network, its hand-derived gradients, Adam, and the weight file.
//! - [`losses`]: hKR and least-squares fitting losses.
//! - [`geometry`]: loading, normalization, winding numbers, dataset labeling.
//! - [`trainer`]: the training loop and checkpoints.
//! - [`fieldops`]: the [`ScalarField`] interface and queries over it.
//! - [`extract`]: grid sampling, marching squares/cubes, heatmaps.
//! - [`oracles`]: closed-form distance functions.

pub mod error;
pub mod extract;
pub mod fieldops;
pub mod geometry;
pub mod lipnet;
pub mod losses;
pub mod oracles;
pub mod raster;
pub mod trainer;

mod vecmath;

pub use error::{Error, Result};
pub use fieldops::{Aabb, FieldHandle, Provenance, ScalarField};
pub use geometry::NormalizeTransform;
pub use lipnet::LipNet;
