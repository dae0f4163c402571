//! The 1-Lipschitz network: SLL residual layers, unit-norm affine head,
//! hand-derived gradients, Adam, and the `LNDF1` weight file.

mod adam;
mod head;
mod layer;
mod net;
pub mod weights;

pub use adam::{AdamConfig, AdamState};
pub use head::{AffineHead, HeadGrads};
pub use layer::{LayerGrads, LayerTape, SllLayer};
pub use net::{LayerParamGrads, LipNet, ModelMeta, NetGrads, NetTape};
