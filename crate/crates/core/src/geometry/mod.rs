//! Input geometry: loading, normalization, generalized winding numbers,
//! labeled dataset construction, and corruption utilities.

mod areas;
mod corrupt;
mod dataset;
pub mod io;
mod knn;
mod normalize;
mod shapes;
mod winding;

use serde::{Deserialize, Serialize};

pub use areas::{estimate_areas, DEFAULT_AREA_NEIGHBORS};
pub use corrupt::{corrupt, Corruption};
pub use dataset::{
    build_signed_dataset, build_unsigned_dataset, LabeledDataset, DEFAULT_TAU_IN, DEFAULT_TAU_OUT,
    DOMAIN_HALF_WIDTH,
};
pub use io::{load_geometry, polylines_to_segments, GeometryFormat, Polyline};
pub use knn::KnnIndex;
pub use normalize::NormalizeTransform;
pub use shapes::{icosphere, Geometry, OrientedPointCloud, SegmentSoup, TriangleSoup};
pub use winding::{
    winding_points, winding_segments, winding_triangles, WindingSample, NEAR_SURFACE_EPS,
};

/// Whether a field is signed (inside negative) or unsigned (distance to an open set).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldMode {
    Signed,
    Unsigned,
}

impl std::str::FromStr for FieldMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "signed" => Ok(FieldMode::Signed),
            "unsigned" => Ok(FieldMode::Unsigned),
            other => Err(crate::Error::invalid(format!(
                "unknown mode `{other}` (expected signed|unsigned)"
            ))),
        }
    }
}

impl std::fmt::Display for FieldMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FieldMode::Signed => "signed",
            FieldMode::Unsigned => "unsigned",
        })
    }
}
