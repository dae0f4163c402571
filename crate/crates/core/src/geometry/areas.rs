use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::knn::KnnIndex;
use super::shapes::OrientedPointCloud;

pub const DEFAULT_AREA_NEIGHBORS: usize = 8;

/// Per-point area weights from the distance `r` to the `k`-th nearest
/// neighbor: `pi r^2 / k` in 3D, `2 r / k` in 2D.
pub fn estimate_areas(cloud: &OrientedPointCloud, k: usize) -> Result<OrientedPointCloud> {
    let n = cloud.len();
    if k == 0 || n < k + 1 {
        return Err(Error::invalid(format!(
            "area estimation with k={k} needs at least {} points, got {n}",
            k + 1
        )));
    }
    let dim = cloud.dim();
    let index = KnnIndex::new(cloud.points(), dim)?;
    let areas: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nn = index.nearest(cloud.point(i), k, Some(i));
            let r = nn[k - 1].1;
            if dim == 3 {
                PI * r * r / k as f64
            } else {
                2.0 * r / k as f64
            }
        })
        .collect();
    cloud.clone().with_areas(areas)
}
