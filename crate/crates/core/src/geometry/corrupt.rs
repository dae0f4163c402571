use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::knn::KnnIndex;
use super::shapes::OrientedPointCloud;

/// Degradations applied to point clouds for robustness experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corruption {
    /// Isotropic Gaussian positional noise.
    Noise { sigma: f64 },
    /// Removes `count` random seed points together with their `k` nearest neighbors.
    Holes { count: usize, k: usize },
    /// Keeps `m` points chosen uniformly without replacement.
    Subsample { m: usize },
}

/// Applies `spec` deterministically for a given seed. Normals are kept;
/// area weights are dropped and must be re-estimated.
pub fn corrupt(cloud: &OrientedPointCloud, spec: Corruption, seed: u64) -> Result<OrientedPointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cloud.len();
    match spec {
        Corruption::Noise { sigma } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::invalid(format!("noise sigma must be >= 0, got {sigma}")));
            }
            let mut out = cloud.retain_indices(|_| true);
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
                for v in out.points_mut().iter_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
            Ok(out)
        }
        Corruption::Holes { count, k } => {
            if count > n {
                return Err(Error::invalid(format!("cannot punch {count} holes in {n} points")));
            }
            let index = KnnIndex::new(cloud.points(), cloud.dim())?;
            let mut removed = vec![false; n];
            for seed_point in sample(&mut rng, n, count) {
                removed[seed_point] = true;
                for (j, _) in index.nearest(cloud.point(seed_point), k, Some(seed_point)) {
                    removed[j] = true;
                }
            }
            Ok(cloud.retain_indices(|i| !removed[i]))
        }
        Corruption::Subsample { m } => {
            if m > n {
                return Err(Error::invalid(format!("cannot subsample {m} of {n} points")));
            }
            let mut keep = vec![false; n];
            for i in sample(&mut rng, n, m) {
                keep[i] = true;
            }
            Ok(cloud.retain_indices(|i| keep[i]))
        }
    }
}
