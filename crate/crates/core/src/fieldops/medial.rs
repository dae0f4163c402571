use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};
use crate::vecmath::norm;

use super::{Aabb, ScalarField};

/// How the gradient norm is measured during medial-axis rejection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GradientSource {
    /// The field's own gradient.
    Analytic,
    /// Central differences with the given step. Exposes kinks of piecewise
    /// fields (CSG composites, exact distance functions) whose one-sided
    /// gradients keep unit norm right up to the medial axis.
    FiniteDifference { step: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MedialOptions {
    pub n_candidates: usize,
    /// Keep candidates whose gradient norm is at most this value.
    pub gamma: f64,
    pub seed: u64,
    pub domain: Aabb,
    /// Keep only candidates with `f < 0`.
    pub interior_only: bool,
    pub gradient: GradientSource,
}

impl MedialOptions {
    pub fn new(dim: usize, n_candidates: usize, gamma: f64, seed: u64) -> Self {
        MedialOptions {
            n_candidates,
            gamma,
            seed,
            domain: Aabb::cube(dim, 1.0),
            interior_only: true,
            gradient: GradientSource::Analytic,
        }
    }
}

fn gradient_norm(field: &dyn ScalarField, x: &[f64], source: GradientSource) -> f64 {
    match source {
        GradientSource::Analytic => norm(&field.gradient(x)),
        GradientSource::FiniteDifference { step } => {
            let mut p = x.to_vec();
            let mut sq = 0.0;
            for i in 0..x.len() {
                p[i] = x[i] + step;
                let fp = field.value(&p);
                p[i] = x[i] - step;
                let fm = field.value(&p);
                p[i] = x[i];
                let d = (fp - fm) / (2.0 * step);
                sq += d * d;
            }
            sq.sqrt()
        }
    }
}

/// Sample-and-reject skeleton extraction: uniform candidates in the domain
/// are kept where the gradient norm has dropped to `gamma` or below.
pub fn medial_axis_sample(field: &dyn ScalarField, opts: &MedialOptions) -> Result<Vec<Vec<f64>>> {
    ensure_dim(field.dim(), opts.domain.dim())?;
    if !(opts.gamma > 0.0 && opts.gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {}", opts.gamma)));
    }
    if let GradientSource::FiniteDifference { step } = opts.gradient {
        if !(step > 0.0) {
            return Err(Error::invalid("finite-difference step must be positive"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let candidates: Vec<Vec<f64>> = (0..opts.n_candidates)
        .map(|_| opts.domain.sample(&mut rng))
        .collect();
    let keep: Vec<bool> = candidates
        .par_iter()
        .map(|x| {
            if opts.interior_only && !(field.value(x) < 0.0) {
                return false;
            }
            gradient_norm(field, x, opts.gradient) <= opts.gamma
        })
        .collect();
    Ok(candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(x, k)| k.then_some(x))
        .collect())
}
