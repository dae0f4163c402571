use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};
use crate::fieldops::{Aabb, FieldHandle, Provenance, ScalarField};
use crate::vecmath::norm;

/// Values of a field on a regular lattice; the first axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = origin.len();
        if !(n == 2 || n == 3) {
            return Err(Error::invalid("grids are 2D or 3D"));
        }
        ensure_dim(n, spacing.len())?;
        ensure_dim(n, dims.len())?;
        ensure_dim(dims.iter().product(), values.len())?;
        if spacing.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::invalid("grid spacing must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite grid value"));
        }
        Ok(GridField {
            origin,
            spacing,
            dims,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for a in (0..self.dim()).rev() {
            lin = lin * self.dims[a] + idx[a];
        }
        lin
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.index(idx)]
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.origin[a] + idx[a] as f64 * self.spacing[a])
            .collect()
    }

    /// Length of one cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        norm(&self.spacing)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    /// Multilinear interpolation; points outside the grid are clamped onto it.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..d {
            let g = ((x[a] - self.origin[a]) / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (g.floor() as usize).min(self.dims[a].saturating_sub(2));
            base[a] = i;
            frac[a] = g - i as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..d {
                let bit = (corner >> a) & 1;
                idx[a] = (base[a] + bit).min(self.dims[a] - 1);
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                total += w * self.at(&idx[..d]);
            }
        }
        total
    }

    /// Copy with every value equal to `iso` moved up by `1e-12`.
    pub(crate) fn perturbed(&self, iso: f64) -> Vec<f64> {
        self.values
            .iter()
            .map(|&v| if v == iso { v + 1e-12 } else { v })
            .collect()
    }
}

/// Lattice with `resolution[a]` points along axis `a`, spanning `bounds`
/// inclusively.
pub fn lattice(bounds: &Aabb, resolution: &[usize]) -> Result<(Vec<f64>, Vec<usize>)> {
    ensure_dim(bounds.dim(), resolution.len())?;
    if resolution.iter().any(|&r| r < 2) {
        return Err(Error::invalid("grid resolution must be at least 2 per axis"));
    }
    let spacing = (0..bounds.dim())
        .map(|a| (bounds.hi[a] - bounds.lo[a]) / (resolution[a] - 1) as f64)
        .collect();
    Ok((spacing, resolution.to_vec()))
}

/// Evaluates `f` on the lattice in parallel.
pub fn sample_fn(
    bounds: &Aabb,
    resolution: &[usize],
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<GridField> {
    let (spacing, dims) = lattice(bounds, resolution)?;
    let d = dims.len();
    let total: usize = dims.iter().product();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |x, lin| {
                let mut rest = lin;
                for a in 0..d {
                    let i = rest % dims[a];
                    rest /= dims[a];
                    x[a] = bounds.lo[a] + i as f64 * spacing[a];
                }
                f(x)
            },
        )
        .collect();
    GridField::new(bounds.lo.clone(), spacing, dims, values)
}

pub fn sample_grid(field: &dyn ScalarField, bounds: &Aabb, resolution: &[usize]) -> Result<GridField> {
    ensure_dim(field.dim(), bounds.dim())?;
    sample_fn(bounds, resolution, |x| field.value(x))
}

/// Norm of the field gradient on the lattice.
pub fn sample_gradient_norm(field: &dyn ScalarField, bounds: &Aabb, resolution: &[usize]) -> Result<GridField> {
    ensure_dim(field.dim(), bounds.dim())?;
    sample_fn(bounds, resolution, |x| norm(&field.gradient(x)))
}

/// Planar cut of a 3D field: the 2D point `(u, v)` maps to the 3D point with
/// `axis` fixed at `offset` and the remaining axes filled in order.
pub struct SliceField {
    inner: FieldHandle,
    axis: usize,
    offset: f64,
}

impl SliceField {
    pub fn new(inner: FieldHandle, axis: usize, offset: f64) -> Result<Self> {
        ensure_dim(3, inner.dim())?;
        if axis > 2 {
            return Err(Error::invalid(format!("slice axis must be 0, 1 or 2, got {axis}")));
        }
        Ok(SliceField { inner, axis, offset })
    }

    fn lift(&self, uv: &[f64]) -> Vec<f64> {
        let mut p = Vec::with_capacity(3);
        let mut it = uv.iter();
        for a in 0..3 {
            p.push(if a == self.axis { self.offset } else { *it.next().unwrap() });
        }
        p
    }
}

impl ScalarField for SliceField {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.lift(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let g = self.inner.gradient(&self.lift(x));
        (0..3).filter(|&a| a != self.axis).map(|a| g[a]).collect()
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::AnalyticSdf;
    use std::sync::Arc;

    #[test]
    fn constant_and_corners() {
        let g = sample_fn(&Aabb::cube(2, 1.0), &[5, 7], |_| 0.25).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.25));
        let s = AnalyticSdf::sphere(vec![0.0; 3], 1.0).unwrap();
        let g = sample_grid(&s, &Aabb::cube(3, 1.0), &[2, 2, 2]).unwrap();
        for v in &g.values {
            assert!((v - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        }
        assert!(sample_fn(&Aabb::cube(2, 1.0), &[1, 4], |_| 0.0).is_err());
    }

    #[test]
    fn linear_field_reproduced_at_cell_centers() {
        let g = sample_fn(&Aabb::cube(3, 1.0), &[5, 4, 6], |x| x[0]).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                for k in 0..5 {
                    let c: Vec<f64> = [i, j, k]
                        .iter()
                        .enumerate()
                        .map(|(a, &n)| g.origin[a] + (n as f64 + 0.5) * g.spacing[a])
                        .collect();
                    assert!((g.interpolate(&c) - c[0]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn slice_equals_circle() {
        let sphere: FieldHandle = Arc::new(AnalyticSdf::sphere(vec![0.0; 3], 0.5).unwrap());
        let circle = AnalyticSdf::sphere(vec![0.0; 2], 0.5).unwrap();
        let cut = SliceField::new(sphere, 2, 0.0).unwrap();
        let a = sample_grid(&cut, &Aabb::cube(2, 1.0), &[33, 33]).unwrap();
        let b = sample_grid(&circle, &Aabb::cube(2, 1.0), &[33, 33]).unwrap();
        assert_eq!(a, b);
    }
}
