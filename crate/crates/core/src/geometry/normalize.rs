use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

/// Uniform scale plus translation, `p = (x - center) * scale`.
///
/// [`NormalizeTransform::fit`] maps the tight bounding box of the input into
/// `[-1/2, 1/2]^n` with the longest axis spanning exactly 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizeTransform {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl NormalizeTransform {
    pub fn identity(dim: usize) -> Self {
        NormalizeTransform {
            center: vec![0.0; dim],
            scale: 1.0,
        }
    }

    pub fn new(center: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid(format!(
                "normalize transform needs finite center and positive scale, got scale {scale}"
            )));
        }
        Ok(NormalizeTransform { center, scale })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Fits the transform to flat `points` of dimension `dim`.
    pub fn fit(points: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || points.is_empty() || points.len() % dim != 0 {
            return Err(Error::invalid("cannot normalize empty geometry"));
        }
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in points.chunks_exact(dim) {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = (0..dim).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::invalid("degenerate bounding box (zero extent)"));
        }
        let center = (0..dim).map(|a| 0.5 * (lo[a] + hi[a])).collect();
        Self::new(center, 1.0 / extent)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), c) in out.iter_mut().zip(x).zip(&self.center) {
            *o = (xi - c) * self.scale;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn inverse(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.center)
            .map(|(pi, c)| pi / self.scale + c)
            .collect()
    }

    /// Applies the transform to every point of a flat buffer in place.
    pub fn apply_all(&self, points: &mut [f64]) -> Result<()> {
        let dim = self.dim();
        ensure_dim(0, points.len() % dim)?;
        for p in points.chunks_exact_mut(dim) {
            for (pi, c) in p.iter_mut().zip(&self.center) {
                *pi = (*pi - c) * self.scale;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cube() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.extend([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        let t = NormalizeTransform::fit(&pts, 3).unwrap();
        assert_eq!(t.center, vec![0.5, 0.5, 0.5]);
        assert_eq!(t.scale, 1.0);
        t.apply_all(&mut pts).unwrap();
        assert!(pts.iter().all(|v| v.abs() == 0.5));
    }

    #[test]
    fn two_points() {
        let t = NormalizeTransform::fit(&[0.0, 0.0, 4.0, 2.0], 2).unwrap();
        assert_eq!(t.scale, 0.25);
        assert_eq!(t.center, vec![2.0, 1.0]);
        assert_eq!(t.apply(&[4.0, 2.0]), vec![0.5, 0.25]);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(NormalizeTransform::fit(&[1.0, 1.0, 1.0, 1.0], 2).is_err());
        assert!(NormalizeTransform::fit(&[], 2).is_err());
    }

    #[test]
    fn round_trip() {
        let t = NormalizeTransform::new(vec![3.7, -12.25, 0.1], 0.013).unwrap();
        let x = [101.5, -7.0, 3.3];
        let back = t.inverse(&t.apply(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
