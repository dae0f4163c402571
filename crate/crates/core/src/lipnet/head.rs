use crate::error::{ensure_dim, Error, Result};
use crate::vecmath::{dot, norm};

/// Output layer `x -> w.x / |w| + b`, exactly 1-Lipschitz for any nonzero `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineHead {
    weight: Vec<f64>,
    bias: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadGrads {
    pub input: Vec<f64>,
    pub weight: Vec<f64>,
    pub bias: f64,
}

impl AffineHead {
    pub fn new(weight: Vec<f64>, bias: f64) -> Result<Self> {
        if weight.is_empty() {
            return Err(Error::invalid("head weight must be nonempty"));
        }
        if !weight.iter().all(|v| v.is_finite()) || !bias.is_finite() {
            return Err(Error::invalid("non-finite head parameter"));
        }
        if norm(&weight) == 0.0 {
            return Err(Error::invalid("head weight has zero norm"));
        }
        Ok(AffineHead { weight, bias })
    }

    pub fn width(&self) -> usize {
        self.weight.len()
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut f64) {
        (&mut self.weight, &mut self.bias)
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        dot(&self.weight, x) / norm(&self.weight) + self.bias
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.width(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    /// Gradients of `df * head(x)`.
    pub fn backward(&self, x: &[f64], df: f64) -> Result<HeadGrads> {
        ensure_dim(self.width(), x.len())?;
        let n = norm(&self.weight);
        let proj = dot(&self.weight, x);
        let input = self.weight.iter().map(|w| df * w / n).collect();
        let weight = self
            .weight
            .iter()
            .zip(x)
            .map(|(w, xi)| df * (xi / n - proj * w / (n * n * n)))
            .collect();
        Ok(HeadGrads {
            input,
            weight,
            bias: df,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_projection() {
        let head = AffineHead::new(vec![3.0, 4.0], 1.0).unwrap();
        assert!((head.forward(&[1.0, 0.0]).unwrap() - 1.6).abs() < 1e-15);
        assert_eq!(head.forward(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn weight_scale_invariance() {
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let head = AffineHead::new(vec![c, 0.0, 0.0], 0.0).unwrap();
            assert_eq!(head.forward(&[0.25, -3.0, 9.0]).unwrap(), 0.25);
        }
    }

    #[test]
    fn zero_weight_rejected() {
        assert!(AffineHead::new(vec![0.0, 0.0], 0.0).is_err());
        assert!(AffineHead::new(vec![1.0, f64::INFINITY], 0.0).is_err());
    }

    #[test]
    fn backward_matches_central_differences() {
        let head = AffineHead::new(vec![0.3, -1.2, 0.8], 0.1).unwrap();
        let x = [0.7, 0.2, -0.4];
        let g = head.backward(&x, 1.0).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut wp = head.weight.clone();
            let mut wm = head.weight.clone();
            wp[i] += h;
            wm[i] -= h;
            let fp = AffineHead::new(wp, 0.1).unwrap().forward(&x).unwrap();
            let fm = AffineHead::new(wm, 0.1).unwrap().forward(&x).unwrap();
            assert!((g.weight[i] - (fp - fm) / (2.0 * h)).abs() < 1e-8);
        }
        let gnorm = norm(&g.input);
        assert!((gnorm - 1.0).abs() < 1e-14);
    }
}
