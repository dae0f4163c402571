use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one moment pair per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(shapes: &[usize], config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update over all tensors. Shapes must match those given to [`AdamState::new`].
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        ensure_dim(self.first.len(), params.len())?;
        ensure_dim(self.first.len(), grads.len())?;
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            ensure_dim(m.len(), p.len())?;
            ensure_dim(m.len(), g.len())?;
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("non-finite gradient passed to Adam"));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = AdamState::new(&[3], AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.0; 3];
        for _ in 0..10 {
            adam.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(adam.steps_taken(), 10);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let config = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = AdamState::new(&[1], config);
        let mut p = vec![0.0];
        adam.step(&mut [&mut p], &[&[1.0]]).unwrap();
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let mut adam = AdamState::new(&[2], AdamConfig::default());
        let mut p = vec![0.0; 3];
        assert!(adam.step(&mut [&mut p], &[&[0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            let mut adam = AdamState::new(&[2], AdamConfig::default());
            let mut p = vec![0.3, -0.7];
            for i in 0..50 {
                let g = [p[0] * 2.0 + i as f64 * 0.01, (p[1] * 3.0).sin()];
                adam.step(&mut [&mut p], &[&g]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
