//! Batch losses over network outputs with their derivatives.
//!
//! Every loss is a batch mean, so `lambda` keeps its meaning across batch sizes.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HkrConfig {
    pub margin: f64,
    pub lambda: f64,
}

impl Default for HkrConfig {
    fn default() -> Self {
        HkrConfig {
            margin: 1e-2,
            lambda: 100.0,
        }
    }
}

impl HkrConfig {
    pub fn new(margin: f64, lambda: f64) -> Result<Self> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::invalid(format!("margin must be > 0, got {margin}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(HkrConfig { margin, lambda })
    }
}

/// Loss value and per-sample derivative `dL/df`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub kr: f64,
    pub hinge: f64,
    pub total: f64,
    pub grad: Vec<f64>,
}

fn check_labels(f: &[f64], y: &[f64]) -> Result<()> {
    if f.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    ensure_dim(f.len(), y.len())?;
    if let Some(bad) = y.iter().find(|&&l| l != 1.0 && l != -1.0) {
        return Err(Error::invalid(format!("label {bad} is not in {{-1, +1}}")));
    }
    Ok(())
}

/// Kantorovich-Rubinstein term: mean of `-y f`.
pub fn kr_loss(f: &[f64], y: &[f64]) -> Result<LossValue> {
    check_labels(f, y)?;
    let n = f.len() as f64;
    let value = f.iter().zip(y).map(|(fi, yi)| -yi * fi).sum::<f64>() / n;
    let grad = y.iter().map(|yi| -yi / n).collect();
    Ok(LossValue { value, grad })
}

/// Hinge term: mean of `max(0, m - y f)`; subgradient 0 at the kink.
pub fn hinge_loss(f: &[f64], y: &[f64], margin: f64) -> Result<LossValue> {
    check_labels(f, y)?;
    if !(margin > 0.0) {
        return Err(Error::invalid(format!("margin must be > 0, got {margin}")));
    }
    let n = f.len() as f64;
    let mut value = 0.0;
    let grad = f
        .iter()
        .zip(y)
        .map(|(fi, yi)| {
            let slack = margin - yi * fi;
            if slack > 0.0 {
                value += slack;
                -yi / n
            } else {
                0.0
            }
        })
        .collect();
    Ok(LossValue {
        value: value / n,
        grad,
    })
}

pub fn hkr_loss(f: &[f64], y: &[f64], cfg: &HkrConfig) -> Result<LossReport> {
    let kr = kr_loss(f, y)?;
    let hinge = hinge_loss(f, y, cfg.margin)?;
    let grad = kr
        .grad
        .iter()
        .zip(&hinge.grad)
        .map(|(a, b)| a + cfg.lambda * b)
        .collect();
    Ok(LossReport {
        kr: kr.value,
        hinge: hinge.value,
        total: kr.value + cfg.lambda * hinge.value,
        grad,
    })
}

/// Least-squares fit to ground-truth distances: mean of `(f - s)^2`.
pub fn fit_loss(f: &[f64], s_true: &[f64]) -> Result<LossValue> {
    if f.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    ensure_dim(f.len(), s_true.len())?;
    let n = f.len() as f64;
    let value = f
        .iter()
        .zip(s_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    let grad = f.iter().zip(s_true).map(|(a, b)| 2.0 * (a - b) / n).collect();
    Ok(LossValue { value, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn kr_examples() {
        let l = kr_loss(&[0.3, -0.2], &[1.0, -1.0]).unwrap();
        assert!((l.value + 0.25).abs() < 1e-15);
        assert_eq!(l.grad, vec![-0.5, 0.5]);
        assert_eq!(kr_loss(&[0.0, 0.0], &[1.0, -1.0]).unwrap().value, 0.0);
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge_loss(&[0.5], &[1.0], 0.01).unwrap().value, 0.0);
        assert!((hinge_loss(&[-0.02], &[1.0], 0.01).unwrap().value - 0.03).abs() < 1e-15);
        let l = hinge_loss(&[-0.02], &[-1.0], 0.01).unwrap();
        assert_eq!(l.value, 0.0);
        assert_eq!(l.grad, vec![0.0]);
    }

    #[test]
    fn hkr_examples() {
        let cfg = HkrConfig::new(0.01, 100.0).unwrap();
        let r = hkr_loss(&[0.3, -0.2], &[1.0, -1.0], &cfg).unwrap();
        assert!((r.kr + 0.25).abs() < 1e-15);
        assert_eq!(r.hinge, 0.0);
        assert!((r.total + 0.25).abs() < 1e-15);

        let f = [-0.02, -0.2];
        let y = [1.0, -1.0];
        let r = hkr_loss(&f, &y, &cfg).unwrap();
        // independent scalar evaluation
        let kr = (-(y[0] * f[0]) - y[1] * f[1]) / 2.0;
        let hinge = ((0.01 - y[0] * f[0]).max(0.0) + (0.01 - y[1] * f[1]).max(0.0)) / 2.0;
        assert!((kr + 0.09).abs() < 1e-15 && (r.kr - kr).abs() < 1e-15);
        assert!((hinge - 0.015).abs() < 1e-15 && (r.hinge - hinge).abs() < 1e-15);
        assert!((r.total - 1.41).abs() < 1e-12);
    }

    #[test]
    fn fit_examples() {
        assert_eq!(fit_loss(&[0.2, -0.4], &[0.2, -0.4]).unwrap().value, 0.0);
        assert_eq!(fit_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap().value, 0.5);
        assert!(fit_loss(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn bad_inputs() {
        assert!(kr_loss(&[], &[]).is_err());
        assert!(kr_loss(&[0.1], &[0.5]).is_err());
        assert!(hinge_loss(&[0.1], &[1.0], 0.0).is_err());
        assert!(HkrConfig::new(0.01, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(
            f in prop::collection::vec(-2.0f64..2.0, 1..20),
            seed in any::<u64>(),
            margin in 0.001f64..0.5,
        ) {
            let y: Vec<f64> = (0..f.len())
                .map(|i| if (seed >> (i % 64)) & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            // keep samples off the hinge kink
            prop_assume!(f.iter().zip(&y).all(|(fi, yi)| (margin - yi * fi).abs() > 1e-4));
            let cfg = HkrConfig::new(margin, 100.0).unwrap();
            let r = hkr_loss(&f, &y, &cfg).unwrap();
            prop_assert!((r.total - (r.kr + cfg.lambda * r.hinge)).abs() == 0.0);
            let num = central_diff(|v| hkr_loss(v, &y, &cfg).unwrap().total, &f, 1e-6);
            for (a, b) in r.grad.iter().zip(&num) {
                prop_assert!((a - b).abs() < 1e-7 * a.abs().max(1.0), "{a} vs {b}");
            }
            let s: Vec<f64> = f.iter().map(|v| v * 0.5 - 0.1).collect();
            let fit = fit_loss(&f, &s).unwrap();
            let num = central_diff(|v| fit_loss(v, &s).unwrap().value, &f, 1e-6);
            for (a, b) in fit.grad.iter().zip(&num) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn kr_shift_invariant_when_balanced(
            f in prop::collection::vec(-1.0f64..1.0, 1..10),
            c in -5.0f64..5.0,
        ) {
            let mut vals = f.clone();
            vals.extend(f.iter().map(|v| v * 0.3));
            let y: Vec<f64> = (0..vals.len()).map(|i| if i < f.len() { 1.0 } else { -1.0 }).collect();
            let shifted: Vec<f64> = vals.iter().map(|v| v + c).collect();
            let a = kr_loss(&vals, &y).unwrap().value;
            let b = kr_loss(&shifted, &y).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn hinge_zero_iff_margin_met(
            f in prop::collection::vec(-1.0f64..1.0, 1..10),
            margin in 0.01f64..0.3,
        ) {
            let y: Vec<f64> = f.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let h = hinge_loss(&f, &y, margin).unwrap().value;
            let all_met = f.iter().zip(&y).all(|(fi, yi)| yi * fi >= margin);
            prop_assert_eq!(h == 0.0, all_met);
        }
    }
}
