use crate::error::{ensure_dim, Error, Result};
use crate::vecmath::norm;

use super::ScalarField;

/// Gradient norms below this stop the iteration.
pub const GRADIENT_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepMode {
    /// `x <- x - (f - iso) grad / |grad|`.
    #[default]
    Normalized,
    /// `x <- x - (f - iso) grad`.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectOptions {
    pub iso: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub step: StepMode,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        ProjectOptions {
            iso: 0.0,
            tol: 1e-4,
            max_iter: 200,
            step: StepMode::Normalized,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectStatus {
    Converged,
    MaxIter,
    /// The gradient vanished (medial axis or flat region).
    Stalled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub iterations: usize,
    /// `|f(point) - iso|`.
    pub residual: f64,
    pub status: ProjectStatus,
    /// Gradient norm at the last evaluated point.
    pub grad_norm: f64,
}

/// Moves `x0` onto the `iso` level set by repeated gradient steps.
pub fn project(field: &dyn ScalarField, x0: &[f64], opts: &ProjectOptions) -> Result<Projection> {
    ensure_dim(field.dim(), x0.len())?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut x = x0.to_vec();
    let mut iterations = 0;
    loop {
        let (f, g) = field.value_and_gradient(&x);
        let gap = f - opts.iso;
        let gn = norm(&g);
        let status = if gap.abs() <= opts.tol {
            Some(ProjectStatus::Converged)
        } else if iterations == opts.max_iter {
            Some(ProjectStatus::MaxIter)
        } else if gn < GRADIENT_FLOOR {
            Some(ProjectStatus::Stalled)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(Projection {
                point: x,
                iterations,
                residual: gap.abs(),
                status,
                grad_norm: gn,
            });
        }
        let scale = match opts.step {
            StepMode::Normalized => gap / gn.max(GRADIENT_FLOOR),
            StepMode::Raw => gap,
        };
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= scale * gi;
        }
        iterations += 1;
    }
}
