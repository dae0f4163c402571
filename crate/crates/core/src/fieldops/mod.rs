//! Queries over scalar fields: closest-point projection, sphere tracing and
//! rendering, medial-axis sampling, CSG composition and audits.

mod audit;
mod csg;
mod medial;
mod project;
mod trace;

use std::sync::Arc;

use rand::Rng;

use crate::lipnet::LipNet;

pub use audit::{
    audit_lipschitz, audit_underestimation, point_mesh_distance, point_segments_distance,
    LipschitzAudit, SurfaceMesh, UnderestimationReport,
};
pub use csg::{csg_difference, csg_intersect, csg_union, CsgField, CsgOp};
pub use medial::{medial_axis_sample, GradientSource, MedialOptions};
pub use project::{project, ProjectOptions, ProjectStatus, Projection, StepMode, GRADIENT_FLOOR};
pub use trace::{
    render, sphere_trace, Camera, HitRecord, HitStatus, Ray, RenderOptions, Shading, TraceOptions,
    MIN_STEP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Net,
    Analytic,
    Composite,
}

/// A field `R^n -> R` with its spatial gradient.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn provenance(&self) -> Provenance;

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

pub type FieldHandle = Arc<dyn ScalarField>;

impl ScalarField for LipNet {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad_input(x)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Net
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        LipNet::value_and_grad(self, x)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }

    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(x)
    }
}

/// `factor * inner`; with `0 < factor <= 1` a 1-Lipschitz field stays 1-Lipschitz.
pub struct Scaled<F> {
    pub inner: F,
    pub factor: f64,
}

impl<F: ScalarField> ScalarField for Scaled<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(x).into_iter().map(|g| self.factor * g).collect()
    }

    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> crate::Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(crate::Error::invalid("box corners must have equal nonzero dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(crate::Error::invalid("box must have positive extent on every axis"));
        }
        Ok(Aabb { lo, hi })
    }

    /// `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        Aabb {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diagonal(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| rng.random_range(*a..*b))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }
}
