use std::str::FromStr;

use crate::error::{Error, Result};

use super::{FieldHandle, Provenance, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsgOp {
    Union,
    Intersect,
    Difference,
}

impl FromStr for CsgOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(CsgOp::Union),
            "intersect" | "intersection" => Ok(CsgOp::Intersect),
            "difference" => Ok(CsgOp::Difference),
            other => Err(Error::invalid(format!("unknown CSG operation `{other}`"))),
        }
    }
}

/// Pointwise min/max composite of two fields. The gradient is taken from the
/// operand that attains the value, the first one on ties.
#[derive(Clone)]
pub struct CsgField {
    op: CsgOp,
    first: FieldHandle,
    second: FieldHandle,
}

impl CsgField {
    pub fn new(op: CsgOp, first: FieldHandle, second: FieldHandle) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::Dimension {
                expected: first.dim(),
                got: second.dim(),
            });
        }
        Ok(CsgField { op, first, second })
    }

    pub fn op(&self) -> CsgOp {
        self.op
    }

    /// Operand values with the second one negated for differences, and
    /// whether the first operand is active.
    fn select(&self, x: &[f64]) -> (f64, f64, bool) {
        let a = self.first.value(x);
        let b = self.second.value(x);
        match self.op {
            CsgOp::Union => (a, b, a <= b),
            CsgOp::Intersect => (a, b, a >= b),
            CsgOp::Difference => (a, -b, a >= -b),
        }
    }
}

impl ScalarField for CsgField {
    fn dim(&self) -> usize {
        self.first.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (a, b, first) = self.select(x);
        if first {
            a
        } else {
            b
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_gradient(x).1
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b, first) = self.select(x);
        if first {
            (a, self.first.gradient(x))
        } else {
            let mut g = self.second.gradient(x);
            if self.op == CsgOp::Difference {
                g.iter_mut().for_each(|v| *v = -*v);
            }
            (b, g)
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::Composite
    }
}

pub fn csg_union(first: FieldHandle, second: FieldHandle) -> Result<CsgField> {
    CsgField::new(CsgOp::Union, first, second)
}

pub fn csg_intersect(first: FieldHandle, second: FieldHandle) -> Result<CsgField> {
    CsgField::new(CsgOp::Intersect, first, second)
}

/// `max(first, -second)`: the first shape with the second carved out.
pub fn csg_difference(first: FieldHandle, second: FieldHandle) -> Result<CsgField> {
    CsgField::new(CsgOp::Difference, first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::AnalyticSdf;
    use crate::vecmath::norm;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn spheres() -> (FieldHandle, FieldHandle) {
        (
            Arc::new(AnalyticSdf::sphere(vec![0.5, 0.0, 0.0], 1.0).unwrap()),
            Arc::new(AnalyticSdf::sphere(vec![-0.5, 0.0, 0.0], 1.0).unwrap()),
        )
    }

    #[test]
    fn union_at_origin() {
        let (a, b) = spheres();
        let u = csg_union(a, b).unwrap();
        assert_eq!(u.value(&[0.0; 3]), -0.5);
        // Tie: gradient of the first operand.
        assert_eq!(u.gradient(&[0.0; 3]), vec![-1.0, 0.0, 0.0]);
        assert_eq!(u.provenance(), Provenance::Composite);
    }

    #[test]
    fn self_intersection_is_identity() {
        let (a, _) = spheres();
        let i = csg_intersect(a.clone(), a.clone()).unwrap();
        for x in [[0.3, 0.2, -0.1], [2.0, 0.0, 1.0], [-1.0, -1.0, 0.5]] {
            assert_eq!(i.value(&x), a.value(&x));
            assert_eq!(i.gradient(&x), a.gradient(&x));
        }
    }

    #[test]
    fn difference_carves() {
        let (a, b) = spheres();
        let d = csg_difference(a.clone(), b.clone()).unwrap();
        // Inside both: carved away.
        assert!(d.value(&[0.0; 3]) > 0.0);
        // Inside the first only.
        assert!(d.value(&[1.2, 0.0, 0.0]) < 0.0);
        assert!(csg_union(a, Arc::new(AnalyticSdf::sphere(vec![0.0, 0.0], 1.0).unwrap())).is_err());
    }

    proptest! {
        #[test]
        fn bounds_and_gradient_selection(x in prop::collection::vec(-2.0f64..2.0, 3)) {
            let (a, b) = spheres();
            let (fa, fb) = (a.value(&x), b.value(&x));
            let u = csg_union(a.clone(), b.clone()).unwrap();
            let i = csg_intersect(a.clone(), b.clone()).unwrap();
            prop_assert!(u.value(&x) <= fa && u.value(&x) <= fb);
            prop_assert!(i.value(&x) >= fa && i.value(&x) >= fb);
            let max_norm = norm(&a.gradient(&x)).max(norm(&b.gradient(&x)));
            prop_assert!(norm(&u.gradient(&x)) <= max_norm);
            prop_assert!(norm(&i.gradient(&x)) <= max_norm);
        }
    }
}
