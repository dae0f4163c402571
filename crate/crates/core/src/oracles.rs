//! Closed-form distance functions with exact gradients.
//!
//! Spheres, boxes, rounded boxes and tori are signed (negative inside).
//! Segments, polylines and arcs are unsigned distances to open sets.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fieldops::{Provenance, ScalarField};
use crate::geometry::{FieldMode, LabeledDataset, SegmentSoup, DOMAIN_HALF_WIDTH};
use crate::vecmath::{dist, dot, norm};

#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticSdf {
    /// Circle in 2D, sphere in 3D.
    Sphere { center: Vec<f64>, radius: f64 },
    Box { center: Vec<f64>, half: Vec<f64> },
    /// Box with half extents `half + radius` and rounded edges of that radius.
    RoundedBox { center: Vec<f64>, half: Vec<f64>, radius: f64 },
    /// Torus around the z axis through `center`.
    Torus { center: [f64; 3], major: f64, minor: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
    Polyline { points: Vec<Vec<f64>>, closed: bool },
    /// Circular arc in 2D from angle `start` to `end` (radians, counter-clockwise).
    Arc { center: [f64; 2], radius: f64, start: f64, end: f64 },
}

/// Gradient with a flag raised when `x` lies on the medial axis, where the
/// returned vector is only one valid choice among several.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleGradient {
    pub vector: Vec<f64>,
    pub on_medial_axis: bool,
}

fn check_dim(v: &[f64]) -> Result<usize> {
    if v.len() == 2 || v.len() == 3 {
        Ok(v.len())
    } else {
        Err(Error::invalid(format!("oracle points must be 2D or 3D, got {}", v.len())))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

fn unit_or_axis(v: Vec<f64>) -> (Vec<f64>, bool) {
    let n = norm(&v);
    if n > 0.0 {
        (v.iter().map(|c| c / n).collect(), false)
    } else {
        let mut e = vec![0.0; v.len()];
        e[0] = 1.0;
        (e, true)
    }
}

/// Closest point on segment `ab` to `x`.
fn closest_on_segment(a: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let ax: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
    let len2 = dot(&ab, &ab);
    let t = if len2 > 0.0 { (dot(&ax, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    a.iter().zip(&ab).map(|(p, d)| p + t * d).collect()
}

impl AnalyticSdf {
    pub fn sphere(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(&center)?;
        positive("radius", radius)?;
        Ok(AnalyticSdf::Sphere { center, radius })
    }

    pub fn cuboid(center: Vec<f64>, half: Vec<f64>) -> Result<Self> {
        check_dim(&center)?;
        if half.len() != center.len() {
            return Err(Error::Dimension { expected: center.len(), got: half.len() });
        }
        for h in &half {
            positive("half extent", *h)?;
        }
        Ok(AnalyticSdf::Box { center, half })
    }

    pub fn rounded_box(center: Vec<f64>, half: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(&center)?;
        if half.len() != center.len() {
            return Err(Error::Dimension { expected: center.len(), got: half.len() });
        }
        for h in &half {
            positive("half extent", *h)?;
        }
        positive("corner radius", radius)?;
        Ok(AnalyticSdf::RoundedBox { center, half, radius })
    }

    pub fn torus(center: [f64; 3], major: f64, minor: f64) -> Result<Self> {
        positive("major radius", major)?;
        positive("minor radius", minor)?;
        if minor >= major {
            return Err(Error::invalid("torus minor radius must be below the major radius"));
        }
        Ok(AnalyticSdf::Torus { center, major, minor })
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_dim(&a)?;
        if a.len() != b.len() {
            return Err(Error::Dimension { expected: a.len(), got: b.len() });
        }
        Ok(AnalyticSdf::Segment { a, b })
    }

    pub fn polyline(points: Vec<Vec<f64>>, closed: bool) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::invalid("empty polyline"))?;
        let d = check_dim(first)?;
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("polyline points have mixed dimensions"));
        }
        Ok(AnalyticSdf::Polyline { points, closed })
    }

    pub fn arc(center: [f64; 2], radius: f64, start: f64, end: f64) -> Result<Self> {
        positive("radius", radius)?;
        if !(end > start && end - start < 2.0 * PI) {
            return Err(Error::invalid("arc needs start < end < start + 2pi"));
        }
        Ok(AnalyticSdf::Arc { center, radius, start, end })
    }

    pub fn dim(&self) -> usize {
        match self {
            AnalyticSdf::Sphere { center, .. }
            | AnalyticSdf::Box { center, .. }
            | AnalyticSdf::RoundedBox { center, .. } => center.len(),
            AnalyticSdf::Torus { .. } => 3,
            AnalyticSdf::Segment { a, .. } => a.len(),
            AnalyticSdf::Polyline { points, .. } => points[0].len(),
            AnalyticSdf::Arc { .. } => 2,
        }
    }

    pub fn mode(&self) -> FieldMode {
        match self {
            AnalyticSdf::Segment { .. } | AnalyticSdf::Polyline { .. } | AnalyticSdf::Arc { .. } => {
                FieldMode::Unsigned
            }
            _ => FieldMode::Signed,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "oracle dimension mismatch");
        match self {
            AnalyticSdf::Sphere { center, radius } => dist(x, center) - radius,
            AnalyticSdf::Box { center, half } => box_sdf(x, center, half),
            AnalyticSdf::RoundedBox { center, half, radius } => box_sdf(x, center, half) - radius,
            AnalyticSdf::Torus { center, major, minor } => {
                let (qr, qz) = torus_q(x, center, *major);
                (qr * qr + qz * qz).sqrt() - minor
            }
            AnalyticSdf::Segment { a, b } => dist(x, &closest_on_segment(a, b, x)),
            AnalyticSdf::Polyline { .. } => dist(x, &self.polyline_closest(x)),
            AnalyticSdf::Arc { .. } => dist(x, &self.arc_closest(x)),
        }
    }

    pub fn grad(&self, x: &[f64]) -> OracleGradient {
        assert_eq!(x.len(), self.dim(), "oracle dimension mismatch");
        let away = |p: &[f64]| -> OracleGradient {
            let (vector, on_medial_axis) = unit_or_axis(x.iter().zip(p).map(|(a, b)| a - b).collect());
            OracleGradient { vector, on_medial_axis }
        };
        match self {
            AnalyticSdf::Sphere { center, .. } => away(center),
            AnalyticSdf::Box { center, half } | AnalyticSdf::RoundedBox { center, half, .. } => {
                box_grad(x, center, half)
            }
            AnalyticSdf::Torus { center, major, .. } => {
                let (qr, qz) = torus_q(x, center, *major);
                let (rx, ry) = (x[0] - center[0], x[1] - center[1]);
                let rho = (rx * rx + ry * ry).sqrt();
                let qn = (qr * qr + qz * qz).sqrt();
                if rho == 0.0 || qn == 0.0 {
                    let (vector, _) = unit_or_axis(vec![qr.max(0.0), 0.0, qz]);
                    return OracleGradient { vector, on_medial_axis: true };
                }
                let s = qr / qn;
                OracleGradient {
                    vector: vec![s * rx / rho, s * ry / rho, qz / qn],
                    on_medial_axis: false,
                }
            }
            AnalyticSdf::Segment { a, b } => {
                let mut g = away(&closest_on_segment(a, b, x));
                g.on_medial_axis |= self.eval(x) == 0.0;
                g
            }
            AnalyticSdf::Polyline { .. } => away(&self.polyline_closest(x)),
            AnalyticSdf::Arc { center, .. } => {
                let mut g = away(&self.arc_closest(x));
                // The center is equidistant from every arc point.
                g.on_medial_axis |= x[0] == center[0] && x[1] == center[1];
                g
            }
        }
    }

    fn polyline_closest(&self, x: &[f64]) -> Vec<f64> {
        let AnalyticSdf::Polyline { points, closed } = self else { unreachable!() };
        if points.len() == 1 {
            return points[0].clone();
        }
        let n = points.len();
        let count = if *closed && n > 2 { n } else { n - 1 };
        let mut best = (f64::INFINITY, Vec::new());
        for i in 0..count {
            let c = closest_on_segment(&points[i], &points[(i + 1) % n], x);
            let d = dist(x, &c);
            if d < best.0 {
                best = (d, c);
            }
        }
        best.1
    }

    fn arc_closest(&self, x: &[f64]) -> Vec<f64> {
        let AnalyticSdf::Arc { center, radius, start, end } = *self else { unreachable!() };
        let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
        let at = |t: f64| vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()];
        let mut theta = dy.atan2(dx);
        while theta < start {
            theta += 2.0 * PI;
        }
        if (dx != 0.0 || dy != 0.0) && theta <= end {
            return at(theta);
        }
        let (p, q) = (at(start), at(end));
        if dist(x, &p) <= dist(x, &q) {
            p
        } else {
            q
        }
    }

    /// Samples of the shape boundary for unsigned shapes, as a segment soup
    /// (2D only). Arcs are split into `n` chords.
    pub fn to_segments(&self, n: usize) -> Result<SegmentSoup> {
        match self {
            AnalyticSdf::Arc { center, radius, start, end } => {
                let pts = (0..=n)
                    .map(|i| {
                        let t = start + (end - start) * i as f64 / n as f64;
                        [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                    })
                    .collect();
                Ok(SegmentSoup::polyline(pts, false))
            }
            AnalyticSdf::Segment { a, b } if a.len() == 2 => {
                Ok(SegmentSoup::polyline(vec![[a[0], a[1]], [b[0], b[1]]], false))
            }
            AnalyticSdf::Polyline { points, closed } if points[0].len() == 2 => Ok(SegmentSoup::polyline(
                points.iter().map(|p| [p[0], p[1]]).collect(),
                *closed,
            )),
            _ => Err(Error::invalid("only 2D open shapes convert to segments")),
        }
    }
}

fn box_sdf(x: &[f64], center: &[f64], half: &[f64]) -> f64 {
    let q: Vec<f64> = (0..x.len()).map(|i| (x[i] - center[i]).abs() - half[i]).collect();
    let outside = q.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
    let inside = q.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(0.0);
    outside + inside
}

fn box_grad(x: &[f64], center: &[f64], half: &[f64]) -> OracleGradient {
    let d = x.len();
    let rel: Vec<f64> = (0..d).map(|i| x[i] - center[i]).collect();
    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let q: Vec<f64> = (0..d).map(|i| rel[i].abs() - half[i]).collect();
    if q.iter().any(|&v| v > 0.0) {
        let (vector, _) = unit_or_axis((0..d).map(|i| q[i].max(0.0) * sign(rel[i])).collect());
        return OracleGradient { vector, on_medial_axis: false };
    }
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let axis = q.iter().position(|&v| v == max).unwrap();
    let ties = q.iter().filter(|&&v| v == max).count();
    let mut vector = vec![0.0; d];
    vector[axis] = sign(rel[axis]);
    OracleGradient {
        vector,
        on_medial_axis: ties > 1 || rel[axis] == 0.0,
    }
}

fn torus_q(x: &[f64], c: &[f64; 3], major: f64) -> (f64, f64) {
    let (rx, ry) = (x[0] - c[0], x[1] - c[1]);
    ((rx * rx + ry * ry).sqrt() - major, x[2] - c[2])
}

impl ScalarField for AnalyticSdf {
    fn dim(&self) -> usize {
        AnalyticSdf::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad(x).vector
    }

    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("invalid number `{t}`")))
        })
        .collect()
}

fn one(s: &str) -> Result<f64> {
    match parse_list(s)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(Error::invalid(format!("expected one number, got `{s}`"))),
    }
}

/// Parses shape descriptions such as `sphere:0,0,0:0.5`, `circle:0,0:0.25`,
/// `box:0,0,0:0.5,0.5,0.5`, `roundbox:0,0:0.3,0.2:0.05`,
/// `torus:0,0,0:0.5,0.2`, `segment:-0.5,0:0.5,0`,
/// `polyline:0,0;0.5,0;0.5,0.5` (`closedpolyline:` to close it) and
/// `arc:0,0:0.3:0,3.14`.
impl FromStr for AnalyticSdf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid(format!("cannot parse oracle `{s}`"));
        match parts.as_slice() {
            ["sphere" | "circle", c, r] => AnalyticSdf::sphere(parse_list(c)?, one(r)?),
            ["box", c, h] => AnalyticSdf::cuboid(parse_list(c)?, parse_list(h)?),
            ["roundbox", c, h, r] => AnalyticSdf::rounded_box(parse_list(c)?, parse_list(h)?, one(r)?),
            ["torus", c, radii] => {
                let c = parse_list(c)?;
                let r = parse_list(radii)?;
                if c.len() != 3 || r.len() != 2 {
                    return Err(bad());
                }
                AnalyticSdf::torus([c[0], c[1], c[2]], r[0], r[1])
            }
            ["segment", a, b] => AnalyticSdf::segment(parse_list(a)?, parse_list(b)?),
            [kind @ ("polyline" | "closedpolyline"), pts] => AnalyticSdf::polyline(
                pts.split(';').map(parse_list).collect::<Result<_>>()?,
                *kind == "closedpolyline",
            ),
            ["arc", c, r, range] => {
                let c = parse_list(c)?;
                let t = parse_list(range)?;
                if c.len() != 2 || t.len() != 2 {
                    return Err(bad());
                }
                AnalyticSdf::arc([c[0], c[1]], one(r)?, t[0], t[1])
            }
            _ => Err(bad()),
        }
    }
}

/// `n` inside and `n` outside points uniform in `D = [-1, 1]^n`, classified
/// by the sign of a signed oracle, with exact distances in `s_true`.
/// Inside points (label -1) come first.
pub fn analytic_dataset(shape: &AnalyticSdf, n: usize, seed: u64) -> Result<LabeledDataset> {
    if shape.mode() != FieldMode::Signed {
        return Err(Error::invalid("analytic datasets need a signed shape"));
    }
    if n == 0 {
        return Err(Error::invalid("dataset size must be positive"));
    }
    let dim = shape.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    let (mut s_in, mut s_out) = (Vec::new(), Vec::new());
    let mut x = vec![0.0; dim];
    for _ in 0..100 * n {
        if s_in.len() == n && s_out.len() == n {
            break;
        }
        for v in x.iter_mut() {
            *v = rng.random_range(-DOMAIN_HALF_WIDTH..DOMAIN_HALF_WIDTH);
        }
        let s = shape.eval(&x);
        if s < 0.0 && s_in.len() < n {
            inside.extend_from_slice(&x);
            s_in.push(s);
        } else if s > 0.0 && s_out.len() < n {
            outside.extend_from_slice(&x);
            s_out.push(s);
        }
    }
    if s_in.len() < n || s_out.len() < n {
        let (class, got) = if s_in.len() < n { ("inside", s_in.len()) } else { ("outside", s_out.len()) };
        return Err(Error::SamplingBudget {
            class,
            got,
            wanted: n,
            attempts: 100 * n,
            tau_in: 0.0,
            tau_out: 0.0,
        });
    }
    let mut labels = vec![-1.0; n];
    labels.extend(std::iter::repeat_n(1.0, n));
    inside.extend(outside);
    s_in.extend(s_out);
    LabeledDataset::new(dim, inside, labels, Some(s_in), FieldMode::Signed)
}

/// Circle dataset standing in for a 2D silhouette.
pub fn circle_dataset(radius: f64, n: usize, seed: u64) -> Result<LabeledDataset> {
    analytic_dataset(&AnalyticSdf::sphere(vec![0.0, 0.0], radius)?, n, seed)
}

/// Rounded-rectangle dataset standing in for a 2D silhouette.
pub fn rounded_box_dataset(n: usize, seed: u64) -> Result<LabeledDataset> {
    analytic_dataset(
        &AnalyticSdf::rounded_box(vec![0.0, 0.0], vec![0.3, 0.15], 0.08)?,
        n,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sphere_and_box_examples() {
        let s = AnalyticSdf::sphere(vec![0.0; 3], 1.0).unwrap();
        assert_eq!(s.eval(&[2.0, 0.0, 0.0]), 1.0);
        assert_eq!(s.grad(&[2.0, 0.0, 0.0]).vector, vec![1.0, 0.0, 0.0]);
        assert!(s.grad(&[0.0; 3]).on_medial_axis);
        let b = AnalyticSdf::cuboid(vec![0.0; 3], vec![0.5; 3]).unwrap();
        assert_eq!(b.eval(&[1.0, 0.0, 0.0]), 0.5);
        assert_eq!(b.eval(&[0.0, 0.0, 0.0]), -0.5);
        assert!((b.eval(&[1.0, 1.0, 0.0]) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn torus_matches_parametric_search() {
        let t = AnalyticSdf::torus([0.0; 3], 0.5, 0.2).unwrap();
        let x = [0.5 + 0.2 + 0.1, 0.0, 0.0];
        assert!((t.eval(&x) - 0.1).abs() < 1e-12);
        // Brute force over the surface parameterization with local refinement.
        let surf = |u: f64, v: f64| {
            let r = 0.5 + 0.2 * v.cos();
            [r * u.cos(), r * u.sin(), 0.2 * v.sin()]
        };
        for q in [[0.3, 0.4, -0.1], [0.0, 0.0, 0.9], [0.1, 0.55, 0.05], x] {
            let dq = |p: [f64; 3]| dist(&p, &q);
            let (mut bu, mut bv, mut best) = (0.0, 0.0, f64::INFINITY);
            let m = 400;
            for i in 0..m {
                for j in 0..m {
                    let (u, v) = (2.0 * PI * i as f64 / m as f64, 2.0 * PI * j as f64 / m as f64);
                    let dd = dq(surf(u, v));
                    if dd < best {
                        (bu, bv, best) = (u, v, dd);
                    }
                }
            }
            let mut step = 2.0 * PI / m as f64;
            while step > 1e-12 {
                let mut moved = false;
                for (du, dv) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                    let dd = dq(surf(bu + du, bv + dv));
                    if dd < best {
                        (bu, bv, best) = (bu + du, bv + dv, dd);
                        moved = true;
                    }
                }
                if !moved {
                    step /= 2.0;
                }
            }
            let inside_tube = {
                let rho = (q[0] * q[0] + q[1] * q[1]).sqrt();
                ((rho - 0.5).powi(2) + q[2] * q[2]).sqrt() < 0.2
            };
            let expected = if inside_tube { -best } else { best };
            assert!((t.eval(&q) - expected).abs() < 1e-6, "{q:?}");
        }
    }

    #[test]
    fn arc_distance() {
        let a = AnalyticSdf::arc([0.0, 0.0], 0.5, 0.0, PI).unwrap();
        assert!((a.eval(&[0.0, 1.0]) - 0.5).abs() < 1e-15);
        assert!((a.eval(&[0.0, -0.5]) - 0.5f64.hypot(0.5)).abs() < 1e-15);
        assert!((a.eval(&[0.0, 0.0]) - 0.5).abs() < 1e-15);
        assert!(a.grad(&[0.0, 0.0]).on_medial_axis);
    }

    #[test]
    fn parse_specs() {
        let s: AnalyticSdf = "sphere:0,0,0:0.5".parse().unwrap();
        assert_eq!(s, AnalyticSdf::sphere(vec![0.0; 3], 0.5).unwrap());
        let p: AnalyticSdf = "polyline:0,0;1,0;1,1".parse().unwrap();
        assert_eq!(p.eval(&[0.5, -0.25]), 0.25);
        assert!("sphere:0,0:-1".parse::<AnalyticSdf>().is_err());
        assert!("cone:0".parse::<AnalyticSdf>().is_err());
    }

    #[test]
    fn circle_dataset_labels() {
        let ds = circle_dataset(0.25, 500, 2).unwrap();
        let s = ds.s_true.as_ref().unwrap();
        assert!(ds.is_balanced());
        for i in 0..ds.len() {
            assert_eq!(ds.labels[i] < 0.0, s[i] < 0.0);
        }
    }

    fn shapes() -> Vec<AnalyticSdf> {
        vec![
            AnalyticSdf::sphere(vec![0.1, -0.2, 0.05], 0.4).unwrap(),
            AnalyticSdf::sphere(vec![0.0, 0.1], 0.3).unwrap(),
            AnalyticSdf::cuboid(vec![0.0, 0.1, 0.0], vec![0.3, 0.2, 0.4]).unwrap(),
            AnalyticSdf::rounded_box(vec![0.1, 0.0], vec![0.3, 0.1], 0.05).unwrap(),
            AnalyticSdf::torus([0.0, 0.0, 0.1], 0.5, 0.2).unwrap(),
            AnalyticSdf::segment(vec![-0.3, 0.0, 0.1], vec![0.4, 0.2, -0.1]).unwrap(),
            AnalyticSdf::polyline(vec![vec![-0.5, 0.0], vec![0.0, 0.3], vec![0.4, -0.2]], true).unwrap(),
            AnalyticSdf::arc([0.0, 0.0], 0.35, 0.3, 2.8).unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn lipschitz_eikonal_and_fd(
            a in prop::collection::vec(-1.0f64..1.0, 3),
            b in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            for shape in shapes() {
                let d = shape.dim();
                let (a, b) = (&a[..d], &b[..d]);
                let gap = dist(a, b);
                prop_assume!(gap > 1e-9);
                prop_assert!((shape.eval(a) - shape.eval(b)).abs() <= gap * (1.0 + 1e-9));

                let g = shape.grad(a);
                if g.on_medial_axis {
                    continue;
                }
                prop_assert!((norm(&g.vector) - 1.0).abs() < 1e-9);
                let h = 1e-6;
                let num: Vec<f64> = (0..d).map(|i| {
                    let mut p = a.to_vec();
                    let mut m = a.to_vec();
                    p[i] += h;
                    m[i] -= h;
                    (shape.eval(&p) - shape.eval(&m)) / (2.0 * h)
                }).collect();
                // Central differences are only meaningful away from the
                // nonsmooth set; detect it by a jump in the analytic gradient.
                let smooth = (0..d).all(|i| {
                    let mut p = a.to_vec();
                    p[i] += 2.0 * h;
                    let gp = shape.grad(&p).vector;
                    let mut m = a.to_vec();
                    m[i] -= 2.0 * h;
                    let gm = shape.grad(&m).vector;
                    dist(&gp, &g.vector) < 1e-3 && dist(&gm, &g.vector) < 1e-3
                });
                if smooth {
                    for i in 0..d {
                        prop_assert!((num[i] - g.vector[i]).abs() < 1e-6, "{:?} {i}", shape);
                    }
                }
            }
        }
    }
}
