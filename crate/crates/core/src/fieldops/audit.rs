use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};
use crate::geometry::{winding_segments, winding_triangles, SegmentSoup, TriangleSoup};
use crate::vecmath::{add3, dist, dot3, norm, norm3, scale3, sub3};

use super::{Aabb, ScalarField};

/// Pairs closer than this are redrawn so rounding in `f` cannot fake a
/// violation of the unit bound.
const MIN_PAIR_DISTANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzAudit {
    pub max_quotient: f64,
    pub pairs: usize,
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

fn draw_near(rng: &mut ChaCha8Rng, a: &[f64]) -> Vec<f64> {
    let dir: Vec<f64> = (0..a.len()).map(|_| StandardNormal.sample(rng)).collect();
    let dn = norm(&dir).max(1e-300);
    let len = rng.random_range(MIN_PAIR_DISTANCE..0.1);
    a.iter().zip(&dir).map(|(p, d)| p + len * d / dn).collect()
}

/// Largest `|f(a) - f(b)| / |a - b|` over `n_pairs` pairs. Half of the pairs
/// are uniform in `domain`; the other half are short pairs next to the zero
/// set, found by one normalized projection step from a uniform point.
pub fn audit_lipschitz(field: &dyn ScalarField, n_pairs: usize, seed: u64, domain: &Aabb) -> Result<LipschitzAudit> {
    ensure_dim(field.dim(), domain.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = n_pairs / 2 + n_pairs % 2;
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n_pairs);
    for _ in 0..uniform {
        let a = domain.sample(&mut rng);
        let b = loop {
            let b = domain.sample(&mut rng);
            if dist(&a, &b) >= MIN_PAIR_DISTANCE {
                break b;
            }
        };
        pairs.push((a, b));
    }
    let seeds: Vec<Vec<f64>> = (uniform..n_pairs).map(|_| domain.sample(&mut rng)).collect();
    let anchors: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|x| {
            let (f, g) = field.value_and_gradient(x);
            let gn = norm(&g).max(1e-6);
            x.iter().zip(&g).map(|(xi, gi)| xi - f * gi / gn).collect()
        })
        .collect();
    for a in anchors {
        let b = draw_near(&mut rng, &a);
        pairs.push((a, b));
    }
    let quotients: Vec<f64> = pairs
        .par_iter()
        .map(|(a, b)| (field.value(a) - field.value(b)).abs() / dist(a, b))
        .collect();
    let mut best = (0.0, None);
    for (q, pair) in quotients.iter().zip(&pairs) {
        if *q > best.0 {
            best = (*q, Some(pair.clone()));
        }
    }
    Ok(LipschitzAudit {
        max_quotient: best.0,
        pairs: n_pairs,
        worst_pair: best.1,
    })
}

/// Explicit reference surface for distance audits.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceMesh {
    Triangles(TriangleSoup),
    Segments(SegmentSoup),
}

impl SurfaceMesh {
    pub fn dim(&self) -> usize {
        match self {
            SurfaceMesh::Triangles(_) => 3,
            SurfaceMesh::Segments(_) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            SurfaceMesh::Triangles(s) => s.is_empty(),
            SurfaceMesh::Segments(s) => s.is_empty(),
        }
    }

    /// Distance to the surface, negative where the winding number is at least 1/2.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            SurfaceMesh::Triangles(s) => {
                let p = [x[0], x[1], x[2]];
                let d = point_mesh_distance(s, p);
                if winding_triangles(s, p).value >= 0.5 {
                    -d
                } else {
                    d
                }
            }
            SurfaceMesh::Segments(s) => {
                let p = [x[0], x[1]];
                let d = point_segments_distance(s, p);
                if winding_segments(s, p).value >= 0.5 {
                    -d
                } else {
                    d
                }
            }
        }
    }
}

fn closest_on_triangle(p: [f64; 3], a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    // Voronoi-region walk over vertices, edges and the face.
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub3(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return add3(a, scale3(ab, d1 / (d1 - d3)));
    }
    let cp = sub3(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return add3(a, scale3(ac, d2 / (d2 - d6)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add3(b, scale3(sub3(c, b), w));
    }
    let denom = va + vb + vc;
    if denom == 0.0 {
        // Degenerate triangle: fall back to its longest edge.
        let edges = [(a, b), (b, c), (c, a)];
        let (s, e) = edges
            .into_iter()
            .max_by(|x, y| norm3(sub3(x.1, x.0)).total_cmp(&norm3(sub3(y.1, y.0))))
            .unwrap();
        let d = sub3(e, s);
        let len2 = dot3(d, d);
        let t = if len2 > 0.0 { (dot3(sub3(p, s), d) / len2).clamp(0.0, 1.0) } else { 0.0 };
        return add3(s, scale3(d, t));
    }
    let v = vb / denom;
    let w = vc / denom;
    add3(a, add3(scale3(ab, v), scale3(ac, w)))
}

/// Unsigned distance from `p` to the closest triangle.
pub fn point_mesh_distance(soup: &TriangleSoup, p: [f64; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for t in 0..soup.triangles.len() {
        let [a, b, c] = soup.corners(t);
        let q = closest_on_triangle(p, a, b, c);
        best = best.min(norm3(sub3(p, q)));
    }
    best
}

/// Unsigned distance from `p` to the closest segment.
pub fn point_segments_distance(soup: &SegmentSoup, p: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for s in &soup.segments {
        let (a, b) = (soup.vertices[s[0]], soup.vertices[s[1]]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [a[0] + t * d[0], a[1] + t * d[1]];
        best = best.min(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnderestimationReport {
    pub dim: usize,
    pub points: Vec<f64>,
    pub field_values: Vec<f64>,
    pub mesh_distances: Vec<f64>,
    /// `f(x) - S_mesh(x)` per sample.
    pub differences: Vec<f64>,
    /// `(lower edge, upper edge, count)` over the observed range.
    pub histogram: Vec<(f64, f64, usize)>,
}

impl UnderestimationReport {
    pub fn max_difference(&self) -> Option<f64> {
        self.differences.iter().copied().reduce(f64::max)
    }

    pub fn to_csv(&self) -> String {
        let axes = ["x", "y", "z"];
        let mut out = axes[..self.dim].join(",");
        out.push_str(",f,s_mesh,difference\n");
        for i in 0..self.differences.len() {
            for v in &self.points[i * self.dim..(i + 1) * self.dim] {
                write!(out, "{v},").unwrap();
            }
            writeln!(
                out,
                "{},{},{}",
                self.field_values[i], self.mesh_distances[i], self.differences[i]
            )
            .unwrap();
        }
        out
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for (lo, hi, c) in &self.histogram {
            writeln!(out, "{lo},{hi},{c}").unwrap();
        }
        out
    }
}

const HISTOGRAM_BINS: usize = 40;

fn histogram(values: &[f64]) -> Vec<(f64, f64, usize)> {
    let (Some(lo), Some(hi)) = (
        values.iter().copied().reduce(f64::min),
        values.iter().copied().reduce(f64::max),
    ) else {
        return Vec::new();
    };
    let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 };
    let bins = if hi > lo { HISTOGRAM_BINS } else { 1 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

/// Compares `field` with the signed distance to `mesh` at `n_points`
/// uniform samples in the ball of radius `radius` around `center`.
pub fn audit_underestimation(
    field: &dyn ScalarField,
    mesh: &SurfaceMesh,
    n_points: usize,
    radius: f64,
    center: &[f64],
    seed: u64,
) -> Result<UnderestimationReport> {
    let dim = mesh.dim();
    ensure_dim(dim, field.dim())?;
    ensure_dim(dim, center.len())?;
    if mesh.is_empty() {
        return Err(Error::invalid("reference mesh is empty"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points * dim);
    for _ in 0..n_points {
        let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let dn = norm(&dir).max(1e-300);
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        points.extend(dir.iter().zip(center).map(|(d, c)| c + r * d / dn));
    }
    let pairs: Vec<(f64, f64)> = points
        .par_chunks_exact(dim)
        .map(|x| (field.value(x), mesh.signed_distance(x)))
        .collect();
    let (field_values, mesh_distances): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let differences: Vec<f64> = field_values
        .iter()
        .zip(&mesh_distances)
        .map(|(f, s)| f - s)
        .collect();
    Ok(UnderestimationReport {
        dim,
        histogram: histogram(&differences),
        points,
        field_values,
        mesh_distances,
        differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::icosphere;
    use crate::oracles::AnalyticSdf;

    #[test]
    fn constant_and_exact_fields() {
        struct Constant;
        impl ScalarField for Constant {
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, _: &[f64]) -> f64 {
                0.7
            }
            fn gradient(&self, _: &[f64]) -> Vec<f64> {
                vec![0.0, 0.0]
            }
            fn provenance(&self) -> super::super::Provenance {
                super::super::Provenance::Analytic
            }
        }
        let d2 = Aabb::cube(2, 1.0);
        assert_eq!(audit_lipschitz(&Constant, 1000, 1, &d2).unwrap().max_quotient, 0.0);
        let s = AnalyticSdf::sphere(vec![0.0; 3], 0.5).unwrap();
        let a = audit_lipschitz(&s, 10_000, 2, &Aabb::cube(3, 1.0)).unwrap();
        assert!(a.max_quotient <= 1.0 + 1e-12 && a.max_quotient > 0.9);
    }

    #[test]
    fn triangle_distance_brute_force() {
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.2, 0.9, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let p = [rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0), rng.random_range(-1.0..1.0)];
            let got = norm3(sub3(p, closest_on_triangle(p, a, b, c)));
            let m = 300;
            let mut best = f64::INFINITY;
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let (u, v) = (i as f64 / m as f64, j as f64 / m as f64);
                    let q = add3(a, add3(scale3(sub3(b, a), u), scale3(sub3(c, a), v)));
                    best = best.min(norm3(sub3(p, q)));
                }
            }
            // Lattice spacing bounds the brute-force error.
            assert!(got <= best + 1e-12 && best - got < 5e-3, "{got} {best}");
        }
    }

    #[test]
    fn icosphere_signed_distance() {
        let mesh = SurfaceMesh::Triangles(icosphere([0.0; 3], 1.0, 3));
        // Facets sit slightly inside the unit sphere.
        assert!((mesh.signed_distance(&[0.0, 0.0, 0.0]) + 1.0).abs() < 0.01);
        assert!((mesh.signed_distance(&[2.0, 0.0, 0.0]) - 1.0).abs() < 0.01);
    }

    #[test]
    fn empty_sample_and_mesh() {
        let s = AnalyticSdf::sphere(vec![0.0; 3], 0.5).unwrap();
        let mesh = SurfaceMesh::Triangles(icosphere([0.0; 3], 0.5, 1));
        let r = audit_underestimation(&s, &mesh, 0, 3.0, &[0.0; 3], 1).unwrap();
        assert!(r.histogram.is_empty() && r.max_difference().is_none());
        let empty = SurfaceMesh::Triangles(TriangleSoup::default());
        assert!(audit_underestimation(&s, &empty, 10, 3.0, &[0.0; 3], 1).is_err());
    }
}
