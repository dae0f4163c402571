use std::f64::consts::PI;

use crate::error::{ensure_dim, Error, Result};
use crate::vecmath::{cross3, dot3, norm3, sub3};

use super::shapes::{Geometry, OrientedPointCloud, SegmentSoup, TriangleSoup};

/// Queries closer than this to the input are flagged as on the surface.
pub const NEAR_SURFACE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingSample {
    pub value: f64,
    /// The query touched the input; callers resample such points.
    pub near_surface: bool,
}

/// Signed solid angle of triangle `abc` seen from the origin
/// (van Oosterom-Strackee), positive when the triangle winds counter-clockwise
/// around the outward direction.
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let (la, lb, lc) = (norm3(a), norm3(b), norm3(c));
    let num = dot3(a, cross3(b, c));
    let den = la * lb * lc + dot3(a, b) * lc + dot3(a, c) * lb + dot3(b, c) * la;
    2.0 * num.atan2(den)
}

fn touches_triangle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> bool {
    // a, b, c are relative to the query point.
    let n = cross3(sub3(b, a), sub3(c, a));
    let nn = norm3(n);
    if nn == 0.0 {
        return false;
    }
    if (dot3(n, a) / nn).abs() > NEAR_SURFACE_EPS {
        return false;
    }
    // Origin projected on the plane is inside iff all edge tests agree.
    let s0 = dot3(cross3(a, b), n);
    let s1 = dot3(cross3(b, c), n);
    let s2 = dot3(cross3(c, a), n);
    (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0) || (s0 <= 0.0 && s1 <= 0.0 && s2 <= 0.0)
}

/// Generalized winding number `sum_t Omega_t(x) / 4pi`.
pub fn winding_triangles(soup: &TriangleSoup, x: [f64; 3]) -> WindingSample {
    let mut total = 0.0;
    let mut near_surface = false;
    for t in &soup.triangles {
        let a = sub3(soup.vertices[t[0]], x);
        let b = sub3(soup.vertices[t[1]], x);
        let c = sub3(soup.vertices[t[2]], x);
        if touches_triangle(a, b, c) {
            near_surface = true;
            continue;
        }
        total += solid_angle(a, b, c);
    }
    WindingSample {
        value: total / (4.0 * PI),
        near_surface,
    }
}

/// 2D winding number of a segment soup: sum of signed subtended angles over `2pi`.
pub fn winding_segments(soup: &SegmentSoup, x: [f64; 2]) -> WindingSample {
    let mut total = 0.0;
    let mut near_surface = false;
    for s in &soup.segments {
        let p = soup.vertices[s[0]];
        let q = soup.vertices[s[1]];
        let a = [p[0] - x[0], p[1] - x[1]];
        let b = [q[0] - x[0], q[1] - x[1]];
        let cross = a[0] * b[1] - a[1] * b[0];
        let dot = a[0] * b[0] + a[1] * b[1];
        let seg = [b[0] - a[0], b[1] - a[1]];
        let len2 = seg[0] * seg[0] + seg[1] * seg[1];
        let dist = if len2 > 0.0 {
            let t = (-(a[0] * seg[0] + a[1] * seg[1]) / len2).clamp(0.0, 1.0);
            ((a[0] + t * seg[0]).powi(2) + (a[1] + t * seg[1]).powi(2)).sqrt()
        } else {
            (a[0] * a[0] + a[1] * a[1]).sqrt()
        };
        if dist < NEAR_SURFACE_EPS {
            near_surface = true;
            continue;
        }
        total += cross.atan2(dot);
    }
    WindingSample {
        value: total / (2.0 * PI),
        near_surface,
    }
}

/// Dipole-sum winding number of an oriented, area-weighted point cloud:
/// `sum_i a_i (p_i - x).n_i / (4pi |p_i - x|^3)` in 3D and
/// `sum_i a_i (p_i - x).n_i / (2pi |p_i - x|^2)` in 2D.
pub fn winding_points(cloud: &OrientedPointCloud, x: &[f64]) -> Result<WindingSample> {
    let d = cloud.dim();
    ensure_dim(d, x.len())?;
    let normals = cloud
        .normals()
        .ok_or_else(|| Error::MissingProperty("normals".into()))?;
    let areas = cloud
        .areas()
        .ok_or_else(|| Error::invalid("point cloud areas not estimated"))?;
    let mut total = 0.0;
    let mut near_surface = false;
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        let n = &normals[i * d..(i + 1) * d];
        let mut r2 = 0.0;
        let mut proj = 0.0;
        for k in 0..d {
            let r = p[k] - x[k];
            r2 += r * r;
            proj += r * n[k];
        }
        let r = r2.sqrt();
        if r < NEAR_SURFACE_EPS {
            near_surface = true;
            continue;
        }
        total += areas[i] * proj / if d == 3 { r2 * r } else { r2 };
    }
    let norm = if d == 3 { 4.0 * PI } else { 2.0 * PI };
    Ok(WindingSample {
        value: total / norm,
        near_surface,
    })
}

impl Geometry {
    /// Generalized winding number at `x`. Point clouds need normals and areas.
    pub fn winding(&self, x: &[f64]) -> Result<WindingSample> {
        ensure_dim(self.dim(), x.len())?;
        match self {
            Geometry::Triangles(s) => Ok(winding_triangles(s, [x[0], x[1], x[2]])),
            Geometry::Segments(s) => Ok(winding_segments(s, [x[0], x[1]])),
            Geometry::Cloud(c) => winding_points(c, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::icosphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn icosphere_center_and_far() {
        let s = icosphere([0.0; 3], 0.5, 3);
        let w = winding_triangles(&s, [0.0; 3]);
        assert!((w.value - 1.0).abs() < 1e-9 && !w.near_surface);
        let w = winding_triangles(&s, [2.0, 1.0, -3.0]);
        assert!(w.value.abs() < 1e-9);
    }

    #[test]
    fn single_triangle_matches_monte_carlo_solid_angle() {
        // Triangle in the plane z = 1 seen from the origin; the oracle samples
        // directions uniformly on the sphere and counts rays through the triangle.
        let a = [0.0, 0.0, 1.0];
        let b = [1.0, 0.0, 1.0];
        let c = [0.0, 1.0, 1.0];
        let soup = TriangleSoup::new(vec![a, b, c], vec![[0, 1, 2]]).unwrap();
        let w = winding_triangles(&soup, [0.0; 3]).value;

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4_000_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            if z <= 0.0 {
                continue;
            }
            let (px, py) = (r * phi.cos() / z, r * phi.sin() / z);
            if px >= 0.0 && py >= 0.0 && px + py <= 1.0 {
                hits += 1;
            }
        }
        let mc = hits as f64 / n as f64; // fraction of 4pi
        // (b-a)x(c-a) = +z: the triangle faces away from the origin.
        assert!(w > 0.0);
        // Monte-Carlo standard error ~ sqrt(p/n) ~ 1e-4.
        assert!((w - mc).abs() < 5e-4, "{w} vs {mc}");
        // closed form for this triangle: Omega = pi/6 sr (a well-known octant split)
        let exact = solid_angle(a, b, c) / (4.0 * PI);
        assert!((exact - w).abs() < 1e-15);
    }

    #[test]
    fn on_surface_flag() {
        let soup = TriangleSoup::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(winding_triangles(&soup, [0.2, 0.2, 0.0]).near_surface);
        assert!(!winding_triangles(&soup, [2.0, 2.0, 0.0]).near_surface);
        assert!(!winding_triangles(&soup, [0.2, 0.2, 1e-6]).near_surface);
    }

    #[test]
    fn closed_polygon_winding() {
        let square = SegmentSoup::polyline(
            vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            true,
        );
        assert!((winding_segments(&square, [0.3, -0.2]).value - 1.0).abs() < 1e-12);
        assert!(winding_segments(&square, [3.0, 0.0]).value.abs() < 1e-12);
        assert!(winding_segments(&square, [1.0, 0.0]).near_surface);
    }

    #[test]
    fn additivity_over_partitions() {
        let s = icosphere([0.1, 0.0, -0.1], 0.4, 2);
        let (first, second): (Vec<_>, Vec<_>) =
            s.triangles.iter().enumerate().partition(|(i, _)| i % 3 == 0);
        let part = |tris: Vec<(usize, &[usize; 3])>| TriangleSoup {
            vertices: s.vertices.clone(),
            triangles: tris.into_iter().map(|(_, t)| *t).collect(),
        };
        let (a, b) = (part(first), part(second));
        for x in [[0.0, 0.0, 0.0], [0.3, 0.3, 0.3], [1.0, -2.0, 0.5]] {
            let whole = winding_triangles(&s, x).value;
            let sum = winding_triangles(&a, x).value + winding_triangles(&b, x).value;
            assert!((whole - sum).abs() < 1e-12);
        }
    }
}
