use std::collections::HashMap;

use crate::error::{ensure_dim, Error, Result};
use crate::vecmath::{cross3, norm3, scale3, sub3};

use super::normalize::NormalizeTransform;

/// Indexed triangles in 3D. No manifoldness or orientation consistency is assumed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleSoup {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleSoup {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::invalid(format!(
                "triangle {t:?} references a vertex beyond {n}"
            )));
        }
        Ok(TriangleSoup {
            vertices,
            triangles,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized normal `(b - a) x (c - a)`, twice the area in length.
    pub fn face_normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.corners(t);
        cross3(sub3(b, a), sub3(c, a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * norm3(self.face_normal(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Unique undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len()
    }

    /// `V - E + F` counting only vertices referenced by a triangle.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Number of connected components over shared vertices.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2])] {
                let (a, b) = (find(&mut parent, e.0), find(&mut parent, e.1));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut roots = std::collections::HashSet::new();
        for t in &self.triangles {
            roots.insert(find(&mut parent, t[0]));
        }
        roots.len()
    }

    /// Reverses the orientation of every triangle.
    pub fn flip(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }
}

/// Indexed segments in 2D (open or closed curves).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentSoup {
    pub vertices: Vec<[f64; 2]>,
    pub segments: Vec<[usize; 2]>,
}

impl SegmentSoup {
    pub fn new(vertices: Vec<[f64; 2]>, segments: Vec<[usize; 2]>) -> Result<Self> {
        let n = vertices.len();
        if segments.iter().any(|s| s[0] >= n || s[1] >= n) {
            return Err(Error::invalid("segment references a missing vertex"));
        }
        Ok(SegmentSoup { vertices, segments })
    }

    /// Chain of consecutive vertices; `closed` adds the last-to-first segment.
    pub fn polyline(points: Vec<[f64; 2]>, closed: bool) -> Self {
        let n = points.len();
        let mut segments: Vec<[usize; 2]> = (1..n).map(|i| [i - 1, i]).collect();
        if closed && n > 2 {
            segments.push([n - 1, 0]);
        }
        SegmentSoup {
            vertices: points,
            segments,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segment_length(&self, s: usize) -> f64 {
        let [a, b] = self.segments[s];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    pub fn total_length(&self) -> f64 {
        (0..self.segments.len()).map(|s| self.segment_length(s)).sum()
    }
}

/// Points in 2D or 3D with optional unit normals and per-point area weights.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedPointCloud {
    dim: usize,
    points: Vec<f64>,
    normals: Option<Vec<f64>>,
    areas: Option<Vec<f64>>,
}

impl OrientedPointCloud {
    /// `points` and `normals` are flat with `dim` values per point. Normals are
    /// rescaled to unit length; zero normals are rejected.
    pub fn new(dim: usize, points: Vec<f64>, normals: Option<Vec<f64>>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::invalid(format!("point cloud dimension must be 2 or 3, got {dim}")));
        }
        ensure_dim(0, points.len() % dim)?;
        let normals = match normals {
            Some(mut n) => {
                ensure_dim(points.len(), n.len())?;
                for v in n.chunks_exact_mut(dim) {
                    let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if !(len > 0.0 && len.is_finite()) {
                        return Err(Error::invalid("zero or non-finite normal"));
                    }
                    v.iter_mut().for_each(|c| *c /= len);
                }
                Some(n)
            }
            None => None,
        };
        Ok(OrientedPointCloud {
            dim,
            points,
            normals,
            areas: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn normals(&self) -> Option<&[f64]> {
        self.normals.as_deref()
    }

    pub fn normal(&self, i: usize) -> Option<&[f64]> {
        self.normals
            .as_ref()
            .map(|n| &n[i * self.dim..(i + 1) * self.dim])
    }

    pub fn areas(&self) -> Option<&[f64]> {
        self.areas.as_deref()
    }

    pub fn set_areas(&mut self, areas: Vec<f64>) -> Result<()> {
        ensure_dim(self.len(), areas.len())?;
        if areas.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::invalid("areas must be non-negative"));
        }
        self.areas = Some(areas);
        Ok(())
    }

    pub fn with_areas(mut self, areas: Vec<f64>) -> Result<Self> {
        self.set_areas(areas)?;
        Ok(self)
    }

    /// Negates every normal.
    pub fn flip_normals(&mut self) {
        if let Some(n) = &mut self.normals {
            n.iter_mut().for_each(|v| *v = -*v);
        }
    }

    /// Keeps the points whose index satisfies `keep`; areas are dropped since
    /// they depend on the neighborhood.
    pub fn retain_indices(&self, keep: impl Fn(usize) -> bool) -> Self {
        let d = self.dim;
        let mut points = Vec::new();
        let mut normals = self.normals.as_ref().map(|_| Vec::new());
        for i in 0..self.len() {
            if keep(i) {
                points.extend_from_slice(self.point(i));
                if let (Some(out), Some(n)) = (&mut normals, &self.normals) {
                    out.extend_from_slice(&n[i * d..(i + 1) * d]);
                }
            }
        }
        OrientedPointCloud {
            dim: d,
            points,
            normals,
            areas: None,
        }
    }

    pub(crate) fn points_mut(&mut self) -> &mut Vec<f64> {
        &mut self.points
    }
}

/// Any supported input geometry.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Triangles(TriangleSoup),
    Segments(SegmentSoup),
    Cloud(OrientedPointCloud),
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Triangles(_) => 3,
            Geometry::Segments(_) => 2,
            Geometry::Cloud(c) => c.dim(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Geometry::Triangles(s) => s.is_empty(),
            Geometry::Segments(s) => s.is_empty(),
            Geometry::Cloud(c) => c.is_empty(),
        }
    }

    /// Coordinates of every vertex/point, flat.
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            Geometry::Triangles(s) => s.vertices.iter().flatten().copied().collect(),
            Geometry::Segments(s) => s.vertices.iter().flatten().copied().collect(),
            Geometry::Cloud(c) => c.points().to_vec(),
        }
    }

    /// Applies `t` to every coordinate. Point-cloud areas scale with the
    /// transform (`scale^2` in 3D, `scale` in 2D); normals are unchanged.
    pub fn transform(&mut self, t: &NormalizeTransform) -> Result<()> {
        ensure_dim(self.dim(), t.dim())?;
        match self {
            Geometry::Triangles(s) => {
                for v in &mut s.vertices {
                    let p = t.apply(v);
                    *v = [p[0], p[1], p[2]];
                }
            }
            Geometry::Segments(s) => {
                for v in &mut s.vertices {
                    let p = t.apply(v);
                    *v = [p[0], p[1]];
                }
            }
            Geometry::Cloud(c) => {
                let factor = t.scale.powi(c.dim() as i32 - 1);
                t.apply_all(c.points_mut())?;
                if let Some(a) = &mut c.areas {
                    a.iter_mut().for_each(|v| *v *= factor);
                }
            }
        }
        Ok(())
    }

    /// Fits a [`NormalizeTransform`] to the bounding box and applies it.
    pub fn normalize(mut self) -> Result<(Geometry, NormalizeTransform)> {
        if self.is_empty() {
            return Err(Error::invalid("cannot normalize empty geometry"));
        }
        let t = NormalizeTransform::fit(&self.coordinates(), self.dim())?;
        self.transform(&t)?;
        Ok((self, t))
    }
}

/// Subdivided icosahedron of the given radius, outward-oriented.
/// `subdivisions = 3` gives 1280 faces.
pub fn icosphere(center: [f64; 3], radius: f64, subdivisions: u32) -> TriangleSoup {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let unit = |v: [f64; 3]| scale3(v, 1.0 / norm3(v));
    for v in &mut verts {
        *v = unit(*v);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&i) = cache.get(&key) {
                return i;
            }
            let (p, q) = (verts[a], verts[b]);
            let m = unit([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]);
            verts.push(m);
            cache.insert(key, verts.len() - 1);
            verts.len() - 1
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts
        .into_iter()
        .map(|v| {
            [
                center[0] + radius * v[0],
                center[1] + radius * v[1],
                center[2] + radius * v[2],
            ]
        })
        .collect();
    TriangleSoup {
        vertices,
        triangles: faces,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecmath::dot3;

    #[test]
    fn icosphere_is_closed_and_outward() {
        let s = icosphere([0.0; 3], 0.5, 3);
        assert_eq!(s.triangles.len(), 1280);
        assert_eq!(s.euler_characteristic(), 2);
        assert_eq!(s.component_count(), 1);
        for t in 0..s.triangles.len() {
            let [a, b, c] = s.corners(t);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, (a[2] + b[2] + c[2]) / 3.0];
            assert!(dot3(s.face_normal(t), centroid) > 0.0);
        }
    }

    #[test]
    fn cloud_normals_become_unit() {
        let c = OrientedPointCloud::new(2, vec![0.0, 0.0, 1.0, 1.0], Some(vec![3.0, 4.0, 0.0, -2.0])).unwrap();
        assert_eq!(c.normal(0).unwrap(), &[0.6, 0.8]);
        assert_eq!(c.normal(1).unwrap(), &[0.0, -1.0]);
        assert!(OrientedPointCloud::new(2, vec![0.0, 0.0], Some(vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn bad_indices() {
        assert!(TriangleSoup::new(vec![[0.0; 3]; 2], vec![[0, 1, 2]]).is_err());
    }
}
