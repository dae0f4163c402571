use std::collections::HashMap;

use crate::error::{ensure_dim, Result};
use crate::geometry::TriangleSoup;

use super::grid::GridField;
use super::tables::{EDGE_TABLE, TRIANGLE_TABLE};

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Each cube edge as (offset of its lower lattice point, axis).
const EDGES: [([usize; 3], usize); 12] = [
    ([0, 0, 0], 0),
    ([1, 0, 0], 1),
    ([0, 1, 0], 0),
    ([0, 0, 0], 1),
    ([0, 0, 1], 0),
    ([1, 0, 1], 1),
    ([0, 1, 1], 0),
    ([0, 0, 1], 1),
    ([0, 0, 0], 2),
    ([1, 0, 0], 2),
    ([1, 1, 0], 2),
    ([0, 1, 0], 2),
];

/// Iso-surface of a 3D grid. Vertices shared by neighbouring cells are
/// merged, and faces are wound so their normals point toward increasing
/// values. Output order is fixed by the cell traversal (x fastest).
pub fn marching_cubes(grid: &GridField, iso: f64) -> Result<TriangleSoup> {
    ensure_dim(3, grid.dim())?;
    let values = grid.perturbed(iso);
    let [nx, ny, nz] = [grid.dims[0], grid.dims[1], grid.dims[2]];
    let lin = |p: [usize; 3]| p[0] + nx * (p[1] + ny * p[2]);

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut keys: HashMap<usize, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut cell_vertex = [0usize; 12];

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    if values[lin([i + off[0], j + off[1], k + off[2]])] < iso {
                        case |= 1 << c;
                    }
                }
                let mask = EDGE_TABLE[case];
                if mask == 0 {
                    continue;
                }
                for (e, &(off, axis)) in EDGES.iter().enumerate() {
                    if mask & (1 << e) == 0 {
                        continue;
                    }
                    let start = [i + off[0], j + off[1], k + off[2]];
                    let key = 3 * lin(start) + axis;
                    cell_vertex[e] = *keys.entry(key).or_insert_with(|| {
                        let mut end = start;
                        end[axis] += 1;
                        let (a, b) = (values[lin(start)], values[lin(end)]);
                        let t = (iso - a) / (b - a);
                        let mut p = [0.0; 3];
                        for d in 0..3 {
                            p[d] = grid.origin[d] + start[d] as f64 * grid.spacing[d];
                        }
                        p[axis] += t * grid.spacing[axis];
                        vertices.push(p);
                        vertices.len() - 1
                    });
                }
                for tri in TRIANGLE_TABLE[case].chunks(3) {
                    if tri[0] < 0 {
                        break;
                    }
                    // The table winds faces toward the low side; reverse them.
                    triangles.push([
                        cell_vertex[tri[0] as usize],
                        cell_vertex[tri[2] as usize],
                        cell_vertex[tri[1] as usize],
                    ]);
                }
            }
        }
    }
    TriangleSoup::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::grid::sample_grid;
    use crate::fieldops::{Aabb, ScalarField};
    use crate::geometry::Geometry;
    use crate::oracles::AnalyticSdf;
    use crate::vecmath::{dot3, norm3};
    use std::f64::consts::PI;

    fn sphere_mesh(res: usize) -> (TriangleSoup, f64) {
        let s = AnalyticSdf::sphere(vec![0.0; 3], 0.5).unwrap();
        let grid = sample_grid(&s, &Aabb::cube(3, 1.0), &[res; 3]).unwrap();
        (marching_cubes(&grid, 0.0).unwrap(), grid.spacing[0])
    }

    #[test]
    fn sphere_surface() {
        let (mesh, h) = sphere_mesh(128);
        for v in &mesh.vertices {
            assert!((norm3(*v) - 0.5).abs() <= h);
        }
        let area = mesh.total_area();
        let exact = 4.0 * PI * 0.25;
        assert!((area - exact).abs() <= 0.03 * exact, "{area}");
        assert_eq!(mesh.euler_characteristic(), 2);
        assert_eq!(mesh.component_count(), 1);
        // Normals follow the field gradient.
        let s = AnalyticSdf::sphere(vec![0.0; 3], 0.5).unwrap();
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.corners(t);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, (a[2] + b[2] + c[2]) / 3.0];
            let g = s.gradient(&centroid);
            assert!(dot3(mesh.face_normal(t), [g[0], g[1], g[2]]) > 0.0);
        }
        let w = Geometry::Triangles(mesh).winding(&[0.0; 3]).unwrap();
        assert!((w.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn torus_genus_one() {
        let t = AnalyticSdf::torus([0.0; 3], 0.5, 0.2).unwrap();
        let grid = sample_grid(&t, &Aabb::cube(3, 1.0), &[64; 3]).unwrap();
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        assert_eq!(mesh.euler_characteristic(), 0);
        for v in &mesh.vertices {
            assert!(t.value(v).abs() <= grid.cell_diagonal());
            assert!(grid.interpolate(v).abs() <= 1e-9);
        }
    }

    #[test]
    fn error_shrinks_with_resolution() {
        let err = |res| {
            let (mesh, _) = sphere_mesh(res);
            mesh.vertices
                .iter()
                .map(|v| (norm3(*v) - 0.5).abs())
                .fold(0.0, f64::max)
        };
        let (e32, e64) = (err(32), err(64));
        assert!(e64 <= 0.5 * e32, "{e32} {e64}");
    }

    #[test]
    fn empty_and_deterministic() {
        let s = AnalyticSdf::sphere(vec![0.0; 3], 0.5).unwrap();
        let grid = sample_grid(&s, &Aabb::cube(3, 1.0), &[16; 3]).unwrap();
        assert!(marching_cubes(&grid, -0.9).unwrap().triangles.is_empty());
        assert!(marching_cubes(&grid, 5.0).unwrap().triangles.is_empty());
        let a = marching_cubes(&grid, 0.0).unwrap();
        let b = marching_cubes(&grid, 0.0).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.triangles, b.triangles);
    }
}
