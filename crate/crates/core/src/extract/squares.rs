use std::collections::HashMap;

use crate::error::{ensure_dim, Result};
use crate::geometry::Polyline;

use super::grid::GridField;

/// Iso-contours of a 2D grid as polylines, oriented with lower values on
/// the left (counter-clockwise around regions below `iso`). Saddle cells are
/// split by the average of their four corners.
pub fn marching_squares(grid: &GridField, iso: f64) -> Result<Vec<Polyline>> {
    ensure_dim(2, grid.dim())?;
    let values = grid.perturbed(iso);
    let (nx, ny) = (grid.dims[0], grid.dims[1]);
    let v = |i: usize, j: usize| values[i + nx * j];

    // Edge keys: 2 * lattice index + axis, with the edge starting at that point.
    let mut positions: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut vertex = |i: usize, j: usize, axis: usize| -> usize {
        let key = 2 * (i + nx * j) + axis;
        positions.entry(key).or_insert_with(|| {
            let (i2, j2) = if axis == 0 { (i + 1, j) } else { (i, j + 1) };
            let (a, b) = (v(i, j), v(i2, j2));
            let t = (iso - a) / (b - a);
            let p = grid.point(&[i, j]);
            let mut q = p.clone();
            q[axis] += t * grid.spacing[axis];
            [q[0], q[1]]
        });
        key
    };

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // Counter-clockwise corners and the edges leaving them.
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let inside: Vec<bool> = corners.iter().map(|&(a, b)| v(a, b) < iso).collect();
            let mut crossings: Vec<(usize, bool)> = Vec::with_capacity(4);
            for e in 0..4 {
                if inside[e] != inside[(e + 1) % 4] {
                    // Edge e joins corner e and e + 1; store as (start, axis).
                    let (start, axis) = match e {
                        0 => ((i, j), 0),
                        1 => ((i + 1, j), 1),
                        2 => ((i, j + 1), 0),
                        _ => ((i, j), 1),
                    };
                    let key = vertex(start.0, start.1, axis);
                    // Leaving the region below iso when walking counter-clockwise.
                    crossings.push((key, inside[e]));
                }
            }
            match crossings.len() {
                0 => {}
                2 => {
                    let (a, b) = if crossings[0].1 {
                        (crossings[0].0, crossings[1].0)
                    } else {
                        (crossings[1].0, crossings[0].0)
                    };
                    segments.push((a, b));
                }
                _ => {
                    let center = corners.iter().map(|&(a, b)| v(a, b)).sum::<f64>() / 4.0;
                    let joined = center < iso;
                    for (k, &(key, leaving)) in crossings.iter().enumerate() {
                        if !leaving {
                            continue;
                        }
                        let other = if joined { (k + 1) % 4 } else { (k + 3) % 4 };
                        segments.push((key, crossings[other].0));
                    }
                }
            }
        }
    }
    Ok(chain(&segments, &positions))
}

fn chain(segments: &[(usize, usize)], positions: &HashMap<usize, [f64; 2]>) -> Vec<Polyline> {
    let mut next: HashMap<usize, usize> = HashMap::with_capacity(segments.len());
    let mut has_incoming: HashMap<usize, bool> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        next.insert(a, s);
        has_incoming.insert(b, true);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start: usize, used: &mut Vec<bool>| -> Polyline {
        let mut keys = vec![segments[start].0];
        let mut s = start;
        let closed = loop {
            used[s] = true;
            let end = segments[s].1;
            match next.get(&end) {
                Some(&n) if !used[n] => {
                    keys.push(end);
                    s = n;
                }
                Some(_) if end == keys[0] => break true,
                _ => {
                    keys.push(end);
                    break false;
                }
            }
        };
        Polyline {
            points: keys.iter().map(|k| positions[k]).collect(),
            closed,
        }
    };
    // Open chains start where nothing flows in.
    for s in 0..segments.len() {
        if !used[s] && !has_incoming.contains_key(&segments[s].0) {
            out.push(walk(s, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(walk(s, &mut used));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::grid::{sample_fn, sample_grid};
    use crate::fieldops::Aabb;
    use crate::geometry::{polylines_to_segments, winding_segments};
    use crate::oracles::AnalyticSdf;
    use std::f64::consts::PI;

    #[test]
    fn circle_contour() {
        let circle = AnalyticSdf::sphere(vec![0.0, 0.0], 0.5).unwrap();
        let grid = sample_grid(&circle, &Aabb::cube(2, 1.0), &[256, 256]).unwrap();
        let lines = marching_squares(&grid, 0.0).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        let h = grid.spacing[0];
        for p in &lines[0].points {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 0.5).abs() <= h);
            assert!(grid.interpolate(p).abs() <= 1e-9);
        }
        let len: f64 = lines.iter().map(Polyline::length).sum();
        assert!((len - PI).abs() <= 0.02 * PI, "{len}");
        // Counter-clockwise around the inside.
        let soup = polylines_to_segments(&lines);
        assert!((winding_segments(&soup, [0.0, 0.0]).value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn below_minimum_is_empty() {
        let circle = AnalyticSdf::sphere(vec![0.0, 0.0], 0.5).unwrap();
        let grid = sample_grid(&circle, &Aabb::cube(2, 1.0), &[32, 32]).unwrap();
        assert!(marching_squares(&grid, -0.6).unwrap().is_empty());
    }

    #[test]
    fn negated_field_same_vertices() {
        let circle = AnalyticSdf::sphere(vec![0.1, 0.0], 0.4).unwrap();
        let b = Aabb::cube(2, 1.0);
        let g = sample_grid(&circle, &b, &[40, 40]).unwrap();
        let n = sample_fn(&b, &[40, 40], |x| -circle.eval(x)).unwrap();
        let collect = |lines: Vec<Polyline>| {
            let mut pts: Vec<(u64, u64)> = lines
                .iter()
                .flat_map(|l| l.points.iter().map(|p| (p[0].to_bits(), p[1].to_bits())))
                .collect();
            pts.sort();
            pts
        };
        assert_eq!(
            collect(marching_squares(&g, 0.0).unwrap()),
            collect(marching_squares(&n, 0.0).unwrap())
        );
    }

    #[test]
    fn saddle_resolution() {
        // Corners (0,0) and (1,1) low, center high: two separate corner cuts.
        let grid = GridField::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 2], vec![-1.0, 2.0, 2.0, -1.0]).unwrap();
        let lines = marching_squares(&grid, 0.0).unwrap();
        assert_eq!(lines.len(), 2);
        // Center low: the diagonal is connected, cuts separate the high corners.
        let grid = GridField::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 2], vec![-3.0, 1.0, 1.0, -3.0]).unwrap();
        let lines = marching_squares(&grid, 0.0).unwrap();
        assert_eq!(lines.len(), 2);
        for l in &lines {
            let [a, b] = [l.points[0], l.points[1]];
            // Each segment cuts off one of the high corners (1,0) or (0,1).
            let near_10 = a[0] >= 0.5 && b[0] >= 0.5 && a[1] <= 0.5 && b[1] <= 0.5;
            let near_01 = a[0] <= 0.5 && b[0] <= 0.5 && a[1] >= 0.5 && b[1] >= 0.5;
            assert!(near_10 || near_01, "{l:?}");
        }
    }
}
