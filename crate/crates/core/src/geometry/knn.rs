use std::collections::HashMap;

use crate::error::{Error, Result};

/// Uniform-grid nearest-neighbor index over a fixed set of 2D or 3D points.
#[derive(Clone, Debug)]
pub struct KnnIndex {
    dim: usize,
    points: Vec<f64>,
    origin: [f64; 3],
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl KnnIndex {
    pub fn new(points: &[f64], dim: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) || points.len() % dim != 0 {
            return Err(Error::invalid("knn index expects flat 2D or 3D points"));
        }
        let n = points.len() / dim;
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..dim {
            lo[a] = f64::INFINITY;
            hi[a] = f64::NEG_INFINITY;
        }
        for p in points.chunks_exact(dim) {
            for a in 0..dim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        // About two points per occupied cell for surface-like distributions.
        let extent = (0..dim).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
        let per_axis = ((n as f64 / 2.0).powf(1.0 / (dim as f64 - 1.0).max(1.0))).max(1.0);
        let cell = if extent > 0.0 { extent / per_axis } else { 1.0 };
        let mut index = KnnIndex {
            dim,
            points: points.to_vec(),
            origin: lo,
            cell,
            cells: HashMap::new(),
        };
        for i in 0..n {
            let key = index.key(&points[i * dim..(i + 1) * dim]);
            index.cells.entry(key).or_default().push(i);
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn key(&self, p: &[f64]) -> [i64; 3] {
        let mut k = [0i64; 3];
        for a in 0..self.dim {
            k[a] = ((p[a] - self.origin[a]) / self.cell).floor() as i64;
        }
        k
    }

    /// The `k` nearest indexed points to `q` as `(index, distance)`, closest
    /// first; ties broken by index. `exclude` drops one index (the query itself).
    pub fn nearest(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        let d = self.dim;
        let available = self.len() - exclude.map_or(0, |e| usize::from(e < self.len()));
        let k = k.min(available);
        if k == 0 {
            return Vec::new();
        }
        let center = self.key(q);
        let mut found: Vec<(usize, f64)> = Vec::new();
        let mut ring = 0i64;
        loop {
            self.visit_shell(center, ring, |i| {
                if Some(i) == exclude {
                    return;
                }
                let p = &self.points[i * d..(i + 1) * d];
                let dist = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                found.push((i, dist));
            });
            if found.len() >= k {
                found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                // Every unvisited point is at least `ring * cell` away.
                if found[k - 1].1 <= ring as f64 * self.cell {
                    found.truncate(k);
                    return found;
                }
            }
            ring += 1;
        }
    }

    fn visit_shell(&self, c: [i64; 3], ring: i64, mut f: impl FnMut(usize)) {
        let zr = if self.dim == 3 { ring } else { 0 };
        for dz in -zr..=zr {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                        continue;
                    }
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        ids.iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3] {
            let pts: Vec<f64> = (0..600 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let index = KnnIndex::new(&pts, dim).unwrap();
            for _ in 0..50 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
                let got = index.nearest(&q, 8, None);
                let mut brute: Vec<(usize, f64)> = pts
                    .chunks_exact(dim)
                    .enumerate()
                    .map(|(i, p)| (i, p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()))
                    .collect();
                brute.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                brute.truncate(8);
                assert_eq!(got, brute);
            }
        }
    }

    #[test]
    fn excludes_self() {
        let pts = [0.0, 0.0, 1.0, 0.0, 3.0, 0.0];
        let index = KnnIndex::new(&pts, 2).unwrap();
        let got = index.nearest(&[0.0, 0.0], 5, Some(0));
        assert_eq!(got, vec![(1, 1.0), (2, 3.0)]);
    }
}
