use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};

use super::areas::{estimate_areas, DEFAULT_AREA_NEIGHBORS};
use super::normalize::NormalizeTransform;
use super::shapes::Geometry;
use super::FieldMode;

pub const DEFAULT_TAU_IN: f64 = 0.6;
pub const DEFAULT_TAU_OUT: f64 = 0.4;

/// Half-width of the sampling domain `D = [-1, 1]^n` in normalized units.
pub const DOMAIN_HALF_WIDTH: f64 = 1.0;

const CHUNK: usize = 4096;

/// Labeled training points in normalized coordinates. Label `-1` is inside
/// (or on the geometry in unsigned mode), `+1` outside.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub dim: usize,
    pub points: Vec<f64>,
    pub labels: Vec<f64>,
    pub s_true: Option<Vec<f64>>,
    pub mode: FieldMode,
    /// Raw-to-normalized map of the source geometry.
    pub transform: NormalizeTransform,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    dim: usize,
    mode: FieldMode,
    transform: NormalizeTransform,
    inside: usize,
    outside: usize,
}

impl LabeledDataset {
    pub fn new(
        dim: usize,
        points: Vec<f64>,
        labels: Vec<f64>,
        s_true: Option<Vec<f64>>,
        mode: FieldMode,
    ) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::invalid(format!("dataset dimension must be 2 or 3, got {dim}")));
        }
        ensure_dim(labels.len() * dim, points.len())?;
        if let Some(s) = &s_true {
            ensure_dim(labels.len(), s.len())?;
        }
        if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::invalid("labels must be -1 or +1"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite dataset point"));
        }
        Ok(LabeledDataset {
            dim,
            points,
            labels,
            s_true,
            mode,
            transform: NormalizeTransform::identity(dim),
        })
    }

    pub fn with_transform(mut self, transform: NormalizeTransform) -> Result<Self> {
        ensure_dim(self.dim, transform.dim())?;
        self.transform = transform;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Indices with the given label, in dataset order.
    pub fn indices_with_label(&self, label: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn is_balanced(&self) -> bool {
        let inside = self.labels.iter().filter(|&&l| l < 0.0).count();
        2 * inside == self.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let axes = ["x", "y", "z"];
        out.push_str(&axes[..self.dim].join(","));
        out.push_str(",label");
        if self.s_true.is_some() {
            out.push_str(",s_true");
        }
        out.push('\n');
        for i in 0..self.len() {
            for v in self.point(i) {
                write!(out, "{v},").unwrap();
            }
            write!(out, "{}", self.labels[i] as i32).unwrap();
            if let Some(s) = &self.s_true {
                write!(out, ",{}", s[i]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Path of the JSON file stored next to a dataset CSV.
    pub fn sidecar_path(csv: &Path) -> PathBuf {
        csv.with_extension("json")
    }

    /// Writes the CSV and its JSON sidecar (dimension, mode, transform).
    pub fn save(&self, csv: impl AsRef<Path>) -> Result<()> {
        let csv = csv.as_ref();
        std::fs::write(csv, self.to_csv())?;
        let inside = self.labels.iter().filter(|&&l| l < 0.0).count();
        let side = Sidecar {
            dim: self.dim,
            mode: self.mode,
            transform: self.transform.clone(),
            inside,
            outside: self.len() - inside,
        };
        std::fs::write(Self::sidecar_path(csv), serde_json::to_string_pretty(&side)? + "\n")?;
        Ok(())
    }

    /// Reads a CSV written by [`LabeledDataset::save`]. Without a sidecar the
    /// dimension comes from the header and the mode defaults to signed.
    pub fn load(csv: impl AsRef<Path>) -> Result<Self> {
        let path = csv.as_ref();
        let text = std::fs::read_to_string(path)?;
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let dim = cols.iter().take_while(|c| ["x", "y", "z"].contains(c)).count();
        let has_s = cols.last() == Some(&"s_true");
        if !(dim == 2 || dim == 3) || cols.get(dim) != Some(&"label") {
            return Err(parse_err(1, format!("unexpected header `{header}`")));
        }
        let width = dim + 1 + usize::from(has_s);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut s_true = has_s.then(Vec::new);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(i + 1, e.to_string()))?;
            if vals.len() != width {
                return Err(parse_err(i + 1, format!("expected {width} columns, got {}", vals.len())));
            }
            points.extend_from_slice(&vals[..dim]);
            labels.push(vals[dim]);
            if let Some(s) = &mut s_true {
                s.push(vals[dim + 1]);
            }
        }
        let sidecar = Self::sidecar_path(path);
        let (mode, transform) = if sidecar.exists() {
            let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?;
            ensure_dim(dim, side.dim)?;
            (side.mode, side.transform)
        } else {
            (FieldMode::Signed, NormalizeTransform::identity(dim))
        };
        LabeledDataset::new(dim, points, labels, s_true, mode)?.with_transform(transform)
    }
}

fn uniform_in_domain(rng: &mut ChaCha8Rng, dim: usize, out: &mut Vec<f64>) {
    for _ in 0..dim {
        out.push(rng.random_range(-DOMAIN_HALF_WIDTH..DOMAIN_HALF_WIDTH));
    }
}

/// Rejection-samples `n` inside points (`w >= tau_in`, label -1) and `n`
/// outside points (`w <= tau_out`, label +1) uniformly in `D = [-1, 1]^n`.
///
/// Candidates are drawn in fixed-size chunks from one seeded stream and
/// classified in parallel, then consumed in draw order, so the result does not
/// depend on the thread count. Inside points come first in the output.
pub fn build_signed_dataset(
    geometry: &Geometry,
    n: usize,
    tau_in: f64,
    tau_out: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(tau_out < tau_in) {
        return Err(Error::invalid(format!(
            "tau_out ({tau_out}) must be below tau_in ({tau_in})"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("dataset size must be positive"));
    }
    let owned;
    let geometry = match geometry {
        Geometry::Cloud(c) if c.normals().is_none() => {
            return Err(Error::MissingProperty("normals (required for signed point-cloud labels)".into()))
        }
        Geometry::Cloud(c) if c.areas().is_none() => {
            owned = Geometry::Cloud(estimate_areas(c, DEFAULT_AREA_NEIGHBORS)?);
            &owned
        }
        g => g,
    };
    if geometry.is_empty() {
        return Err(Error::invalid("empty geometry"));
    }
    let dim = geometry.dim();
    let budget = 100 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = Vec::with_capacity(n * dim);
    let mut outside = Vec::with_capacity(n * dim);
    let (mut n_in, mut n_out, mut attempts) = (0, 0, 0);
    let mut candidates = Vec::with_capacity(CHUNK * dim);
    while (n_in < n || n_out < n) && attempts < budget {
        let count = CHUNK.min(budget - attempts);
        candidates.clear();
        for _ in 0..count {
            uniform_in_domain(&mut rng, dim, &mut candidates);
        }
        let windings: Vec<_> = candidates
            .par_chunks_exact(dim)
            .map(|x| geometry.winding(x))
            .collect::<Result<_>>()?;
        for (x, w) in candidates.chunks_exact(dim).zip(windings) {
            attempts += 1;
            if w.near_surface {
                continue;
            }
            if w.value >= tau_in && n_in < n {
                inside.extend_from_slice(x);
                n_in += 1;
            } else if w.value <= tau_out && n_out < n {
                outside.extend_from_slice(x);
                n_out += 1;
            }
            if n_in == n && n_out == n {
                break;
            }
        }
    }
    if n_in < n || n_out < n {
        let (class, got) = if n_in < n { ("inside", n_in) } else { ("outside", n_out) };
        return Err(Error::SamplingBudget {
            class,
            got,
            wanted: n,
            attempts: budget,
            tau_in,
            tau_out,
        });
    }
    let mut labels = vec![-1.0; n];
    labels.extend(std::iter::repeat_n(1.0, n));
    inside.extend(outside);
    LabeledDataset::new(dim, inside, labels, None, FieldMode::Signed)
}

/// `n` points on the geometry (label -1) followed by `n` uniform points in
/// `D` (label +1). Triangles and segments are picked proportionally to their
/// area or length; cloud points uniformly with replacement.
pub fn build_unsigned_dataset(geometry: &Geometry, n: usize, seed: u64) -> Result<LabeledDataset> {
    if geometry.is_empty() {
        return Err(Error::invalid("empty geometry"));
    }
    if n == 0 {
        return Err(Error::invalid("dataset size must be positive"));
    }
    let dim = geometry.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(2 * n * dim);
    match geometry {
        Geometry::Cloud(c) => {
            for _ in 0..n {
                let i = rng.random_range(0..c.len());
                points.extend_from_slice(c.point(i));
            }
        }
        Geometry::Triangles(s) => {
            let cdf = cumulative((0..s.triangles.len()).map(|t| s.triangle_area(t)))?;
            for _ in 0..n {
                let t = pick(&cdf, rng.random::<f64>());
                let [a, b, c] = s.corners(t);
                let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
                if u + v > 1.0 {
                    (u, v) = (1.0 - u, 1.0 - v);
                }
                for k in 0..3 {
                    points.push(a[k] + u * (b[k] - a[k]) + v * (c[k] - a[k]));
                }
            }
        }
        Geometry::Segments(s) => {
            let cdf = cumulative((0..s.segments.len()).map(|i| s.segment_length(i)))?;
            for _ in 0..n {
                let i = pick(&cdf, rng.random::<f64>());
                let [a, b] = s.segments[i];
                let (p, q) = (s.vertices[a], s.vertices[b]);
                let t: f64 = rng.random();
                points.extend([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
    }
    for _ in 0..n {
        uniform_in_domain(&mut rng, dim, &mut points);
    }
    let mut labels = vec![-1.0; n];
    labels.extend(std::iter::repeat_n(1.0, n));
    LabeledDataset::new(dim, points, labels, None, FieldMode::Unsigned)
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    let cdf: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if !(acc > 0.0) {
        return Err(Error::invalid("geometry has zero total measure"));
    }
    Ok(cdf.into_iter().map(|c| c / acc).collect())
}

fn pick(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{icosphere, SegmentSoup, TriangleSoup};

    #[test]
    fn icosphere_signed_labels() {
        let g = Geometry::Triangles(icosphere([0.0; 3], 0.5, 3));
        let ds = build_signed_dataset(&g, 1000, 0.6, 0.4, 7).unwrap();
        assert_eq!(ds.indices_with_label(-1.0).len(), 1000);
        assert_eq!(ds.indices_with_label(1.0).len(), 1000);
        for i in 0..ds.len() {
            let r = ds.point(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(ds.point(i).iter().all(|v| v.abs() <= 1.0));
            if ds.labels[i] < 0.0 {
                assert!(r < 0.5, "{r}");
            } else {
                // Facets lie inside the circumscribed sphere.
                assert!(r > 0.49, "{r}");
            }
        }
        assert_eq!(ds, build_signed_dataset(&g, 1000, 0.6, 0.4, 7).unwrap());
    }

    #[test]
    fn thresholds_validated() {
        let g = Geometry::Triangles(icosphere([0.0; 3], 0.5, 1));
        assert!(build_signed_dataset(&g, 10, 0.4, 0.6, 0).is_err());
        assert!(build_signed_dataset(&g, 10, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn budget_error_names_class() {
        // A tiny sphere cannot supply inside points within 100 N attempts.
        let g = Geometry::Triangles(icosphere([0.0; 3], 0.01, 1));
        match build_signed_dataset(&g, 50, 0.6, 0.4, 1) {
            Err(Error::SamplingBudget { class, .. }) => assert_eq!(class, "inside"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unsigned_on_triangle_plane() {
        let s = TriangleSoup::new(
            vec![[0.0, 0.0, 0.1], [0.3, 0.0, 0.1], [0.0, 0.4, 0.1]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let ds = build_unsigned_dataset(&Geometry::Triangles(s), 500, 3).unwrap();
        for i in ds.indices_with_label(-1.0) {
            let p = ds.point(i);
            assert!((p[2] - 0.1).abs() < 1e-12);
            assert!(p[0] >= -1e-12 && p[1] >= -1e-12 && p[0] / 0.3 + p[1] / 0.4 <= 1.0 + 1e-12);
        }
        assert!(ds.is_balanced());
    }

    #[test]
    fn unsigned_area_weighting_binomial() {
        // Two disjoint triangles with areas 1 and 3.
        let s = TriangleSoup::new(
            vec![
                [0.0, 0.0, 0.0],
                [2.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [2.0, 0.0, 1.0],
                [0.0, 3.0, 1.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let n = 10_000;
        let ds = build_unsigned_dataset(&Geometry::Triangles(s), n, 9).unwrap();
        let on_second = ds
            .indices_with_label(-1.0)
            .into_iter()
            .filter(|&i| ds.point(i)[2] == 1.0)
            .count() as f64;
        let sd = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((on_second - 0.75 * n as f64).abs() < 4.0 * sd, "{on_second}");
    }

    #[test]
    fn csv_roundtrip() {
        let g = Geometry::Segments(SegmentSoup::polyline(vec![[-0.3, 0.0], [0.3, 0.1]], false));
        let mut ds = build_unsigned_dataset(&g, 20, 5).unwrap();
        ds.s_true = Some((0..40).map(|i| i as f64 * 0.1 - 1.0 / 3.0).collect());
        let ds = ds
            .with_transform(NormalizeTransform::new(vec![1.0, 2.0], 0.5).unwrap())
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        ds.save(&path).unwrap();
        assert_eq!(LabeledDataset::load(&path).unwrap(), ds);
    }
}
