use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{ensure_dim, Result};
use crate::raster::Image;

use super::grid::GridField;

/// Viridis control points, evenly spaced from 0 to 1.
pub const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// Colour for `t` in [0, 1] by linear interpolation between control points.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let mut c = [0u8; 3];
    for k in 0..3 {
        let (a, b) = (VIRIDIS[i][k] as f64, VIRIDIS[i + 1][k] as f64);
        c[k] = (a + f * (b - a)).round() as u8;
    }
    c
}

/// One pixel per grid point, top row at the largest second coordinate.
/// Values are mapped linearly from `range` (default: grid min/max); a
/// constant grid maps to the middle colour.
pub fn heatmap_image(grid: &GridField, range: Option<(f64, f64)>) -> Result<Image> {
    ensure_dim(2, grid.dim())?;
    let (lo, hi) = range.unwrap_or_else(|| grid.min_max());
    let (w, h) = (grid.dims[0], grid.dims[1]);
    let mut img = Image::new(w, h);
    for j in 0..h {
        for i in 0..w {
            let v = grid.at(&[i, j]);
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            img.set(i, h - 1 - j, colormap(t));
        }
    }
    Ok(img)
}

/// `x,y,value` rows in grid order.
pub fn grid_csv(grid: &GridField, w: impl Write) -> Result<()> {
    ensure_dim(2, grid.dim())?;
    let mut w = BufWriter::new(w);
    writeln!(w, "x,y,value")?;
    for j in 0..grid.dims[1] {
        for i in 0..grid.dims[0] {
            let p = grid.point(&[i, j]);
            writeln!(w, "{},{},{}", p[0], p[1], grid.at(&[i, j]))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the image (PNG or PPM by extension) and, if given, the raw CSV.
pub fn emit_heatmap(
    grid: &GridField,
    range: Option<(f64, f64)>,
    image_path: impl AsRef<Path>,
    csv_path: Option<&Path>,
) -> Result<()> {
    heatmap_image(grid, range)?.save(image_path)?;
    if let Some(p) = csv_path {
        grid_csv(grid, File::create(p)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::grid::sample_fn;
    use crate::fieldops::Aabb;

    #[test]
    fn constant_grid_is_uniform() {
        let g = sample_fn(&Aabb::cube(2, 1.0), &[7, 5], |_| 3.0).unwrap();
        let img = heatmap_image(&g, None).unwrap();
        let first = img.pixel(0, 0);
        assert!((0..5).all(|y| (0..7).all(|x| img.pixel(x, y) == first)));
    }

    #[test]
    fn endpoints_and_orientation() {
        assert_eq!(colormap(0.0), VIRIDIS[0]);
        assert_eq!(colormap(1.0), VIRIDIS[8]);
        assert_eq!(colormap(2.0), VIRIDIS[8]);
        let g = sample_fn(&Aabb::cube(2, 1.0), &[3, 3], |x| x[1]).unwrap();
        let img = heatmap_image(&g, None).unwrap();
        assert_eq!(img.pixel(0, 0), VIRIDIS[8]);
        assert_eq!(img.pixel(0, 2), VIRIDIS[0]);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = sample_fn(&Aabb::cube(2, 1.0), &[4, 4], |x| x[0] + x[1]).unwrap();
        let csv = dir.path().join("g.csv");
        emit_heatmap(&g, None, dir.path().join("g.ppm"), Some(&csv)).unwrap();
        let text = std::fs::read_to_string(csv).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("x,y,value\n-1,-1,-2\n"));
        let ppm = std::fs::read(dir.path().join("g.ppm")).unwrap();
        assert!(ppm.starts_with(b"P6\n4 4\n255\n"));
    }
}
