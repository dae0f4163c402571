//! Readers for OBJ, ASCII PLY and XYZ files, and OBJ writers.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::shapes::{Geometry, OrientedPointCloud, SegmentSoup, TriangleSoup};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryFormat {
    Obj,
    Ply,
    Xyz,
}

impl GeometryFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        ext.parse()
    }
}

impl FromStr for GeometryFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "obj" => Ok(GeometryFormat::Obj),
            "ply" => Ok(GeometryFormat::Ply),
            "xyz" | "pts" | "txt" => Ok(GeometryFormat::Xyz),
            other => Err(Error::invalid(format!("unknown geometry format `{other}`"))),
        }
    }
}

/// Loads a file, inferring the format from the extension when `format` is `None`.
pub fn load_geometry(path: impl AsRef<Path>, format: Option<GeometryFormat>) -> Result<Geometry> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => GeometryFormat::from_path(path)?,
    };
    let text = std::fs::read_to_string(path)?;
    match format {
        GeometryFormat::Obj => parse_obj(&text, path),
        GeometryFormat::Ply => parse_ply(&text, path),
        GeometryFormat::Xyz => parse_xyz(&text, path),
    }
}

fn perr(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn floats(tokens: &[&str], path: &Path, line: usize) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(path, line, format!("invalid number `{t}`")))
        })
        .collect()
}

fn obj_index(token: &str, count: usize, path: &Path, line: usize) -> Result<usize> {
    let first = token.split('/').next().unwrap_or("");
    let raw: i64 = first
        .parse()
        .map_err(|_| perr(path, line, format!("invalid index `{token}`")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= count {
        return Err(perr(path, line, format!("index {raw} out of range ({count} vertices so far)")));
    }
    Ok(idx as usize)
}

/// Faces become a triangle soup (polygons fan-triangulated). A file with only
/// `l` elements becomes a 2D segment soup using the x and y coordinates.
pub fn parse_obj(text: &str, path: &Path) -> Result<Geometry> {
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles = Vec::new();
    let mut segments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens.first().copied() {
            Some("v") => {
                let v = floats(&tokens[1..], path, line)?;
                match v.len() {
                    2 => vertices.push([v[0], v[1], 0.0]),
                    3 | 4 | 6 | 7 => vertices.push([v[0], v[1], v[2]]),
                    n => return Err(perr(path, line, format!("vertex with {n} coordinates"))),
                }
            }
            Some("f") => {
                let idx: Vec<usize> = tokens[1..]
                    .iter()
                    .map(|t| obj_index(t, vertices.len(), path, line))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(perr(path, line, "face with fewer than 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            Some("l") => {
                let idx: Vec<usize> = tokens[1..]
                    .iter()
                    .map(|t| obj_index(t, vertices.len(), path, line))
                    .collect::<Result<_>>()?;
                if idx.len() < 2 {
                    return Err(perr(path, line, "line element with fewer than 2 vertices"));
                }
                segments.extend(idx.windows(2).map(|w| [w[0], w[1]]));
            }
            _ => {}
        }
    }
    if !triangles.is_empty() {
        Ok(Geometry::Triangles(TriangleSoup::new(vertices, triangles)?))
    } else if !segments.is_empty() {
        let v2 = vertices.iter().map(|v| [v[0], v[1]]).collect();
        Ok(Geometry::Segments(SegmentSoup::new(v2, segments)?))
    } else {
        Err(perr(path, text.lines().count().max(1), "no faces or line elements"))
    }
}

/// ASCII PLY. A vertex element with x, y, z and optional nx, ny, nz gives a
/// point cloud; a nonempty face element gives a triangle soup instead.
pub fn parse_ply(text: &str, path: &Path) -> Result<Geometry> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(perr(path, 1, "missing `ply` magic")),
    }
    struct Element {
        name: String,
        count: usize,
        props: Vec<String>,
        list: bool,
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut header_end = 0;
    for (i, raw) in lines.by_ref() {
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(perr(path, i + 1, format!("unsupported PLY format `{fmt}`")))
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| perr(path, i + 1, "invalid element count"))?,
                props: Vec::new(),
                list: false,
            }),
            ["property", "list", .., name] => {
                let e = elements
                    .last_mut()
                    .ok_or_else(|| perr(path, i + 1, "property before element"))?;
                e.props.push(name.to_string());
                e.list = true;
            }
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| perr(path, i + 1, "property before element"))?
                .props
                .push(name.to_string()),
            ["end_header"] => {
                header_end = i + 1;
                break;
            }
            _ => {}
        }
    }
    if header_end == 0 {
        return Err(perr(path, text.lines().count(), "missing end_header"));
    }
    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| Error::MissingProperty("element vertex".into()))?;
    let col = |name: &str| vertex.props.iter().position(|p| p == name);
    let mut xyz = [0usize; 3];
    for (k, name) in ["x", "y", "z"].iter().enumerate() {
        xyz[k] = col(name).ok_or_else(|| Error::MissingProperty((*name).into()))?;
    }
    let normal_cols: Vec<Option<usize>> = ["nx", "ny", "nz"].iter().map(|n| col(n)).collect();
    let has_normals = normal_cols.iter().any(Option::is_some);
    if has_normals {
        if let Some(k) = normal_cols.iter().position(Option::is_none) {
            return Err(Error::MissingProperty(["nx", "ny", "nz"][k].into()));
        }
    }

    let mut body = lines.filter(|(_, l)| !l.trim().is_empty());
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut vertices3 = Vec::new();
    let mut triangles = Vec::new();
    for e in &elements {
        for _ in 0..e.count {
            let (i, raw) = body
                .next()
                .ok_or_else(|| perr(path, text.lines().count(), format!("truncated `{}` element", e.name)))?;
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            if e.name == "vertex" {
                let vals = floats(&tokens, path, i + 1)?;
                if vals.len() < e.props.len() {
                    return Err(perr(path, i + 1, "too few vertex properties"));
                }
                let p = [vals[xyz[0]], vals[xyz[1]], vals[xyz[2]]];
                points.extend(p);
                vertices3.push(p);
                if has_normals {
                    normals.extend(normal_cols.iter().map(|c| vals[c.unwrap()]));
                }
            } else if e.name == "face" && e.list {
                let ids: Vec<usize> = tokens
                    .iter()
                    .map(|t| t.parse::<usize>().map_err(|_| perr(path, i + 1, "invalid face index")))
                    .collect::<Result<_>>()?;
                let n = *ids.first().ok_or_else(|| perr(path, i + 1, "empty face"))?;
                if ids.len() < n + 1 || n < 3 {
                    return Err(perr(path, i + 1, "malformed face"));
                }
                for k in 1..n - 1 {
                    triangles.push([ids[1], ids[k + 1], ids[k + 2]]);
                }
            }
        }
    }
    if !triangles.is_empty() {
        return Ok(Geometry::Triangles(TriangleSoup::new(vertices3, triangles)?));
    }
    let cloud = OrientedPointCloud::new(3, points, has_normals.then_some(normals))?;
    Ok(Geometry::Cloud(cloud))
}

/// Whitespace-separated rows: `x y z [nx ny nz]` or, for 2D, `x y [nx ny]`.
/// Two- and four-column rows are read as 2D; the column count must be uniform.
pub fn parse_xyz(text: &str, path: &Path) -> Result<Geometry> {
    let mut width = None;
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        let row = floats(&tokens, path, i + 1)?;
        match width {
            None if [2, 3, 4, 6].contains(&row.len()) => width = Some(row.len()),
            None => return Err(perr(path, i + 1, format!("rows must have 2, 3, 4 or 6 columns, got {}", row.len()))),
            Some(w) if w != row.len() => {
                return Err(perr(path, i + 1, format!("expected {w} columns, got {}", row.len())))
            }
            _ => {}
        }
        values.push(row);
    }
    let width = width.ok_or_else(|| perr(path, 1, "no points"))?;
    let (dim, with_normals) = match width {
        2 => (2, false),
        3 => (3, false),
        4 => (2, true),
        _ => (3, true),
    };
    let points = values.iter().flat_map(|r| r[..dim].to_vec()).collect();
    let normals = with_normals.then(|| values.iter().flat_map(|r| r[dim..].to_vec()).collect());
    Ok(Geometry::Cloud(OrientedPointCloud::new(dim, points, normals)?))
}

pub fn mesh_to_obj(soup: &TriangleSoup) -> String {
    let mut out = String::new();
    for v in &soup.vertices {
        writeln!(out, "v {} {} {}", v[0], v[1], v[2]).unwrap();
    }
    for t in &soup.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    out
}

pub fn write_obj_mesh(soup: &TriangleSoup, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_obj(soup))?;
    Ok(())
}

/// Polylines as OBJ `l` elements with `z = 0`. A closed polyline repeats its
/// first vertex index at the end.
pub fn polylines_to_obj(lines: &[Polyline]) -> String {
    let mut out = String::new();
    let mut base = 1;
    for pl in lines {
        for p in &pl.points {
            writeln!(out, "v {} {} 0", p[0], p[1]).unwrap();
        }
        let mut idx: Vec<String> = (0..pl.points.len()).map(|i| (base + i).to_string()).collect();
        if pl.closed {
            idx.push(base.to_string());
        }
        if idx.len() >= 2 {
            writeln!(out, "l {}", idx.join(" ")).unwrap();
        }
        base += pl.points.len();
    }
    out
}

pub fn write_obj_polylines(lines: &[Polyline], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, polylines_to_obj(lines))?;
    Ok(())
}

/// A chain of 2D points, optionally closed.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let n = self.points.len();
        let seg = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let open: f64 = self.points.windows(2).map(|w| seg(w[0], w[1])).sum();
        if self.closed && n > 1 {
            open + seg(self.points[n - 1], self.points[0])
        } else {
            open
        }
    }
}

/// Collects polylines into a single segment soup.
pub fn polylines_to_segments(lines: &[Polyline]) -> SegmentSoup {
    let mut soup = SegmentSoup::default();
    for pl in lines {
        let base = soup.vertices.len();
        let n = pl.points.len();
        soup.vertices.extend_from_slice(&pl.points);
        soup.segments.extend((1..n).map(|i| [base + i - 1, base + i]));
        if pl.closed && n > 2 {
            soup.segments.push([base + n - 1, base]);
        }
    }
    soup
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn obj_single_triangle() {
        let g = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n", p()).unwrap();
        match g {
            Geometry::Triangles(s) => {
                assert_eq!(s.vertices.len(), 3);
                assert_eq!(s.triangles, vec![[0, 1, 2]]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn obj_quad_and_negative_indices() {
        let g = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n", p()).unwrap();
        let Geometry::Triangles(s) = g else { panic!() };
        assert_eq!(s.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_errors_carry_line() {
        match parse_obj("v 0 0 0\nf 1 2 3\n", p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn obj_polyline_roundtrip() {
        let lines = vec![Polyline {
            points: vec![[0.0, 0.0], [1.0, 0.5], [0.25, 1.0]],
            closed: true,
        }];
        let g = parse_obj(&polylines_to_obj(&lines), p()).unwrap();
        assert_eq!(g, Geometry::Segments(polylines_to_segments(&lines)));
    }

    #[test]
    fn xyz_rows() {
        let g = parse_xyz("0 0 0 0 0 1\n1 1 1 0 1 0\n", p()).unwrap();
        let Geometry::Cloud(c) = g else { panic!() };
        assert_eq!(c.len(), 2);
        assert_eq!(c.normal(1).unwrap(), &[0.0, 1.0, 0.0]);
        assert!(parse_xyz("0 0 0\n1 1\n", p()).is_err());
    }

    #[test]
    fn ply_missing_nz() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n\
                    property float z\nproperty float nx\nproperty float ny\nend_header\n0 0 0 1 0\n";
        match parse_ply(text, p()) {
            Err(Error::MissingProperty(name)) => assert_eq!(name, "nz"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ply_with_normals() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n\
                    property float z\nproperty float nx\nproperty float ny\nproperty float nz\n\
                    end_header\n0 0 0 0 0 2\n1 2 3 1 0 0\n";
        let Geometry::Cloud(c) = parse_ply(text, p()).unwrap() else { panic!() };
        assert_eq!(c.point(1), &[1.0, 2.0, 3.0]);
        assert_eq!(c.normal(0).unwrap(), &[0.0, 0.0, 1.0]);
    }
}
