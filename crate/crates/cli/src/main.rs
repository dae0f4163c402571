//! `lipsdf`: label geometry, train 1-Lipschitz distance fields, and query them.
//!
//! Exit codes: 0 success (or audit pass), 1 audit failure, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lipsdf::extract::{
    emit_heatmap, grid_csv, marching_cubes, marching_squares, sample_gradient_norm, sample_grid, SliceField,
};
use lipsdf::fieldops::{
    audit_lipschitz, audit_underestimation, csg_difference, csg_intersect, csg_union, medial_axis_sample, project,
    render, Camera, GradientSource, MedialOptions, ProjectOptions, RenderOptions, Shading, StepMode, SurfaceMesh,
};
use lipsdf::geometry::io::{write_obj_mesh, write_obj_polylines};
use lipsdf::geometry::{
    build_signed_dataset, build_unsigned_dataset, corrupt, load_geometry, polylines_to_segments, Corruption,
    FieldMode, Geometry, LabeledDataset, Polyline, TriangleSoup,
};
use lipsdf::oracles::AnalyticSdf;
use lipsdf::trainer::{train, LossKind, TrainConfig};
use lipsdf::{Aabb, Error, FieldHandle, LipNet, Result, ScalarField};

/// Tolerance on every unit-bound check.
const UNIT_SLACK: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "lipsdf", version, about = "Provably 1-Lipschitz neural distance fields")]
struct Cli {
    /// Worker threads (default: all cores). Affects wall time only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample labeled training points around a mesh, polyline or point cloud.
    Label(LabelArgs),
    /// Train a network on a labeled dataset.
    Train(TrainArgs),
    /// Extract level sets as OBJ (triangles in 3D, polylines in 2D).
    Extract(ExtractArgs),
    /// Sphere-trace an image of a 3D field.
    Render(RenderArgs),
    /// Check a field against its guarantees.
    Audit(AuditArgs),
    /// Project points onto the zero level set or sample the medial axis.
    Query(QueryArgs),
    /// Combine two fields and extract or render the result.
    Csg(CsgArgs),
}

#[derive(Args)]
struct LabelArgs {
    /// OBJ, ASCII PLY or XYZ file.
    input: PathBuf,
    #[arg(long, default_value = "signed")]
    mode: FieldMode,
    /// Points per label.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Winding number at or above which a point is inside.
    #[arg(long, default_value_t = 0.6)]
    tau_in: f64,
    /// Winding number at or below which a point is outside.
    #[arg(long, default_value_t = 0.4)]
    tau_out: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian noise on point-cloud positions.
    #[arg(long)]
    noise: Option<f64>,
    /// Point-cloud holes as `count,k`.
    #[arg(long, value_parser = parse_pair)]
    holes: Option<(usize, usize)>,
    /// Keep this many random point-cloud points.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, default_value = "dataset.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV written by `label`.
    dataset: PathBuf,
    /// TOML or JSON file with TrainConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Loss [default: hkr].
    #[arg(long)]
    loss: Option<LossKind>,
    /// Hinge margin m [default: 0.01].
    #[arg(long)]
    margin: Option<f64>,
    /// Hinge weight lambda [default: 100].
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of SLL layers [default: 20].
    #[arg(long)]
    depth: Option<usize>,
    /// Layer width [default: 128].
    #[arg(long)]
    k: Option<usize>,
    /// [default: 1000]
    #[arg(long)]
    epochs: Option<usize>,
    /// Points per label per batch [default: 512].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate [default: 0.001].
    #[arg(long)]
    lr: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Save a checkpoint every N epochs into --checkpoint-dir.
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Per-epoch loss log (CSV).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Add wall-clock seconds to the log (makes it run-dependent).
    #[arg(long)]
    log_wall_time: bool,
    #[arg(long, default_value = "model.lndf")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Iso-values; repeat or comma-separate for a family of level sets.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    iso: Vec<f64>,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 128)]
    res: usize,
    /// Sampling box as `lo:hi` with comma lists (default: the training domain).
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    bounds: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Args)]
struct ExtractArgs {
    /// A `.lndf` model file or an oracle such as `sphere:0,0,0:0.5`.
    field: String,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value = "mesh.obj")]
    out: PathBuf,
    /// Also write a value heatmap (2D fields, or a slice of a 3D field).
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[command(flatten)]
    slice: SliceArgs,
}

#[derive(Args, Clone)]
struct SliceArgs {
    /// Axis held fixed when slicing a 3D field.
    #[arg(long, default_value_t = 2)]
    slice_axis: usize,
    /// Coordinate of the slice along that axis (default: domain center).
    #[arg(long, allow_hyphen_values = true)]
    slice_offset: Option<f64>,
}

#[derive(Args, Clone)]
struct CameraArgs {
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,2.5")]
    camera: [f64; 3],
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    look_at: [f64; 3],
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,1,0")]
    up: [f64; 3],
    /// Vertical field of view in degrees.
    #[arg(long, default_value_t = 45.0)]
    fov: f64,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value = "normal")]
    shading: ShadingArg,
    /// Ray length limit.
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    /// Hit tolerance on f.
    #[arg(long, default_value_t = 1e-4)]
    surface_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShadingArg {
    Normal,
    Depth,
    Lambert,
}

#[derive(Args)]
struct RenderArgs {
    field: String,
    #[command(flatten)]
    camera: CameraArgs,
    /// PPM, or PNG for a `.png` path.
    #[arg(long, default_value = "render.ppm")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Lipschitz,
    Underestimate,
    Gradnorm,
}

#[derive(Args)]
struct AuditArgs {
    field: String,
    #[arg(long, value_enum, default_value = "lipschitz")]
    check: Check,
    /// Point pairs for the Lipschitz check.
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
    /// Sample points for the underestimation check.
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    /// Ball radius for the underestimation check, in model units.
    #[arg(long, default_value_t = 3.0)]
    radius: f64,
    /// Reference surface (OBJ); extracted from the field at --res if absent.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Extra allowance on f - S_mesh when --mesh is given.
    #[arg(long, default_value_t = 0.0)]
    slack: f64,
    /// Grid resolution for extraction and gradient-norm maps.
    #[arg(long, default_value_t = 128)]
    res: usize,
    #[command(flatten)]
    slice: SliceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Raw samples (underestimate) or grid values (gradnorm) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Histogram of f - S_mesh as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// Gradient-norm heatmap image.
    #[arg(long)]
    heatmap: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    field: String,
    /// Point to project, e.g. `0.3,0.2,0.9`; repeatable.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    project: Vec<Vec<f64>>,
    /// Step by f * grad instead of f * grad / |grad|.
    #[arg(long)]
    raw_step: bool,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Medial-axis candidates to draw.
    #[arg(long)]
    skeleton: Option<usize>,
    /// Keep candidates with gradient norm at most this.
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    /// Use central differences with this step for the gradient norm.
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write skeleton points here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Union,
    Intersect,
    Difference,
}

#[derive(Args)]
struct CsgArgs {
    first: String,
    second: String,
    #[arg(long, value_enum, default_value = "union")]
    op: OpArg,
    #[command(flatten)]
    grid: GridArgs,
    /// Mesh output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Image output.
    #[arg(long)]
    render: Option<PathBuf>,
    #[command(flatten)]
    camera: CameraArgs,
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let v = parse_list(s)?;
    v.try_into().map_err(|_| format!("expected x,y,z, got `{s}`"))
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected count,k, got `{s}`"))?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_box(s: &str) -> std::result::Result<(Vec<f64>, Vec<f64>), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    Ok((parse_list(lo)?, parse_list(hi)?))
}

/// A field together with its natural sampling box and the margin it was
/// trained with, both in the field's own units.
struct Source {
    field: FieldHandle,
    domain: Aabb,
    margin: f64,
}

fn open_field(spec: &str) -> Result<Source> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "lndf") || path.is_file() {
        let net = LipNet::load(path)?;
        let t = net.normalization();
        let half = 1.0 / t.scale;
        let lo = t.center.iter().map(|c| c - half).collect();
        let hi = t.center.iter().map(|c| c + half).collect();
        let margin = net.meta.margin / t.scale;
        let domain = Aabb::new(lo, hi)?;
        return Ok(Source {
            field: Arc::new(net),
            domain,
            margin,
        });
    }
    let oracle: AnalyticSdf = spec.parse()?;
    let dim = oracle.dim();
    Ok(Source {
        field: Arc::new(oracle),
        domain: Aabb::cube(dim, 1.0),
        margin: 0.0,
    })
}

fn grid_bounds(grid: &GridArgs, domain: &Aabb) -> Result<Aabb> {
    match &grid.bounds {
        Some((lo, hi)) => Aabb::new(lo.clone(), hi.clone()),
        None => Ok(domain.clone()),
    }
}

/// Level sets of `field` at every iso-value, merged into one OBJ.
fn extract_to(field: &dyn ScalarField, bounds: &Aabb, grid: &GridArgs, out: &Path) -> Result<()> {
    let sampled = sample_grid(field, bounds, &vec![grid.res; field.dim()])?;
    match field.dim() {
        2 => {
            let mut lines: Vec<Polyline> = Vec::new();
            for &iso in &grid.iso {
                lines.extend(marching_squares(&sampled, iso)?);
            }
            let total: f64 = lines.iter().map(Polyline::length).sum();
            println!("polylines: {} (total length {total:.6})", lines.len());
            write_obj_polylines(&lines, out)
        }
        _ => {
            let mut merged = TriangleSoup::new(Vec::new(), Vec::new())?;
            for &iso in &grid.iso {
                let mesh = marching_cubes(&sampled, iso)?;
                let offset = merged.vertices.len();
                merged.vertices.extend(mesh.vertices);
                merged
                    .triangles
                    .extend(mesh.triangles.iter().map(|t| t.map(|i| i + offset)));
            }
            println!(
                "mesh: {} vertices, {} triangles, {} components",
                merged.vertices.len(),
                merged.triangles.len(),
                merged.component_count()
            );
            write_obj_mesh(&merged, out)
        }
    }
}

/// The field itself if 2D, otherwise an axis-aligned slice of it.
fn planar(src: &Source, slice: &SliceArgs) -> Result<(FieldHandle, Aabb)> {
    if src.field.dim() == 2 {
        return Ok((src.field.clone(), src.domain.clone()));
    }
    let axis = slice.slice_axis;
    if axis > 2 {
        return Err(Error::Validation(format!("slice axis must be 0, 1 or 2, got {axis}")));
    }
    let offset = slice
        .slice_offset
        .unwrap_or((src.domain.lo[axis] + src.domain.hi[axis]) / 2.0);
    let keep: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let domain = Aabb::new(
        keep.iter().map(|&a| src.domain.lo[a]).collect(),
        keep.iter().map(|&a| src.domain.hi[a]).collect(),
    )?;
    Ok((Arc::new(SliceField::new(src.field.clone(), axis, offset)?), domain))
}

fn render_to(field: &dyn ScalarField, cam: &CameraArgs, out: &Path) -> Result<()> {
    let camera = Camera {
        position: cam.camera,
        look_at: cam.look_at,
        up: cam.up,
        fov_y: cam.fov,
    };
    let mut opts = RenderOptions {
        width: cam.width,
        height: cam.height,
        shading: match cam.shading {
            ShadingArg::Normal => Shading::Normal,
            ShadingArg::Depth => Shading::Depth,
            ShadingArg::Lambert => Shading::Lambert,
        },
        t_max: cam.t_max,
        ..RenderOptions::default()
    };
    opts.trace.surface_tol = cam.surface_tol;
    opts.trace.max_iter = cam.max_iter;
    render(field, &camera, &opts)?.save(out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_label(a: LabelArgs) -> Result<ExitCode> {
    let mut geometry = load_geometry(&a.input, None)?;
    let corruptions = [
        a.noise.map(|sigma| Corruption::Noise { sigma }),
        a.holes.map(|(count, k)| Corruption::Holes { count, k }),
        a.subsample.map(|m| Corruption::Subsample { m }),
    ];
    for (i, c) in corruptions.into_iter().flatten().enumerate() {
        let Geometry::Cloud(cloud) = &geometry else {
            return Err(Error::Validation("corruptions apply to point clouds only".into()));
        };
        geometry = Geometry::Cloud(corrupt(cloud, c, a.seed.wrapping_add(i as u64 + 1))?);
    }
    let (geometry, transform) = geometry.normalize()?;
    let data = match a.mode {
        FieldMode::Signed => build_signed_dataset(&geometry, a.n, a.tau_in, a.tau_out, a.seed)?,
        FieldMode::Unsigned => build_unsigned_dataset(&geometry, a.n, a.seed)?,
    }
    .with_transform(transform)?;
    data.save(&a.out)?;
    println!(
        "wrote {} points ({} mode) to {}",
        data.len(),
        data.mode,
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        toml::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
    }
}

fn cmd_train(a: TrainArgs) -> Result<ExitCode> {
    let data = LabeledDataset::load(&a.dataset)?;
    let mut cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.loss {
        cfg.loss = v;
    }
    if let Some(v) = a.margin {
        cfg.margin = v;
    }
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = a.depth {
        cfg.depth = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.checkpoint_every {
        cfg.checkpoint_every = v;
    }
    if a.checkpoint_dir.is_some() {
        cfg.checkpoint_dir = a.checkpoint_dir.clone();
    }
    println!(
        "training: loss={} depth={} k={} margin={} lambda={} epochs={} batch_size={} lr={} seed={}",
        cfg.loss, cfg.depth, cfg.k, cfg.margin, cfg.lambda, cfg.epochs, cfg.batch_size, cfg.lr, cfg.seed
    );
    let (net, log) = train(&data, &cfg)?;
    if let Some(r) = log.last() {
        println!(
            "epoch {}: kr={:.6} hinge={:.6} total={:.6} misclassified={:.4}",
            r.epoch, r.kr, r.hinge, r.total, r.misclassified
        );
    }
    if let Some(p) = &a.log {
        log.write_csv(std::fs::File::create(p)?, a.log_wall_time)?;
    }
    net.save(&a.out)?;
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_extract(a: ExtractArgs) -> Result<ExitCode> {
    let src = open_field(&a.field)?;
    let bounds = grid_bounds(&a.grid, &src.domain)?;
    extract_to(src.field.as_ref(), &bounds, &a.grid, &a.out)?;
    if let Some(img) = &a.heatmap {
        let (plane, domain) = planar(&src, &a.slice)?;
        let grid = sample_grid(plane.as_ref(), &domain, &[a.grid.res, a.grid.res])?;
        emit_heatmap(&grid, None, img, Some(&img.with_extension("csv")))?;
    }
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_render(a: RenderArgs) -> Result<ExitCode> {
    let src = open_field(&a.field)?;
    render_to(src.field.as_ref(), &a.camera, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn verdict(pass: bool) -> ExitCode {
    println!("verdict: {}", if pass { "PASS" } else { "FAIL" });
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_audit(a: AuditArgs) -> Result<ExitCode> {
    let src = open_field(&a.field)?;
    let field = src.field.as_ref();
    match a.check {
        Check::Lipschitz => {
            let audit = audit_lipschitz(field, a.pairs, a.seed, &src.domain)?;
            println!(
                "lipschitz: max quotient {:.12} over {} pairs (bound 1 + {UNIT_SLACK:e})",
                audit.max_quotient, audit.pairs
            );
            Ok(verdict(audit.max_quotient <= 1.0 + UNIT_SLACK))
        }
        Check::Gradnorm => {
            let (plane, domain) = planar(&src, &a.slice)?;
            let grid = sample_gradient_norm(plane.as_ref(), &domain, &[a.res, a.res])?;
            let (_, max) = grid.min_max();
            println!("gradnorm: max {max:.12} on a {}x{} grid", a.res, a.res);
            if let Some(img) = &a.heatmap {
                emit_heatmap(&grid, None, img, None)?;
            }
            if let Some(p) = &a.csv {
                grid_csv(&grid, std::fs::File::create(p)?)?;
            }
            Ok(verdict(max <= 1.0 + UNIT_SLACK))
        }
        Check::Underestimate => {
            let (mesh, slack) = match &a.mesh {
                Some(p) => {
                    let mesh = match load_geometry(p, None)? {
                        Geometry::Triangles(t) => SurfaceMesh::Triangles(t),
                        Geometry::Segments(s) => SurfaceMesh::Segments(s),
                        Geometry::Cloud(_) => {
                            return Err(Error::Validation("reference must be a mesh or polyline".into()))
                        }
                    };
                    (mesh, a.slack)
                }
                None => {
                    let grid = sample_grid(field, &src.domain, &vec![a.res; field.dim()])?;
                    let mesh = if field.dim() == 2 {
                        SurfaceMesh::Segments(polylines_to_segments(&marching_squares(&grid, 0.0)?))
                    } else {
                        SurfaceMesh::Triangles(marching_cubes(&grid, 0.0)?)
                    };
                    (mesh, grid.cell_diagonal())
                }
            };
            let center: Vec<f64> = (0..field.dim())
                .map(|i| (src.domain.lo[i] + src.domain.hi[i]) / 2.0)
                .collect();
            let report = audit_underestimation(field, &mesh, a.points, a.radius, &center, a.seed)?;
            let max = report.max_difference().unwrap_or(f64::NEG_INFINITY);
            let bound = 2.0 * src.margin + slack;
            println!("underestimate: max f - S_mesh = {max:.6e} (bound {bound:.6e})");
            if let Some(p) = &a.csv {
                std::fs::write(p, report.to_csv())?;
            }
            if let Some(p) = &a.histogram {
                std::fs::write(p, report.histogram_csv())?;
            }
            Ok(verdict(max <= bound))
        }
    }
}

fn format_point(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v:.9}")).collect::<Vec<_>>().join(",")
}

fn cmd_query(a: QueryArgs) -> Result<ExitCode> {
    let src = open_field(&a.field)?;
    let field = src.field.as_ref();
    if a.project.is_empty() && a.skeleton.is_none() {
        return Err(Error::Validation("nothing to do: pass --project or --skeleton".into()));
    }
    let opts = ProjectOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        step: if a.raw_step { StepMode::Raw } else { StepMode::Normalized },
        ..ProjectOptions::default()
    };
    for x in &a.project {
        let p = project(field, x, &opts)?;
        println!(
            "project {} -> {} iterations={} residual={:.3e} status={:?}",
            format_point(x),
            format_point(&p.point),
            p.iterations,
            p.residual,
            p.status
        );
    }
    if let Some(n) = a.skeleton {
        let mut opts = MedialOptions::new(field.dim(), n, a.gamma, a.seed);
        opts.domain = src.domain.clone();
        if let Some(step) = a.fd_step {
            opts.gradient = GradientSource::FiniteDifference { step };
        }
        let kept = medial_axis_sample(field, &opts)?;
        let mut text = String::new();
        for p in &kept {
            text.push_str(&format_point(p));
            text.push('\n');
        }
        match &a.out {
            Some(path) => {
                std::fs::write(path, text)?;
                println!("skeleton: kept {} of {n} candidates", kept.len());
            }
            None => print!("{text}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_csg(a: CsgArgs) -> Result<ExitCode> {
    let first = open_field(&a.first)?;
    let second = open_field(&a.second)?;
    let combined = match a.op {
        OpArg::Union => csg_union(first.field.clone(), second.field.clone())?,
        OpArg::Intersect => csg_intersect(first.field.clone(), second.field.clone())?,
        OpArg::Difference => csg_difference(first.field.clone(), second.field.clone())?,
    };
    if a.out.is_none() && a.render.is_none() {
        return Err(Error::Validation("nothing to do: pass --out and/or --render".into()));
    }
    // Union of both sampling boxes.
    let domain = Aabb::new(
        first.domain.lo.iter().zip(&second.domain.lo).map(|(a, b)| a.min(*b)).collect(),
        first.domain.hi.iter().zip(&second.domain.hi).map(|(a, b)| a.max(*b)).collect(),
    )?;
    if let Some(out) = &a.out {
        let bounds = grid_bounds(&a.grid, &domain)?;
        extract_to(&combined, &bounds, &a.grid, out)?;
        println!("wrote {}", out.display());
    }
    if let Some(img) = &a.render {
        render_to(&combined, &a.camera, img)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Label(a) => cmd_label(a),
        Command::Train(a) => cmd_train(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Render(a) => cmd_render(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Query(a) => cmd_query(a),
        Command::Csg(a) => cmd_csg(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
