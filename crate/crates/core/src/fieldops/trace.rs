use rayon::prelude::*;

use crate::error::{ensure_dim, Error, Result};
use crate::raster::Image;
use crate::vecmath::{add3, cross3, dot3, norm3, scale3, sub3};

use super::ScalarField;

/// Smallest marching step.
pub const MIN_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
    pub t_max: f64,
}

impl Ray {
    /// Normalizes `direction`; rejects zero directions.
    pub fn new(origin: [f64; 3], direction: [f64; 3], t_max: f64) -> Result<Self> {
        let n = norm3(direction);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("ray direction must be nonzero"));
        }
        Ok(Ray {
            origin,
            direction: scale3(direction, 1.0 / n),
            t_max,
        })
    }

    pub fn at(&self, t: f64) -> [f64; 3] {
        add3(self.origin, scale3(self.direction, t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    pub surface_tol: f64,
    pub max_iter: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            surface_tol: 1e-4,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitStatus {
    Hit,
    Miss,
    MaxIter,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HitRecord {
    pub status: HitStatus,
    pub t: f64,
    pub point: [f64; 3],
    pub iterations: usize,
    /// `|f|` at the last evaluated point.
    pub residual: f64,
    /// The field was negative at the ray origin.
    pub interior_start: bool,
}

/// Marches `t <- t + max(f, MIN_STEP)` from the ray origin. Sound for any
/// field that never overestimates the distance to its zero set.
pub fn sphere_trace(field: &dyn ScalarField, ray: &Ray, opts: &TraceOptions) -> HitRecord {
    let mut t = 0.0;
    let mut iterations = 0;
    loop {
        let point = ray.at(t);
        let f = field.value(&point);
        let record = |status, interior_start| HitRecord {
            status,
            t,
            point,
            iterations,
            residual: f.abs(),
            interior_start,
        };
        if iterations == 0 && f < 0.0 {
            return record(HitStatus::Hit, true);
        }
        if f <= opts.surface_tol {
            return record(HitStatus::Hit, false);
        }
        if t > ray.t_max {
            return record(HitStatus::Miss, false);
        }
        if iterations == opts.max_iter {
            return record(HitStatus::MaxIter, false);
        }
        t += f.max(MIN_STEP);
        iterations += 1;
    }
}

/// Pinhole camera; `fov_y` is the vertical field of view in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub fov_y: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Camera {
            position: [0.0, 0.0, 2.5],
            look_at: [0.0; 3],
            up: [0.0, 1.0, 0.0],
            fov_y: 45.0,
        }
    }
}

impl Camera {
    /// Ray through the center of pixel `(px, py)`, row 0 at the top.
    pub fn ray(&self, px: usize, py: usize, width: usize, height: usize, t_max: f64) -> Result<Ray> {
        let forward = sub3(self.look_at, self.position);
        let fl = norm3(forward);
        if !(fl > 0.0) {
            return Err(Error::invalid("camera position equals look-at point"));
        }
        let forward = scale3(forward, 1.0 / fl);
        let right = cross3(forward, self.up);
        let rl = norm3(right);
        if !(rl > 0.0) {
            return Err(Error::invalid("camera up vector is parallel to the view direction"));
        }
        let right = scale3(right, 1.0 / rl);
        let up = cross3(right, forward);
        let half = (self.fov_y.to_radians() / 2.0).tan();
        let aspect = width as f64 / height as f64;
        let sx = (2.0 * (px as f64 + 0.5) / width as f64 - 1.0) * half * aspect;
        let sy = (1.0 - 2.0 * (py as f64 + 0.5) / height as f64) * half;
        let dir = add3(forward, add3(scale3(right, sx), scale3(up, sy)));
        Ray::new(self.position, dir, t_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Shading {
    #[default]
    Normal,
    Depth,
    Lambert,
}

impl std::str::FromStr for Shading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Shading::Normal),
            "depth" => Ok(Shading::Depth),
            "lambert" => Ok(Shading::Lambert),
            other => Err(Error::invalid(format!("unknown shading `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    pub shading: Shading,
    pub t_max: f64,
    pub trace: TraceOptions,
    pub background: [u8; 3],
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 256,
            height: 256,
            shading: Shading::Normal,
            t_max: 10.0,
            trace: TraceOptions::default(),
            background: [0, 0, 0],
        }
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Sphere-traces one ray per pixel. Rays that do not hit, including rays
/// starting inside the shape, get the background color.
pub fn render(field: &dyn ScalarField, camera: &Camera, opts: &RenderOptions) -> Result<Image> {
    ensure_dim(3, field.dim())?;
    if opts.width == 0 || opts.height == 0 {
        return Err(Error::invalid("image resolution must be positive"));
    }
    // Validates the camera once.
    camera.ray(0, 0, opts.width, opts.height, opts.t_max)?;
    let light = {
        let l = sub3(camera.position, camera.look_at);
        let l = add3(scale3(l, 1.0 / norm3(l)), scale3(camera.up, 0.5));
        scale3(l, 1.0 / norm3(l))
    };
    let rows: Vec<Vec<u8>> = (0..opts.height)
        .into_par_iter()
        .map(|py| {
            let mut row = Vec::with_capacity(3 * opts.width);
            for px in 0..opts.width {
                let ray = camera
                    .ray(px, py, opts.width, opts.height, opts.t_max)
                    .expect("camera validated");
                let hit = sphere_trace(field, &ray, &opts.trace);
                let color = if hit.status != HitStatus::Hit || hit.interior_start {
                    opts.background
                } else {
                    let g = field.gradient(&hit.point);
                    let gn = norm3([g[0], g[1], g[2]]).max(1e-12);
                    let n = [g[0] / gn, g[1] / gn, g[2] / gn];
                    match opts.shading {
                        Shading::Normal => n.map(|c| to_byte(0.5 * (c + 1.0))),
                        Shading::Depth => [to_byte(1.0 - hit.t / opts.t_max); 3],
                        Shading::Lambert => [to_byte(0.1 + 0.9 * dot3(n, light).max(0.0)); 3],
                    }
                };
                row.extend_from_slice(&color);
            }
            row
        })
        .collect();
    Ok(Image {
        width: opts.width,
        height: opts.height,
        rgb: rows.concat(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldops::Scaled;
    use crate::oracles::AnalyticSdf;

    fn unit_sphere() -> AnalyticSdf {
        AnalyticSdf::sphere(vec![0.0; 3], 1.0).unwrap()
    }

    #[test]
    fn hits_unit_sphere() {
        let ray = Ray::new([-2.0, 0.0, 0.0], [1.0, 0.0, 0.0], 10.0).unwrap();
        let opts = TraceOptions::default();
        let hit = sphere_trace(&unit_sphere(), &ray, &opts);
        assert_eq!(hit.status, HitStatus::Hit);
        assert!((hit.t - 1.0).abs() <= opts.surface_tol);

        let half = Scaled { inner: unit_sphere(), factor: 0.5 };
        let slow = sphere_trace(&half, &ray, &opts);
        assert_eq!(slow.status, HitStatus::Hit);
        assert!((slow.point[0] + 1.0).abs() <= 2.0 * opts.surface_tol);
        assert!(slow.iterations > hit.iterations);
    }

    #[test]
    fn miss_and_interior() {
        let opts = TraceOptions::default();
        let ray = Ray::new([-2.0, 2.0, 0.0], [1.0, 0.0, 0.0], 10.0).unwrap();
        assert_eq!(sphere_trace(&unit_sphere(), &ray, &opts).status, HitStatus::Miss);
        let ray = Ray::new([0.1, 0.0, 0.0], [1.0, 0.0, 0.0], 10.0).unwrap();
        let hit = sphere_trace(&unit_sphere(), &ray, &opts);
        assert!(hit.interior_start && hit.t == 0.0 && hit.status == HitStatus::Hit);
    }

    #[test]
    fn disk_radius_matches_projection() {
        let r = 0.5;
        let cam = Camera {
            position: [0.0, 0.0, 3.0],
            look_at: [0.0; 3],
            up: [0.0, 1.0, 0.0],
            fov_y: 40.0,
        };
        let opts = RenderOptions {
            width: 201,
            height: 201,
            ..Default::default()
        };
        let img = render(&AnalyticSdf::sphere(vec![0.0; 3], r).unwrap(), &cam, &opts).unwrap();
        // Silhouette cone half-angle asin(r / d) mapped through the pinhole.
        let expected = (r / 3.0f64).asin().tan() / (20.0f64.to_radians().tan()) * 100.5;
        let hits_on_row = (0..201).filter(|&x| img.pixel(x, 100) != [0, 0, 0]).count();
        let measured = hits_on_row as f64 / 2.0;
        assert!((measured - expected).abs() <= 1.0, "{measured} vs {expected}");
        assert_eq!(img, render(&AnalyticSdf::sphere(vec![0.0; 3], r).unwrap(), &cam, &opts).unwrap());
    }

    #[test]
    fn single_pixel() {
        let cam = Camera::default();
        let opts = RenderOptions { width: 1, height: 1, ..Default::default() };
        let hit = render(&unit_sphere(), &cam, &opts).unwrap();
        assert_ne!(hit.pixel(0, 0), [0, 0, 0]);
        let away = Camera { look_at: [0.0, 5.0, 2.5], up: [0.0, 0.0, 1.0], ..cam };
        assert_eq!(render(&unit_sphere(), &away, &opts).unwrap().pixel(0, 0), [0, 0, 0]);
    }
}
