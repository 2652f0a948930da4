//! Rays, grids and geometry builders.
//!
//! A ray is the oriented line `t ↦ t·dir + offset·normal` with
//! `dir = (cos θ, sin θ)` and `normal = (sin θ, −cos θ)`; `offset` is the
//! signed distance of the line from the origin. The coefficient grid always
//! has unit step, so physical (fan-beam) lengths are converted to grid units
//! when the rays are built, never the other way round.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    MainlyVertical,
    MainlyHorizontal,
}

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub theta: f64,
    pub offset: f64,
    pub dir: Point,
    pub normal: Point,
}

impl Ray {
    pub fn from_angle_offset(theta: f64, offset: f64) -> Result<Ray> {
        if !theta.is_finite() || !offset.is_finite() {
            return Err(Error::invalid("ray angle and offset must be finite"));
        }
        let (s, c) = theta.sin_cos();
        Ok(Ray {
            theta,
            offset,
            dir: [c, s],
            normal: [s, -c],
        })
    }

    /// Point on the line at parameter `t`.
    #[inline]
    pub fn point_at(&self, t: f64) -> Point {
        [
            t * self.dir[0] + self.offset * self.normal[0],
            t * self.dir[1] + self.offset * self.normal[1],
        ]
    }

    /// Mainly vertical iff |sin θ| > 1/√2; the boundary θ = π/4 is horizontal.
    pub fn orientation(&self) -> Orientation {
        if self.dir[1].abs() > std::f64::consts::FRAC_1_SQRT_2 {
            Orientation::MainlyVertical
        } else {
            Orientation::MainlyHorizontal
        }
    }
}

/// `n`×`n` unit-step Cartesian grid. Cell `(p, q)` spans
/// `[origin + (p, q), origin + (p+1, q+1)]` and its basis function is
/// centered at `origin + (p + 1/2, q + 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub origin: Point,
}

impl GridSpec {
    pub fn new(n: usize) -> GridSpec {
        GridSpec { n, origin: [0.0, 0.0] }
    }

    pub fn with_origin(n: usize, origin: Point) -> GridSpec {
        GridSpec { n, origin }
    }

    /// Grid centered on the coordinate origin.
    pub fn centered(n: usize) -> GridSpec {
        let h = n as f64 / 2.0;
        GridSpec { n, origin: [-h, -h] }
    }

    pub fn center(&self) -> Point {
        let h = self.n as f64 / 2.0;
        [self.origin[0] + h, self.origin[1] + h]
    }

    pub fn cell_center(&self, p: i64, q: i64) -> Point {
        [
            self.origin[0] + p as f64 + 0.5,
            self.origin[1] + q as f64 + 0.5,
        ]
    }

    /// Parameter interval `(t_enter, t_exit)` of the line inside the bounding
    /// square, or `None` when the line misses it. Tangent lines count as
    /// misses.
    pub fn clip(&self, ray: &Ray) -> Option<(f64, f64)> {
        let lo = self.origin;
        let hi = [self.origin[0] + self.n as f64, self.origin[1] + self.n as f64];
        let base = [
            ray.offset * ray.normal[0],
            ray.offset * ray.normal[1],
        ];
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for axis in 0..2 {
            let d = ray.dir[axis];
            if d.abs() < 1e-12 {
                if base[axis] <= lo[axis] || base[axis] >= hi[axis] {
                    return None;
                }
            } else {
                let ta = (lo[axis] - base[axis]) / d;
                let tb = (hi[axis] - base[axis]) / d;
                t0 = t0.max(ta.min(tb));
                t1 = t1.min(ta.max(tb));
            }
        }
        if t1 - t0 <= 1e-12 {
            None
        } else {
            Some((t0, t1))
        }
    }

    /// First intersection point of the ray with the grid boundary, traversing
    /// along `dir`.
    pub fn entry_point(&self, ray: &Ray) -> Option<Point> {
        self.clip(ray).map(|(t0, _)| ray.point_at(t0))
    }
}

#[derive(Debug, Clone)]
pub struct RaySet {
    pub rays: Vec<Ray>,
    pub metadata: String,
}

impl RaySet {
    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }
}

/// Parallel geometry: `n_angles` uniform on [0, π), `n_offsets` uniform across
/// the inscribed width of the grid, centered on the grid center. Ordering is
/// angle-major, offset-minor; this fixes the sinogram row layout.
pub fn parallel_rayset(n_angles: usize, n_offsets: usize, grid: &GridSpec) -> Result<RaySet> {
    if n_angles == 0 || n_offsets == 0 {
        return Err(Error::invalid("parallel geometry needs at least one angle and one offset"));
    }
    let center = grid.center();
    let width = grid.n as f64;
    let mut rays = Vec::with_capacity(n_angles * n_offsets);
    for ia in 0..n_angles {
        let theta = ia as f64 * std::f64::consts::PI / n_angles as f64;
        let ray0 = Ray::from_angle_offset(theta, 0.0)?;
        let y_center = dot(center, ray0.normal);
        for io in 0..n_offsets {
            let s = (io as f64 + 0.5) * width / n_offsets as f64 - width / 2.0;
            rays.push(Ray::from_angle_offset(theta, y_center + s)?);
        }
    }
    Ok(RaySet {
        rays,
        metadata: format!("parallel angles={n_angles} offsets={n_offsets}"),
    })
}

/// Fan-beam acquisition parameters, in world units.
#[derive(Debug, Clone)]
pub struct FanBeamConfig {
    pub source_to_detector: f64,
    pub source_to_object: f64,
    pub detector_pitch: f64,
    pub n_detectors: usize,
    pub angles: Vec<f64>,
    /// Center-of-rotation offset, orthogonal to the source–detector axis.
    pub cor_shift: f64,
}

impl FanBeamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.source_to_detector > self.source_to_object && self.source_to_object > 0.0) {
            return Err(Error::invalid(
                "fan-beam requires source_to_detector > source_to_object > 0",
            ));
        }
        if self.detector_pitch <= 0.0 {
            return Err(Error::invalid("detector_pitch must be positive"));
        }
        if self.n_detectors == 0 || self.angles.is_empty() {
            return Err(Error::invalid("fan-beam needs detectors and angles"));
        }
        Ok(())
    }

    /// World-to-grid scale: the detector extent, scaled to the object plane,
    /// covers the grid width.
    pub fn grid_scale(&self, grid: &GridSpec) -> f64 {
        let fov = self.n_detectors as f64 * self.detector_pitch * self.source_to_object
            / self.source_to_detector;
        grid.n as f64 / fov
    }
}

/// Fan-beam geometry: for each (angle, detector element) pair, the ray from
/// the rotated source position through the detector-element center. The
/// rotation center sits at the grid center, displaced by `cor_shift`
/// orthogonally to the source–detector axis. Ordering is angle-major.
pub fn fanbeam_rayset(config: &FanBeamConfig, grid: &GridSpec) -> Result<RaySet> {
    config.validate()?;
    let scale = config.grid_scale(grid);
    let center = grid.center();
    let mut rays = Vec::with_capacity(config.angles.len() * config.n_detectors);
    for &a in &config.angles {
        let (sa, ca) = a.sin_cos();
        let axis = [ca, sa]; // source -> detector direction
        let lateral = [-sa, ca];
        for i in 0..config.n_detectors {
            let u = (i as f64 - (config.n_detectors as f64 - 1.0) / 2.0) * config.detector_pitch;
            // World coordinates relative to the rotation center.
            let src = [
                -config.source_to_object * axis[0] + config.cor_shift * lateral[0],
                -config.source_to_object * axis[1] + config.cor_shift * lateral[1],
            ];
            let ddist = config.source_to_detector - config.source_to_object;
            let det = [
                ddist * axis[0] + (u + config.cor_shift) * lateral[0],
                ddist * axis[1] + (u + config.cor_shift) * lateral[1],
            ];
            let src_g = [center[0] + scale * src[0], center[1] + scale * src[1]];
            let det_g = [center[0] + scale * det[0], center[1] + scale * det[1]];
            let dx = det_g[0] - src_g[0];
            let dy = det_g[1] - src_g[1];
            let theta = dy.atan2(dx);
            let (s, c) = theta.sin_cos();
            let offset = src_g[0] * s - src_g[1] * c;
            rays.push(Ray {
                theta,
                offset,
                dir: [c, s],
                normal: [s, -c],
            });
        }
    }
    Ok(RaySet {
        rays,
        metadata: format!(
            "fanbeam angles={} detectors={} cor_shift={}",
            config.angles.len(),
            config.n_detectors,
            config.cor_shift
        ),
    })
}
