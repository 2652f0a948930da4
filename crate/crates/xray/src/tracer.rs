//! Grid traversal and per-ray projection with overlapping basis functions.
//!
//! The projection of one ray sweeps the grid row by row (mainly vertical
//! rays) or column by column (mainly horizontal rays). In each row the
//! crossed cells `p_min..p_max` are extended by K side neighbors and every
//! index in the range is evaluated exactly once; for K = 1 this reproduces
//! the skip conditions of the immediate-neighbor algorithm. The back-
//! projector deposits with the identical weights, so the operator pair is
//! matched to the last bit.

use crate::error::{Error, Result};
use crate::geometry::{dot, GridSpec, Orientation, Point, Ray};
use crate::profiles::{project_generator, Generator, ProjectedProfile};

/// Expansion coefficients on an `n`×`n` unit-step grid, row-major (q-major):
/// entry `(p, q)` lives at `data[q * n + p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl CoefficientGrid {
    pub fn zeros(grid: GridSpec) -> CoefficientGrid {
        CoefficientGrid {
            grid,
            data: vec![0.0; grid.n * grid.n],
        }
    }

    pub fn from_data(grid: GridSpec, data: Vec<f64>) -> Result<CoefficientGrid> {
        if data.len() != grid.n * grid.n {
            return Err(Error::invalid("coefficient data does not match grid shape"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coefficient data must be finite"));
        }
        Ok(CoefficientGrid { grid, data })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    #[inline]
    pub fn at(&self, p: usize, q: usize) -> f64 {
        self.data[q * self.grid.n + p]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize, q: usize) -> &mut f64 {
        &mut self.data[q * self.grid.n + p]
    }
}

/// One cell crossing: entry point, exit point and the crossed cell per the
/// midpoint-floor rule.
#[derive(Debug, Clone, Copy)]
pub struct TraversalStep {
    pub x_enter: Point,
    pub x_exit: Point,
    pub cell: (i64, i64),
}

/// Cells whose open interior the ray crosses, in traversal order.
pub fn trace_cells(ray: &Ray, grid: &GridSpec) -> Vec<TraversalStep> {
    let (t0, t1) = match grid.clip(ray) {
        Some(r) => r,
        None => return Vec::new(),
    };
    let mut steps = Vec::new();
    let mut t = t0;
    loop {
        let mut t_next = t1;
        for axis in 0..2 {
            let d = ray.dir[axis];
            if d.abs() < 1e-12 {
                continue;
            }
            // Next integer boundary (grid-local) strictly ahead of t.
            let x = ray.point_at(t)[axis] - grid.origin[axis];
            let boundary = if d > 0.0 {
                (x + 1e-9).floor() + 1.0
            } else {
                (x - 1e-9).ceil() - 1.0
            };
            let tb = (boundary + grid.origin[axis] - ray.point_at(0.0)[axis]) / d;
            if tb > t + 1e-12 && tb < t_next {
                t_next = tb;
            }
        }
        if t_next - t > 1e-12 {
            let a = ray.point_at(t);
            let b = ray.point_at(t_next);
            let cell = (
                ((a[0] + b[0]) / 2.0 - grid.origin[0]).floor() as i64,
                ((a[1] + b[1]) / 2.0 - grid.origin[1]).floor() as i64,
            );
            steps.push(TraversalStep {
                x_enter: a,
                x_exit: b,
                cell,
            });
        }
        if t_next >= t1 - 1e-12 {
            break;
        }
        t = t_next;
    }
    steps
}

/// Contribution of the basis function centered at `cell` to the ray of angle
/// `theta` passing through `x_k`: `c[p,q] · φ_θ(⟨o − x_k, θ⊥⟩)` with
/// `o = (p + 1/2, q + 1/2)`. Out-of-range cells contribute zero.
pub fn basis_contribution(
    coeffs: &CoefficientGrid,
    x_k: Point,
    theta: f64,
    cell: (i64, i64),
    gen: &Generator,
) -> f64 {
    let (p, q) = cell;
    let n = coeffs.n() as i64;
    if p < 0 || q < 0 || p >= n || q >= n {
        return 0.0;
    }
    let c = coeffs.at(p as usize, q as usize);
    if c == 0.0 {
        return 0.0;
    }
    let profile = project_generator(gen, theta).expect("validated generator");
    let o = coeffs.grid.cell_center(p, q);
    let perp = [theta.sin(), -theta.cos()];
    let y_k = dot([o[0] - x_k[0], o[1] - x_k[1]], perp);
    c * profile.eval(y_k)
}

/// Visit every basis index whose generator support can meet the ray, exactly
/// once, with its profile weight. Zero-weight visits are still reported so
/// instrumented callers can count evaluations.
pub fn visit_ray(
    grid: &GridSpec,
    ray: &Ray,
    profile: &ProjectedProfile,
    k_neighbors: usize,
    mut visit: impl FnMut(usize, usize, f64),
) {
    if profile.is_dirac() {
        return;
    }
    let n = grid.n;
    let ni = n as i64;
    let k = k_neighbors as i64;
    let base = ray.point_at(0.0);
    match ray.orientation() {
        Orientation::MainlyVertical => {
            // dir[1] != 0 here.
            let inv = 1.0 / ray.dir[1];
            for q in 0..n {
                let y0 = grid.origin[1] + q as f64;
                let x0 = base[0] + (y0 - base[1]) * inv * ray.dir[0];
                let x1 = base[0] + (y0 + 1.0 - base[1]) * inv * ray.dir[0];
                let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
                let p_lo = ((lo - grid.origin[0]).floor() as i64 - k).max(0);
                let p_hi = ((hi - grid.origin[0]).floor() as i64 + k).min(ni - 1);
                for p in p_lo..=p_hi {
                    let o = grid.cell_center(p, q as i64);
                    let w = profile.eval(ray.offset - dot(o, ray.normal));
                    visit(p as usize, q, w);
                }
            }
        }
        Orientation::MainlyHorizontal => {
            let inv = 1.0 / ray.dir[0];
            for p in 0..n {
                let x0 = grid.origin[0] + p as f64;
                let y0 = base[1] + (x0 - base[0]) * inv * ray.dir[1];
                let y1 = base[1] + (x0 + 1.0 - base[0]) * inv * ray.dir[1];
                let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
                let q_lo = ((lo - grid.origin[1]).floor() as i64 - k).max(0);
                let q_hi = ((hi - grid.origin[1]).floor() as i64 + k).min(ni - 1);
                for q in q_lo..=q_hi {
                    let o = grid.cell_center(p as i64, q);
                    let w = profile.eval(ray.offset - dot(o, ray.normal));
                    visit(p, q as usize, w);
                }
            }
        }
    }
}

/// X-ray projection of the coefficient image along one ray.
pub fn forward_ray(coeffs: &CoefficientGrid, ray: &Ray, gen: &Generator) -> Result<f64> {
    let profile = project_generator(gen, ray.theta)?;
    Ok(forward_ray_with_profile(coeffs, ray, &profile, gen.neighbor_count()))
}

pub(crate) fn forward_ray_with_profile(
    coeffs: &CoefficientGrid,
    ray: &Ray,
    profile: &ProjectedProfile,
    k_neighbors: usize,
) -> f64 {
    let mut acc = 0.0;
    visit_ray(&coeffs.grid, ray, profile, k_neighbors, |p, q, w| {
        if w != 0.0 {
            acc += coeffs.at(p, q) * w;
        }
    });
    acc
}

/// Adjoint of [`forward_ray`]: deposits `value · φ_θ(y_k)` into every
/// coefficient the forward pass would have read.
pub fn backproject_ray(
    accumulator: &mut CoefficientGrid,
    ray: &Ray,
    value: f64,
    gen: &Generator,
) -> Result<()> {
    let profile = project_generator(gen, ray.theta)?;
    backproject_ray_with_profile(accumulator, ray, value, &profile, gen.neighbor_count());
    Ok(())
}

pub(crate) fn backproject_ray_with_profile(
    accumulator: &mut CoefficientGrid,
    ray: &Ray,
    value: f64,
    profile: &ProjectedProfile,
    k_neighbors: usize,
) {
    if value == 0.0 {
        return;
    }
    let grid = accumulator.grid;
    visit_ray(&grid, ray, profile, k_neighbors, |p, q, w| {
        if w != 0.0 {
            *accumulator.at_mut(p, q) += value * w;
        }
    });
}
