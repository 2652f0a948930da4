//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here is deliberately written from scratch against the raw
//! definitions (dense matrix products, classic Siddon, gridded numerical
//! convolution, Simpson line quadrature) rather than reusing library
//! internals, so agreement is meaningful.

#![allow(dead_code)]

use xray::geometry::{dot, GridSpec, Ray, RaySet};
use xray::profiles::{eval_generator_2d, project_generator, Generator};
use xray::tracer::CoefficientGrid;

pub struct Lcg(pub u64);

impl Lcg {
    pub fn new(seed: u64) -> Lcg {
        Lcg(seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Explicit H_φ with H[m][k] = φ_{θ_m}(y_m − ⟨o_k, θ_m⊥⟩).
pub fn dense_operator(grid: &GridSpec, rayset: &RaySet, gen: &Generator) -> Vec<Vec<f64>> {
    let n = grid.n;
    rayset
        .rays
        .iter()
        .map(|ray| {
            let profile = project_generator(gen, ray.theta).unwrap();
            let mut row = vec![0.0; n * n];
            for q in 0..n {
                for p in 0..n {
                    let o = grid.cell_center(p as i64, q as i64);
                    row[q * n + p] = profile.eval(ray.offset - dot(o, ray.normal));
                }
            }
            row
        })
        .collect()
}

pub fn dense_forward(h: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    h.iter()
        .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dense_adjoint(h: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    let n = h[0].len();
    let mut out = vec![0.0; n];
    for (row, &v) in h.iter().zip(p) {
        for (o, &a) in out.iter_mut().zip(row) {
            *o += a * v;
        }
    }
    out
}

/// Classic Siddon: intersect the ray with every lattice line, merge the two
/// sorted breakpoint lists, and accumulate chord-weighted cell values.
pub fn siddon_forward(coeffs: &CoefficientGrid, ray: &Ray) -> f64 {
    let n = coeffs.n() as f64;
    let grid = coeffs.grid;
    let p0 = [ray.offset * ray.normal[0], ray.offset * ray.normal[1]];
    let d = ray.dir;
    let mut ts: Vec<f64> = Vec::new();
    for axis in 0..2 {
        if d[axis].abs() < 1e-12 {
            continue;
        }
        for i in 0..=(coeffs.n()) {
            let line = grid.origin[axis] + i as f64;
            ts.push((line - p0[axis]) / d[axis]);
        }
    }
    ts.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 - t0 <= 1e-12 {
            continue;
        }
        let tm = (t0 + t1) / 2.0;
        let x = p0[0] + tm * d[0] - grid.origin[0];
        let y = p0[1] + tm * d[1] - grid.origin[1];
        if x <= 0.0 || y <= 0.0 || x >= n || y >= n {
            continue;
        }
        let (p, q) = (x.floor() as usize, y.floor() as usize);
        acc += coeffs.at(p, q) * (t1 - t0);
    }
    acc
}

/// Exact convolution of two unit-mass centered rects (trapezoid).
pub fn rect_pair(a: f64, b: f64, y: f64) -> f64 {
    let (a, b) = (a.min(b), a.max(b));
    let lo = (y - a / 2.0).max(-b / 2.0);
    let hi = (y + a / 2.0).min(b / 2.0);
    (hi - lo).max(0.0) / (a * b)
}

/// Numerical profile oracle: start from the exact two-rect trapezoid, then
/// fold in the remaining rects one at a time through a cumulative-trapezoid
/// antiderivative on a fine grid (the integrand stays continuous after the
/// first convolution, so the composite error is O(h²)).
pub struct ConvOracle {
    lo: f64,
    h: f64,
    samples: Vec<f64>,
}

impl ConvOracle {
    pub fn build(widths: &[f64], h: f64) -> ConvOracle {
        assert!(widths.len() >= 2, "need at least two rect factors");
        let total: f64 = widths.iter().sum();
        let lo = -total / 2.0 - 4.0 * h;
        let m = ((total + 8.0 * h) / h).ceil() as usize + 1;
        let mut samples: Vec<f64> = (0..m)
            .map(|i| rect_pair(widths[0], widths[1], lo + i as f64 * h))
            .collect();
        for &w in &widths[2..] {
            // Antiderivative at the grid nodes.
            let mut anti = vec![0.0f64; m];
            for i in 1..m {
                anti[i] = anti[i - 1] + 0.5 * h * (samples[i - 1] + samples[i]);
            }
            let interp = |x: f64| -> f64 {
                let u = (x - lo) / h;
                if u <= 0.0 {
                    return 0.0;
                }
                if u >= (m - 1) as f64 {
                    return anti[m - 1];
                }
                let i = u.floor() as usize;
                let f = u - i as f64;
                anti[i] * (1.0 - f) + anti[i + 1] * f
            };
            samples = (0..m)
                .map(|i| {
                    let y = lo + i as f64 * h;
                    (interp(y + w / 2.0) - interp(y - w / 2.0)) / w
                })
                .collect();
        }
        ConvOracle { lo, h, samples }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let u = (y - self.lo) / self.h;
        if u <= 0.0 || u >= (self.samples.len() - 1) as f64 {
            return 0.0;
        }
        let i = u.floor() as usize;
        let f = u - i as f64;
        self.samples[i] * (1.0 - f) + self.samples[i + 1] * f
    }
}

/// Non-degenerate projected rect widths of `gen` at angle θ.
pub fn projected_widths(gen: &Generator, theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    gen.directions()
        .iter()
        .map(|u| (s * u[0] - c * u[1]).abs())
        .filter(|w| *w >= 1e-9)
        .collect()
}

/// Line integral of the 2D generator along the ray at signed offset `y` from
/// the generator center, by composite Simpson. Valid for continuous
/// generators (degree ≥ 1 profiles).
pub fn line_quadrature(gen: &Generator, theta: f64, y: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (dir, normal) = ([c, s], [s, -c]);
    let reach = gen.support_radius() + 0.1;
    let m = 8192usize; // even
    let h = 2.0 * reach / m as f64;
    let mut acc = 0.0;
    for i in 0..=m {
        let t = -reach + i as f64 * h;
        let x = [y * normal[0] + t * dir[0], y * normal[1] + t * dir[1]];
        let v = eval_generator_2d(gen, x);
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * v;
    }
    acc * h / 3.0
}

/// Chord of the axis-aligned unit square centered at the origin: the exact
/// line integral of the Pixel generator.
pub fn square_chord(theta: f64, y: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (dir, normal) = ([c, s], [s, -c]);
    let p0 = [y * normal[0], y * normal[1]];
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for axis in 0..2 {
        if dir[axis].abs() < 1e-12 {
            if p0[axis].abs() > 0.5 {
                return 0.0;
            }
            continue;
        }
        let a = (-0.5 - p0[axis]) / dir[axis];
        let b = (0.5 - p0[axis]) / dir[axis];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t1 - t0).max(0.0)
}
