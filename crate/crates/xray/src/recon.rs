//! Least-squares reconstruction, fine-grid resampling, analytic ellipse
//! phantoms, projection noise, and center-of-rotation calibration.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{fanbeam_rayset, FanBeamConfig, GridSpec, Ray, RaySet};
use crate::metrics::Image;
use crate::ops::{Sinogram, XrayOperator};
use crate::profiles::{eval_generator_2d, Generator};
use crate::tracer::CoefficientGrid;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub iterations: usize,
    pub lambda: f64,
    /// Relative residual tolerance for early exit; 0 runs all iterations.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            iterations: 30,
            lambda: 0.0,
            tol: 0.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::invalid("solver needs at least one iteration"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        Ok(())
    }
}

/// CGLS on (HᵀH + λI)c = Hᵀp from zero initialization.
pub fn cg_solve(
    rayset: &RaySet,
    gen: &Generator,
    sino: &Sinogram,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> Result<CoefficientGrid> {
    Ok(cg_solve_with_history(rayset, gen, sino, grid, cfg)?.0)
}

/// Like [`cg_solve`] but also returns ‖p − Hc_i‖ per iteration (index 0 is
/// the initial residual); CGLS makes this sequence non-increasing.
pub fn cg_solve_with_history(
    rayset: &RaySet,
    gen: &Generator,
    sino: &Sinogram,
    grid: &GridSpec,
    cfg: &SolverConfig,
) -> Result<(CoefficientGrid, Vec<f64>)> {
    cfg.validate()?;
    if sino.values.len() != rayset.len() {
        return Err(Error::invalid("sinogram length does not match ray count"));
    }
    let op = XrayOperator::new(rayset, *grid, gen);
    let n = op.n_coeffs();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut x = vec![0.0f64; n];
    let mut r = sino.values.clone(); // p − Hx with x = 0
    let mut s = op.apply_adjoint(&r)?; // Hᵀr − λx
    let mut p_dir = s.clone();
    let mut gamma: f64 = s.iter().map(|v| v * v).sum();
    let gamma0 = gamma;
    let mut history = vec![norm(&r)];
    if gamma0 == 0.0 {
        return Ok((CoefficientGrid::from_data(*grid, x)?, history));
    }
    for it in 0..cfg.iterations {
        let q = op.apply(&p_dir)?;
        let denom: f64 = q.iter().map(|v| v * v).sum::<f64>()
            + cfg.lambda * p_dir.iter().map(|v| v * v).sum::<f64>();
        if denom == 0.0 {
            break;
        }
        let alpha = gamma / denom;
        if !alpha.is_finite() {
            return Err(Error::Numerical {
                iteration: it,
                message: "non-finite CG step".into(),
            });
        }
        for i in 0..n {
            x[i] += alpha * p_dir[i];
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        let res = norm(&r);
        if !res.is_finite() {
            return Err(Error::Numerical {
                iteration: it,
                message: "non-finite residual".into(),
            });
        }
        history.push(res);
        s = op.apply_adjoint(&r)?;
        if cfg.lambda != 0.0 {
            for (si, xi) in s.iter_mut().zip(&x) {
                *si -= cfg.lambda * xi;
            }
        }
        let gamma_new: f64 = s.iter().map(|v| v * v).sum();
        if !gamma_new.is_finite() {
            return Err(Error::Numerical {
                iteration: it,
                message: "non-finite normal residual".into(),
            });
        }
        if cfg.tol > 0.0 && gamma_new.sqrt() <= cfg.tol * gamma0.sqrt() {
            break;
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, si) in p_dir.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    Ok((CoefficientGrid::from_data(*grid, x)?, history))
}

/// Evaluate the basis expansion on a fine grid: `factor²` samples per cell,
/// output side `n·factor`.
pub fn resample(coeffs: &CoefficientGrid, gen: &Generator, factor: usize) -> Result<Image> {
    if factor < 1 {
        return Err(Error::invalid("resample factor must be at least 1"));
    }
    let n = coeffs.n();
    let m = n * factor;
    let [ext_x, ext_y] = gen.axis_extent();
    let (rx, ry) = (ext_x / 2.0 + 1e-9, ext_y / 2.0 + 1e-9);
    let mut data = vec![0.0f64; m * m];
    data.par_chunks_mut(m).enumerate().for_each(|(j, row)| {
        let uy = (j as f64 + 0.5) / factor as f64;
        let qlo = ((uy - ry - 0.5).floor().max(0.0)) as usize;
        let qhi = (((uy + ry - 0.5).ceil()) as i64).clamp(0, n as i64 - 1) as usize;
        for (i, out) in row.iter_mut().enumerate() {
            let ux = (i as f64 + 0.5) / factor as f64;
            let plo = ((ux - rx - 0.5).floor().max(0.0)) as usize;
            let phi = (((ux + rx - 0.5).ceil()) as i64).clamp(0, n as i64 - 1) as usize;
            let mut acc = 0.0;
            for q in qlo..=qhi {
                for p in plo..=phi {
                    let c = coeffs.at(p, q);
                    if c != 0.0 {
                        acc += c
                            * eval_generator_2d(
                                gen,
                                [ux - (p as f64 + 0.5), uy - (q as f64 + 0.5)],
                            );
                    }
                }
            }
            *out = acc;
        }
    });
    Image::from_data(m, data)
}

#[derive(Debug, Clone)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_axes: (f64, f64),
    pub rotation: f64,
    pub density: f64,
}

impl Ellipse {
    pub fn new(center: [f64; 2], semi_axes: (f64, f64), rotation: f64, density: f64) -> Result<Ellipse> {
        if !(semi_axes.0 > 0.0 && semi_axes.1 > 0.0) {
            return Err(Error::invalid("ellipse semi-axes must be positive"));
        }
        Ok(Ellipse {
            center,
            semi_axes,
            rotation,
            density,
        })
    }

    /// Chord length of the ray through the ellipse (quadratic-root formula).
    pub fn chord(&self, ray: &Ray) -> f64 {
        let (sr, cr) = self.rotation.sin_cos();
        // Map to the frame where the ellipse is the unit disk.
        let to_disk = |v: [f64; 2]| {
            [
                (cr * v[0] + sr * v[1]) / self.semi_axes.0,
                (-sr * v[0] + cr * v[1]) / self.semi_axes.1,
            ]
        };
        let p0 = ray.point_at(0.0);
        let v = to_disk([p0[0] - self.center[0], p0[1] - self.center[1]]);
        let u = to_disk(ray.dir);
        let a = u[0] * u[0] + u[1] * u[1];
        let b = 2.0 * (u[0] * v[0] + u[1] * v[1]);
        let c = v[0] * v[0] + v[1] * v[1] - 1.0;
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            0.0
        } else {
            disc.sqrt() / a // |t1 − t2| with |ray.dir| = 1
        }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        let (sr, cr) = self.rotation.sin_cos();
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let ex = (cr * dx + sr * dy) / self.semi_axes.0;
        let ey = (-sr * dx + cr * dy) / self.semi_axes.1;
        ex * ex + ey * ey <= 1.0
    }
}

/// Analytic sinogram: density-weighted chords summed over ellipses.
pub fn ellipse_sinogram(ellipses: &[Ellipse], rayset: &RaySet) -> Sinogram {
    let values = rayset
        .rays
        .par_iter()
        .map(|ray| ellipses.iter().map(|e| e.density * e.chord(ray)).sum())
        .collect();
    Sinogram {
        rayset: rayset.clone(),
        values,
    }
}

/// Ground-truth raster of the phantom on the same sample points that
/// [`resample`] uses (side `grid.n·factor`, in grid-local coordinates).
pub fn ellipse_image(ellipses: &[Ellipse], grid: &GridSpec, factor: usize) -> Result<Image> {
    if factor < 1 {
        return Err(Error::invalid("raster factor must be at least 1"));
    }
    let m = grid.n * factor;
    let mut data = vec![0.0f64; m * m];
    data.par_chunks_mut(m).enumerate().for_each(|(j, row)| {
        let y = grid.origin[1] + (j as f64 + 0.5) / factor as f64;
        for (i, out) in row.iter_mut().enumerate() {
            let x = grid.origin[0] + (i as f64 + 0.5) / factor as f64;
            *out = ellipses
                .iter()
                .filter(|e| e.contains([x, y]))
                .map(|e| e.density)
                .sum();
        }
    });
    Image::from_data(m, data)
}

/// Built-in head-like ellipse phantom scaled to an n×n grid with origin at
/// (0, 0): one large body plus a few interior features of mixed density.
pub fn default_phantom(n: usize) -> Vec<Ellipse> {
    let s = n as f64;
    let e = |cx: f64, cy: f64, a: f64, b: f64, rot: f64, d: f64| {
        Ellipse::new([cx * s, cy * s], (a * s, b * s), rot, d).expect("positive axes")
    };
    vec![
        e(0.50, 0.50, 0.40, 0.34, 0.20, 1.0),
        e(0.58, 0.58, 0.12, 0.20, -0.40, -0.45),
        e(0.37, 0.44, 0.09, 0.06, 0.30, 0.70),
        e(0.50, 0.31, 0.06, 0.05, 0.00, 0.55),
        e(0.62, 0.38, 0.04, 0.08, 0.90, -0.30),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> NoiseSpec {
        NoiseSpec {
            variance: 1e-3,
            seed: 0,
        }
    }
}

/// Seeded additive white Gaussian noise; variance 0 is the identity.
pub fn add_noise(sino: &Sinogram, spec: &NoiseSpec) -> Result<Sinogram> {
    if !(spec.variance >= 0.0) {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    if spec.variance == 0.0 {
        return Ok(sino.clone());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.variance.sqrt())
        .map_err(|e| Error::invalid(format!("bad noise spec: {e}")))?;
    let values = sino
        .values
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    Ok(Sinogram {
        rayset: sino.rayset.clone(),
        values,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SearchRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl SearchRange {
    pub fn candidates(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) {
            return Err(Error::invalid("search step must be positive"));
        }
        let mut out = Vec::new();
        let mut i = 0usize;
        loop {
            let v = self.lo + i as f64 * self.step;
            if v > self.hi + 1e-12 {
                break;
            }
            out.push(v);
            i += 1;
        }
        if out.is_empty() {
            return Err(Error::invalid("empty center-of-rotation search range"));
        }
        Ok(out)
    }
}

/// Grid search over the center-of-rotation shift: each candidate rebuilds the
/// fan-beam ray set, runs a short reconstruction, and scores ‖p − Hc*‖.
/// Returns (candidate, residual) pairs in candidate order.
pub fn calibrate_cor_residuals(
    sino_values: &[f64],
    config: &FanBeamConfig,
    grid: &GridSpec,
    gen: &Generator,
    search: &SearchRange,
    cfg: &SolverConfig,
) -> Result<Vec<(f64, f64)>> {
    let candidates = search.candidates()?;
    cfg.validate()?;
    candidates
        .par_iter()
        .map(|&shift| {
            let mut c = config.clone();
            c.cor_shift = shift;
            let rayset = fanbeam_rayset(&c, grid)?;
            if rayset.len() != sino_values.len() {
                return Err(Error::invalid(
                    "sinogram length does not match fan-beam geometry",
                ));
            }
            let sino = Sinogram::new(rayset.clone(), sino_values.to_vec())?;
            let (_, history) = cg_solve_with_history(&rayset, gen, &sino, grid, cfg)?;
            Ok((shift, *history.last().expect("history never empty")))
        })
        .collect()
}

/// Argmin of [`calibrate_cor_residuals`]; ties break toward the smallest
/// |shift|.
pub fn calibrate_cor(
    sino_values: &[f64],
    config: &FanBeamConfig,
    grid: &GridSpec,
    gen: &Generator,
    search: &SearchRange,
    cfg: &SolverConfig,
) -> Result<f64> {
    let scored = calibrate_cor_residuals(sino_values, config, grid, gen, search, cfg)?;
    let mut best = scored[0];
    for &(shift, res) in &scored[1..] {
        if res < best.1 || (res == best.1 && shift.abs() < best.0.abs()) {
            best = (shift, res);
        }
    }
    Ok(best.0)
}
