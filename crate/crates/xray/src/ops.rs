//! Matrix-free forward operator H_φ and its adjoint over whole ray sets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, RaySet};
use crate::profiles::{project_generator, Generator};
use crate::tracer::{
    backproject_ray_with_profile, forward_ray_with_profile, CoefficientGrid,
};

#[derive(Debug, Clone)]
pub struct Sinogram {
    pub rayset: RaySet,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn new(rayset: RaySet, values: Vec<f64>) -> Result<Sinogram> {
        if rayset.len() != values.len() {
            return Err(Error::invalid("sinogram length does not match ray count"));
        }
        Ok(Sinogram { rayset, values })
    }
}

/// `values[m] = forward_ray(coeffs, rays[m], gen)`; rays are processed in
/// parallel into a preallocated output, so the ordering contract holds.
pub fn forward(coeffs: &CoefficientGrid, rayset: &RaySet, gen: &Generator) -> Result<Sinogram> {
    project_generator(gen, 0.0)?; // validates the direction list once
    let k = gen.neighbor_count();
    let values: Vec<f64> = rayset
        .rays
        .par_iter()
        .map(|ray| {
            let profile = project_generator(gen, ray.theta).expect("validated generator");
            forward_ray_with_profile(coeffs, ray, &profile, k)
        })
        .collect();
    Ok(Sinogram {
        rayset: rayset.clone(),
        values,
    })
}

/// Matched adjoint H_φᵀ, deterministic mode: rays are split into fixed
/// chunks, each chunk accumulates into a private grid, and the partial grids
/// are merged in chunk order. Two runs produce bit-identical results.
pub fn adjoint(sino: &Sinogram, grid: &GridSpec, gen: &Generator) -> Result<CoefficientGrid> {
    if sino.rayset.len() != sino.values.len() {
        return Err(Error::invalid("sinogram length does not match ray count"));
    }
    project_generator(gen, 0.0)?;
    let k = gen.neighbor_count();
    let m = sino.rayset.len().max(1);
    let chunk = (m / (rayon::current_num_threads() * 4).max(1)).max(32);
    let pairs: Vec<(usize, &[f64])> = sino
        .values
        .chunks(chunk)
        .enumerate()
        .map(|(i, c)| (i * chunk, c))
        .collect();
    let partials: Vec<CoefficientGrid> = pairs
        .par_iter()
        .map(|&(start, values)| {
            let mut acc = CoefficientGrid::zeros(*grid);
            for (ray, &v) in sino.rayset.rays[start..start + values.len()]
                .iter()
                .zip(values)
            {
                if v == 0.0 {
                    continue;
                }
                let profile = project_generator(gen, ray.theta).expect("validated generator");
                backproject_ray_with_profile(&mut acc, ray, v, &profile, k);
            }
            acc
        })
        .collect();
    let mut out = CoefficientGrid::zeros(*grid);
    for part in partials {
        for (o, p) in out.data.iter_mut().zip(&part.data) {
            *o += p;
        }
    }
    Ok(out)
}

/// Operator seam used by the solver: apply H and H' without materializing
/// anything.
pub struct XrayOperator<'a> {
    pub rayset: &'a RaySet,
    pub grid: GridSpec,
    pub gen: &'a Generator,
}

impl<'a> XrayOperator<'a> {
    pub fn new(rayset: &'a RaySet, grid: GridSpec, gen: &'a Generator) -> XrayOperator<'a> {
        XrayOperator { rayset, grid, gen }
    }

    pub fn n_rays(&self) -> usize {
        self.rayset.len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.grid.n * self.grid.n
    }

    pub fn apply(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        let c = CoefficientGrid::from_data(self.grid, coeffs.to_vec())?;
        Ok(forward(&c, self.rayset, self.gen)?.values)
    }

    pub fn apply_adjoint(&self, values: &[f64]) -> Result<Vec<f64>> {
        let sino = Sinogram::new(self.rayset.clone(), values.to_vec())?;
        Ok(adjoint(&sino, &self.grid, self.gen)?.data)
    }
}

/// Max over seeded random trials of the relative adjoint discrepancy
/// |⟨Hc, p⟩ − ⟨c, Hᵀp⟩| / (‖Hc‖‖p‖ + ‖c‖‖Hᵀp‖).
pub fn adjoint_dot_test(
    grid: &GridSpec,
    rayset: &RaySet,
    gen: &Generator,
    trials: usize,
    seed: u64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let op = XrayOperator::new(rayset, *grid, gen);
    let mut worst = 0.0f64;
    for _ in 0..trials.max(1) {
        let c: Vec<f64> = (0..op.n_coeffs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..op.n_rays()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hc = op.apply(&c).expect("shapes are consistent");
        let htp = op.apply_adjoint(&p).expect("shapes are consistent");
        let lhs: f64 = hc.iter().zip(&p).map(|(a, b)| a * b).sum();
        let rhs: f64 = c.iter().zip(&htp).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let denom = norm(&hc) * norm(&p) + norm(&c) * norm(&htp);
        if denom > 0.0 {
            worst = worst.max((lhs - rhs).abs() / denom);
        }
    }
    worst
}
