//! Image quality metrics used by the reconstruction experiments.
//!
//! SSIM details (the usual choices, pinned here so reports are reproducible):
//! 11×11 Gaussian window with σ = 1.5 truncated to the window and
//! renormalized, stabilizers C1 = (K1·L)² and C2 = (K2·L)² with K1 = 0.01,
//! K2 = 0.03, dynamic range L = max of the reference image (floored at 1e-12),
//! valid windows only (no padding), plain mean over window positions.

use crate::error::{Error, Result};

/// Square grayscale image with side `n`, row-major (`data[q*n + p]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(n: usize) -> Image {
        Image {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_data(n: usize, data: Vec<f64>) -> Result<Image> {
        if data.len() != n * n {
            return Err(Error::invalid("image data length does not match side"));
        }
        Ok(Image { n, data })
    }

    pub fn at(&self, p: usize, q: usize) -> f64 {
        self.data[q * self.n + p]
    }
}

/// 10·log10(peak²/MSE); +∞ for identical images.
pub fn psnr(x: &Image, reference: &Image, peak: f64) -> Result<f64> {
    if x.n != reference.n {
        return Err(Error::invalid("psnr: image shapes differ"));
    }
    let mse: f64 = x
        .data
        .iter()
        .zip(&reference.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for j in 0..SSIM_WINDOW {
        for i in 0..SSIM_WINDOW {
            let dx = i as f64 - c;
            let dy = j as f64 - c;
            let g = (-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[j * SSIM_WINDOW + i] = g;
            sum += g;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean structural similarity over all fully interior 11×11 windows.
pub fn ssim(x: &Image, reference: &Image) -> Result<f64> {
    if x.n != reference.n {
        return Err(Error::invalid("ssim: image shapes differ"));
    }
    let n = x.n;
    if n < SSIM_WINDOW {
        return Err(Error::invalid("ssim: image smaller than the 11x11 window"));
    }
    let peak = reference
        .data
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let c1 = (SSIM_K1 * peak) * (SSIM_K1 * peak);
    let c2 = (SSIM_K2 * peak) * (SSIM_K2 * peak);
    let w = gaussian_window();
    let mut acc = 0.0;
    let mut count = 0usize;
    for q0 in 0..=(n - SSIM_WINDOW) {
        for p0 in 0..=(n - SSIM_WINDOW) {
            let (mut mx, mut my) = (0.0, 0.0);
            for j in 0..SSIM_WINDOW {
                for i in 0..SSIM_WINDOW {
                    let g = w[j * SSIM_WINDOW + i];
                    mx += g * x.at(p0 + i, q0 + j);
                    my += g * reference.at(p0 + i, q0 + j);
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..SSIM_WINDOW {
                for i in 0..SSIM_WINDOW {
                    let g = w[j * SSIM_WINDOW + i];
                    let dx = x.at(p0 + i, q0 + j) - mx;
                    let dy = reference.at(p0 + i, q0 + j) - my;
                    vx += g * dx * dx;
                    vy += g * dy * dy;
                    cov += g * dx * dy;
                }
            }
            acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    Ok(acc / count as f64)
}
