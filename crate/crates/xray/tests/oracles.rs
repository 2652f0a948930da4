//! Cross-validation of the library against independently written oracles.

mod common;

use common::*;
use xray::geometry::{fanbeam_rayset, parallel_rayset, FanBeamConfig, GridSpec, Ray, RaySet};
use xray::ops::{adjoint, forward, Sinogram};
use xray::profiles::{fourier_hat, project_generator, Generator};
use xray::tracer::CoefficientGrid;

fn test_generators() -> Vec<Generator> {
    vec![
        Generator::Pixel,
        Generator::BoxSpline3,
        Generator::BoxSpline4,
        Generator::TensorBSpline(2),
    ]
}

/// Angle with every projected rect width comfortably non-degenerate, so the
/// numerical oracle's accuracy statement applies.
fn safe_angle(rng: &mut Lcg, gen: &Generator) -> f64 {
    loop {
        let theta = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
        let widths = projected_widths(gen, theta);
        if widths.len() == gen.directions().len()
            && widths.iter().all(|w| *w > 0.05)
        {
            return theta;
        }
    }
}

#[test]
fn engine_matches_numerical_convolution() {
    let mut rng = Lcg::new(11);
    for gen in test_generators() {
        for _ in 0..8 {
            let theta = safe_angle(&mut rng, &gen);
            let widths = projected_widths(&gen, theta);
            let oracle = ConvOracle::build(&widths, 1e-4);
            let profile = project_generator(&gen, theta).unwrap();
            let w = profile.support_half_width();
            for _ in 0..40 {
                let y = rng.range(-1.1 * w, 1.1 * w);
                let diff = (profile.eval(y) - oracle.eval(y)).abs();
                assert!(diff <= 1e-6, "{} θ={theta} y={y}: {diff:e}", gen.name());
            }
        }
    }
}

#[test]
fn engine_matches_2d_line_quadrature() {
    let mut rng = Lcg::new(23);
    for gen in [
        Generator::BoxSpline3,
        Generator::BoxSpline4,
        Generator::TensorBSpline(2),
    ] {
        for _ in 0..17 {
            let theta = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
            let profile = project_generator(&gen, theta).unwrap();
            let y = rng.range(-1.0, 1.0) * profile.support_half_width();
            let diff = (profile.eval(y) - line_quadrature(&gen, theta, y)).abs();
            assert!(diff <= 1e-5, "{} θ={theta} y={y}: {diff:e}", gen.name());
        }
    }
}

#[test]
fn pixel_profile_is_square_chord() {
    let mut rng = Lcg::new(31);
    for _ in 0..300 {
        let theta = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
        let profile = project_generator(&Generator::Pixel, theta).unwrap();
        let y = rng.range(-1.0, 1.0);
        let diff = (profile.eval(y) - square_chord(theta, y)).abs();
        // The chord jumps at the corners of the square; skip the jump set.
        let w = profile.support_half_width();
        if (y.abs() - w).abs() < 1e-9 {
            continue;
        }
        assert!(diff <= 1e-9, "θ={theta} y={y}: {diff:e}");
    }
}

/// The profile's 1D Fourier transform must be the slice of the generator's
/// 2D transform along the projection direction. Gauss–Legendre between the
/// knots keeps the quadrature of polynomial×cosine sharp.
#[test]
fn fourier_slice_identity() {
    const GL_X: [f64; 8] = [
        -0.9602898564975362,
        -0.7966664774136267,
        -0.525532409916329,
        -0.1834346424956498,
        0.1834346424956498,
        0.525532409916329,
        0.7966664774136267,
        0.9602898564975362,
    ];
    const GL_W: [f64; 8] = [
        0.10122853629037626,
        0.22238103445337448,
        0.31370664587788727,
        0.362683783378362,
        0.362683783378362,
        0.31370664587788727,
        0.22238103445337448,
        0.10122853629037626,
    ];
    let mut rng = Lcg::new(47);
    for gen in test_generators() {
        for _ in 0..10 {
            let theta = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
            let omega = rng.range(-6.0, 6.0);
            let profile = project_generator(&gen, theta).unwrap();
            if profile.is_dirac() {
                continue;
            }
            let w = profile.support_half_width();
            let mut cuts: Vec<f64> = profile.knots().iter().map(|k| k - w).collect();
            cuts.push(w);
            // Extra splits keep each panel well under a cosine period.
            let mut ft = 0.0;
            for seg in cuts.windows(2) {
                let parts = ((seg[1] - seg[0]).abs() * omega.abs() / 2.0).ceil().max(1.0) as usize;
                for part in 0..parts {
                    let lo = seg[0] + (seg[1] - seg[0]) * part as f64 / parts as f64;
                    let hi = seg[0] + (seg[1] - seg[0]) * (part + 1) as f64 / parts as f64;
                    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                    for (x, gw) in GL_X.iter().zip(&GL_W) {
                        let y = mid + x * half;
                        ft += gw * half * profile.eval(y) * (omega * y).cos();
                    }
                }
            }
            let (s, c) = theta.sin_cos();
            let expect = fourier_hat(&gen, [omega * s, -omega * c]); // slice along the normal
            assert!(
                (ft - expect).abs() <= 1e-8,
                "{} θ={theta} ω={omega}: {ft} vs {expect}",
                gen.name()
            );
        }
    }
}

fn random_coeffs(grid: GridSpec, rng: &mut Lcg) -> CoefficientGrid {
    let mut c = CoefficientGrid::zeros(grid);
    for v in &mut c.data {
        *v = rng.range(-1.0, 1.0);
    }
    c
}

fn random_rayset(rng: &mut Lcg, count: usize, n: usize) -> RaySet {
    let rays = (0..count)
        .map(|_| {
            let theta = rng.range(-std::f64::consts::PI, std::f64::consts::PI);
            let offset = rng.range(-0.8 * n as f64, 0.8 * n as f64);
            Ray::from_angle_offset(theta, offset).unwrap()
        })
        .collect();
    RaySet {
        rays,
        metadata: "random".into(),
    }
}

fn fan_config(n_detectors: usize, n_views: usize) -> FanBeamConfig {
    FanBeamConfig {
        source_to_detector: 200.0,
        source_to_object: 100.0,
        detector_pitch: 1.0,
        n_detectors,
        angles: (0..n_views)
            .map(|i| i as f64 * 2.0 * std::f64::consts::PI / n_views as f64)
            .collect(),
        cor_shift: 0.1,
    }
}

#[test]
fn forward_and_adjoint_match_dense_operator() {
    let mut rng = Lcg::new(59);
    let grid = GridSpec::new(16);
    let raysets = vec![
        parallel_rayset(12, 14, &grid).unwrap(),
        fanbeam_rayset(&fan_config(16, 10), &grid).unwrap(),
        random_rayset(&mut rng, 120, 16),
    ];
    for gen in test_generators() {
        for rayset in &raysets {
            let h = dense_operator(&grid, rayset, &gen);
            let c = random_coeffs(grid, &mut rng);
            let fwd = forward(&c, rayset, &gen).unwrap();
            let expect = dense_forward(&h, &c.data);
            for (a, b) in fwd.values.iter().zip(&expect) {
                assert!((a - b).abs() <= 1e-12, "{} forward", gen.name());
            }
            let p: Vec<f64> = (0..rayset.len()).map(|_| rng.range(-1.0, 1.0)).collect();
            let sino = Sinogram::new(rayset.clone(), p.clone()).unwrap();
            let back = adjoint(&sino, &grid, &gen).unwrap();
            let expect = dense_adjoint(&h, &p);
            for (a, b) in back.data.iter().zip(&expect) {
                assert!((a - b).abs() <= 1e-12, "{} adjoint", gen.name());
            }
        }
    }
}

#[test]
fn pixel_forward_matches_classic_siddon() {
    let mut rng = Lcg::new(71);
    let grid = GridSpec::new(20);
    let coeffs = random_coeffs(grid, &mut rng);
    let rayset = random_rayset(&mut rng, 200, 20);
    let fwd = forward(&coeffs, &rayset, &Generator::Pixel).unwrap();
    for (ray, v) in rayset.rays.iter().zip(&fwd.values) {
        let expect = siddon_forward(&coeffs, ray);
        assert!(
            (v - expect).abs() <= 1e-12,
            "θ={} y={}: {v} vs {expect}",
            ray.theta,
            ray.offset
        );
    }
}

