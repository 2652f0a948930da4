//! Matrix-free 2D x-ray transform for images expanded in shift-invariant
//! generator bases (pixels, box splines, tensor B-splines), with a matched
//! adjoint and a conjugate-gradient least-squares reconstructor.

pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod ops;
pub mod profiles;
pub mod recon;
pub mod tracer;

pub use error::{Error, Result};
pub use geometry::{
    fanbeam_rayset, parallel_rayset, FanBeamConfig, GridSpec, Orientation, Point, Ray, RaySet,
};
pub use metrics::{psnr, ssim, Image};
pub use ops::{adjoint, adjoint_dot_test, forward, Sinogram, XrayOperator};
pub use recon::{
    add_noise, calibrate_cor, calibrate_cor_residuals, cg_solve, default_phantom, ellipse_image,
    ellipse_sinogram, resample, Ellipse, NoiseSpec, SearchRange, SolverConfig,
};
pub use profiles::{eval_generator_2d, fourier_hat, project_generator, Generator, ProjectedProfile};
pub use tracer::{
    backproject_ray, basis_contribution, forward_ray, trace_cells, CoefficientGrid, TraversalStep,
};
