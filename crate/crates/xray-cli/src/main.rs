mod config;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::Settings;
use xray::geometry::{fanbeam_rayset, parallel_rayset, GridSpec, RaySet};
use xray::io;
use xray::metrics::{psnr, ssim, Image};
use xray::ops::{adjoint, adjoint_dot_test, forward};
use xray::profiles::{project_generator, Generator};
use xray::recon::{
    add_noise, calibrate_cor_residuals, cg_solve, default_phantom, ellipse_image,
    ellipse_sinogram, resample, NoiseSpec, SearchRange, SolverConfig,
};
use xray::tracer::CoefficientGrid;
use xray::{Error, Result};

#[derive(Parser)]
#[command(
    name = "xray",
    version,
    about = "Matrix-free x-ray projector, matched back-projector, and CG reconstructor"
)]
struct Cli {
    /// key=value run configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// pixel | box3 | box4 | bspline<n>
    #[arg(long, global = true)]
    generator: Option<String>,
    /// grid side length
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// parallel | fanbeam | file
    #[arg(long, global = true)]
    geometry: Option<String>,
    /// ray list file ("theta y" per line) for --geometry file
    #[arg(long, global = true)]
    rays: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// primary output path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the analytic ellipse phantom: ground-truth raster + sinogram
    Phantom,
    /// Forward-project a coefficient image into a sinogram
    Project,
    /// Back-project a sinogram with the matched adjoint
    Backproject,
    /// Verify the forward/adjoint pairing with the dot-product test
    AdjointCheck,
    /// CG least-squares reconstruction, resampled to a fine image
    Reconstruct,
    /// Dump projected profiles φ_θ(y) as CSV
    ProfileDump,
    /// Time forward and adjoint across grid sizes and generators
    Benchmark,
    /// Grid-search the fan-beam center-of-rotation shift
    Calibrate,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Ok(v) = std::env::var("XRAY_WORKERS") {
        if let Ok(k) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidArgument(_) => 1,
                Error::Numerical { .. } => 2,
                Error::Io(_) => 3,
            };
            std::process::exit(code);
        }
    }
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    if let Some(g) = &cli.generator {
        s.set("generator", g.clone());
    }
    if let Some(n) = cli.grid {
        s.set("grid", n.to_string());
    }
    if let Some(g) = &cli.geometry {
        s.set("geometry", g.clone());
    }
    if let Some(p) = &cli.rays {
        s.set("rays", p.display().to_string());
    }
    if let Some(seed) = cli.seed {
        s.set("seed", seed.to_string());
    }
    if let Some(p) = &cli.out {
        s.set("out", p.display().to_string());
    }
    Ok(s)
}

fn build_rayset(s: &Settings, grid: &GridSpec) -> Result<RaySet> {
    match s.raw("geometry").unwrap_or("parallel") {
        "parallel" => {
            let n_angles = s.usize_or("angles", 2 * grid.n)?;
            let n_offsets = s.usize_or("offsets", grid.n)?;
            parallel_rayset(n_angles, n_offsets, grid)
        }
        "fanbeam" => fanbeam_rayset(&s.fan_config()?, grid),
        "file" => io::read_rays(&s.path_req("rays")?),
        other => Err(Error::invalid(format!(
            "unknown geometry {other:?} (expected parallel|fanbeam|file)"
        ))),
    }
}

fn solver_config(s: &Settings) -> Result<SolverConfig> {
    Ok(SolverConfig {
        iterations: s.usize_or("iterations", 30)?,
        lambda: s.f64_or("lambda", 0.0)?,
        tol: s.f64_or("tol", 0.0)?,
        seed: s.u64_or("seed", 0)?,
    })
}

fn out_path(s: &Settings, specific: &str, default: &str) -> PathBuf {
    s.path(specific)
        .or_else(|| s.path("out"))
        .unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: &Cli) -> Result<()> {
    let s = settings(cli)?;
    match cli.cmd {
        Cmd::Phantom => cmd_phantom(&s),
        Cmd::Project => cmd_project(&s),
        Cmd::Backproject => cmd_backproject(&s),
        Cmd::AdjointCheck => cmd_adjoint_check(&s),
        Cmd::Reconstruct => cmd_reconstruct(&s),
        Cmd::ProfileDump => cmd_profile_dump(&s),
        Cmd::Benchmark => cmd_benchmark(&s),
        Cmd::Calibrate => cmd_calibrate(&s),
    }
}

fn cmd_phantom(s: &Settings) -> Result<()> {
    let n = s.grid_n()?;
    let grid = GridSpec::new(n);
    let phantom = default_phantom(n);
    let factor = s.usize_or("factor", 4)?;
    let raster = ellipse_image(&phantom, &grid, factor)?;
    let rayset = build_rayset(s, &grid)?;
    let mut sino = ellipse_sinogram(&phantom, &rayset);
    let variance = s.f64_or("noise_variance", 0.0)?;
    if variance > 0.0 {
        let spec = NoiseSpec {
            variance,
            seed: s.u64_or("noise_seed", s.u64_or("seed", 0)?)?,
        };
        sino = add_noise(&sino, &spec)?;
    }
    let img_path = out_path(s, "out_image", "phantom.img");
    let sino_path = out_path(s, "out_sino", "phantom.sino");
    io::write_image_raw(&img_path, &raster)?;
    io::write_sinogram(&sino_path, &sino)?;
    println!(
        "phantom n={} factor={} rays={} image={} sinogram={}",
        n,
        factor,
        sino.values.len(),
        img_path.display(),
        sino_path.display()
    );
    Ok(())
}

fn cmd_project(s: &Settings) -> Result<()> {
    let img = io::read_image_raw(&s.path_req("in_image")?)?;
    let grid = GridSpec::new(img.n);
    let coeffs = CoefficientGrid::from_data(grid, img.data)?;
    let rayset = build_rayset(s, &grid)?;
    let gen = s.generator()?;
    let sino = forward(&coeffs, &rayset, &gen)?;
    let path = out_path(s, "out_sino", "out.sino");
    io::write_sinogram(&path, &sino)?;
    println!(
        "project generator={} n={} rays={} out={}",
        gen.name(),
        img.n,
        sino.values.len(),
        path.display()
    );
    Ok(())
}

fn cmd_backproject(s: &Settings) -> Result<()> {
    let sino = io::read_sinogram(&s.path_req("in_sino")?)?;
    let n = s.grid_n()?;
    let grid = GridSpec::new(n);
    let gen = s.generator()?;
    let back = adjoint(&sino, &grid, &gen)?;
    let img = Image::from_data(n, back.data)?;
    let path = out_path(s, "out_image", "out.img");
    io::write_image_raw(&path, &img)?;
    println!(
        "backproject generator={} n={} rays={} out={}",
        gen.name(),
        n,
        sino.values.len(),
        path.display()
    );
    Ok(())
}

fn cmd_adjoint_check(s: &Settings) -> Result<()> {
    let n = s.grid_n()?;
    let grid = GridSpec::new(n);
    let rayset = build_rayset(s, &grid)?;
    let gen = s.generator()?;
    let d = adjoint_dot_test(&grid, &rayset, &gen, 3, s.u64_or("seed", 0)?);
    println!(
        "adjoint-check generator={} M={} N={} max_rel={:.3e}",
        gen.name(),
        rayset.len(),
        n,
        d
    );
    if d > 1e-10 {
        return Err(Error::Numerical {
            iteration: 0,
            message: format!("adjoint discrepancy {d:.3e} exceeds 1e-10"),
        });
    }
    Ok(())
}

fn cmd_reconstruct(s: &Settings) -> Result<()> {
    let sino = io::read_sinogram(&s.path_req("in_sino")?)?;
    let n = s.grid_n()?;
    let grid = GridSpec::new(n);
    let gen = s.generator()?;
    let cfg = solver_config(s)?;
    let coeffs = cg_solve(&sino.rayset, &gen, &sino, &grid, &cfg)?;
    let factor = s.usize_or("factor", 4)?;
    let img = resample(&coeffs, &gen, factor)?;
    let path = out_path(s, "out_image", "recon.img");
    io::write_image_raw(&path, &img)?;
    if let Some(truth_path) = s.path("truth") {
        let truth = io::read_image_raw(&truth_path)?;
        let peak = truth.data.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
        let p = psnr(&img, &truth, peak)?;
        let q = ssim(&img, &truth)?;
        println!("{},{},{:.6},{:.6}", gen.name(), n, p, q);
    } else {
        println!("{},{},,", gen.name(), n);
    }
    Ok(())
}

fn cmd_profile_dump(s: &Settings) -> Result<()> {
    let gen = s.generator()?;
    let n_angles = s.usize_or("profile_angles", 9)?.max(1);
    let samples = s.usize_or("samples", 201)?.max(2);
    let mut rows = String::from("theta,y,value\n");
    for i in 0..n_angles {
        // θ sweeps [−π/4, π/4).
        let theta = -std::f64::consts::FRAC_PI_4
            + i as f64 * std::f64::consts::FRAC_PI_2 / n_angles as f64;
        let profile = project_generator(&gen, theta)?;
        let w = profile.support_half_width();
        for j in 0..samples {
            let y = -w + 2.0 * w * j as f64 / (samples - 1) as f64;
            rows.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", theta, y, profile.eval(y)));
        }
    }
    match s.path("out") {
        Some(p) => std::fs::write(p, rows).map_err(Error::from)?,
        None => print!("{rows}"),
    }
    Ok(())
}

fn median_ms(times: &mut Vec<f64>) -> f64 {
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn cmd_benchmark(s: &Settings) -> Result<()> {
    let sizes: Vec<usize> = s
        .raw("bench_sizes")
        .unwrap_or("64,128")
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad bench size {t:?}")))
        })
        .collect::<Result<_>>()?;
    let reps = s.usize_or("bench_reps", 5)?.max(1);
    let mut out = String::from("op,generator,N,ms\n");
    for &n in &sizes {
        let grid = GridSpec::new(n);
        let rayset = build_rayset(s, &grid)?;
        let mut coeffs = CoefficientGrid::zeros(grid);
        for (i, v) in coeffs.data.iter_mut().enumerate() {
            *v = ((i * 2654435761) % 997) as f64 / 997.0;
        }
        for gen in [Generator::Pixel, Generator::BoxSpline3, Generator::BoxSpline4] {
            let sino = forward(&coeffs, &rayset, &gen)?; // warmup + adjoint input
            let mut fw = Vec::with_capacity(reps);
            for _ in 0..reps {
                let t = Instant::now();
                let _ = forward(&coeffs, &rayset, &gen)?;
                fw.push(t.elapsed().as_secs_f64() * 1e3);
            }
            let _ = adjoint(&sino, &grid, &gen)?; // warmup
            let mut bw = Vec::with_capacity(reps);
            for _ in 0..reps {
                let t = Instant::now();
                let _ = adjoint(&sino, &grid, &gen)?;
                bw.push(t.elapsed().as_secs_f64() * 1e3);
            }
            out.push_str(&format!("forward,{},{},{:.3}\n", gen.name(), n, median_ms(&mut fw)));
            out.push_str(&format!("adjoint,{},{},{:.3}\n", gen.name(), n, median_ms(&mut bw)));
        }
    }
    match s.path("out") {
        Some(p) => std::fs::write(p, out).map_err(Error::from)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_calibrate(s: &Settings) -> Result<()> {
    let sino = io::read_sinogram(&s.path_req("in_sino")?)?;
    let n = s.grid_n()?;
    let grid = GridSpec::new(n);
    let gen = s.generator()?;
    let config = s.fan_config()?;
    let search = SearchRange {
        lo: s.f64_or("search_lo", -0.5)?,
        hi: s.f64_or("search_hi", 0.5)?,
        step: s.f64_or("search_step", 0.05)?,
    };
    let mut cfg = solver_config(s)?;
    if s.raw("iterations").is_none() {
        cfg.iterations = 10; // short inner solves are enough for scoring
    }
    let scored = calibrate_cor_residuals(&sino.values, &config, &grid, &gen, &search, &cfg)?;
    for (shift, res) in &scored {
        println!("candidate {shift:.6} residual {res:.6e}");
    }
    let mut best = scored[0];
    for &(shift, res) in &scored[1..] {
        if res < best.1 || (res == best.1 && shift.abs() < best.0.abs()) {
            best = (shift, res);
        }
    }
    println!("best {:.6}", best.0);
    Ok(())
}
