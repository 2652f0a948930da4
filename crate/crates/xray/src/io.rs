//! File formats: text sinograms, raw float images, 16-bit PGM, and ray lists.
//!
//! Text floats are written with 17 significant digits so read(write(x))
//! reproduces every f64 bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Ray, RaySet};
use crate::metrics::Image;
use crate::ops::Sinogram;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::invalid(format!("bad {what}: {s:?}")))
}

/// `SINO1 M=<int>` header, then one `theta y value` line per ray.
pub fn write_sinogram(path: &Path, sino: &Sinogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "SINO1 M={}", sino.values.len())?;
    for (ray, v) in sino.rayset.rays.iter().zip(&sino.values) {
        writeln!(w, "{} {} {}", fmt_f64(ray.theta), fmt_f64(ray.offset), fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty sinogram file"))??;
    let m: usize = header
        .strip_prefix("SINO1 M=")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::invalid(format!("bad sinogram header: {header:?}")))?;
    let mut rays = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let theta = parse_f64(it.next().unwrap_or(""), "theta")?;
        let y = parse_f64(it.next().unwrap_or(""), "offset")?;
        let v = parse_f64(it.next().ok_or_else(|| Error::invalid("short sinogram line"))?, "value")?;
        if it.next().is_some() {
            return Err(Error::invalid(format!("trailing data in line: {line:?}")));
        }
        rays.push(Ray::from_angle_offset(theta, y)?);
        values.push(v);
    }
    if rays.len() != m {
        return Err(Error::invalid(format!(
            "sinogram header says {m} rays, file holds {}",
            rays.len()
        )));
    }
    Sinogram::new(
        RaySet {
            rays,
            metadata: "file".into(),
        },
        values,
    )
}

/// `IMGF64 <n> <n>` header line, then n·n little-endian f64 values.
pub fn write_image_raw(path: &Path, img: &Image) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "IMGF64 {} {}", img.n, img.n)?;
    for v in &img.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_image_raw(path: &Path) -> Result<Image> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    r.read_until(b'\n', &mut header)?;
    let header = String::from_utf8_lossy(&header);
    let mut it = header.split_whitespace();
    if it.next() != Some("IMGF64") {
        return Err(Error::invalid(format!("bad image header: {header:?}")));
    }
    let n: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::invalid("bad image width"))?;
    let n2: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::invalid("bad image height"))?;
    if n != n2 {
        return Err(Error::invalid("only square images are supported"));
    }
    let mut buf = vec![0u8; n * n * 8];
    r.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Image::from_data(n, data)
}

/// 16-bit binary PGM with the image linearly mapped from [min, max] to
/// [0, 65535]; display only (lossy).
pub fn write_image_pgm(path: &Path, img: &Image) -> Result<()> {
    let lo = img.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n65535\n", img.n, img.n)?;
    for v in &img.data {
        let g = (((v - lo) / span) * 65535.0).round().clamp(0.0, 65535.0) as u16;
        w.write_all(&g.to_be_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// One `theta y` pair per line; `#` comment lines and blanks are skipped.
pub fn read_rays(path: &Path) -> Result<RaySet> {
    let mut rays = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let theta = parse_f64(it.next().unwrap_or(""), "theta")?;
        let y = parse_f64(it.next().ok_or_else(|| Error::invalid("short ray line"))?, "offset")?;
        if it.next().is_some() {
            return Err(Error::invalid(format!("trailing data in ray line: {t:?}")));
        }
        rays.push(Ray::from_angle_offset(theta, y)?);
    }
    if rays.is_empty() {
        return Err(Error::invalid("ray file holds no rays"));
    }
    Ok(RaySet {
        rays,
        metadata: "file".into(),
    })
}

pub fn write_rays(path: &Path, rayset: &RaySet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for ray in &rayset.rays {
        writeln!(w, "{} {}", fmt_f64(ray.theta), fmt_f64(ray.offset))?;
    }
    w.flush()?;
    Ok(())
}
