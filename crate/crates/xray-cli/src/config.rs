//! key=value run configuration with strict key checking.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use xray::geometry::FanBeamConfig;
use xray::profiles::Generator;
use xray::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "generator",
    "grid",
    "geometry",
    "angles",
    "offsets",
    "rays",
    "dso",
    "dsd",
    "pitch",
    "detectors",
    "fan_angles",
    "cor_shift",
    "iterations",
    "lambda",
    "tol",
    "seed",
    "noise_variance",
    "noise_seed",
    "factor",
    "in_image",
    "in_sino",
    "truth",
    "out_image",
    "out_sino",
    "out",
    "search_lo",
    "search_hi",
    "search_step",
    "bench_sizes",
    "bench_reps",
    "profile_angles",
    "samples",
];

#[derive(Debug, Default, Clone)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| {
                Error::invalid(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let k = k.trim();
            if !KNOWN_KEYS.contains(&k) {
                return Err(Error::invalid(format!(
                    "config line {}: unknown key {k:?}",
                    lineno + 1
                )));
            }
            map.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Settings { map })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.map.insert(key.to_string(), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::invalid(format!("{key}: expected integer, got {s:?}"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::invalid(format!("{key}: expected integer, got {s:?}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::invalid(format!("{key}: expected number, got {s:?}"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    pub fn path_req(&self, key: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| Error::invalid(format!("missing required key {key:?}")))
    }

    pub fn generator(&self) -> Result<Generator> {
        parse_generator(self.raw("generator").unwrap_or("pixel"))
    }

    pub fn grid_n(&self) -> Result<usize> {
        let n = self.usize_or("grid", 64)?;
        if n == 0 {
            return Err(Error::invalid("grid must be positive"));
        }
        Ok(n)
    }

    pub fn fan_config(&self) -> Result<FanBeamConfig> {
        let n_views = self.usize_or("fan_angles", 90)?;
        let angles = (0..n_views)
            .map(|i| i as f64 * 2.0 * std::f64::consts::PI / n_views as f64)
            .collect();
        Ok(FanBeamConfig {
            source_to_detector: self.f64_or("dsd", 200.0)?,
            source_to_object: self.f64_or("dso", 100.0)?,
            detector_pitch: self.f64_or("pitch", 1.0)?,
            n_detectors: self.usize_or("detectors", 64)?,
            angles,
            cor_shift: self.f64_or("cor_shift", 0.0)?,
        })
    }
}

pub fn parse_generator(s: &str) -> Result<Generator> {
    match s {
        "pixel" => Ok(Generator::Pixel),
        "box3" => Ok(Generator::BoxSpline3),
        "box4" => Ok(Generator::BoxSpline4),
        _ => {
            if let Some(n) = s.strip_prefix("bspline") {
                let n: u8 = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad B-spline degree in {s:?}")))?;
                Ok(Generator::TensorBSpline(n))
            } else {
                Err(Error::invalid(format!(
                    "unknown generator {s:?} (expected pixel|box3|box4|bspline<n>)"
                )))
            }
        }
    }
}
