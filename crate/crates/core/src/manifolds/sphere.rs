//! The unit sphere: latitude/longitude points, great-circle distances and
//! polar caps.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{DissimilarityMatrix, PointCloud, Seed};

/// Latitude `lat` in `[-π/2, π/2]` and longitude `lon` in `[-π, π]`, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lat.abs() <= FRAC_PI_2 && self.lon.abs() <= PI) {
            return Err(Error::InvalidParameter(format!("geographic point ({}, {}) out of range", self.lat, self.lon)));
        }
        Ok(())
    }

    /// `(sin(φ+π/2) cos λ, sin(φ+π/2) sin λ, cos(φ+π/2))`.
    pub fn to_cartesian(&self) -> [f64; 3] {
        let polar = self.lat + FRAC_PI_2;
        [polar.sin() * self.lon.cos(), polar.sin() * self.lon.sin(), polar.cos()]
    }
}

/// `arccos⟨y_i, y_j⟩` with the inner product clamped to `[-1, 1]`.
pub fn great_circle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    dot.clamp(-1.0, 1.0).acos()
}

/// Cartesian embedding in `R^3` and the great-circle distance matrix.
pub fn sphere_sample_and_distance(points: &[GeoPoint]) -> Result<(PointCloud, DissimilarityMatrix)> {
    if points.is_empty() {
        return Err(Error::Empty("no geographic points".into()));
    }
    for p in points {
        p.validate()?;
    }
    let ys: Vec<[f64; 3]> = points.iter().map(GeoPoint::to_cartesian).collect();
    let rows: Vec<Vec<f64>> = ys.iter().map(|y| y.to_vec()).collect();
    let cloud = PointCloud::from_rows(&rows)?;
    let delta = DissimilarityMatrix::from_fn(ys.len(), |i, j| great_circle(ys[i], ys[j]));
    Ok((cloud, delta))
}

/// Spherical cap `{y ∈ S² : angle(y, north) <= max_polar_angle}` with the
/// pole at `(0, 0, 1)`; `max_polar_angle = π` is the whole sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereCap {
    pub max_polar_angle: f64,
}

impl SphereCap {
    pub fn new(max_polar_angle: f64) -> Result<Self> {
        let c = SphereCap { max_polar_angle };
        c.validate()?;
        Ok(c)
    }

    pub fn hemisphere() -> Self {
        SphereCap { max_polar_angle: FRAC_PI_2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_polar_angle > 0.0 && self.max_polar_angle <= PI) {
            return Err(Error::InvalidParameter(format!(
                "cap polar angle must lie in (0, π], got {}",
                self.max_polar_angle
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        TAU * (1.0 - self.max_polar_angle.cos())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != 3 {
            return false;
        }
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        (norm - 1.0).abs() <= 1e-9 && polar_angle(p) <= self.max_polar_angle + 1e-9
    }

    /// Area-uniform draw: height uniform on `[cos θ_max, 1]`, azimuth uniform.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let z_min = self.max_polar_angle.cos();
        let z: f64 = rng.random_range(z_min..=1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }

    pub fn sample(&self, n: usize, seed: Seed) -> Result<PointCloud> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Empty("sample size must be >= 1".into()));
        }
        let mut rng = seed.rng();
        let mut pts = Array2::zeros((n, 3));
        for i in 0..n {
            let p = self.sample_point(&mut rng);
            for k in 0..3 {
                pts[[i, k]] = p[k];
            }
        }
        PointCloud::new(pts)
    }

    /// Spherical Fibonacci lattice restricted to the cap: `n` nearly evenly
    /// spread points, deterministic.
    pub fn fibonacci_lattice(&self, n: usize) -> Result<PointCloud> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Empty("lattice size must be >= 1".into()));
        }
        let golden = PI * (3.0 - 5.0_f64.sqrt());
        let z_min = self.max_polar_angle.cos();
        let mut pts = Array2::zeros((n, 3));
        for i in 0..n {
            let z = 1.0 - (1.0 - z_min) * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            pts[[i, 0]] = r * phi.cos();
            pts[[i, 1]] = r * phi.sin();
            pts[[i, 2]] = z;
        }
        PointCloud::new(pts)
    }
}

fn polar_angle(p: &[f64]) -> f64 {
    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
    r.atan2(p[2])
}

/// Angle between two nonzero vectors of `R^3`, stable for nearly parallel
/// inputs.
pub(crate) fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let c = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    c.atan2(d)
}
