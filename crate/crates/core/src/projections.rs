//! Flat maps of the unit sphere: three classical projections and an MDS map
//! built from great-circle distances.
//!
//! Points that a projection cannot represent are reported by index and
//! dropped from the output.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::{sphere_sample_and_distance, GeoPoint};
use crate::mds::{self, StressParams};
use crate::types::Configuration;

/// Central meridian for maps of the Western Hemisphere.
pub const WESTERN_CENTRAL_MERIDIAN: f64 = -FRAC_PI_2;

/// A projection is singular where its denominator falls below this.
const SINGULAR_TOL: f64 = 1e-12;

/// Geographic points on the unit sphere, radians.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeoPointSet {
    pub points: Vec<GeoPoint>,
}

impl GeoPointSet {
    pub fn new(points: Vec<GeoPoint>) -> Result<Self> {
        for p in &points {
            p.validate()?;
        }
        Ok(GeoPointSet { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points with longitude in `[-π, 0]`.
    pub fn western_hemisphere(&self) -> GeoPointSet {
        GeoPointSet { points: self.points.iter().copied().filter(is_western).collect() }
    }
}

fn is_western(p: &GeoPoint) -> bool {
    (-PI..=0.0).contains(&p.lon)
}

/// Output of a projection that may be singular at some inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    /// One row per kept point, in input order.
    pub config: Configuration,
    /// Input index of each output row.
    pub kept: Vec<usize>,
    /// Input indices where the projection is undefined.
    pub singular: Vec<usize>,
}

fn project(g: &GeoPointSet, f: impl Fn(&GeoPoint) -> Option<[f64; 2]>) -> Result<Projected> {
    let mut rows = Vec::with_capacity(g.len());
    let mut kept = Vec::with_capacity(g.len());
    let mut singular = Vec::new();
    for (i, p) in g.points.iter().enumerate() {
        match f(p) {
            Some(z) => {
                rows.push(z);
                kept.push(i);
            }
            None => singular.push(i),
        }
    }
    let mut coords = Array2::zeros((rows.len(), 2));
    for (i, z) in rows.iter().enumerate() {
        coords[[i, 0]] = z[0];
        coords[[i, 1]] = z[1];
    }
    Ok(Projected { config: Configuration::new(coords)?, kept, singular })
}

/// Longitude and latitude as Cartesian coordinates: `z = (λ, φ)`.
pub fn equirectangular(g: &GeoPointSet) -> Result<Configuration> {
    Ok(project(g, |p| Some([p.lon, p.lat]))?.config)
}

/// Transverse Mercator about the meridian `lambda0`:
/// `x = ½ log((1+s)/(1−s))` with `s = cos φ sin(λ−λ0)`, and
/// `y = atan2(sin φ, cos φ cos(λ−λ0))`. Singular where `|s| = 1`.
pub fn transverse_mercator(g: &GeoPointSet, lambda0: f64) -> Result<Projected> {
    project(g, |p| {
        if p.lat.abs() == FRAC_PI_2 {
            return Some([0.0, p.lat]);
        }
        let dl = p.lon - lambda0;
        let s = p.lat.cos() * dl.sin();
        if 1.0 - s.abs() < SINGULAR_TOL {
            return None;
        }
        let x = 0.5 * ((1.0 + s) / (1.0 - s)).ln();
        let y = p.lat.sin().atan2(p.lat.cos() * dl.cos());
        Some([x, y])
    })
}

/// Lambert azimuthal equal-area projection centered at `(0, lambda0)`:
/// `z = √(2 / (1 + cos φ cos(λ−λ0))) · (cos φ sin(λ−λ0), sin φ)`. Singular
/// at the antipode of the center.
pub fn lambert_azimuthal(g: &GeoPointSet, lambda0: f64) -> Result<Projected> {
    project(g, |p| {
        let dl = p.lon - lambda0;
        let denom = 1.0 + p.lat.cos() * dl.cos();
        if denom < SINGULAR_TOL {
            return None;
        }
        let k = (2.0 / denom).sqrt();
        Some([k * p.lat.cos() * dl.sin(), k * p.lat.sin()])
    })
}

#[derive(Debug, Clone)]
pub struct MdsMap {
    pub config: Configuration,
    /// Raw stress of the classical MDS start.
    pub initial_stress: f64,
    pub final_stress: f64,
    pub trace: Vec<f64>,
}

/// Planar configuration whose distances approximate great-circle distances:
/// classical MDS start refined by stress majorization.
pub fn mds_map(g: &GeoPointSet, params: &StressParams, d: usize) -> Result<MdsMap> {
    if g.len() < 3 {
        return Err(Error::InvalidParameter(format!("an MDS map needs at least 3 points, got {}", g.len())));
    }
    let (_, delta) = sphere_sample_and_distance(&g.points)?;
    let init = mds::cmds(&delta, d)?;
    let res = mds::smacof(&delta, &init, params)?;
    Ok(MdsMap {
        initial_stress: res.initial_stress(),
        final_stress: res.final_stress(),
        trace: res.trace,
        config: res.config,
    })
}

/// Regular latitude/longitude grid over the Western Hemisphere, poles and
/// boundary meridians included; stands in for coastline data.
pub fn synthetic_hemisphere_grid(n_lat: usize, n_lon: usize) -> Result<GeoPointSet> {
    if n_lat < 2 || n_lon < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 latitudes and 2 longitudes".into()));
    }
    let mut points = Vec::with_capacity(n_lat * n_lon);
    for a in 0..n_lat {
        let lat = -FRAC_PI_2 + PI * a as f64 / (n_lat - 1) as f64;
        for b in 0..n_lon {
            let lon = -PI + PI * b as f64 / (n_lon - 1) as f64;
            points.push(GeoPoint::new(lat.clamp(-FRAC_PI_2, FRAC_PI_2), lon.clamp(-PI, 0.0))?);
        }
    }
    GeoPointSet::new(points)
}

#[derive(Debug, Deserialize)]
struct CoastlineRow {
    lat_deg: f64,
    lon_deg: f64,
}

/// Reads a `lat_deg,lon_deg` CSV (degrees) into radians, optionally keeping
/// the Western Hemisphere only.
pub fn load_coastline_csv(path: impl AsRef<Path>, western_only: bool) -> Result<GeoPointSet> {
    let file = std::fs::File::open(path)?;
    read_coastline(file, western_only)
}

pub fn read_coastline<R: std::io::Read>(input: R, western_only: bool) -> Result<GeoPointSet> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_error(&e, 1))?.clone();
    if headers.is_empty() {
        return Err(Error::Empty("coastline file has no header".into()));
    }
    if headers.iter().collect::<Vec<_>>() != ["lat_deg", "lon_deg"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `lat_deg,lon_deg`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: CoastlineRow =
            record.deserialize(Some(&headers)).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let p = GeoPoint::from_degrees(row.lat_deg, row.lon_deg)
            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Empty("coastline file has no data rows".into()));
    }
    let set = GeoPointSet { points };
    Ok(if western_only { set.western_hemisphere() } else { set })
}

fn csv_error(e: &csv::Error, fallback: usize) -> Error {
    let line = e.position().map_or(fallback, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}
