//! Benchmark manifolds with samplers and exact Riemannian distances.
//!
//! Every oracle is immutable once built. Distances are computed from ambient
//! coordinates, so any point set drawn from an oracle (or placed on it by
//! hand) can be measured against ground truth.

mod annulus;
mod rect;
mod sphere;
mod spiral;

use std::f64::consts::{PI, TAU};
use std::fmt;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use annulus::Annulus;
pub use rect::{arc_distance_matrix, sample_closed_curve_circle, sample_closed_curve_rectangle, Rect};
pub use sphere::{great_circle, sphere_sample_and_distance, GeoPoint, SphereCap};
pub use spiral::{Spiral, SwissRoll};

use crate::error::{Error, Result};
use crate::types::{DissimilarityMatrix, PointCloud, Seed};

/// Shape of a closed plane curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CurveShape {
    /// Circle about the origin.
    Circle { radius: f64 },
    /// Perimeter of an axis-aligned rectangle.
    Rectangle(Rect),
}

impl CurveShape {
    pub fn length(&self) -> f64 {
        match self {
            CurveShape::Circle { radius } => TAU * radius,
            CurveShape::Rectangle(r) => r.perimeter(),
        }
    }

    fn point_at(&self, s: f64) -> [f64; 2] {
        match self {
            CurveShape::Circle { radius } => {
                let a = s / radius;
                [radius * a.cos(), radius * a.sin()]
            }
            CurveShape::Rectangle(r) => r.perimeter_point(0, s),
        }
    }

    /// Arc-length coordinate of a point on the curve.
    fn coordinate_of(&self, p: &[f64]) -> Option<f64> {
        if p.len() != 2 {
            return None;
        }
        match self {
            CurveShape::Circle { radius } => {
                let r = p[0].hypot(p[1]);
                ((r - radius).abs() <= 1e-9 * radius).then(|| p[1].atan2(p[0]).rem_euclid(TAU) * radius)
            }
            CurveShape::Rectangle(r) => r.perimeter_coordinate([p[0], p[1]], 1e-9 * r.perimeter()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    ClosedCurve,
    RectangularAnnulus,
    SpherePatch,
    Spiral,
    SwissRoll,
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ManifoldKind::ClosedCurve => "closed-curve",
            ManifoldKind::RectangularAnnulus => "rectangular-annulus",
            ManifoldKind::SpherePatch => "sphere-patch",
            ManifoldKind::Spiral => "spiral",
            ManifoldKind::SwissRoll => "swiss-roll",
        };
        f.write_str(s)
    }
}

/// A compact connected benchmark manifold with its exact Riemannian distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ManifoldOracle {
    ClosedCurve { shape: CurveShape },
    RectangularAnnulus(Annulus),
    SpherePatch(SphereCap),
    Spiral(Spiral),
    SwissRoll(SwissRoll),
}

impl ManifoldOracle {
    pub fn circle(radius: f64) -> Result<Self> {
        let m = ManifoldOracle::ClosedCurve { shape: CurveShape::Circle { radius } };
        m.validate()?;
        Ok(m)
    }

    pub fn rectangle_curve(rect: Rect) -> Result<Self> {
        let m = ManifoldOracle::ClosedCurve { shape: CurveShape::Rectangle(rect) };
        m.validate()?;
        Ok(m)
    }

    pub fn kind(&self) -> ManifoldKind {
        match self {
            ManifoldOracle::ClosedCurve { .. } => ManifoldKind::ClosedCurve,
            ManifoldOracle::RectangularAnnulus(_) => ManifoldKind::RectangularAnnulus,
            ManifoldOracle::SpherePatch(_) => ManifoldKind::SpherePatch,
            ManifoldOracle::Spiral(_) => ManifoldKind::Spiral,
            ManifoldOracle::SwissRoll(_) => ManifoldKind::SwissRoll,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldOracle::ClosedCurve { shape: CurveShape::Circle { radius } } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
                }
                Ok(())
            }
            ManifoldOracle::ClosedCurve { shape: CurveShape::Rectangle(r) } => r.validate(),
            ManifoldOracle::RectangularAnnulus(a) => a.validate(),
            ManifoldOracle::SpherePatch(c) => c.validate(),
            ManifoldOracle::Spiral(s) => s.validate(),
            ManifoldOracle::SwissRoll(r) => r.validate(),
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self.kind() {
            ManifoldKind::ClosedCurve | ManifoldKind::Spiral => 1,
            _ => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind() {
            ManifoldKind::SpherePatch | ManifoldKind::SwissRoll => 3,
            _ => 2,
        }
    }

    /// `sup d_M` when it has a closed form.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            ManifoldOracle::ClosedCurve { shape } => Some(0.5 * shape.length()),
            ManifoldOracle::SpherePatch(c) => Some((2.0 * c.max_polar_angle).min(PI)),
            ManifoldOracle::Spiral(s) => Some(s.length()),
            ManifoldOracle::SwissRoll(r) => Some(r.spiral.length().hypot(r.h_max - r.h_min)),
            ManifoldOracle::RectangularAnnulus(_) => None,
        }
    }

    /// Riemannian distance between two points of the manifold, given in
    /// ambient coordinates.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            ManifoldOracle::ClosedCurve { shape } => {
                let sa = shape.coordinate_of(a).ok_or(Error::OutsideDomain { index: 0 })?;
                let sb = shape.coordinate_of(b).ok_or(Error::OutsideDomain { index: 1 })?;
                let len = shape.length();
                let d = (sa - sb).abs();
                Ok(d.min(len - d).max(0.0))
            }
            ManifoldOracle::RectangularAnnulus(ann) => {
                let pa = as_pair(a).ok_or(Error::OutsideDomain { index: 0 })?;
                let pb = as_pair(b).ok_or(Error::OutsideDomain { index: 1 })?;
                ann.geodesic(pa, pb)
            }
            ManifoldOracle::SpherePatch(cap) => {
                if !cap.contains(a) {
                    return Err(Error::OutsideDomain { index: 0 });
                }
                if !cap.contains(b) {
                    return Err(Error::OutsideDomain { index: 1 });
                }
                Ok(sphere::angle_between(a, b))
            }
            ManifoldOracle::Spiral(sp) => {
                let ta = sp.parameter_of(a).ok_or(Error::OutsideDomain { index: 0 })?;
                let tb = sp.parameter_of(b).ok_or(Error::OutsideDomain { index: 1 })?;
                Ok(sp.distance_between(ta, tb))
            }
            ManifoldOracle::SwissRoll(roll) => {
                let pa = roll.parameters_of(a).ok_or(Error::OutsideDomain { index: 0 })?;
                let pb = roll.parameters_of(b).ok_or(Error::OutsideDomain { index: 1 })?;
                Ok(roll.distance_between(pa, pb))
            }
        }
    }

    /// Draws one point uniformly with respect to the Riemannian volume.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ManifoldOracle::ClosedCurve { shape } => shape.point_at(rng.random_range(0.0..shape.length())).to_vec(),
            ManifoldOracle::RectangularAnnulus(ann) => loop {
                let p = [
                    rng.random_range(ann.outer.x_min..ann.outer.x_max),
                    rng.random_range(ann.outer.y_min..ann.outer.y_max),
                ];
                if !ann.inner.contains_open(p) {
                    break p.to_vec();
                }
            },
            ManifoldOracle::SpherePatch(cap) => cap.sample_point(rng).to_vec(),
            ManifoldOracle::Spiral(sp) => sp.point(sp.sample_parameter(rng)).to_vec(),
            ManifoldOracle::SwissRoll(roll) => {
                let (s, h) = roll.sample_parameters(rng);
                roll.point(s, h).to_vec()
            }
        }
    }

    /// `n` i.i.d. uniform points; identical seeds give identical clouds.
    pub fn sample(&self, n: usize, seed: Seed) -> Result<PointCloud> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Empty("sample size must be >= 1".into()));
        }
        match self {
            // keep the dedicated samplers' streams
            ManifoldOracle::RectangularAnnulus(a) => a.sample_uniform(n, seed),
            ManifoldOracle::SpherePatch(c) => c.sample(n, seed),
            _ => {
                let mut rng = seed.rng();
                let mut pts = Array2::zeros((n, self.ambient_dim()));
                for i in 0..n {
                    for (k, v) in self.sample_point(&mut rng).into_iter().enumerate() {
                        pts[[i, k]] = v;
                    }
                }
                PointCloud::new(pts)
            }
        }
    }

    /// Equal arc-length spacing; closed curves only.
    pub fn equally_spaced(&self, n: usize) -> Result<PointCloud> {
        match self {
            ManifoldOracle::ClosedCurve { shape: CurveShape::Circle { radius } } => {
                sample_closed_curve_circle(n, *radius)
            }
            ManifoldOracle::ClosedCurve { shape: CurveShape::Rectangle(r) } => {
                let c = r.corners_ccw();
                sample_closed_curve_rectangle(n, &[c[0], c[1], c[2], c[3]])
            }
            _ => Err(Error::Unsupported("equal spacing is defined for closed curves only")),
        }
    }

    /// Pairwise Riemannian distances, filled row-parallel.
    pub fn distance_matrix(&self, cloud: &PointCloud) -> Result<DissimilarityMatrix> {
        self.validate()?;
        if cloud.ambient_dim() != self.ambient_dim() {
            return Err(Error::shape(format!("ambient dimension {}", self.ambient_dim()), cloud.ambient_dim()));
        }
        let n = cloud.len();
        let points: Vec<Vec<f64>> = (0..n).map(|i| cloud.point(i).to_vec()).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..n)
                    .map(|j| {
                        self.distance(&points[i], &points[j]).map_err(|e| match e {
                            Error::OutsideDomain { index } => {
                                Error::OutsideDomain { index: if index == 0 { i } else { j } }
                            }
                            other => other,
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let mut m = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            for (k, &d) in row.iter().enumerate() {
                let j = i + 1 + k;
                m[[i, j]] = d;
                m[[j, i]] = d;
            }
        }
        Ok(DissimilarityMatrix::from_trusted(m))
    }
}

fn as_pair(p: &[f64]) -> Option<[f64; 2]> {
    (p.len() == 2).then(|| [p[0], p[1]])
}
