//! Axis-aligned rectangles and closed curves sampled at equal arc length.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{DissimilarityMatrix, PointCloud};

/// Closed axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let r = Rect { x_min, y_min, x_max, y_max };
        r.validate()?;
        Ok(r)
    }

    /// Builds the rectangle spanned by four corner vertices given in any order.
    pub fn from_vertices(vertices: &[[f64; 2]]) -> Result<Self> {
        if vertices.len() != 4 {
            return Err(Error::InvalidParameter(format!("a rectangle needs 4 vertices, got {}", vertices.len())));
        }
        let fold = |f: fn(f64, f64) -> f64, init: f64, k: usize| vertices.iter().map(|v| v[k]).fold(init, f);
        let r = Rect {
            x_min: fold(f64::min, f64::INFINITY, 0),
            y_min: fold(f64::min, f64::INFINITY, 1),
            x_max: fold(f64::max, f64::NEG_INFINITY, 0),
            y_max: fold(f64::max, f64::NEG_INFINITY, 1),
        };
        r.validate()?;
        let mut seen = [false; 4];
        for v in vertices {
            match r.corners_ccw().iter().position(|c| c == v) {
                Some(k) if !seen[k] => seen[k] = true,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "vertex ({}, {}) is not a distinct corner of an axis-aligned rectangle",
                        v[0], v[1]
                    )))
                }
            }
        }
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.y_min, self.x_max, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.width() <= 0.0 || self.height() <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    /// Corners counterclockwise from the lower-left one.
    pub fn corners_ccw(&self) -> [[f64; 2]; 4] {
        [[self.x_min, self.y_min], [self.x_max, self.y_min], [self.x_max, self.y_max], [self.x_min, self.y_max]]
    }

    pub fn contains_closed(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn contains_open(&self, p: [f64; 2]) -> bool {
        p[0] > self.x_min && p[0] < self.x_max && p[1] > self.y_min && p[1] < self.y_max
    }

    /// `other` lies in the open interior of `self`.
    pub fn strictly_contains(&self, other: &Rect) -> bool {
        other.x_min > self.x_min && other.x_max < self.x_max && other.y_min > self.y_min && other.y_max < self.y_max
    }

    /// True when the segment `ab` passes through the open interior.
    ///
    /// Clips the segment against the closed rectangle; the clipped chord of a
    /// convex set either meets the interior at its midpoint or not at all.
    /// Grazing contacts shallower than `1e-12` of the rectangle size count as
    /// boundary contacts.
    pub fn segment_crosses_interior(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let d = [b[0] - a[0], b[1] - a[1]];
        let p = [-d[0], d[0], -d[1], d[1]];
        let q = [a[0] - self.x_min, self.x_max - a[0], a[1] - self.y_min, self.y_max - a[1]];
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for k in 0..4 {
            if p[k] == 0.0 {
                if q[k] < 0.0 {
                    return false;
                }
            } else {
                let t = q[k] / p[k];
                if p[k] < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
        if t1 <= t0 {
            return false;
        }
        let tm = 0.5 * (t0 + t1);
        let m = [a[0] + tm * d[0], a[1] + tm * d[1]];
        let eps = 1e-12 * (self.width() + self.height());
        m[0] > self.x_min + eps && m[0] < self.x_max - eps && m[1] > self.y_min + eps && m[1] < self.y_max - eps
    }

    /// Perimeter point at arc length `s` counterclockwise from corner `start`
    /// (index into [`Rect::corners_ccw`]).
    pub fn perimeter_point(&self, start: usize, s: f64) -> [f64; 2] {
        let corners = self.corners_ccw();
        let lengths = [self.width(), self.height(), self.width(), self.height()];
        let mut s = s.rem_euclid(self.perimeter());
        for step in 0..4 {
            let k = (start + step) % 4;
            let len = lengths[k];
            if s <= len || step == 3 {
                let (from, to) = (corners[k], corners[(k + 1) % 4]);
                let f = (s / len).min(1.0);
                return [from[0] + f * (to[0] - from[0]), from[1] + f * (to[1] - from[1])];
            }
            s -= len;
        }
        unreachable!()
    }

    /// Inverse of [`Rect::perimeter_point`] with `start = 0`; `None` when `p`
    /// is farther than `tol` from the perimeter.
    pub fn perimeter_coordinate(&self, p: [f64; 2], tol: f64) -> Option<f64> {
        let (w, h) = (self.width(), self.height());
        let inside_x = p[0] >= self.x_min - tol && p[0] <= self.x_max + tol;
        let inside_y = p[1] >= self.y_min - tol && p[1] <= self.y_max + tol;
        let clamp_x = (p[0] - self.x_min).clamp(0.0, w);
        let clamp_y = (p[1] - self.y_min).clamp(0.0, h);
        if inside_x && (p[1] - self.y_min).abs() <= tol {
            Some(clamp_x)
        } else if inside_y && (p[0] - self.x_max).abs() <= tol {
            Some(w + clamp_y)
        } else if inside_x && (p[1] - self.y_max).abs() <= tol {
            Some(w + h + (w - clamp_x))
        } else if inside_y && (p[0] - self.x_min).abs() <= tol {
            Some((2.0 * w + h + (h - clamp_y)) % self.perimeter())
        } else {
            None
        }
    }
}

/// `n` points equally spaced by arc length on the rectangle spanned by
/// `vertices`, starting at `vertices[0]` and moving counterclockwise.
pub fn sample_closed_curve_rectangle(n: usize, vertices: &[[f64; 2]; 4]) -> Result<PointCloud> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 curve points, got {n}")));
    }
    let rect = Rect::from_vertices(vertices)?;
    let start = rect.corners_ccw().iter().position(|c| c == &vertices[0]).expect("validated corner");
    let step = rect.perimeter() / n as f64;
    let mut pts = Array2::zeros((n, 2));
    for k in 0..n {
        let p = rect.perimeter_point(start, k as f64 * step);
        pts[[k, 0]] = p[0];
        pts[[k, 1]] = p[1];
    }
    PointCloud::new(pts)
}

/// `n` points equally spaced on the circle of the given radius about the
/// origin, starting at `(radius, 0)` and moving counterclockwise.
pub fn sample_closed_curve_circle(n: usize, radius: f64) -> Result<PointCloud> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 curve points, got {n}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
    }
    let mut pts = Array2::zeros((n, 2));
    for k in 0..n {
        let theta = std::f64::consts::TAU * k as f64 / n as f64;
        pts[[k, 0]] = radius * theta.cos();
        pts[[k, 1]] = radius * theta.sin();
    }
    PointCloud::new(pts)
}

/// Shortest-arc distances between `n` points equally spaced on any closed
/// curve of length `total_length`: `min(|i-j|, n-|i-j|) * L / n`.
pub fn arc_distance_matrix(n: usize, total_length: f64) -> Result<DissimilarityMatrix> {
    if n == 0 {
        return Err(Error::Empty("arc distance matrix needs n >= 1".into()));
    }
    if !(total_length > 0.0 && total_length.is_finite()) {
        return Err(Error::InvalidParameter(format!("curve length must be positive, got {total_length}")));
    }
    let spacing = total_length / n as f64;
    Ok(DissimilarityMatrix::from_fn(n, |i, j| {
        let k = j.abs_diff(i);
        k.min(n - k) as f64 * spacing
    }))
}
