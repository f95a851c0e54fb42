//! Rectangular annulus: the closed region inside an outer rectangle and
//! outside the open interior of an inner one.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rect::Rect;
use crate::error::{Error, Result};
use crate::types::{PointCloud, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annulus {
    pub outer: Rect,
    pub inner: Rect,
}

impl Annulus {
    pub fn new(outer: Rect, inner: Rect) -> Result<Self> {
        let a = Annulus { outer, inner };
        a.validate()?;
        Ok(a)
    }

    /// A thin frame of width 0.05 around the `0.1 x 0.9` rectangle centered on
    /// `x = 0`, the 2-D thickening of that rectangle's perimeter.
    pub fn thin_frame() -> Self {
        Annulus {
            outer: Rect { x_min: -0.1, y_min: 0.0, x_max: 0.1, y_max: 1.0 },
            inner: Rect { x_min: -0.05, y_min: 0.05, x_max: 0.05, y_max: 0.95 },
        }
    }

    /// A wide field with an off-center rectangular hole.
    pub fn off_center_hole() -> Self {
        Annulus {
            outer: Rect { x_min: -1.75, y_min: -2.0, x_max: 1.75, y_max: 1.5 },
            inner: Rect { x_min: -0.25, y_min: -1.2, x_max: 0.55, y_max: 0.3 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        self.inner.validate()?;
        if !self.outer.strictly_contains(&self.inner) {
            return Err(Error::InvalidParameter("inner rectangle must lie strictly inside the outer rectangle".into()));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.outer.area() - self.inner.area()
    }

    /// Probability that a uniform draw from the outer rectangle is accepted.
    pub fn acceptance_rate(&self) -> f64 {
        self.area() / self.outer.area()
    }

    /// Points on the inner boundary belong to the domain.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.outer.contains_closed(p) && !self.inner.contains_open(p)
    }

    /// I.i.d. uniform points by rejection from the outer rectangle.
    pub fn sample_uniform(&self, n: usize, seed: Seed) -> Result<PointCloud> {
        Ok(self.sample_with_draws(n, seed)?.0)
    }

    /// Same as [`Annulus::sample_uniform`], also returning how many candidate
    /// draws were consumed.
    pub fn sample_with_draws(&self, n: usize, seed: Seed) -> Result<(PointCloud, usize)> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Empty("sample size must be >= 1".into()));
        }
        let mut rng = seed.rng();
        let mut pts = Array2::zeros((n, 2));
        let mut accepted = 0;
        let mut draws = 0;
        while accepted < n {
            draws += 1;
            let p = [
                rng.random_range(self.outer.x_min..self.outer.x_max),
                rng.random_range(self.outer.y_min..self.outer.y_max),
            ];
            if !self.inner.contains_open(p) {
                pts[[accepted, 0]] = p[0];
                pts[[accepted, 1]] = p[1];
                accepted += 1;
            }
        }
        Ok((PointCloud::new(pts)?, draws))
    }

    /// Exact length of the shortest path from `a` to `b` that avoids the
    /// open hole.
    ///
    /// With a single convex polygonal obstacle every shortest path is a chain
    /// of straight segments bending only at hole corners, so Dijkstra over the
    /// visibility graph on `{a, b}` plus the four corners is exact.
    pub fn geodesic(&self, a: [f64; 2], b: [f64; 2]) -> Result<f64> {
        if !self.contains(a) {
            return Err(Error::OutsideDomain { index: 0 });
        }
        if !self.contains(b) {
            return Err(Error::OutsideDomain { index: 1 });
        }
        Ok(self.geodesic_unchecked(a, b))
    }

    pub(crate) fn geodesic_unchecked(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        if !self.inner.segment_crosses_interior(a, b) {
            return dist(a, b);
        }
        let corners = self.inner.corners_ccw();
        let nodes = [a, b, corners[0], corners[1], corners[2], corners[3]];
        let mut best = [f64::INFINITY; 6];
        let mut done = [false; 6];
        best[0] = 0.0;
        while let Some(u) = (0..6).filter(|&i| !done[i]).min_by(|&i, &j| best[i].total_cmp(&best[j])) {
            if !best[u].is_finite() || u == 1 {
                break;
            }
            done[u] = true;
            for v in 0..6 {
                if done[v] || self.inner.segment_crosses_interior(nodes[u], nodes[v]) {
                    continue;
                }
                let cand = best[u] + dist(nodes[u], nodes[v]);
                if cand < best[v] {
                    best[v] = cand;
                }
            }
        }
        best[1]
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
