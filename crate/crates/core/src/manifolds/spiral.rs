//! Archimedean spirals `σ(t) = (βt cos t, βt sin t)` and the Swiss rolls
//! `(s, h) ↦ (σ(s), h)` built on them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{PointCloud, Seed};

const ON_CURVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spiral {
    pub beta: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Spiral {
    pub fn new(beta: f64, t_min: f64, t_max: f64) -> Result<Self> {
        let s = Spiral { beta, t_min, t_max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_min.is_nan() || self.t_min <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spiral parameter range must start above 0, got {}",
                self.t_min
            )));
        }
        if !(self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter("spiral parameter range is empty".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("spiral β must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        [self.beta * t * t.cos(), self.beta * t * t.sin()]
    }

    /// Closed-form arc length from `t = 0`:
    /// `β/2 (t √(1+t²) + asinh t)`.
    pub fn arclength(&self, t: f64) -> f64 {
        0.5 * self.beta * (t * (1.0 + t * t).sqrt() + t.asinh())
    }

    pub fn length(&self) -> f64 {
        self.arclength(self.t_max) - self.arclength(self.t_min)
    }

    /// Parameter `t` with `arclength(t) = s`, by safeguarded Newton.
    pub fn parameter_at_arclength(&self, s: f64) -> f64 {
        let (mut lo, mut hi) = (self.t_min, self.t_max);
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.arclength(t) - s;
            if f.abs() <= 1e-15 * s.abs().max(1.0) {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let next = t - f / (self.beta * (1.0 + t * t).sqrt());
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        t
    }

    /// Recovers `t` from a point on the curve (`t = |p| / β`).
    pub fn parameter_of(&self, p: &[f64]) -> Option<f64> {
        if p.len() != 2 {
            return None;
        }
        let t = p[0].hypot(p[1]) / self.beta;
        let scale = self.beta * self.t_max;
        let range_tol = ON_CURVE_TOL * self.t_max;
        if t < self.t_min - range_tol || t > self.t_max + range_tol {
            return None;
        }
        let q = self.point(t);
        ((q[0] - p[0]).hypot(q[1] - p[1]) <= ON_CURVE_TOL * scale).then_some(t)
    }

    /// Plane-curve curvature `κ(t) = (t² + 2) / (β (t² + 1)^{3/2})`.
    pub fn curvature(&self, t: f64) -> f64 {
        (t * t + 2.0) / (self.beta * (t * t + 1.0).powf(1.5))
    }

    pub fn distance_between(&self, t_a: f64, t_b: f64) -> f64 {
        (self.arclength(t_a) - self.arclength(t_b)).abs()
    }

    /// Point on the curve, arc-length uniform.
    pub fn sample_parameter<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (s0, s1) = (self.arclength(self.t_min), self.arclength(self.t_max));
        self.parameter_at_arclength(rng.random_range(s0..=s1))
    }

    pub fn sample(&self, n: usize, seed: Seed) -> Result<PointCloud> {
        self.validate()?;
        let mut rng = seed.rng();
        let ts: Vec<f64> = (0..n).map(|_| self.sample_parameter(&mut rng)).collect();
        self.points_at(&ts)
    }

    pub fn points_at(&self, ts: &[f64]) -> Result<PointCloud> {
        if ts.is_empty() {
            return Err(Error::Empty("no spiral parameters".into()));
        }
        let rows: Vec<Vec<f64>> = ts.iter().map(|&t| self.point(t).to_vec()).collect();
        PointCloud::from_rows(&rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwissRoll {
    pub spiral: Spiral,
    pub h_min: f64,
    pub h_max: f64,
}

impl SwissRoll {
    pub fn new(spiral: Spiral, h_min: f64, h_max: f64) -> Result<Self> {
        let r = SwissRoll { spiral, h_min, h_max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        self.spiral.validate()?;
        if !(self.h_max > self.h_min && self.h_min.is_finite() && self.h_max.is_finite()) {
            return Err(Error::InvalidParameter("Swiss roll height range is empty".into()));
        }
        Ok(())
    }

    pub fn point(&self, s: f64, h: f64) -> [f64; 3] {
        let p = self.spiral.point(s);
        [p[0], p[1], h]
    }

    pub fn parameters_of(&self, p: &[f64]) -> Option<(f64, f64)> {
        if p.len() != 3 {
            return None;
        }
        let s = self.spiral.parameter_of(&p[..2])?;
        let tol = ON_CURVE_TOL * (self.h_max - self.h_min);
        (p[2] >= self.h_min - tol && p[2] <= self.h_max + tol).then_some((s, p[2]))
    }

    /// The roll is isometric to the rectangle `[A(s_min), A(s_max)] x [h_min, h_max]`
    /// (A = spiral arc length); a rectangle is convex, so straight lines there
    /// are the geodesics.
    pub fn distance_between(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        self.spiral.distance_between(a.0, b.0).hypot(a.1 - b.1)
    }

    pub fn sample_parameters<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let s = self.spiral.sample_parameter(rng);
        (s, rng.random_range(self.h_min..=self.h_max))
    }

    pub fn sample(&self, n: usize, seed: Seed) -> Result<PointCloud> {
        self.validate()?;
        let mut rng = seed.rng();
        let params: Vec<(f64, f64)> = (0..n).map(|_| self.sample_parameters(&mut rng)).collect();
        self.points_at(&params)
    }

    pub fn points_at(&self, params: &[(f64, f64)]) -> Result<PointCloud> {
        if params.is_empty() {
            return Err(Error::Empty("no Swiss roll parameters".into()));
        }
        let rows: Vec<Vec<f64>> = params.iter().map(|&(s, h)| self.point(s, h).to_vec()).collect();
        PointCloud::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature of |σ'(t)| = β √(1 + t²).
    fn quadrature_length(beta: f64, a: f64, b: f64) -> f64 {
        let m = 20_000;
        let h = (b - a) / m as f64;
        let f = |t: f64| beta * (1.0 + t * t).sqrt();
        let mut s = f(a) + f(b);
        for k in 1..m {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn arclength_matches_quadrature() {
        let sp = Spiral::new(0.7, 0.5, 12.0).unwrap();
        let q = quadrature_length(0.7, 0.5, 12.0);
        assert!((sp.length() - q).abs() < 1e-9 * q);
    }

    #[test]
    fn arclength_derivative_by_finite_difference() {
        let sp = Spiral::new(1.0, 0.5, 3.0).unwrap();
        let t = 1.0;
        for h in [1e-3, 1e-5] {
            let fd = sp.distance_between(t, t + h) / h;
            assert!((fd - (1.0 + t * t).sqrt()).abs() < 2.0 * h, "h={h} fd={fd}");
        }
        assert_eq!(sp.distance_between(1.3, 1.3), 0.0);
    }

    #[test]
    fn invert_arclength() {
        let sp = Spiral::new(0.3, 1.0, 20.0).unwrap();
        for t in [1.0, 1.5, 7.25, 19.99, 20.0] {
            let back = sp.parameter_at_arclength(sp.arclength(t));
            assert!((back - t).abs() < 1e-10, "{t} -> {back}");
        }
    }

    #[test]
    fn parameter_recovery() {
        let sp = Spiral::new(0.3, 1.0, 20.0).unwrap();
        let p = sp.point(5.5);
        assert!((sp.parameter_of(&p).unwrap() - 5.5).abs() < 1e-12);
        assert!(sp.parameter_of(&[p[0] + 0.1, p[1]]).is_none());
        assert!(sp.parameter_of(&sp.point(25.0)).is_none());
    }

    #[test]
    fn invalid_range() {
        assert!(Spiral::new(1.0, 0.0, 2.0).is_err());
        assert!(Spiral::new(1.0, -1.0, 2.0).is_err());
        assert!(Spiral::new(1.0, 2.0, 1.0).is_err());
        assert!(SwissRoll::new(Spiral::new(1.0, 1.0, 2.0).unwrap(), 1.0, 1.0).is_err());
    }

    #[test]
    fn swiss_roll_vertical_rulings_are_straight() {
        let roll = SwissRoll::new(Spiral::new(0.5, 1.5, 4.5 * std::f64::consts::PI).unwrap(), 0.0, 10.0).unwrap();
        let a = (3.0, 1.0);
        let b = (3.0, 7.5);
        assert!((roll.distance_between(a, b) - 6.5).abs() < 1e-15);
        let pa = roll.point(a.0, a.1);
        let pb = roll.point(b.0, b.1);
        let chord = ((0..3).map(|k| (pa[k] - pb[k]).powi(2)).sum::<f64>()).sqrt();
        assert!((chord - 6.5).abs() < 1e-12);
    }
}
