//! Numerical checks of the graph-distance convergence bounds.
//!
//! For a manifold with minimum radius of curvature `r₀` and minimum branch
//! separation `s₀`, an ε-graph on a δ-sample satisfies
//! `(1−λ) d_M ≤ d_G ≤ (1+λ) d_M` whenever `ε < s₀`,
//! `ε ≤ (2/π) r₀ √(24λ)` and `δ ≤ λε/4`. This module measures the quantities
//! involved and audits the inequality pair by pair.

use std::f64::consts::{FRAC_2_PI, PI};

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geograph::{GraphMetric, MetricKind};
use crate::manifolds::{CurveShape, ManifoldOracle};
use crate::types::{PointCloud, Seed};

/// Grid size for the dense curvature scan on spirals and Swiss rolls.
const CURVATURE_GRID: usize = 10_001;

/// Relative slack applied before a pair counts as violating a bound.
const AUDIT_SLACK: f64 = 1e-12;

/// `+inf` is written as JSON `null` and read back as `+inf`.
mod inf_as_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Closed-form geometry of an oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    /// Minimum radius of curvature; `+inf` for flat domains.
    pub r0: f64,
    /// Minimum branch separation when known in closed form.
    pub s0: Option<f64>,
    pub diameter: Option<f64>,
    /// Curvature sits at polygon corners, outside the smooth model.
    pub corner_caveat: bool,
}

/// Everything the sandwich hypotheses depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundContext {
    #[serde(with = "inf_as_null")]
    pub r0: f64,
    /// Usually an upper estimate; see [`estimate_branch_separation`].
    #[serde(with = "inf_as_null")]
    pub s0: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    pub diameter: Option<f64>,
    #[serde(default)]
    pub corner_caveat: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub eps_lt_s0: bool,
    pub eps_curvature_ok: bool,
    pub delta_ok: bool,
}

impl Hypotheses {
    pub fn all(&self) -> bool {
        self.eps_lt_s0 && self.eps_curvature_ok && self.delta_ok
    }
}

impl BoundContext {
    pub fn new(bounds: CurvatureBounds, s0: f64, epsilon: f64, delta: f64, lambda: f64) -> Result<Self> {
        let ctx = BoundContext {
            r0: bounds.r0,
            s0,
            epsilon,
            delta,
            lambda,
            diameter: bounds.diameter,
            corner_caveat: bounds.corner_caveat,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) || !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be positive and delta nonnegative".into()));
        }
        if self.r0.is_nan() || self.r0 <= 0.0 || self.s0.is_nan() || self.s0 <= 0.0 {
            return Err(Error::InvalidParameter("r0 and s0 must be positive".into()));
        }
        Ok(())
    }

    /// Largest ε the curvature condition allows.
    pub fn max_curvature_epsilon(&self) -> f64 {
        FRAC_2_PI * self.r0 * (24.0 * self.lambda).sqrt()
    }

    pub fn hypotheses(&self) -> Hypotheses {
        Hypotheses {
            eps_lt_s0: self.epsilon < self.s0,
            eps_curvature_ok: self.epsilon <= self.max_curvature_epsilon(),
            delta_ok: self.delta <= self.lambda * self.epsilon / 4.0,
        }
    }

    /// Hypotheses hold and the domain is smooth.
    pub fn certifiable(&self) -> bool {
        self.hypotheses().all() && !self.corner_caveat
    }
}

/// `r₀`, closed-form `s₀` and diameter for the supported oracle kinds.
///
/// * unit sphere: `r₀ = 1`; circle of radius ρ: `r₀ = ρ`. All distances are
///   at most `π r₀`, so `s₀ = +inf`.
/// * spiral and Swiss roll: `r₀ = min 1/κ(t)` over a dense grid; `s₀` has no
///   closed form.
/// * rectangular annulus: flat, `r₀ = s₀ = +inf` with the corner caveat.
pub fn analytic_bound_params(oracle: &ManifoldOracle) -> Result<CurvatureBounds> {
    oracle.validate()?;
    let diameter = oracle.diameter();
    match oracle {
        ManifoldOracle::ClosedCurve { shape: CurveShape::Circle { radius } } => {
            Ok(CurvatureBounds { r0: *radius, s0: Some(f64::INFINITY), diameter, corner_caveat: false })
        }
        ManifoldOracle::ClosedCurve { shape: CurveShape::Rectangle(_) } => {
            Err(Error::Unsupported("a rectangular curve has unbounded curvature at its corners"))
        }
        ManifoldOracle::SpherePatch(_) => {
            Ok(CurvatureBounds { r0: 1.0, s0: Some(f64::INFINITY), diameter, corner_caveat: false })
        }
        ManifoldOracle::Spiral(sp) => {
            Ok(CurvatureBounds { r0: min_radius_of_curvature(sp), s0: None, diameter, corner_caveat: false })
        }
        // flat across the roll, so the curve's curvature is the maximum
        ManifoldOracle::SwissRoll(roll) => {
            Ok(CurvatureBounds { r0: min_radius_of_curvature(&roll.spiral), s0: None, diameter, corner_caveat: false })
        }
        ManifoldOracle::RectangularAnnulus(_) => {
            Ok(CurvatureBounds { r0: f64::INFINITY, s0: Some(f64::INFINITY), diameter, corner_caveat: true })
        }
    }
}

fn min_radius_of_curvature(sp: &crate::manifolds::Spiral) -> f64 {
    (0..CURVATURE_GRID)
        .map(|k| {
            let t = sp.t_min + (sp.t_max - sp.t_min) * k as f64 / (CURVATURE_GRID - 1) as f64;
            1.0 / sp.curvature(t)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Builds a full context, estimating `s₀` by pair sampling when it has no
/// closed form.
pub fn bound_context(
    oracle: &ManifoldOracle,
    epsilon: f64,
    delta: f64,
    lambda: f64,
    probe_pairs: usize,
    seed: Seed,
) -> Result<BoundContext> {
    let bounds = analytic_bound_params(oracle)?;
    let s0 = match bounds.s0 {
        Some(s) => s,
        None => estimate_branch_separation(oracle, PI * bounds.r0, probe_pairs, seed)?,
    };
    BoundContext::new(bounds, s0, epsilon, delta, lambda)
}

/// Smallest ambient distance among sampled pairs whose Riemannian distance
/// exceeds `pi_r0`. This bounds `s₀` from above; `+inf` when no sampled pair
/// qualifies.
pub fn estimate_branch_separation(oracle: &ManifoldOracle, pi_r0: f64, pairs: usize, seed: Seed) -> Result<f64> {
    oracle.validate()?;
    if pi_r0.is_nan() || pi_r0 <= 0.0 {
        return Err(Error::InvalidParameter("π·r0 must be positive".into()));
    }
    let mut rng = seed.rng();
    let draws: Vec<(Vec<f64>, Vec<f64>)> =
        (0..pairs).map(|_| (oracle.sample_point(&mut rng), oracle.sample_point(&mut rng))).collect();
    let best = draws
        .par_iter()
        .map(|(x, y)| -> Result<f64> {
            if oracle.distance(x, y)? > pi_r0 {
                Ok(crate::types::euclidean(x.as_slice().into(), y.as_slice().into()))
            } else {
                Ok(f64::INFINITY)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(best.into_iter().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinLengthReport {
    pub trials: usize,
    /// Smallest `chord − 2r₀ sin(ℓ/2r₀)`; negative values are violations.
    pub min_margin: f64,
    /// Largest `|chord − 2r₀ sin(ℓ/2r₀)|`.
    pub max_abs_margin: f64,
}

/// Samples unit-speed geodesic arcs of length `ℓ ∈ [0, π r₀]` and compares
/// the chord between their endpoints with `2 r₀ sin(ℓ / 2r₀)`.
///
/// On a sphere patch the arcs are great-circle arcs through a point of the
/// patch and may leave it; the inequality concerns the unit sphere.
pub fn check_min_length_lemma(oracle: &ManifoldOracle, trials: usize, seed: Seed) -> Result<MinLengthReport> {
    oracle.validate()?;
    let r0 = match oracle {
        ManifoldOracle::ClosedCurve { shape: CurveShape::Circle { radius } } => *radius,
        ManifoldOracle::SpherePatch(_) => 1.0,
        _ => return Err(Error::Unsupported("geodesic arcs are available for circles and sphere patches only")),
    };
    let mut rng = seed.rng();
    let mut min_margin = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    for _ in 0..trials {
        let ell = rng.random_range(0.0..=PI * r0);
        let (a, b) = match oracle {
            ManifoldOracle::SpherePatch(_) => {
                let p = oracle.sample_point(&mut rng);
                let u = random_tangent(&p, &mut rng);
                let t = ell / 2.0;
                let at = |s: f64| -> Vec<f64> { (0..3).map(|k| p[k] * s.cos() + u[k] * s.sin()).collect() };
                (at(t), at(-t))
            }
            _ => {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let at = |s: f64| -> Vec<f64> {
                    let a = theta + s / r0;
                    vec![r0 * a.cos(), r0 * a.sin()]
                };
                (at(ell / 2.0), at(-ell / 2.0))
            }
        };
        let chord = crate::types::euclidean(a.as_slice().into(), b.as_slice().into());
        let margin = chord - 2.0 * r0 * (ell / (2.0 * r0)).sin();
        min_margin = min_margin.min(margin);
        max_abs = max_abs.max(margin.abs());
    }
    if trials == 0 {
        min_margin = 0.0;
    }
    Ok(MinLengthReport { trials, min_margin, max_abs_margin: max_abs })
}

/// Uniformly oriented unit vector orthogonal to the unit vector `p`.
fn random_tangent<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> [f64; 3] {
    loop {
        let g: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let dot = g[0] * p[0] + g[1] * p[1] + g[2] * p[2];
        let v = [g[0] - dot * p[0], g[1] - dot * p[1], g[2] - dot * p[2]];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let g_norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if g_norm <= 1.0 && norm > 1e-6 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub probes: usize,
    /// `max_probe min_i d_M(probe, x_i)`.
    pub worst_gap: f64,
    /// `worst_gap < δ`.
    pub satisfied: bool,
}

/// Monte Carlo check of the δ-sampling condition: every probe drawn from the
/// manifold must lie within Riemannian distance δ of some sample point.
pub fn check_delta_sampling(
    oracle: &ManifoldOracle,
    cloud: &PointCloud,
    delta: f64,
    probes: usize,
    seed: Seed,
) -> Result<CoveringReport> {
    oracle.validate()?;
    if cloud.is_empty() {
        return Err(Error::Empty("empty sample".into()));
    }
    let mut rng = seed.rng();
    let draws: Vec<Vec<f64>> = (0..probes).map(|_| oracle.sample_point(&mut rng)).collect();
    let points: Vec<Vec<f64>> = (0..cloud.len()).map(|i| cloud.point(i).to_vec()).collect();
    let gaps = draws
        .par_iter()
        .map(|probe| {
            points.iter().try_fold(f64::INFINITY, |best, x| Ok::<f64, Error>(best.min(oracle.distance(probe, x)?)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst_gap = gaps.into_iter().fold(0.0, f64::max);
    Ok(CoveringReport { probes, worst_gap, satisfied: worst_gap < delta })
}

/// `max(0, 1 − k (1−b)ⁿ)`: the probability that `n` i.i.d. draws hit each of
/// `k` sets of mass at least `b`.
pub fn sampling_lemma_bound(k: usize, b: f64, n: usize) -> Result<f64> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::InvalidParameter(format!("ball mass must lie in (0, 1], got {b}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("cover size must be >= 1".into()));
    }
    let miss = if b == 1.0 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (n as f64 * (-b).ln_1p()).exp()
    };
    Ok((1.0 - k as f64 * miss).max(0.0))
}

/// Farthest-point net of `reference` under the oracle metric: starting from
/// point 0, repeatedly adds the point farthest from the chosen centers until
/// every point lies within `radius` of one. Returns center indices in
/// insertion order.
pub fn greedy_net(oracle: &ManifoldOracle, reference: &PointCloud, radius: f64) -> Result<Vec<usize>> {
    if reference.is_empty() {
        return Err(Error::Empty("empty reference sample".into()));
    }
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidParameter("net radius must be positive".into()));
    }
    let points: Vec<Vec<f64>> = (0..reference.len()).map(|i| reference.point(i).to_vec()).collect();
    let mut centers = vec![0];
    let mut nearest = distances_from(oracle, &points, 0)?;
    loop {
        // first index wins ties
        let (far, gap) =
            nearest
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        if gap <= radius {
            return Ok(centers);
        }
        centers.push(far);
        let fresh = distances_from(oracle, &points, far)?;
        nearest.iter_mut().zip(fresh).for_each(|(a, b)| *a = a.min(b));
    }
}

fn distances_from(oracle: &ManifoldOracle, points: &[Vec<f64>], c: usize) -> Result<Vec<f64>> {
    points.par_iter().map(|p| oracle.distance(&points[c], p)).collect()
}

/// A finite cover by balls of one radius with Monte Carlo ball masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverMeasurement {
    pub centers: Vec<Vec<f64>>,
    pub radius: f64,
    /// Fraction of the reference sample inside each ball.
    pub masses: Vec<f64>,
    /// Smallest mass. Reported next to `radius`; the two carry different
    /// units and are not compared.
    pub min_mass: f64,
}

impl CoverMeasurement {
    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

/// Greedy `radius`-net of `reference` plus each ball's empirical mass.
pub fn measure_cover(oracle: &ManifoldOracle, reference: &PointCloud, radius: f64) -> Result<CoverMeasurement> {
    let idx = greedy_net(oracle, reference, radius)?;
    let points: Vec<Vec<f64>> = (0..reference.len()).map(|i| reference.point(i).to_vec()).collect();
    let masses = idx
        .iter()
        .map(|&c| {
            let inside = distances_from(oracle, &points, c)?.into_iter().filter(|&d| d <= radius).count();
            Ok(inside as f64 / points.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min_mass = masses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CoverMeasurement { centers: idx.iter().map(|&c| points[c].clone()).collect(), radius, masses, min_mass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringFrequency {
    pub repetitions: usize,
    /// Repetitions in which every ball received a sample point.
    pub hits: usize,
    pub frequency: f64,
    /// `sqrt(p (1−p) / repetitions)`.
    pub standard_error: f64,
}

/// Draws `repetitions` independent samples of size `n` and counts how often
/// every ball of the cover is hit.
pub fn covering_frequency(
    oracle: &ManifoldOracle,
    cover: &CoverMeasurement,
    n: usize,
    repetitions: usize,
    seed: Seed,
) -> Result<CoveringFrequency> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("need at least one repetition".into()));
    }
    let outcomes = (0..repetitions as u64)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let mut rng = seed.derive(r).rng();
            let mut hit = vec![false; cover.k()];
            for _ in 0..n {
                let x = oracle.sample_point(&mut rng);
                for (c, h) in cover.centers.iter().zip(hit.iter_mut()) {
                    if !*h && oracle.distance(c, &x)? <= cover.radius {
                        *h = true;
                    }
                }
            }
            Ok(hit.iter().all(|&h| h))
        })
        .collect::<Result<Vec<bool>>>()?;
    let hits = outcomes.iter().filter(|&&h| h).count();
    let p = hits as f64 / repetitions as f64;
    Ok(CoveringFrequency {
        repetitions,
        hits,
        frequency: p,
        standard_error: (p * (1.0 - p) / repetitions as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Hypotheses hold on a smooth manifold; violations contradict the bound.
    Certified,
    /// Hypotheses fail or the domain has corners; counts are descriptive.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichAudit {
    pub hypotheses: Hypotheses,
    pub mode: AuditMode,
    pub metric: MetricKind,
    pub lambda: f64,
    pub pairs: usize,
    /// Pairs with `d_G < (1−λ) d_M`.
    pub violations_low: usize,
    /// Pairs with `d_G > (1+λ) d_M`, disconnected pairs included.
    pub violations_high: usize,
    /// Smallest `d_G / d_M` over pairs with `d_M > 0`.
    pub worst_ratio_low: f64,
    /// Largest finite `d_G / d_M`.
    pub worst_ratio_high: f64,
}

/// Compares every pair's graph distance with `(1±λ)` times its Riemannian
/// distance. The δ-sampling condition is not checked here; see
/// [`check_delta_sampling`].
pub fn audit_sandwich(
    oracle: &ManifoldOracle,
    cloud: &PointCloud,
    graph: &GraphMetric,
    ctx: &BoundContext,
) -> Result<SandwichAudit> {
    ctx.validate()?;
    if graph.len() != cloud.len() {
        return Err(Error::shape(format!("{} graph vertices", cloud.len()), graph.len()));
    }
    let truth = oracle.distance_matrix(cloud)?;
    audit_against(truth.view(), graph, ctx)
}

fn audit_against(
    truth: ndarray::ArrayView2<'_, f64>,
    graph: &GraphMetric,
    ctx: &BoundContext,
) -> Result<SandwichAudit> {
    let n = graph.len();
    let lambda = ctx.lambda;
    let rows: Vec<(usize, usize, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = (0, 0, f64::INFINITY, 0.0_f64);
            for j in (i + 1)..n {
                let dm = truth[[i, j]];
                let dg = graph.get(i, j);
                if dg < (1.0 - lambda) * dm * (1.0 - AUDIT_SLACK) {
                    acc.0 += 1;
                }
                if dg > (1.0 + lambda) * dm * (1.0 + AUDIT_SLACK) {
                    acc.1 += 1;
                }
                if dm > 0.0 && dg.is_finite() {
                    let r = dg / dm;
                    acc.2 = acc.2.min(r);
                    acc.3 = acc.3.max(r);
                }
            }
            acc
        })
        .collect();
    let (low, high, rmin, rmax) = rows
        .into_iter()
        .fold((0, 0, f64::INFINITY, 0.0_f64), |a, b| (a.0 + b.0, a.1 + b.1, a.2.min(b.2), a.3.max(b.3)));
    let hypotheses = ctx.hypotheses();
    Ok(SandwichAudit {
        hypotheses,
        mode: if ctx.certifiable() { AuditMode::Certified } else { AuditMode::Empirical },
        metric: graph.kind,
        lambda,
        pairs: n * n.saturating_sub(1) / 2,
        violations_low: low,
        violations_high: high,
        worst_ratio_low: if rmin.is_finite() { rmin } else { 1.0 },
        worst_ratio_high: if n > 1 { rmax } else { 1.0 },
    })
}

/// Convenience for callers holding a precomputed oracle matrix.
pub fn audit_sandwich_with_truth(
    truth: &Array2<f64>,
    graph: &GraphMetric,
    ctx: &BoundContext,
) -> Result<SandwichAudit> {
    ctx.validate()?;
    if truth.dim() != (graph.len(), graph.len()) {
        return Err(Error::shape(format!("{0}x{0} distances", graph.len()), format!("{:?}", truth.dim())));
    }
    audit_against(truth.view(), graph, ctx)
}
