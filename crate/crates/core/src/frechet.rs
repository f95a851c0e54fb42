//! Sample Fréchet means over a finite candidate set.
//!
//! The objective of a sample point `m` is `Fr(m) = Σ_i d(m, x_i)² / n`.
//! [`sample_frechet_mean`] minimizes it exactly over the sample;
//! [`embedded_frechet_mean`] averages an embedding and takes the sample point
//! nearest the average.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Configuration, DissimilarityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrechetMethod {
    GeodesicBruteForce,
    EmbeddedAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    pub method: FrechetMethod,
    /// Zero-based sample index of the chosen point.
    pub index: usize,
    pub objective: f64,
}

/// `Σ_i δ_mi² / n` for the sample point `m`.
pub fn frechet_objective(delta: &DissimilarityMatrix, m: usize) -> f64 {
    let n = delta.len();
    delta.view().row(m).iter().map(|d| d * d).sum::<f64>() / n as f64
}

/// Lowest index among the minimal values.
fn argmin(values: &[f64]) -> usize {
    values.iter().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) }).0
}

/// Exact minimizer of the objective over the sample; ties go to the lowest
/// index.
pub fn sample_frechet_mean(delta: &DissimilarityMatrix) -> Result<FrechetResult> {
    if delta.is_empty() {
        return Err(Error::Empty("no sample points".into()));
    }
    let objectives: Vec<f64> = (0..delta.len()).into_par_iter().map(|m| frechet_objective(delta, m)).collect();
    let index = argmin(&objectives);
    Ok(FrechetResult { method: FrechetMethod::GeodesicBruteForce, index, objective: objectives[index] })
}

/// Sample point whose embedded coordinates are nearest the coordinate
/// average, scored with the objective from `delta`.
pub fn embedded_frechet_mean(z: &Configuration, delta: &DissimilarityMatrix) -> Result<FrechetResult> {
    if z.len() != delta.len() {
        return Err(Error::shape(format!("{} configuration rows", delta.len()), z.len()));
    }
    if z.is_empty() {
        return Err(Error::Empty("no sample points".into()));
    }
    let center = z.centroid();
    let coords = z.coords();
    let dist2: Vec<f64> =
        (0..z.len()).map(|i| coords.row(i).iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum()).collect();
    let index = argmin(&dist2);
    Ok(FrechetResult { method: FrechetMethod::EmbeddedAverage, index, objective: frechet_objective(delta, index) })
}
