//! Euclidean embedding of dissimilarities.
//!
//! * [`tau`] double-centers squared dissimilarities, `B = -½ P A P` with
//!   `P = I - eeᵗ/n`; `A` is a squared-distance matrix iff `B ⪰ 0`.
//! * [`cmds`] embeds with the top eigenpairs of `B`, negative eigenvalues
//!   clipped to zero.
//! * [`smacof`] lowers raw stress by repeated Guttman transforms starting
//!   from any configuration.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricEigen};
use crate::types::{validate_dissimilarity, Configuration, DissimilarityMatrix};

/// Eigenvalues with `|λ| <= ZERO_EIGEN_TOL * max|λ|` count as zero.
pub const ZERO_EIGEN_TOL: f64 = 1e-8;

/// `B = τ(A)` together with its full spectrum.
#[derive(Debug, Clone)]
pub struct GramLikeMatrix {
    pub matrix: Array2<f64>,
    pub eigen: SymmetricEigen,
}

impl GramLikeMatrix {
    pub fn spectrum(&self) -> SpectrumReport {
        SpectrumReport::from_eigenvalues(&self.eigen.values)
    }
}

/// `-½ P A P` without validation. Entries are computed from row, column and
/// grand means, and mirrored so the result is exactly symmetric.
pub fn double_center(a: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = a.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| a.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| a.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut b = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = -0.5 * (a[[i, j]] - row_means[i] - col_means[j] + grand);
            b[[i, j]] = v;
            b[[j, i]] = v;
        }
    }
    b
}

/// Double centering of a squared-dissimilarity matrix, with its spectrum.
pub fn tau(a: ArrayView2<'_, f64>) -> Result<GramLikeMatrix> {
    validate_dissimilarity(a, true)?;
    let matrix = double_center(a);
    let eigen = linalg::symmetric_eigen(matrix.view())?;
    Ok(GramLikeMatrix { matrix, eigen })
}

/// Eigen-signature of `τ(Δ₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub n_pos: usize,
    pub n_zero: usize,
    pub n_neg: usize,
    /// Sum of the positive eigenvalues.
    pub pos_variation: f64,
    /// Sum of the absolute values of the negative eigenvalues.
    pub neg_variation: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(values: &[f64]) -> Self {
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = ZERO_EIGEN_TOL * scale;
        let mut r = SpectrumReport {
            eigenvalues: values.to_vec(),
            n_pos: 0,
            n_zero: 0,
            n_neg: 0,
            pos_variation: 0.0,
            neg_variation: 0.0,
        };
        for &v in values {
            if v > tol {
                r.n_pos += 1;
                r.pos_variation += v;
            } else if v < -tol {
                r.n_neg += 1;
                r.neg_variation -= v;
            } else {
                r.n_zero += 1;
            }
        }
        r
    }

    /// Share of the positive variation carried by the `d` largest eigenvalues.
    pub fn top_fraction(&self, d: usize) -> f64 {
        if self.pos_variation == 0.0 {
            return 0.0;
        }
        let top: f64 = self.eigenvalues.iter().take(d).filter(|v| **v > 0.0).sum();
        top / self.pos_variation
    }

    /// Same numerator over `pos_variation + neg_variation`.
    pub fn top_fraction_of_total(&self, d: usize) -> f64 {
        let total = self.pos_variation + self.neg_variation;
        if total == 0.0 {
            return 0.0;
        }
        self.top_fraction(d) * self.pos_variation / total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdmClass {
    /// `τ(Δ₂) ⪰ 0`: Δ is a Euclidean distance matrix realizable in
    /// `embedding_dim` dimensions.
    Euclidean {
        embedding_dim: usize,
        spectrum: SpectrumReport,
    },
    NonEuclidean {
        spectrum: SpectrumReport,
    },
}

impl EdmClass {
    pub fn spectrum(&self) -> &SpectrumReport {
        match self {
            EdmClass::Euclidean { spectrum, .. } | EdmClass::NonEuclidean { spectrum } => spectrum,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, EdmClass::Euclidean { .. })
    }
}

pub fn classify_edm(delta: &DissimilarityMatrix) -> Result<EdmClass> {
    let spectrum = tau(delta.squared().view())?.spectrum();
    Ok(if spectrum.n_neg == 0 {
        EdmClass::Euclidean { embedding_dim: spectrum.n_pos, spectrum }
    } else {
        EdmClass::NonEuclidean { spectrum }
    })
}

/// Classical (Torgerson) MDS in `d` dimensions.
pub fn cmds(delta: &DissimilarityMatrix, d: usize) -> Result<Configuration> {
    Ok(cmds_with_spectrum(delta, d)?.0)
}

/// [`cmds`] plus the full spectrum of `τ(Δ₂)`.
///
/// Columns follow descending eigenvalue; each column's sign makes its
/// largest-magnitude entry (first one on ties) positive.
pub fn cmds_with_spectrum(delta: &DissimilarityMatrix, d: usize) -> Result<(Configuration, GramLikeMatrix)> {
    let n = delta.len();
    if d == 0 {
        return Err(Error::InvalidParameter("embedding dimension must be >= 1".into()));
    }
    if d > n {
        return Err(Error::InvalidParameter(format!("embedding dimension {d} exceeds n = {n}")));
    }
    let gram = tau(delta.squared().view())?;
    let mut z = Array2::zeros((n, d));
    for k in 0..d {
        let sigma = gram.eigen.values[k].max(0.0).sqrt();
        let u = gram.eigen.vectors.column(k);
        let pivot = (0..n).fold(0, |best, i| if u[i].abs() > u[best].abs() { i } else { best });
        let sign = if u[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            z[[i, k]] = sign * sigma * u[i];
        }
    }
    Ok((Configuration::new(z)?, gram))
}

#[derive(Debug, Clone)]
pub struct PsdTruncation {
    pub matrix: Array2<f64>,
    /// `‖B̄ − B‖_F`.
    pub error: f64,
}

/// Nearest (Frobenius) positive semidefinite matrix of rank at most `d`:
/// keep the top `d` eigenvalues, clip negatives to zero.
pub fn low_rank_psd_truncation(b: ArrayView2<'_, f64>, d: usize) -> Result<PsdTruncation> {
    let eig = linalg::symmetric_eigen(b)?;
    let n = b.nrows();
    let mut out = Array2::zeros((n, n));
    for k in 0..d.min(n) {
        let lambda = eig.values[k].max(0.0);
        if lambda == 0.0 {
            continue;
        }
        let u = eig.vectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += lambda * u[i] * u[j];
            }
        }
    }
    let error = linalg::frobenius((&out - &b).view());
    Ok(PsdTruncation { matrix: out, error })
}

/// Stress weights `w_ij = w_ji >= 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum StressWeights {
    #[default]
    Unit,
    Matrix(Array2<f64>),
}

impl StressWeights {
    fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            StressWeights::Unit => 1.0,
            StressWeights::Matrix(w) => w[[i, j]],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let StressWeights::Matrix(w) = self else {
            return Ok(());
        };
        if w.dim() != (n, n) {
            return Err(Error::shape(format!("{n}x{n} weights"), format!("{:?}", w.dim())));
        }
        for i in 0..n {
            if w[[i, i]] != 0.0 {
                return Err(Error::InvalidParameter(format!("weight diagonal entry {i} must be 0")));
            }
            for j in 0..n {
                let v = w[[i, j]];
                if !(v >= 0.0 && v.is_finite()) || v != w[[j, i]] {
                    return Err(Error::InvalidParameter(format!(
                        "weight ({i},{j}) must be finite, nonnegative and symmetric"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressParams {
    pub weights: StressWeights,
    pub max_iters: usize,
    /// Stop once `(σ_prev − σ) / σ_prev < rel_tol`.
    pub rel_tol: f64,
}

impl Default for StressParams {
    fn default() -> Self {
        StressParams { weights: StressWeights::Unit, max_iters: 20, rel_tol: 1e-6 }
    }
}

/// `σ(Z) = Σ_{i<j} w_ij (‖z_i − z_j‖ − δ_ij)²`.
pub fn raw_stress(z: &Configuration, delta: &DissimilarityMatrix, weights: &StressWeights) -> Result<f64> {
    let n = delta.len();
    if z.len() != n {
        return Err(Error::shape(format!("{n} configuration rows"), z.len()));
    }
    weights.validate(n)?;
    Ok(stress_unchecked(z.coords(), delta, weights))
}

fn stress_unchecked(z: ArrayView2<'_, f64>, delta: &DissimilarityMatrix, weights: &StressWeights) -> f64 {
    let n = delta.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            ((i + 1)..n)
                .map(|j| {
                    let w = weights.get(i, j);
                    if w == 0.0 {
                        return 0.0;
                    }
                    let dij = crate::types::euclidean(zi, z.row(j));
                    let r = dij - delta.get(i, j);
                    w * r * r
                })
                .sum()
        })
        .collect();
    // fixed summation order
    rows.iter().sum()
}

#[derive(Debug, Clone)]
pub struct SmacofResult {
    pub config: Configuration,
    /// Stress of the initial configuration followed by one entry per
    /// Guttman transform.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Stopped by `rel_tol` rather than `max_iters`.
    pub converged: bool,
}

impl SmacofResult {
    pub fn initial_stress(&self) -> f64 {
        self.trace[0]
    }

    pub fn final_stress(&self) -> f64 {
        *self.trace.last().expect("trace starts with the initial stress")
    }
}

/// Stress majorization by Guttman transforms `Z⁺ = V⁺ B(Z) Z`.
///
/// With unit weights `V⁺ B(Z) Z` reduces to `B(Z) Z / n`. Pairs that coincide
/// in the current iterate contribute nothing to `B(Z)` for that step.
pub fn smacof(delta: &DissimilarityMatrix, init: &Configuration, params: &StressParams) -> Result<SmacofResult> {
    let n = delta.len();
    if init.len() != n {
        return Err(Error::shape(format!("{n} configuration rows"), init.len()));
    }
    if params.rel_tol.is_nan() || params.rel_tol < 0.0 {
        return Err(Error::InvalidParameter("rel_tol must be nonnegative".into()));
    }
    params.weights.validate(n)?;
    let weights = &params.weights;
    let components = weight_components(n, weights);
    if components > 1 {
        return Err(Error::DisconnectedWeights { components });
    }
    // (V + eeᵗ/n) is positive definite for connected weights; on centered
    // right-hand sides its inverse agrees with V⁺.
    let chol = match weights {
        StressWeights::Unit => None,
        StressWeights::Matrix(w) => {
            let mut v = Array2::from_elem((n, n), 1.0 / n as f64);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        v[[i, j]] -= w[[i, j]];
                        v[[i, i]] += w[[i, j]];
                    }
                }
            }
            Some(linalg::cholesky(v.view())?)
        }
    };

    let mut z = init.coords().to_owned();
    let mut trace = vec![stress_unchecked(z.view(), delta, weights)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iters {
        let bz = guttman_product(z.view(), delta, weights);
        let next = match &chol {
            None => bz / n as f64,
            Some(l) => linalg::cholesky_solve(l.view(), bz.view()),
        };
        let prev = *trace.last().expect("nonempty");
        let cur = stress_unchecked(next.view(), delta, weights);
        debug_assert!(cur <= prev * (1.0 + 1e-10) + 1e-14, "majorization step increased stress: {prev} -> {cur}");
        z = next;
        trace.push(cur);
        iterations += 1;
        if prev <= 0.0 || (prev - cur) / prev < params.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(SmacofResult { config: Configuration::new(z)?, trace, iterations, converged })
}

/// Rows of `B(Z) Z`: `Σ_{j≠i} r_ij (z_i − z_j)` with `r_ij = w_ij δ_ij / d_ij(Z)`,
/// and `r_ij = 0` when `d_ij(Z) = 0`.
fn guttman_product(z: ArrayView2<'_, f64>, delta: &DissimilarityMatrix, weights: &StressWeights) -> Array2<f64> {
    let (n, d) = z.dim();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            let mut acc = vec![0.0; d];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let zj = z.row(j);
                let dij = crate::types::euclidean(zi, zj);
                if dij == 0.0 {
                    continue;
                }
                let r = weights.get(i, j) * delta.get(i, j) / dij;
                for k in 0..d {
                    acc[k] += r * (zi[k] - zj[k]);
                }
            }
            acc
        })
        .collect();
    let mut out = Array2::zeros((n, d));
    for (i, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            out[[i, k]] = v;
        }
    }
    out
}

fn weight_components(n: usize, weights: &StressWeights) -> usize {
    let StressWeights::Matrix(w) = weights else {
        return usize::from(n > 0);
    };
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && w[[u, v]] > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// Root-sum-square mismatch after the best translation, rotation and
/// reflection of `a` onto `b`.
pub fn procrustes_distance(a: &Configuration, b: &Configuration) -> Result<f64> {
    if a.coords().dim() != b.coords().dim() {
        return Err(Error::shape(format!("{:?}", a.coords().dim()), format!("{:?}", b.coords().dim())));
    }
    let ac = centered(a.coords());
    let bc = centered(b.coords());
    let r = orthogonal_alignment(ac.view(), bc.view())?;
    Ok(linalg::frobenius((ac.dot(&r) - &bc).view()))
}

fn centered(z: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = z.to_owned();
    let n = z.nrows().max(1) as f64;
    for mut col in out.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
    }
    out
}

/// Orthogonal `R` minimizing `‖A R − B‖_F`: `R = U Vᵗ` for `AᵗB = U Σ Vᵗ`.
///
/// The SVD comes from the eigendecomposition of `MᵗM`; left singular vectors
/// for negligible singular values are completed to an orthonormal basis, which
/// leaves the optimum unchanged.
fn orthogonal_alignment(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let d = a.ncols();
    let m = a.t().dot(&b);
    let eig = linalg::symmetric_eigen(m.t().dot(&m).view())?;
    let sigma_max = eig.values.first().map_or(0.0, |v| v.max(0.0).sqrt());
    let mut u = Array2::<f64>::zeros((d, d));
    let mut filled = 0;
    for k in 0..d {
        let sigma = eig.values[k].max(0.0).sqrt();
        if sigma <= 1e-12 * sigma_max || sigma == 0.0 {
            break;
        }
        let col = m.dot(&eig.vectors.column(k)) / sigma;
        u.column_mut(k).assign(&col);
        filled += 1;
    }
    // Gram-Schmidt: re-orthonormalize the computed columns, then complete.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    let candidates = (0..filled)
        .map(|k| u.column(k).to_vec())
        .chain((0..d).map(|e| (0..d).map(|i| if i == e { 1.0 } else { 0.0 }).collect()));
    for mut v in candidates {
        if basis.len() == d {
            break;
        }
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut uo = Array2::zeros((d, d));
    for (k, q) in basis.iter().enumerate() {
        for i in 0..d {
            uo[[i, k]] = q[i];
        }
    }
    Ok(uo.dot(&eig.vectors.t()))
}
