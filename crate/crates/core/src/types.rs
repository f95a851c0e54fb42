//! Point sets, dissimilarity matrices and configurations shared by every stage.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check on dissimilarity matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Seed for every random draw in the crate. The same seed and parameters
/// always yield a bit-identical sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Derives an independent stream, e.g. for probes drawn next to a sample.
    pub fn derive(self, stream: u64) -> Seed {
        // splitmix64 finalizer
        let mut z = self.0 ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

/// `n` points in an ambient space of dimension `q`, stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Array2<f64>,
    labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::Empty("point cloud has no points".into()));
        }
        if points.ncols() == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be >= 1".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("point coordinates must be finite".into()));
        }
        Ok(Self { points, labels: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != q) {
            return Err(Error::shape(format!("{q} coordinates"), format!("{} in row {i}", r.len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let points =
            Array2::from_shape_vec((rows.len(), q), flat).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new(points)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::shape(self.len(), labels.len()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn euclidean(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let points = self.points.select(ndarray::Axis(0), indices);
        let mut out = Self::new(points)?;
        out.labels = self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect());
        Ok(out)
    }

    /// Matrix of pairwise ambient distances `D(X)`.
    pub fn distance_matrix(&self) -> DissimilarityMatrix {
        let n = self.len();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.euclidean(i, j);
                m[[i, j]] = d;
                m[[j, i]] = d;
            }
        }
        DissimilarityMatrix(m)
    }
}

pub(crate) fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Symmetric, hollow, nonnegative, finite `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix(Array2<f64>);

impl DissimilarityMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        validate_dissimilarity(entries.view(), true)?;
        Ok(Self(entries))
    }

    /// Builds `[f(i, j)]` for `i < j` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                m[[i, j]] = d;
                m[[j, i]] = d;
            }
        }
        Self(m)
    }

    pub(crate) fn from_trusted(entries: Array2<f64>) -> Self {
        debug_assert!(validate_dissimilarity(entries.view(), true).is_ok());
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Entrywise squares, `Δ₂`.
    pub fn squared(&self) -> Array2<f64> {
        self.0.mapv(|d| d * d)
    }

    /// Upper-triangle entries in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.0[[i, j]]);
            }
        }
        out
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let m = self.0.select(ndarray::Axis(0), indices).select(ndarray::Axis(1), indices);
        Self(m)
    }
}

/// Checks squareness, symmetry (relative [`SYMMETRY_TOL`]), hollowness,
/// nonnegativity and, when `finite` is set, finiteness.
pub(crate) fn validate_dissimilarity(m: ArrayView2<'_, f64>, finite: bool) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidDissimilarity(format!("matrix is {}x{}, not square", n, m.ncols())));
    }
    for i in 0..n {
        if m[[i, i]] != 0.0 {
            return Err(Error::InvalidDissimilarity(format!("diagonal entry {i} is {}", m[[i, i]])));
        }
        for j in 0..n {
            let v = m[[i, j]];
            if v.is_nan() || (finite && v.is_infinite()) {
                return Err(Error::InvalidDissimilarity(format!("entry ({i},{j}) is not finite")));
            }
            if v < 0.0 {
                return Err(Error::InvalidDissimilarity(format!("entry ({i},{j}) is negative")));
            }
            if j > i {
                let w = m[[j, i]];
                let scale = v.abs().max(w.abs());
                if v != w && (v - w).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidDissimilarity(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
    }
    Ok(())
}

/// An `n x d` Euclidean configuration, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration(Array2<f64>);

impl Configuration {
    pub fn new(coords: Array2<f64>) -> Result<Self> {
        if coords.ncols() == 0 {
            return Err(Error::InvalidParameter("configuration dimension must be >= 1".into()));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("configuration coordinates must be finite".into()));
        }
        Ok(Self(coords))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn coords(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.0.row(i), self.0.row(j))
    }

    pub fn distance_matrix(&self) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(self.len(), |i, j| self.distance(i, j))
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        (0..self.dim()).map(|c| self.0.column(c).sum() / n).collect()
    }
}

impl From<PointCloud> for Configuration {
    fn from(cloud: PointCloud) -> Self {
        Configuration(cloud.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_non_hollow_and_asymmetric() {
        assert!(DissimilarityMatrix::new(array![[1.0, 0.0], [0.0, 0.0]]).is_err());
        assert!(DissimilarityMatrix::new(array![[0.0, 1.0], [2.0, 0.0]]).is_err());
        assert!(DissimilarityMatrix::new(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
        assert!(DissimilarityMatrix::new(array![[0.0, f64::INFINITY], [f64::INFINITY, 0.0]]).is_err());
        assert!(DissimilarityMatrix::new(array![[0.0, 1.0], [1.0 + 1e-15, 0.0]]).is_ok());
    }

    #[test]
    fn seeded_rng_is_reproducible() {
        use rand::Rng;
        let a: Vec<f64> = (0..5)
            .map({
                let mut r = Seed(7).rng();
                move |_| r.random()
            })
            .collect();
        let mut r = Seed(7).rng();
        let b: Vec<f64> = (0..5).map(|_| r.random()).collect();
        assert_eq!(a, b);
        assert_ne!(Seed(7).derive(1), Seed(7).derive(2));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(PointCloud::from_rows(&[vec![0.0, 1.0], vec![2.0]]).is_err());
        assert!(PointCloud::from_rows(&[]).is_err());
    }
}
