use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numkit::SpdMatrix;

/// First and third difference operators for a path of length `H`.
///
/// `d1` is `(H−1)×H` with row `j` mapping `b` to `b_{j+1} − b_j`; `d3` is
/// `(H−3)×H` with rows `(−1, 3, −3, 1)`. `d3` annihilates every quadratic
/// in `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOperators {
    pub d1: DMatrix<f64>,
    pub d3: DMatrix<f64>,
}

impl DifferenceOperators {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon < 4 {
            return Err(Error::InvalidInput(format!(
                "third differences need at least 4 horizons, got {horizon}"
            )));
        }
        let mut d1 = DMatrix::zeros(horizon - 1, horizon);
        for j in 0..horizon - 1 {
            d1[(j, j)] = -1.0;
            d1[(j, j + 1)] = 1.0;
        }
        let mut d3 = DMatrix::zeros(horizon - 3, horizon);
        for j in 0..horizon - 3 {
            d3[(j, j)] = -1.0;
            d3[(j, j + 1)] = 3.0;
            d3[(j, j + 2)] = -3.0;
            d3[(j, j + 3)] = 1.0;
        }
        Ok(DifferenceOperators { d1, d3 })
    }

    pub fn horizon(&self) -> usize {
        self.d1.ncols()
    }
}

/// Penalty weights proportional to the variances of the differenced path.
///
/// Note the weights scale *with* `diag(D V Dᵀ)`, not with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightingScheme {
    pub v1: SpdMatrix,
    pub v3: SpdMatrix,
    /// Diagonal of `W₃`, length `H−3`.
    pub w3: DVector<f64>,
    /// `w1_by_k[K−1]` is the diagonal of `W₁(K)`, length `H−1`.
    pub w1_by_k: Vec<DVector<f64>>,
}

impl WeightingScheme {
    pub fn new(v_scaled: &SpdMatrix, ops: &DifferenceOperators) -> Result<Self> {
        let v = v_scaled.matrix();
        let v1 = SpdMatrix::new(&ops.d1 * v * ops.d1.transpose())?;
        let v3 = SpdMatrix::new(&ops.d3 * v * ops.d3.transpose())?;

        let d3 = v3.diagonal();
        let w3 = &d3 / d3.mean();

        let d1 = v1.diagonal();
        let m = d1.len();
        let w1_by_k = (1..=m)
            .map(|k| {
                let tail = d1.rows(k - 1, m - k + 1);
                let mean = tail.mean();
                DVector::from_fn(m, |j, _| if j + 1 < k { 0.0 } else { d1[j] / mean })
            })
            .collect();
        Ok(WeightingScheme { v1, v3, w3, w1_by_k })
    }

    /// `D₁ᵀ W₁(K) D₁`.
    pub fn first_difference_penalty(&self, ops: &DifferenceOperators, k: usize) -> DMatrix<f64> {
        weighted_gram(&ops.d1, &self.w1_by_k[k - 1])
    }

    /// `D₃ᵀ W₃ D₃`.
    pub fn third_difference_penalty(&self, ops: &DifferenceOperators) -> DMatrix<f64> {
        weighted_gram(&ops.d3, &self.w3)
    }
}

fn weighted_gram(d: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut wd = d.clone();
    for (mut row, &wi) in wd.row_iter_mut().zip(w.iter()) {
        row *= wi;
    }
    d.transpose() * wd
}
