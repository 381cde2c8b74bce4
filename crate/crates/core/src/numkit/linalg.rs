//! Dense symmetric positive-definite matrices and their Cholesky factors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Inputs whose relative asymmetry exceeds this are rejected instead of
/// being silently symmetrized.
const MAX_RELATIVE_ASYMMETRY: f64 = 1e-6;

/// Lower-triangular `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangularFactor {
    l: DMatrix<f64>,
}

impl LowerTriangularFactor {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `L·Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }

    /// `log det(L·Lᵀ) = 2·Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L·y = b` by forward substitution.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ·x = y` by back substitution.
    pub fn solve_upper(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = y.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `L·Lᵀ·x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Column-wise `L·Lᵀ·X = B`.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve(&b.column(j).into_owned());
            out.set_column(j, &col);
        }
        out
    }

    /// `L⁻¹·B`, column-wise.
    pub fn whiten_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve_lower(&b.column(j).into_owned());
            out.set_column(j, &col);
        }
        out
    }
}

/// Cholesky factorization with the pivot rule
/// `pivot > dim · ε · max_i a_ii`.
fn factorize(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = a.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    let threshold = n as f64 * f64::EPSILON * max_diag;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d.is_nan() || d <= threshold {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: d,
                threshold,
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Symmetric positive-definite matrix with its Cholesky factor cached.
///
/// Construction symmetrizes `(A + Aᵀ)/2` and fails unless the
/// factorization succeeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    a: DMatrix<f64>,
    factor: LowerTriangularFactor,
}

impl SpdMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidInput("matrix has dimension 0".into()));
        }
        if let Some(index) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "matrix",
                index,
            });
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let asym = (&a - a.transpose()).abs().max();
        if asym > MAX_RELATIVE_ASYMMETRY * scale {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let a = (&a + a.transpose()) * 0.5;
        let l = factorize(&a)?;
        Ok(SpdMatrix {
            a,
            factor: LowerTriangularFactor { l },
        })
    }

    /// Builds from row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is SPD")
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn factor(&self) -> &LowerTriangularFactor {
        &self.factor
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.a.diagonal()
    }

    /// `c·A`; `c` must be positive.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("scale factor {c} must be positive")));
        }
        Self::new(&self.a * c)
    }

    pub fn log_det(&self) -> f64 {
        self.factor.log_det()
    }

    /// `A⁻¹` assembled from the cached factor.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.factor
            .solve_matrix(&DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: b.len(),
            });
        }
        Ok(self.factor.solve(b))
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: b.nrows(),
            });
        }
        Ok(self.factor.solve_matrix(b))
    }

    /// `bᵀ·A⁻¹·b` via one forward substitution.
    pub fn inv_quad_form(&self, b: &DVector<f64>) -> Result<f64> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: b.len(),
            });
        }
        Ok(self.factor.solve_lower(b).norm_squared())
    }
}

pub fn cholesky(m: &SpdMatrix) -> LowerTriangularFactor {
    m.factor().clone()
}

pub fn spd_solve(m: &SpdMatrix, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    m.solve(rhs)
}

pub fn spd_solve_matrix(m: &SpdMatrix, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.solve_matrix(rhs)
}

/// Factors an arbitrary square matrix, returning the error the pivot rule
/// raises if it is not SPD. Skips the asymmetry check (callers pass a
/// matrix that is symmetric up to rounding).
pub(crate) fn factor_symmetric(a: &DMatrix<f64>) -> Result<LowerTriangularFactor> {
    let a = (a + a.transpose()) * 0.5;
    factorize(&a).map(|l| LowerTriangularFactor { l })
}
