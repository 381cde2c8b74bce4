use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::operators::{DifferenceOperators, WeightingScheme};
use super::{FittedSurrogate, ModelSpec, PathEstimate, Smoother};
use crate::error::{Error, Result};
use crate::numkit::{factor_symmetric, SpdMatrix};
use crate::par;

pub const DEFAULT_GRID_POINTS: usize = 20;

/// Slack on both ends of the retained `df ∈ [4, H−1]` window.
pub const DF_TOLERANCE: f64 = 1e-9;

const LOG_LAMBDA_MIN: f64 = -10.0;
const LOG_LAMBDA1_MAX: f64 = 10.0;
const LOG_LAMBDA2_SEARCH_MAX: f64 = 40.0;
const TARGET_DF: f64 = 4.0;

/// Everything about `V` the penalized smoothers share: `V⁻¹`, the
/// difference operators, and the weighted penalty Gram matrices for
/// every `K`.
#[derive(Debug, Clone)]
pub struct PenaltyContext {
    cov: SpdMatrix,
    v_inv: DMatrix<f64>,
    ops: DifferenceOperators,
    weights: WeightingScheme,
    first_penalty_by_k: Vec<DMatrix<f64>>,
    third_penalty: DMatrix<f64>,
}

impl PenaltyContext {
    /// `cov` is `V_β`; the smoothers depend only on `V = V_β/σ²`.
    pub fn new(cov: &SpdMatrix) -> Result<Self> {
        let h = cov.dim();
        if h < 5 {
            return Err(Error::InvalidInput(format!(
                "penalized surrogates need H >= 5, got {h}"
            )));
        }
        let sigma2 = cov.diagonal().sum() / h as f64;
        let v = SpdMatrix::new(cov.matrix() / sigma2)?;
        let ops = DifferenceOperators::new(h)?;
        let weights = WeightingScheme::new(&v, &ops)?;
        let first_penalty_by_k = (1..h)
            .map(|k| weights.first_difference_penalty(&ops, k))
            .collect();
        let third_penalty = weights.third_difference_penalty(&ops);
        Ok(PenaltyContext {
            cov: cov.clone(),
            v_inv: v.inverse(),
            ops,
            weights,
            first_penalty_by_k,
            third_penalty,
        })
    }

    pub fn horizon(&self) -> usize {
        self.cov.dim()
    }

    pub fn operators(&self) -> &DifferenceOperators {
        &self.ops
    }

    pub fn weights(&self) -> &WeightingScheme {
        &self.weights
    }

    pub fn v_inv(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    /// `(V⁻¹ + λ₁D₁ᵀW₁(K)D₁ + λ₂D₃ᵀW₃D₃)⁻¹ V⁻¹`.
    pub fn projector(&self, lambda1: f64, lambda2: f64, k: usize) -> Result<DMatrix<f64>> {
        ModelSpec::Penalized { lambda1, lambda2, k }.validate(self.horizon())?;
        let a = &self.v_inv + &self.first_penalty_by_k[k - 1] * lambda1 + &self.third_penalty * lambda2;
        let factor = factor_symmetric(&a)?;
        Ok(factor.solve_matrix(&self.v_inv))
    }

    pub fn df(&self, lambda1: f64, lambda2: f64, k: usize) -> Result<f64> {
        Ok(self.projector(lambda1, lambda2, k)?.trace())
    }

    pub fn smoother(&self, lambda1: f64, lambda2: f64, k: usize) -> Result<Smoother> {
        let p = self.projector(lambda1, lambda2, k)?;
        Ok(Smoother::new(ModelSpec::Penalized { lambda1, lambda2, k }, p, &self.cov))
    }

    /// The `λ₂` at which `df(e⁻¹⁰, λ₂, 1) = 4`, by bisection on `log λ₂`.
    ///
    /// The bracket is found by stepping `log λ₂` up from −10 in unit
    /// steps (at most to 40); the regularized system stops being
    /// numerically positive definite long before e⁴⁰, so the far end is
    /// only evaluated when no earlier crossing exists.
    pub fn lambda2_upper_bound(&self) -> Result<f64> {
        let lambda1 = LOG_LAMBDA_MIN.exp();
        let excess = |log_l2: f64| -> Result<f64> { Ok(self.df(lambda1, log_l2.exp(), 1)? - TARGET_DF) };
        let mut lo = LOG_LAMBDA_MIN;
        let at_lo = excess(lo)?;
        if at_lo < 0.0 {
            return Err(Error::BracketFailure(format!(
                "df at log λ2 = {lo} is {:.6} < 4",
                at_lo + TARGET_DF
            )));
        }
        let mut hi = lo;
        loop {
            if hi >= LOG_LAMBDA2_SEARCH_MAX {
                return Err(Error::BracketFailure(format!(
                    "df stays above 4 for log λ2 up to {LOG_LAMBDA2_SEARCH_MAX}"
                )));
            }
            hi = (hi + 1.0).min(LOG_LAMBDA2_SEARCH_MAX);
            match excess(hi) {
                Ok(e) if e > 0.0 => lo = hi,
                Ok(_) => break,
                Err(Error::NotPositiveDefinite { .. }) => {
                    return Err(Error::BracketFailure(format!(
                        "penalized system became singular at log λ2 = {hi} before df reached 4"
                    )))
                }
                Err(e) => return Err(e),
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let e = excess(mid)?;
            if e.abs() <= 1e-10 || hi - lo < 1e-13 {
                break;
            }
            if e > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid.exp())
    }
}

pub fn build_projector_penalized(est: &PathEstimate, lambda1: f64, lambda2: f64, k: usize) -> Result<FittedSurrogate> {
    let ctx = PenaltyContext::new(est.cov())?;
    let s = ctx.smoother(lambda1, lambda2, k)?;
    Ok(FittedSurrogate::fit(Arc::new(s), est.beta_hat()))
}

/// GLS projector onto polynomials of `degree` in the horizon, with the
/// horizon rescaled to `[−1, 1]` before powering.
pub(crate) fn polynomial_smoother(cov: &SpdMatrix, degree: usize) -> Result<Smoother> {
    let h = cov.dim();
    ModelSpec::Polynomial { degree }.validate(h)?;
    let x = DMatrix::from_fn(h, degree + 1, |i, j| {
        let t = -1.0 + 2.0 * i as f64 / (h - 1) as f64;
        t.powi(j as i32)
    });
    let vinv_x = cov.solve_matrix(&x)?;
    let gram = SpdMatrix::new(x.transpose() * &vinv_x)?;
    // P = X (Xᵀ V⁻¹ X)⁻¹ (V⁻¹ X)ᵀ
    let coef = gram.solve_matrix(&vinv_x.transpose())?;
    let p = &x * coef;
    Ok(Smoother::new(ModelSpec::Polynomial { degree }, p, cov))
}

pub fn build_projector_polynomial(est: &PathEstimate, degree: usize) -> Result<FittedSurrogate> {
    let s = polynomial_smoother(est.cov(), degree)?;
    Ok(FittedSurrogate::fit(Arc::new(s), est.beta_hat()))
}

pub(crate) fn unrestricted_smoother(cov: &SpdMatrix) -> Smoother {
    let h = cov.dim();
    Smoother {
        spec: ModelSpec::Unrestricted,
        projector: DMatrix::identity(h, h),
        v_m: cov.matrix().clone(),
        df: h as f64,
    }
}

pub fn unrestricted_surrogate(est: &PathEstimate) -> FittedSurrogate {
    FittedSurrogate::fit(Arc::new(unrestricted_smoother(est.cov())), est.beta_hat())
}

pub fn lambda2_upper_bound(est: &PathEstimate) -> Result<f64> {
    PenaltyContext::new(est.cov())?.lambda2_upper_bound()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// The ordered model universe for one covariance: polynomials of degree
/// 0..=3, the retained `(K, λ₁, λ₂)` grid in K-major lexicographic order,
/// then the unrestricted model.
#[derive(Debug, Clone)]
pub struct ModelUniverse {
    smoothers: Vec<Arc<Smoother>>,
    lambda2_max: f64,
    grid_points: usize,
}

impl ModelUniverse {
    pub fn build(cov: &SpdMatrix, grid_points: usize) -> Result<Self> {
        if grid_points < 2 {
            return Err(Error::InvalidInput(format!("grid_points must be >= 2, got {grid_points}")));
        }
        let h = cov.dim();
        let ctx = PenaltyContext::new(cov)?;
        let lambda2_max = ctx.lambda2_upper_bound()?;
        let l1 = log_grid(LOG_LAMBDA_MIN, LOG_LAMBDA1_MAX, grid_points);
        let l2 = log_grid(LOG_LAMBDA_MIN, lambda2_max.ln(), grid_points);

        let mut smoothers = Vec::new();
        for degree in 0..=3 {
            smoothers.push(Arc::new(polynomial_smoother(cov, degree)?));
        }

        let per_k = grid_points * grid_points;
        let n = (h - 1) * per_k;
        let grid = par::map_range(n, |idx| {
            let k = idx / per_k + 1;
            let a = l1[(idx % per_k) / grid_points];
            let b = l2[idx % grid_points];
            ctx.smoother(a, b, k)
        });
        let (lo, hi) = (TARGET_DF - DF_TOLERANCE, (h - 1) as f64 + DF_TOLERANCE);
        for s in grid {
            let s = s?;
            if s.df >= lo && s.df <= hi {
                smoothers.push(Arc::new(s));
            }
        }

        smoothers.push(Arc::new(unrestricted_smoother(cov)));
        Ok(ModelUniverse {
            smoothers,
            lambda2_max,
            grid_points,
        })
    }

    /// A universe from an explicit list (exposed for tests and custom
    /// model sets).
    pub fn from_smoothers(smoothers: Vec<Arc<Smoother>>) -> Result<Self> {
        if smoothers.is_empty() {
            return Err(Error::InvalidInput("model universe is empty".into()));
        }
        let h = smoothers[0].horizon();
        if let Some(bad) = smoothers.iter().find(|s| s.horizon() != h) {
            return Err(Error::DimensionMismatch {
                expected: h,
                actual: bad.horizon(),
            });
        }
        Ok(ModelUniverse {
            smoothers,
            lambda2_max: f64::NAN,
            grid_points: 0,
        })
    }

    pub fn smoothers(&self) -> &[Arc<Smoother>] {
        &self.smoothers
    }

    pub fn len(&self) -> usize {
        self.smoothers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smoothers.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.smoothers[0].horizon()
    }

    pub fn lambda2_max(&self) -> f64 {
        self.lambda2_max
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn fit(&self, beta_hat: &DVector<f64>) -> Vec<FittedSurrogate> {
        self.smoothers
            .iter()
            .map(|s| FittedSurrogate::fit(Arc::clone(s), beta_hat))
            .collect()
    }
}

pub fn build_universe(est: &PathEstimate, grid_points: usize) -> Result<Vec<FittedSurrogate>> {
    Ok(ModelUniverse::build(est.cov(), grid_points)?.fit(est.beta_hat()))
}
