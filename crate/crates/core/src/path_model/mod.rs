//! Candidate surrogate models for an estimated path and their linear
//! smoothers.
//!
//! Every candidate `M` is a matrix `P(M)` mapping `β̂` to a restricted
//! estimate `β̃(M) = P(M)·β̂`. The universe mixes four GLS polynomial fits,
//! a grid of difference-penalty smoothers and the identity.

mod operators;
mod universe;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::SpdMatrix;

pub use operators::{DifferenceOperators, WeightingScheme};
pub use universe::{
    build_projector_penalized, build_projector_polynomial, build_universe, lambda2_upper_bound,
    unrestricted_surrogate, ModelUniverse, PenaltyContext, DEFAULT_GRID_POINTS, DF_TOLERANCE,
};

/// Estimated path `β̂` together with `V_β`, `σ² = mean(diag V_β)` and the
/// scaled covariance `V = V_β/σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEstimate {
    beta_hat: DVector<f64>,
    cov: SpdMatrix,
    sigma2: f64,
    v_scaled: SpdMatrix,
}

impl PathEstimate {
    pub fn new(beta_hat: DVector<f64>, cov: SpdMatrix) -> Result<Self> {
        if beta_hat.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                actual: beta_hat.len(),
            });
        }
        if let Some(index) = beta_hat.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "beta_hat",
                index,
            });
        }
        let sigma2 = cov.diagonal().sum() / cov.dim() as f64;
        let v_scaled = SpdMatrix::new(cov.matrix() / sigma2)?;
        Ok(PathEstimate {
            beta_hat,
            cov,
            sigma2,
            v_scaled,
        })
    }

    pub fn from_slices(beta_hat: &[f64], cov: SpdMatrix) -> Result<Self> {
        Self::new(DVector::from_column_slice(beta_hat), cov)
    }

    pub fn horizon(&self) -> usize {
        self.beta_hat.len()
    }

    pub fn beta_hat(&self) -> &DVector<f64> {
        &self.beta_hat
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn v_scaled(&self) -> &SpdMatrix {
        &self.v_scaled
    }

    /// Same covariance, different point estimate.
    pub fn with_beta_hat(&self, beta_hat: DVector<f64>) -> Result<Self> {
        if beta_hat.len() != self.horizon() {
            return Err(Error::DimensionMismatch {
                expected: self.horizon(),
                actual: beta_hat.len(),
            });
        }
        Ok(PathEstimate {
            beta_hat,
            ..self.clone()
        })
    }

    /// Standard deviations `√V_β(h,h)`.
    pub fn std_devs(&self) -> DVector<f64> {
        self.cov.diagonal().map(f64::sqrt)
    }
}

/// One candidate surrogate model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ModelSpec {
    Penalized { lambda1: f64, lambda2: f64, k: usize },
    Polynomial { degree: usize },
    Unrestricted,
}

impl ModelSpec {
    pub fn validate(&self, horizon: usize) -> Result<()> {
        match *self {
            ModelSpec::Penalized { lambda1, lambda2, k } => {
                for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
                    if !(l.is_finite() && l >= 0.0) {
                        return Err(Error::InvalidInput(format!("{name} = {l} must be finite and nonnegative")));
                    }
                }
                if k < 1 || k + 1 > horizon {
                    return Err(Error::InvalidInput(format!("K = {k} outside 1..={}", horizon.saturating_sub(1))));
                }
                Ok(())
            }
            ModelSpec::Polynomial { degree } => {
                if degree > 3 {
                    return Err(Error::InvalidInput(format!("polynomial degree {degree} outside 0..=3")));
                }
                if horizon <= degree + 1 {
                    return Err(Error::InvalidInput(format!(
                        "degree {degree} polynomial needs more than {} horizons",
                        degree + 1
                    )));
                }
                Ok(())
            }
            ModelSpec::Unrestricted => Ok(()),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Penalized { lambda1, lambda2, k } => write!(
                f,
                "penalized(log λ1 = {:.3}, log λ2 = {:.3}, K = {k})",
                lambda1.ln(),
                lambda2.ln()
            ),
            ModelSpec::Polynomial { degree } => {
                let name = ["constant", "linear", "quadratic", "cubic"][*degree];
                write!(f, "polynomial({name})")
            }
            ModelSpec::Unrestricted => f.write_str("unrestricted"),
        }
    }
}

/// The `β̂`-independent part of a surrogate: `P(M)`, `V_M = P V_β Pᵀ` and
/// `df(M) = trace P(M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoother {
    pub spec: ModelSpec,
    pub projector: DMatrix<f64>,
    pub v_m: DMatrix<f64>,
    pub df: f64,
}

impl Smoother {
    pub(crate) fn new(spec: ModelSpec, projector: DMatrix<f64>, cov: &SpdMatrix) -> Self {
        let v_m = &projector * cov.matrix() * projector.transpose();
        let v_m = (&v_m + v_m.transpose()) * 0.5;
        let df = projector.trace();
        Smoother {
            spec,
            projector,
            v_m,
            df,
        }
    }

    pub fn horizon(&self) -> usize {
        self.projector.nrows()
    }

    pub fn apply(&self, b: &DVector<f64>) -> DVector<f64> {
        &self.projector * b
    }
}

/// A smoother applied to a particular `β̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedSurrogate {
    smoother: Arc<Smoother>,
    beta_tilde: DVector<f64>,
}

impl FittedSurrogate {
    pub fn fit(smoother: Arc<Smoother>, beta_hat: &DVector<f64>) -> Self {
        let beta_tilde = smoother.apply(beta_hat);
        FittedSurrogate { smoother, beta_tilde }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.smoother.spec
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.smoother.projector
    }

    pub fn beta_tilde(&self) -> &DVector<f64> {
        &self.beta_tilde
    }

    pub fn v_m(&self) -> &DMatrix<f64> {
        &self.smoother.v_m
    }

    pub fn df(&self) -> f64 {
        self.smoother.df
    }

    pub fn horizon(&self) -> usize {
        self.beta_tilde.len()
    }

    pub fn smoother(&self) -> &Arc<Smoother> {
        &self.smoother
    }
}
