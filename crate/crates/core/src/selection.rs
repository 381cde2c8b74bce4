//! BIC-analog model selection over a model universe.
//!
//! The criterion for model `M` is
//! `(β̂ − β̃(M))ᵀ V_β⁻¹ (β̂ − β̃(M)) + log(H)·df(M)`. Ties go to the smaller
//! `df`, then to the earlier universe entry.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numkit::SpdMatrix;
use crate::par;
use crate::path_model::{FittedSurrogate, PathEstimate, Smoother};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen: FittedSurrogate,
    pub criterion_values: Vec<f64>,
    pub chosen_index: usize,
}

pub fn bic_criterion(est: &PathEstimate, s: &FittedSurrogate) -> Result<f64> {
    if s.horizon() != est.horizon() {
        return Err(Error::DimensionMismatch {
            expected: est.horizon(),
            actual: s.horizon(),
        });
    }
    let resid = est.beta_hat() - s.beta_tilde();
    let fit = est.cov().inv_quad_form(&resid)?;
    Ok(fit + (est.horizon() as f64).ln() * s.df())
}

/// Index of the minimizing entry under the tie-break rule.
pub fn argmin_with_tiebreak(criteria: &[f64], dfs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in 0..criteria.len() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let better = criteria[i] < criteria[b] || (criteria[i] == criteria[b] && dfs[i] < dfs[b]);
                Some(if better { i } else { b })
            }
        };
    }
    best
}

pub fn select_model(est: &PathEstimate, universe: &[FittedSurrogate]) -> Result<SelectionResult> {
    if universe.is_empty() {
        return Err(Error::InvalidInput("cannot select from an empty universe".into()));
    }
    let criterion_values = universe
        .iter()
        .map(|s| bic_criterion(est, s))
        .collect::<Result<Vec<_>>>()?;
    let dfs: Vec<f64> = universe.iter().map(|s| s.df()).collect();
    let chosen_index = argmin_with_tiebreak(&criterion_values, &dfs).expect("nonempty");
    Ok(SelectionResult {
        chosen: universe[chosen_index].clone(),
        criterion_values,
        chosen_index,
    })
}

/// Precomputed whitened residual operators `L⁻¹(I − P(M))` for a fixed
/// universe, so that each new `β̂` costs one `H×H` mat-vec per model.
#[derive(Debug, Clone)]
pub struct Selector {
    horizon: usize,
    /// `L⁻¹(I − P(M))` for every model, stacked vertically.
    residual_ops: DMatrix<f64>,
    dfs: Vec<f64>,
    log_h: f64,
}

impl Selector {
    pub fn new(cov: &SpdMatrix, smoothers: &[Arc<Smoother>]) -> Result<Self> {
        let h = cov.dim();
        if smoothers.is_empty() {
            return Err(Error::InvalidInput("cannot select from an empty universe".into()));
        }
        if let Some(bad) = smoothers.iter().find(|s| s.horizon() != h) {
            return Err(Error::DimensionMismatch {
                expected: h,
                actual: bad.horizon(),
            });
        }
        let id = DMatrix::<f64>::identity(h, h);
        let blocks = par::map_range(smoothers.len(), |m| cov.factor().whiten_matrix(&(&id - &smoothers[m].projector)));
        let mut residual_ops = DMatrix::zeros(h * smoothers.len(), h);
        for (m, b) in blocks.iter().enumerate() {
            residual_ops.rows_mut(m * h, h).copy_from(b);
        }
        Ok(Selector {
            horizon: h,
            residual_ops,
            dfs: smoothers.iter().map(|s| s.df).collect(),
            log_h: (h as f64).ln(),
        })
    }

    pub fn len(&self) -> usize {
        self.dfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dfs.is_empty()
    }

    pub fn criteria(&self, beta_hat: &DVector<f64>) -> Vec<f64> {
        let resid = &self.residual_ops * beta_hat;
        resid
            .as_slice()
            .chunks_exact(self.horizon)
            .zip(&self.dfs)
            .map(|(r, df)| r.iter().map(|v| v * v).sum::<f64>() + self.log_h * df)
            .collect()
    }

    /// Criteria for several point estimates at once, one per column of
    /// `beta_hats`. Much faster than repeated [`Selector::criteria`] calls
    /// since the stacked operators are streamed once.
    pub fn criteria_batch(&self, beta_hats: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
        if beta_hats.nrows() != self.horizon {
            return Err(Error::DimensionMismatch {
                expected: self.horizon,
                actual: beta_hats.nrows(),
            });
        }
        let resid = &self.residual_ops * beta_hats;
        Ok(resid
            .column_iter()
            .map(|col| {
                col.as_slice()
                    .chunks_exact(self.horizon)
                    .zip(&self.dfs)
                    .map(|(r, df)| r.iter().map(|v| v * v).sum::<f64>() + self.log_h * df)
                    .collect()
            })
            .collect())
    }

    pub fn select_batch(&self, beta_hats: &DMatrix<f64>) -> Result<Vec<(usize, Vec<f64>)>> {
        Ok(self
            .criteria_batch(beta_hats)?
            .into_iter()
            .map(|crit| (argmin_with_tiebreak(&crit, &self.dfs).expect("nonempty"), crit))
            .collect())
    }

    /// `(chosen_index, criterion_values)`.
    pub fn select(&self, beta_hat: &DVector<f64>) -> Result<(usize, Vec<f64>)> {
        if beta_hat.len() != self.horizon {
            return Err(Error::DimensionMismatch {
                expected: self.horizon,
                actual: beta_hat.len(),
            });
        }
        let crit = self.criteria(beta_hat);
        let idx = argmin_with_tiebreak(&crit, &self.dfs).expect("nonempty");
        Ok((idx, crit))
    }
}
