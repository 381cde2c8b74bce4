use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::bands::{cumulative_band, cumulative_bounds, pointwise_bands, restricted_bounds, supt_bands_from, wald_joint_test};
use super::critical::{posi_constant_for, supt_critical_for_cov, CriticalValueReport, DEFAULT_DRAWS};
use super::{BandSet, CumulativeBounds, WaldTestResult};
use crate::error::Result;
use crate::numkit::{RngStream, SpdMatrix};
use crate::path_model::{FittedSurrogate, ModelUniverse, PathEstimate, DEFAULT_GRID_POINTS};
use crate::selection::{SelectionResult, Selector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub n_draws: usize,
    pub grid_points: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 0.05,
            n_draws: DEFAULT_DRAWS,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBundle {
    pub pointwise: BandSet,
    pub supt: BandSet,
    pub cumulative: BandSet,
    pub restricted: BandSet,
    pub cumulative_bounds: CumulativeBounds,
    pub selection: SelectionResult,
    pub wald_zero: WaldTestResult,
    pub supt_critical: Arc<CriticalValueReport>,
    pub posi_critical: Arc<CriticalValueReport>,
}

/// Everything that depends on `V_β` alone: the universe, the selector and
/// both critical values. Build once, then call [`Analyzer::analyze`] for
/// each point estimate.
///
/// Both critical values are simulated from the same draws, so the PoSI
/// constant is never below the sup-t value.
#[derive(Debug, Clone)]
pub struct Analyzer {
    config: AnalysisConfig,
    cov: SpdMatrix,
    universe: ModelUniverse,
    selector: Selector,
    supt: Arc<CriticalValueReport>,
    posi: Arc<CriticalValueReport>,
}

impl Analyzer {
    pub fn new(cov: &SpdMatrix, config: AnalysisConfig, rng: &RngStream) -> Result<Self> {
        let universe = ModelUniverse::build(cov, config.grid_points)?;
        let selector = Selector::new(cov, universe.smoothers())?;
        let supt = supt_critical_for_cov(cov, config.alpha, config.n_draws, rng)?;
        let posi = posi_constant_for(cov, universe.smoothers(), config.alpha, config.n_draws, rng)?;
        Ok(Analyzer {
            config,
            cov: cov.clone(),
            universe,
            selector,
            supt: Arc::new(supt),
            posi: Arc::new(posi),
        })
    }

    /// Reuse critical values simulated for another covariance. Both
    /// critical values depend on `V_β` only up to a positive scale factor,
    /// so this is exact for `cov = c·V_β`.
    pub fn with_critical_values(
        cov: &SpdMatrix,
        config: AnalysisConfig,
        supt: Arc<CriticalValueReport>,
        posi: Arc<CriticalValueReport>,
    ) -> Result<Self> {
        let universe = ModelUniverse::build(cov, config.grid_points)?;
        let selector = Selector::new(cov, universe.smoothers())?;
        Ok(Analyzer {
            config,
            cov: cov.clone(),
            universe,
            selector,
            supt,
            posi,
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    pub fn universe(&self) -> &ModelUniverse {
        &self.universe
    }

    pub fn supt_critical(&self) -> &Arc<CriticalValueReport> {
        &self.supt
    }

    pub fn posi_critical(&self) -> &Arc<CriticalValueReport> {
        &self.posi
    }

    pub fn select(&self, beta_hat: &DVector<f64>) -> Result<SelectionResult> {
        let (chosen_index, criterion_values) = self.selector.select(beta_hat)?;
        Ok(self.selection_result(beta_hat, chosen_index, criterion_values))
    }

    fn selection_result(&self, beta_hat: &DVector<f64>, chosen_index: usize, criterion_values: Vec<f64>) -> SelectionResult {
        let chosen = FittedSurrogate::fit(Arc::clone(&self.universe.smoothers()[chosen_index]), beta_hat);
        SelectionResult {
            chosen,
            criterion_values,
            chosen_index,
        }
    }

    pub fn analyze(&self, beta_hat: &DVector<f64>) -> Result<AnalysisBundle> {
        let selection = self.select(beta_hat)?;
        self.assemble(beta_hat, selection)
    }

    /// [`Analyzer::analyze`] for a batch of point estimates.
    pub fn analyze_batch(&self, beta_hats: &[DVector<f64>]) -> Result<Vec<AnalysisBundle>> {
        if beta_hats.is_empty() {
            return Ok(Vec::new());
        }
        let stacked = DMatrix::from_columns(beta_hats);
        let picks = self.selector.select_batch(&stacked)?;
        beta_hats
            .iter()
            .zip(picks)
            .map(|(b, (idx, crit))| self.assemble(b, self.selection_result(b, idx, crit)))
            .collect()
    }

    fn assemble(&self, beta_hat: &DVector<f64>, selection: SelectionResult) -> Result<AnalysisBundle> {
        let alpha = self.config.alpha;
        let est = PathEstimate::new(beta_hat.clone(), self.cov.clone())?;
        let bounds = cumulative_bounds(&est, alpha)?;
        Ok(AnalysisBundle {
            pointwise: pointwise_bands(&est, alpha)?,
            supt: supt_bands_from(&est, &self.supt),
            cumulative: cumulative_band(&est, &bounds, alpha),
            restricted: restricted_bounds(&est, &selection.chosen, self.posi.value, alpha)?,
            cumulative_bounds: bounds,
            wald_zero: wald_joint_test(&est, &DVector::zeros(est.horizon()))?,
            selection,
            supt_critical: Arc::clone(&self.supt),
            posi_critical: Arc::clone(&self.posi),
        })
    }
}

pub fn full_analysis(est: &PathEstimate, alpha: f64, n_draws: usize, rng: &RngStream) -> Result<AnalysisBundle> {
    let config = AnalysisConfig {
        alpha,
        n_draws,
        ..AnalysisConfig::default()
    };
    Analyzer::new(est.cov(), config, rng)?.analyze(est.beta_hat())
}
