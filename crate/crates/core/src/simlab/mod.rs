//! Monte Carlo study of the bands on known true paths.
//!
//! Each cell fixes a true path and a covariance, draws `β̂ ~ N(β, V_β)`
//! repeatedly and records coverage, relative widths and MSE of the
//! restricted estimate. Cells sharing a covariance share the universe and
//! critical values; repetitions use common random numbers across cells.

mod dgp;

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{AnalysisConfig, Analyzer, DEFAULT_DRAWS};
use crate::numkit::{mvn_draw, RngStream, SpdMatrix};
use crate::par;
use crate::path_model::{ModelUniverse, DEFAULT_GRID_POINTS};
use crate::selection::Selector;

pub use dgp::{
    build_cov, default_sigma2_grid, log_sigma2_grid, toeplitz_correlation, truth_path, CovSpec, DgpKind, DgpSpec,
};

pub const MIN_REPS: usize = 100;

const CRITICAL_TAG: u64 = 1;
const REPS_TAG: u64 = 2;

/// Repetitions whose selection criteria are evaluated in one product.
const REPS_PER_BATCH: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub dgp: DgpKind,
    pub rho: f64,
    pub sigma2: f64,
    pub horizon: usize,
    pub alpha: f64,
    pub mse_ratio: f64,
    pub cover_pointwise: f64,
    pub cover_supt: f64,
    pub cover_restricted_truth: f64,
    pub cover_restricted_surrogate: f64,
    pub cover_cumulative: f64,
    pub width_supt_rel: f64,
    pub width_restricted_rel: f64,
    pub mean_df: f64,
    pub supt_critical: f64,
    pub posi_critical: f64,
    pub n_reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub cells: Vec<CellReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub dgps: Vec<DgpSpec>,
    pub rhos: Vec<f64>,
    pub sigma2_grid: Vec<f64>,
    pub horizon: usize,
    pub alpha: f64,
    pub n_reps: usize,
    pub n_draws: usize,
    pub grid_points: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            dgps: DgpKind::ALL.iter().map(|&k| DgpSpec::new(k)).collect(),
            rhos: vec![0.0, 0.8],
            sigma2_grid: default_sigma2_grid(),
            horizon: 36,
            alpha: 0.05,
            n_reps: 1000,
            n_draws: DEFAULT_DRAWS,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

struct RepOutcome {
    sq_err_restricted: f64,
    sq_err_unrestricted: f64,
    cover_pointwise: bool,
    cover_supt: bool,
    cover_restricted_truth: bool,
    cover_restricted_surrogate: bool,
    cover_cumulative: bool,
    width_pointwise: f64,
    width_supt: f64,
    width_restricted: f64,
    df: f64,
}

fn rep_stream(rng: &RngStream) -> RngStream {
    rng.derive(REPS_TAG)
}

fn draw_beta_hat(beta: &DVector<f64>, cov: &SpdMatrix, reps: &RngStream, r: usize) -> DVector<f64> {
    let mut stream = reps.block(r as u64);
    mvn_draw(beta, cov.factor(), &mut stream)
}

fn check_reps(n_reps: usize) -> Result<()> {
    if n_reps >= MIN_REPS {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("n_reps = {n_reps} below the minimum {MIN_REPS}")))
    }
}

/// One cell on a prepared analyzer. `rng` keys the repetitions.
pub fn run_cell_with(analyzer: &Analyzer, dgp: &DgpSpec, cov: &CovSpec, n_reps: usize, rng: &RngStream) -> Result<CellReport> {
    check_reps(n_reps)?;
    if dgp.horizon != analyzer.cov().dim() {
        return Err(Error::DimensionMismatch {
            expected: analyzer.cov().dim(),
            actual: dgp.horizon,
        });
    }
    let beta = truth_path(dgp);
    let beta_slice = beta.as_slice();
    let total: f64 = beta.sum();
    let reps = rep_stream(rng);
    let n_batches = n_reps.div_ceil(REPS_PER_BATCH);
    let batches = par::map_range(n_batches, |b| -> Result<Vec<RepOutcome>> {
        let range = b * REPS_PER_BATCH..((b + 1) * REPS_PER_BATCH).min(n_reps);
        let draws: Vec<DVector<f64>> = range.map(|r| draw_beta_hat(&beta, analyzer.cov(), &reps, r)).collect();
        let bundles = analyzer.analyze_batch(&draws)?;
        Ok(draws
            .iter()
            .zip(bundles)
            .map(|(beta_hat, bundle)| {
                let chosen = &bundle.selection.chosen;
                let surrogate = chosen.smoother().apply(&beta);
                RepOutcome {
                    sq_err_restricted: (chosen.beta_tilde() - &beta).norm_squared(),
                    sq_err_unrestricted: (beta_hat - &beta).norm_squared(),
                    cover_pointwise: bundle.pointwise.contains(beta_slice),
                    cover_supt: bundle.supt.contains(beta_slice),
                    cover_restricted_truth: bundle.restricted.contains(beta_slice),
                    cover_restricted_surrogate: bundle.restricted.contains(surrogate.as_slice()),
                    cover_cumulative: bundle.cumulative_bounds.contains_sum(total),
                    width_pointwise: bundle.pointwise.mean_half_width(),
                    width_supt: bundle.supt.mean_half_width(),
                    width_restricted: bundle.restricted.mean_half_width(),
                    df: chosen.df(),
                }
            })
            .collect())
    });
    let mut outcomes = Vec::with_capacity(n_reps);
    for b in batches {
        outcomes.extend(b?);
    }

    let n = n_reps as f64;
    let mean = |f: &dyn Fn(&RepOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    let freq = |f: &dyn Fn(&RepOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
    let width_pw = mean(&|o| o.width_pointwise);
    Ok(CellReport {
        dgp: dgp.kind,
        rho: cov.rho,
        sigma2: cov.sigma2,
        horizon: dgp.horizon,
        alpha: analyzer.config().alpha,
        mse_ratio: mean(&|o| o.sq_err_restricted) / mean(&|o| o.sq_err_unrestricted),
        cover_pointwise: freq(&|o| o.cover_pointwise),
        cover_supt: freq(&|o| o.cover_supt),
        cover_restricted_truth: freq(&|o| o.cover_restricted_truth),
        cover_restricted_surrogate: freq(&|o| o.cover_restricted_surrogate),
        cover_cumulative: freq(&|o| o.cover_cumulative),
        width_supt_rel: mean(&|o| o.width_supt) / width_pw,
        width_restricted_rel: mean(&|o| o.width_restricted) / width_pw,
        mean_df: mean(&|o| o.df),
        supt_critical: analyzer.supt_critical().value,
        posi_critical: analyzer.posi_critical().value,
        n_reps,
        seed: rng.seed(),
    })
}

fn analysis_config(alpha: f64, n_draws: usize, grid_points: usize) -> AnalysisConfig {
    AnalysisConfig {
        alpha,
        n_draws,
        grid_points,
    }
}

pub fn run_cell(
    dgp: &DgpSpec,
    cov: &CovSpec,
    alpha: f64,
    n_reps: usize,
    n_draws_crit: usize,
    rng: &RngStream,
) -> Result<CellReport> {
    check_reps(n_reps)?;
    let v = build_cov(cov)?;
    let analyzer = Analyzer::new(&v, analysis_config(alpha, n_draws_crit, DEFAULT_GRID_POINTS), &rng.derive(CRITICAL_TAG))?;
    run_cell_with(&analyzer, dgp, cov, n_reps, rng)
}

/// Every `(dgp, ρ, σ²)` cell. Critical values are simulated once per `ρ`
/// and reused across `σ²`, which only rescales `V_β`.
pub fn run_study(config: &StudyConfig, rng: &RngStream) -> Result<SimReport> {
    check_reps(config.n_reps)?;
    if config.dgps.is_empty() || config.rhos.is_empty() || config.sigma2_grid.is_empty() {
        return Err(Error::InvalidInput("study needs at least one DGP, rho and sigma2".into()));
    }
    let acfg = analysis_config(config.alpha, config.n_draws, config.grid_points);
    let mut cells = Vec::new();
    for &rho in &config.rhos {
        let mut critical = None;
        for &sigma2 in &config.sigma2_grid {
            let cov_spec = CovSpec {
                sigma2,
                rho,
                horizon: config.horizon,
            };
            let v = build_cov(&cov_spec)?;
            let analyzer = match &critical {
                None => Analyzer::new(&v, acfg, &rng.derive(CRITICAL_TAG))?,
                Some((supt, posi)) => Analyzer::with_critical_values(&v, acfg, Arc::clone(supt), Arc::clone(posi))?,
            };
            critical.get_or_insert_with(|| (Arc::clone(analyzer.supt_critical()), Arc::clone(analyzer.posi_critical())));
            for dgp in &config.dgps {
                let dgp = dgp.with_horizon(config.horizon);
                cells.push(run_cell_with(&analyzer, &dgp, &cov_spec, config.n_reps, rng)?);
            }
        }
    }
    cells.sort_by(|a, b| {
        a.dgp
            .cmp(&b.dgp)
            .then(a.rho.total_cmp(&b.rho))
            .then(b.sigma2.total_cmp(&a.sigma2))
    });
    Ok(SimReport { seed: rng.seed(), cells })
}

/// Selected restricted paths `β̃(M̂)` over `n_reps` draws, using the same
/// repetition stream as [`run_cell`].
pub fn surrogate_fan(dgp: &DgpSpec, cov: &CovSpec, n_reps: usize, rng: &RngStream) -> Result<Vec<DVector<f64>>> {
    let v = build_cov(cov)?;
    if dgp.horizon != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            actual: dgp.horizon,
        });
    }
    let universe = ModelUniverse::build(&v, DEFAULT_GRID_POINTS)?;
    let selector = Selector::new(&v, universe.smoothers())?;
    let beta = truth_path(dgp);
    let reps = rep_stream(rng);
    par::map_range(n_reps, |r| {
        let beta_hat = draw_beta_hat(&beta, &v, &reps, r);
        let (idx, _) = selector.select(&beta_hat)?;
        Ok(universe.smoothers()[idx].apply(&beta_hat))
    })
    .into_iter()
    .collect()
}

/// Analyzer for `cov` keyed the way [`run_cell`] keys its critical values.
pub fn cell_analyzer(cov: &CovSpec, alpha: f64, n_draws: usize, rng: &RngStream) -> Result<Analyzer> {
    let v = build_cov(cov)?;
    Analyzer::new(&v, analysis_config(alpha, n_draws, DEFAULT_GRID_POINTS), &rng.derive(CRITICAL_TAG))
}
