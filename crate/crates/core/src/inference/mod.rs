//! Confidence bands for an estimated path: pointwise, sup-t, cumulative
//! and restricted (post-selection) bands, the joint Wald test, and the
//! Wald-to-sup-t volume ratio.

mod analysis;
mod bands;
mod critical;
mod volume;

use serde::{Deserialize, Serialize};

pub use analysis::{full_analysis, AnalysisBundle, AnalysisConfig, Analyzer};
pub use bands::{
    cumulative_band, cumulative_bounds, pointwise_bands, restricted_bounds, supt_bands, supt_bands_from, wald_joint_test,
};
pub use critical::{
    posi_constant, posi_constant_for, simulate_max_statistics, supt_critical, supt_critical_for_cov, CriticalKind,
    CriticalValueReport, RowTree, StudentizedRows, DEFAULT_DRAWS, DEGENERATE_VARIANCE_RATIO, MIN_DRAWS,
};
pub use volume::{log_box_volume, log_wald_volume, region_volume_ratio, region_volume_ratio_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandKind {
    Pointwise,
    #[serde(rename = "supt")]
    SupT,
    Cumulative,
    #[serde(rename = "restricted_posi")]
    RestrictedPoSI,
}

impl BandKind {
    pub fn name(&self) -> &'static str {
        match self {
            BandKind::Pointwise => "pointwise",
            BandKind::SupT => "supt",
            BandKind::Cumulative => "cumulative",
            BandKind::RestrictedPoSI => "restricted_posi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    pub kind: BandKind,
    pub critical_value: f64,
    pub alpha: f64,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BandSet {
    pub fn horizon(&self) -> usize {
        self.center.len()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u - l)).collect()
    }

    pub fn mean_half_width(&self) -> f64 {
        self.half_widths().iter().sum::<f64>() / self.horizon() as f64
    }

    /// Whether `path` lies inside the band at every horizon.
    pub fn contains(&self, path: &[f64]) -> bool {
        path.len() == self.horizon()
            && path
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(p, (l, u))| *l <= *p && *p <= *u)
    }
}

/// Wald interval `[l, u]` for `Σβ_h` and its per-horizon averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeBounds {
    pub u: f64,
    pub l: f64,
    #[serde(rename = "U_h")]
    pub per_horizon_upper: f64,
    #[serde(rename = "L_h")]
    pub per_horizon_lower: f64,
    pub kappa: f64,
}

impl CumulativeBounds {
    pub fn contains_sum(&self, total: f64) -> bool {
        self.l <= total && total <= self.u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldTestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}
