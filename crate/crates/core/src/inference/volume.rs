//! Volume of the Wald ellipsoid relative to the sup-t box, in log space.

use std::f64::consts::PI;

use super::critical::supt_critical_for_cov;
use crate::error::Result;
use crate::numkit::{chi_square_quantile, ln_gamma, RngStream, SpdMatrix};

/// `log vol{b : (b−β̂)ᵀV⁻¹(b−β̂) ≤ χ²_{1−α,H}}`.
pub fn log_wald_volume(cov: &SpdMatrix, alpha: f64) -> Result<f64> {
    let h = cov.dim() as f64;
    let q = chi_square_quantile(1.0 - alpha, cov.dim() as u32)?;
    Ok(0.5 * h * PI.ln() - ln_gamma(0.5 * h + 1.0) + 0.5 * h * q.ln() + 0.5 * cov.log_det())
}

/// `log Π_h 2·c·√V(h,h)`.
pub fn log_box_volume(cov: &SpdMatrix, critical_value: f64) -> f64 {
    let h = cov.dim() as f64;
    h * (2.0 * critical_value).ln() + 0.5 * cov.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

pub fn region_volume_ratio_with(cov: &SpdMatrix, alpha: f64, critical_value: f64) -> Result<f64> {
    Ok((log_wald_volume(cov, alpha)? - log_box_volume(cov, critical_value)).exp())
}

pub fn region_volume_ratio(cov: &SpdMatrix, alpha: f64, n_draws: usize, rng: &RngStream) -> Result<f64> {
    let c = supt_critical_for_cov(cov, alpha, n_draws, rng)?;
    region_volume_ratio_with(cov, alpha, c.value)
}
