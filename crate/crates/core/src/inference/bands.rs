use nalgebra::DVector;

use super::critical::{supt_critical, CriticalValueReport, DEGENERATE_VARIANCE_RATIO};
use super::{BandKind, BandSet, CumulativeBounds, WaldTestResult};
use crate::error::{Error, Result};
use crate::numkit::{chi_square_quantile, chi_square_sf, normal_quantile, RngStream};
use crate::path_model::{FittedSurrogate, PathEstimate};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1)")))
    }
}

fn symmetric_band(kind: BandKind, center: &DVector<f64>, half: &[f64], critical_value: f64, alpha: f64) -> BandSet {
    BandSet {
        kind,
        critical_value,
        alpha,
        center: center.iter().copied().collect(),
        lower: center.iter().zip(half).map(|(c, w)| c - w).collect(),
        upper: center.iter().zip(half).map(|(c, w)| c + w).collect(),
    }
}

fn studentized_band(kind: BandKind, est: &PathEstimate, c: f64, alpha: f64) -> BandSet {
    let half: Vec<f64> = est.std_devs().iter().map(|sd| c * sd).collect();
    symmetric_band(kind, est.beta_hat(), &half, c, alpha)
}

pub fn pointwise_bands(est: &PathEstimate, alpha: f64) -> Result<BandSet> {
    check_alpha(alpha)?;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    Ok(studentized_band(BandKind::Pointwise, est, z, alpha))
}

pub fn supt_bands(est: &PathEstimate, alpha: f64, n_draws: usize, rng: &RngStream) -> Result<BandSet> {
    let report = supt_critical(est, alpha, n_draws, rng)?;
    Ok(supt_bands_from(est, &report))
}

/// Sup-t bands for a precomputed critical value.
pub fn supt_bands_from(est: &PathEstimate, report: &CriticalValueReport) -> BandSet {
    studentized_band(BandKind::SupT, est, report.value, report.alpha)
}

pub fn cumulative_bounds(est: &PathEstimate, alpha: f64) -> Result<CumulativeBounds> {
    check_alpha(alpha)?;
    let kappa = chi_square_quantile(1.0 - alpha, 1)?;
    let total: f64 = est.beta_hat().sum();
    let var_total: f64 = est.cov().matrix().sum();
    let half = (kappa * var_total).sqrt();
    let (u, l) = (total + half, total - half);
    let h = est.horizon() as f64;
    Ok(CumulativeBounds {
        u,
        l,
        per_horizon_upper: u / h,
        per_horizon_lower: l / h,
        kappa,
    })
}

/// The cumulative bounds as a constant band.
pub fn cumulative_band(est: &PathEstimate, bounds: &CumulativeBounds, alpha: f64) -> BandSet {
    let h = est.horizon();
    let mid = 0.5 * (bounds.per_horizon_upper + bounds.per_horizon_lower);
    BandSet {
        kind: BandKind::Cumulative,
        critical_value: bounds.kappa.sqrt(),
        alpha,
        center: vec![mid; h],
        lower: vec![bounds.per_horizon_lower; h],
        upper: vec![bounds.per_horizon_upper; h],
    }
}

/// `β̃(M̂)_h ± c·√V_M̂(h,h)`. Horizons with `V_M̂(h,h)` below the
/// degeneracy threshold get zero width.
pub fn restricted_bounds(est: &PathEstimate, selected: &FittedSurrogate, c_posi: f64, alpha: f64) -> Result<BandSet> {
    check_alpha(alpha)?;
    if !(c_posi > 0.0 && c_posi.is_finite()) {
        return Err(Error::InvalidInput(format!("critical value {c_posi} must be positive")));
    }
    if selected.horizon() != est.horizon() {
        return Err(Error::DimensionMismatch {
            expected: est.horizon(),
            actual: selected.horizon(),
        });
    }
    let threshold = DEGENERATE_VARIANCE_RATIO * est.sigma2();
    let v = selected.v_m();
    let half: Vec<f64> = (0..est.horizon())
        .map(|i| if v[(i, i)] < threshold { 0.0 } else { c_posi * v[(i, i)].sqrt() })
        .collect();
    Ok(symmetric_band(BandKind::RestrictedPoSI, selected.beta_tilde(), &half, c_posi, alpha))
}

pub fn wald_joint_test(est: &PathEstimate, null_path: &DVector<f64>) -> Result<WaldTestResult> {
    if null_path.len() != est.horizon() {
        return Err(Error::DimensionMismatch {
            expected: est.horizon(),
            actual: null_path.len(),
        });
    }
    let statistic = est.cov().inv_quad_form(&(est.beta_hat() - null_path))?;
    let df = est.horizon();
    Ok(WaldTestResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df as f64),
    })
}
