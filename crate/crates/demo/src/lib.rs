//! WebAssembly bindings for the browser demo. Each export takes plain
//! numbers or JSON and returns JSON; the `*_json` functions are the same
//! operations without the JS boundary.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pathbounds::formats::{to_json_string, BandsFile, EstimateFile};
use pathbounds::inference::{full_analysis, log_box_volume, log_wald_volume, supt_critical_for_cov};
use pathbounds::numkit::{mvn_draw, RngStream};
use pathbounds::path_model::PathEstimate;
use pathbounds::simlab::{build_cov, toeplitz_correlation, truth_path, CovSpec, DgpKind, DgpSpec};

#[derive(Serialize)]
struct Example {
    truth: Vec<f64>,
    estimate: EstimateFile,
}

#[derive(Serialize)]
struct VolumePoint {
    h: usize,
    supt_critical: f64,
    log10_ratio: f64,
}

fn stringify(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// One draw `β̂ ~ N(β, V_β)` for a named DGP, with the true path.
pub fn example_json(dgp: &str, horizon: usize, sigma2: f64, rho: f64, seed: u32) -> Result<String, String> {
    let kind: DgpKind = dgp.parse().map_err(stringify)?;
    let spec = DgpSpec::new(kind).with_horizon(horizon);
    let cov = build_cov(&CovSpec { sigma2, rho, horizon }).map_err(stringify)?;
    let truth = truth_path(&spec);
    let mut rng = RngStream::new(seed as u64, 0);
    let beta_hat = mvn_draw(&truth, cov.factor(), &mut rng);
    let est = PathEstimate::new(beta_hat, cov).map_err(stringify)?;
    Ok(to_json_string(&Example {
        truth: truth.iter().copied().collect(),
        estimate: EstimateFile::from_estimate(&est),
    }))
}

/// All four bands for an estimate document.
pub fn analyze_json(estimate: &str, alpha: f64, n_draws: usize, seed: u32) -> Result<String, String> {
    let file = EstimateFile::parse(estimate).map_err(stringify)?;
    let est = file.to_estimate().map_err(stringify)?;
    let bundle = full_analysis(&est, alpha, n_draws, &RngStream::new(seed as u64, 0)).map_err(stringify)?;
    Ok(BandsFile::from_bundle(&bundle, seed as u64, file.labels).to_json())
}

/// `log10(vol Wald / vol sup-t)` for unit-variance Toeplitz covariance,
/// `H = 1..=max_h`.
pub fn volume_curve_json(rho: f64, max_h: usize, alpha: f64, n_draws: usize, seed: u32) -> Result<String, String> {
    let rng = RngStream::new(seed as u64, 0);
    let points = (1..=max_h)
        .map(|h| {
            let cov = toeplitz_correlation(h, rho).map_err(stringify)?;
            let c = supt_critical_for_cov(&cov, alpha, n_draws, &rng).map_err(stringify)?.value;
            let log_ratio = log_wald_volume(&cov, alpha).map_err(stringify)? - log_box_volume(&cov, c);
            Ok(VolumePoint {
                h,
                supt_critical: c,
                log10_ratio: log_ratio / std::f64::consts::LN_10,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(to_json_string(&points))
}

#[wasm_bindgen]
pub fn draw_example(dgp: &str, horizon: usize, sigma2: f64, rho: f64, seed: u32) -> Result<String, JsValue> {
    example_json(dgp, horizon, sigma2, rho, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn analyze(estimate: &str, alpha: f64, n_draws: usize, seed: u32) -> Result<String, JsValue> {
    analyze_json(estimate, alpha, n_draws, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn volume_curve(rho: f64, max_h: usize, alpha: f64, n_draws: usize, seed: u32) -> Result<String, JsValue> {
    volume_curve_json(rho, max_h, alpha, n_draws, seed).map_err(|e| JsValue::from_str(&e))
}
