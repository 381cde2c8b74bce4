use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{RngStream, SpdMatrix};

/// Stream id reserved for the frozen wiggly noise.
const WIGGLY_STREAM: u64 = 0x5749_4747;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpKind {
    Constant,
    SmoothFlat,
    Hump,
    Wiggly,
}

impl DgpKind {
    pub const ALL: [DgpKind; 4] = [DgpKind::Constant, DgpKind::SmoothFlat, DgpKind::Hump, DgpKind::Wiggly];

    pub fn name(&self) -> &'static str {
        match self {
            DgpKind::Constant => "constant",
            DgpKind::SmoothFlat => "smooth_flat",
            DgpKind::Hump => "hump",
            DgpKind::Wiggly => "wiggly",
        }
    }
}

impl fmt::Display for DgpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DgpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "constant" => Ok(DgpKind::Constant),
            "smooth_flat" | "smoothflat" => Ok(DgpKind::SmoothFlat),
            "hump" => Ok(DgpKind::Hump),
            "wiggly" => Ok(DgpKind::Wiggly),
            other => Err(Error::InvalidInput(format!(
                "unknown DGP '{other}' (expected constant, smooth_flat, hump or wiggly)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub horizon: usize,
    pub wiggly_seed: u64,
    /// Variance of the frozen wiggly perturbation.
    pub wiggly_noise_param: f64,
}

impl DgpSpec {
    pub fn new(kind: DgpKind) -> Self {
        DgpSpec {
            kind,
            horizon: 36,
            wiggly_seed: 0,
            wiggly_noise_param: 0.1,
        }
    }

    pub fn with_horizon(self, horizon: usize) -> Self {
        DgpSpec { horizon, ..self }
    }
}

/// True path `β_h`, `h = 1..H`.
pub fn truth_path(spec: &DgpSpec) -> DVector<f64> {
    let h_max = spec.horizon;
    match spec.kind {
        DgpKind::Constant => DVector::from_element(h_max, -0.4),
        DgpKind::SmoothFlat => DVector::from_fn(h_max, |i, _| {
            let h = (i + 1) as f64;
            if h <= 17.0 {
                -0.289 + (18.0 - h).powi(2) / 1000.0
            } else {
                -0.289
            }
        }),
        DgpKind::Hump => DVector::from_fn(h_max, |i, _| -0.4 - 0.4 * (3.0 * PI * i as f64 / 70.0).sin()),
        DgpKind::Wiggly => {
            let mut rng = RngStream::new(spec.wiggly_seed, WIGGLY_STREAM);
            let sd = spec.wiggly_noise_param.sqrt();
            DVector::from_fn(h_max, |i, _| {
                let base = if i < 19 { -0.4 * (PI * i as f64 / 35.0).sin() } else { -0.4 };
                base + sd * rng.standard_normal()
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovSpec {
    pub sigma2: f64,
    pub rho: f64,
    pub horizon: usize,
}

/// `V(i,j) = σ²·S_i·S_j·ρ^|i−j|` with `S_h = (100+h)/100`.
pub fn build_cov(spec: &CovSpec) -> Result<SpdMatrix> {
    let s = |i: usize| (101 + i) as f64 / 100.0;
    toeplitz_cov(spec, s)
}

/// Unit-variance Toeplitz covariance `ρ^|i−j|`.
pub fn toeplitz_correlation(horizon: usize, rho: f64) -> Result<SpdMatrix> {
    toeplitz_cov(&CovSpec { sigma2: 1.0, rho, horizon }, |_| 1.0)
}

fn toeplitz_cov(spec: &CovSpec, s: impl Fn(usize) -> f64) -> Result<SpdMatrix> {
    if spec.rho.is_nan() || spec.rho.abs() >= 1.0 {
        return Err(Error::InvalidInput(format!("rho = {} must satisfy |rho| < 1", spec.rho)));
    }
    if !(spec.sigma2 > 0.0 && spec.sigma2.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma2 = {} must be positive", spec.sigma2)));
    }
    if spec.horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least 1".into()));
    }
    let h = spec.horizon;
    let m = DMatrix::from_fn(h, h, |i, j| {
        let lag = i.abs_diff(j) as i32;
        spec.sigma2 * s(i) * s(j) * spec.rho.powi(lag)
    });
    SpdMatrix::new(m)
}

/// `n` log-equally-spaced values of `σ²` from `e^{log_hi}` down to `e^{log_lo}`.
pub fn log_sigma2_grid(log_hi: f64, log_lo: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![log_hi.exp()],
        _ => (0..n)
            .map(|i| (log_hi + (log_lo - log_hi) * i as f64 / (n - 1) as f64).exp())
            .collect(),
    }
}

pub fn default_sigma2_grid() -> Vec<f64> {
    log_sigma2_grid(-4.27, -8.43, 7)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_values() {
        let c = truth_path(&DgpSpec::new(DgpKind::Constant));
        assert_eq!(c.len(), 36);
        assert_eq!(c[6], -0.4);
        let s = truth_path(&DgpSpec::new(DgpKind::SmoothFlat));
        assert!(s[0].abs() < 1e-15);
        assert!((s[16] - (-0.289 + 0.001)).abs() < 1e-15);
        assert_eq!(s[17], -0.289);
        assert!(s.iter().skip(17).all(|&v| v == -0.289));
        let hmp = truth_path(&DgpSpec::new(DgpKind::Hump));
        assert_eq!(hmp[0], -0.4);
        assert!((hmp[35] - (-0.4 - 0.4 * (1.5 * PI).sin())).abs() < 1e-15);
    }

    #[test]
    fn wiggly_is_frozen_by_seed() {
        let spec = DgpSpec::new(DgpKind::Wiggly);
        let a = truth_path(&spec);
        assert_eq!(a, truth_path(&spec));
        let other = truth_path(&DgpSpec { wiggly_seed: 1, ..spec });
        assert_ne!(a, other);
        let flat = truth_path(&DgpSpec { wiggly_noise_param: 0.0, ..spec });
        assert_eq!(flat[0], 0.0);
        assert!(flat.iter().skip(19).all(|&v| v == -0.4));
        let dev: f64 = (&a - &flat).iter().map(|v| v * v).sum::<f64>() / 36.0;
        assert!(dev > 0.02 && dev < 0.3, "variance {dev}");
    }

    #[test]
    fn covariance_entries() {
        let v = build_cov(&CovSpec { sigma2: 0.014, rho: 0.0, horizon: 36 }).unwrap();
        assert!((v.matrix()[(0, 0)] - 0.0142814).abs() < 1e-12);
        assert_eq!(v.matrix()[(0, 1)], 0.0);
        let v = build_cov(&CovSpec { sigma2: 0.014, rho: 0.8, horizon: 36 }).unwrap();
        assert!((v.matrix()[(0, 1)] - 0.8 * 0.014 * 1.01 * 1.02).abs() < 1e-15);
        assert!(build_cov(&CovSpec { sigma2: 0.014, rho: 1.0, horizon: 4 }).is_err());
        assert!(toeplitz_correlation(24, 0.95).is_ok());
    }

    #[test]
    fn grid_endpoints() {
        let g = default_sigma2_grid();
        assert_eq!(g.len(), 7);
        assert!((g[0].ln() + 4.27).abs() < 1e-12);
        assert!((g[6].ln() + 8.43).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn parse_kinds() {
        for k in DgpKind::ALL {
            assert_eq!(k.name().parse::<DgpKind>().unwrap(), k);
        }
        assert!("quadratic".parse::<DgpKind>().is_err());
    }
}
