//! Normal and chi-square distribution functions, their inverses, and the
//! type-1 empirical quantile.

use std::f64::consts::PI;

use super::special::{gamma_p, gamma_q};
use crate::error::{Error, Result};

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability {p} outside (0, 1)")))
    }
}

/// Standard normal CDF `Φ(x)`, via `erfc(t) = Q(1/2, t²)`.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let q = 0.5 * gamma_q(0.5, 0.5 * x * x);
    if x < 0.0 {
        q
    } else {
        1.0 - q
    }
}

/// Upper tail `1 − Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Acklam's rational approximation; relative error ≈ 1e-9, refined below.
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse standard normal CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    let mut x = acklam(p);
    // Halley steps on Φ(x) − p, working in the smaller tail for accuracy.
    for _ in 0..4 {
        let e = if p < 0.5 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_sf(x)
        };
        if e == 0.0 {
            break;
        }
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

/// Chi-square CDF with `df` degrees of freedom.
pub fn chi_square_cdf(x: f64, df: f64) -> f64 {
    gamma_p(0.5 * df, 0.5 * x)
}

/// Chi-square survival function `1 − F(x)`.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    gamma_q(0.5 * df, 0.5 * x)
}

/// Inverse chi-square CDF, by safeguarded Newton iteration on the CDF.
pub fn chi_square_quantile(p: f64, df: u32) -> Result<f64> {
    check_probability(p)?;
    if df == 0 {
        return Err(Error::domain("chi-square degrees of freedom must be positive"));
    }
    let k = df as f64;
    // Residual evaluated through whichever tail keeps precision.
    let residual = |x: f64| -> f64 {
        if p < 0.5 {
            chi_square_cdf(x, k) - p
        } else {
            (1.0 - p) - chi_square_sf(x, k)
        }
    };
    let density = |x: f64| -> f64 {
        let a = 0.5 * k;
        ((a - 1.0) * x.ln() - 0.5 * x - a * 2.0_f64.ln() - super::special::ln_gamma(a)).exp()
    };

    let mut lo = 0.0_f64;
    let mut hi = k.max(1.0);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    // Wilson–Hilferty start, clamped into the bracket.
    let z = normal_quantile(p)?;
    let c = 2.0 / (9.0 * k);
    let wh = k * (1.0 - c + z * c.sqrt()).powi(3);
    let mut x = if wh > lo && wh < hi { wh } else { 0.5 * (lo + hi) };

    for _ in 0..200 {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let f = density(x);
        let mut next = x - r / f;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Type-1 empirical quantile: the `⌈p·n⌉`-th order statistic (1-based),
/// clamped to `[1, n]`.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("empirical quantile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted[order_statistic_index(sorted.len(), p)])
}

/// Zero-based index of the type-1 order statistic.
pub(crate) fn order_statistic_index(n: usize, p: f64) -> usize {
    let rank = (p * n as f64).ceil() as usize;
    rank.clamp(1, n) - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson integration of the chi-square density over
    /// `[0, x]`, with the `t = u²` substitution to remove the df = 1
    /// singularity. Independent of the incomplete-gamma route.
    fn chi_square_cdf_quadrature(x: f64, df: f64) -> f64 {
        let n = 20_000;
        let top = x.sqrt();
        let h = top / n as f64;
        let a = 0.5 * df;
        // density of t=u² times dt/du = 2u
        let f = |u: f64| -> f64 {
            if u == 0.0 {
                return if df == 1.0 { 2.0 / (2.0_f64.sqrt() * PI.sqrt()) } else { 0.0 };
            }
            let t = u * u;
            let log_pdf = (a - 1.0) * t.ln() - 0.5 * t - a * 2.0_f64.ln() - super::super::special::ln_gamma(a);
            2.0 * u * log_pdf.exp()
        };
        let mut s = f(0.0) + f(top);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    /// Standard normal CDF by Simpson quadrature from 0.
    fn normal_cdf_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let mut s = normal_pdf(0.0) + normal_pdf(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(i as f64 * h);
        }
        0.5 + s * h / 3.0
    }

    #[test]
    fn quadrature_oracles_agree_with_cdfs() {
        for &(x, df) in &[(0.45, 1.0), (3.84, 1.0), (5.99, 2.0), (20.0, 12.0), (50.0, 36.0)] {
            assert!((chi_square_cdf(x, df) - chi_square_cdf_quadrature(x, df)).abs() < 1e-9, "x={x} df={df}");
        }
        for &x in &[-3.0, -1.0, 0.3, 1.96, 2.5] {
            assert!((normal_cdf(x) - normal_cdf_quadrature(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn chi_square_quantile_values() {
        // frozen from the quadrature oracle / closed forms
        let q = chi_square_quantile(0.95, 1).unwrap();
        assert!((q - 3.841_458_820_694_124).abs() < 1e-9);
        assert!((chi_square_cdf_quadrature(q, 1.0) - 0.95).abs() < 1e-9);
        let q2 = chi_square_quantile(0.95, 2).unwrap();
        assert!((q2 - (-2.0 * 0.05_f64.ln())).abs() < 1e-10);
        let qh = chi_square_quantile(0.5, 1).unwrap();
        assert!((qh - 0.454_936_423_119_572_7).abs() < 1e-9);
        assert!((chi_square_cdf(qh, 1.0) - 0.5).abs() < 1e-10);
        let q36 = chi_square_quantile(0.95, 36).unwrap();
        assert!((q36 - 50.998_460_165_710_65).abs() < 1e-8);
    }

    #[test]
    fn normal_quantile_values() {
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let z = normal_quantile(0.987_342).unwrap();
        // the quoted sup-t example rounds this to 2.236
        assert!((z - 2.236_546_422_328_853).abs() < 1e-9);
        assert!((normal_cdf(z) - 0.987_342).abs() < 1e-10);
        assert!((normal_quantile(1e-10).unwrap() + 6.361_340_902_404_056).abs() < 1e-8);
    }

    #[test]
    fn domain_errors() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(chi_square_quantile(1.5, 3).is_err());
        assert!(chi_square_quantile(0.5, 0).is_err());
        assert!(empirical_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_on_grid() {
        for i in 1..=99 {
            let p = i as f64 / 100.0;
            let z = normal_quantile(p).unwrap();
            assert!((normal_cdf(z) - p).abs() < 1e-12, "p={p}");
            for df in [1u32, 2, 5, 12, 36] {
                let x = chi_square_quantile(p, df).unwrap();
                assert!((chi_square_cdf(x, df as f64) - p).abs() < 1e-10, "p={p} df={df}");
            }
        }
    }

    #[test]
    fn empirical_quantile_examples() {
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[4.0, 3.0, 1.0, 2.0], 0.51).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&[5.0], 0.01).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[5.0], 0.99).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[3.0, 1.0], 0.0).unwrap(), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn empirical_quantile_monotone(
                xs in proptest::collection::vec(-1e3..1e3f64, 1..60),
                p1 in 0.0..1.0f64,
                p2 in 0.0..1.0f64,
            ) {
                let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
                prop_assert!(empirical_quantile(&xs, lo).unwrap() <= empirical_quantile(&xs, hi).unwrap());
            }
        }
    }
}
