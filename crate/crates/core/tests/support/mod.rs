//! Independent reference computations for integration tests. Nothing here
//! calls into the library's solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Random SPD matrix `A Aᵀ + εI` scaled to unit mean diagonal.
pub fn random_spd(r: &mut ChaCha20Rng, h: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(h, h, |_, _| r.random_range(-1.0..1.0));
    let m = &a * a.transpose() + DMatrix::identity(h, h) * 0.2;
    let mean = m.trace() / h as f64;
    m / mean
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn gauss_jordan_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        a.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let p = a[(col, col)];
        assert!(p.abs() > 1e-300, "singular matrix");
        for j in 0..n {
            a[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = a[(i, col)];
                if f != 0.0 {
                    for j in 0..n {
                        a[(i, j)] -= f * a[(col, j)];
                        inv[(i, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
    }
    inv
}

/// Extremes of `1ᵀb` on `{b : (b−c)ᵀ A (b−c) = κ}` by Newton iteration
/// on the Lagrange conditions, started from a feasible point.
pub fn constrained_sum_extremes(c: &DVector<f64>, a: &DMatrix<f64>, kappa: f64) -> (f64, f64) {
    let n = c.len();
    let solve = |sign: f64| -> f64 {
        // feasible start along a coordinate-sum direction
        let d = DVector::from_element(n, sign);
        let q = (d.transpose() * a * &d)[(0, 0)];
        let mut b = c + &d * (kappa / q).sqrt();
        let mut mu = 1.0;
        for _ in 0..200 {
            let r = &b - c;
            let ar = a * &r;
            // F = [1 − 2μ A r ; rᵀ A r − κ] (sign handled by μ's sign)
            let mut f = DVector::zeros(n + 1);
            for i in 0..n {
                f[i] = 1.0 - 2.0 * mu * ar[i];
            }
            f[n] = r.dot(&ar) - kappa;
            if f.norm() < 1e-14 {
                break;
            }
            let mut jac = DMatrix::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    jac[(i, j)] = -2.0 * mu * a[(i, j)];
                }
                jac[(i, n)] = -2.0 * ar[i];
                jac[(n, i)] = 2.0 * ar[i];
            }
            let step = gauss_jordan_inverse(&jac) * f;
            for i in 0..n {
                b[i] -= step[i];
            }
            mu -= step[n];
        }
        b.sum()
    };
    (solve(1.0), solve(-1.0))
}

/// First and third difference matrices.
pub fn differences(h: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let d1 = DMatrix::from_fn(h - 1, h, |i, j| if j == i { -1.0 } else if j == i + 1 { 1.0 } else { 0.0 });
    let coef = [-1.0, 3.0, -3.0, 1.0];
    let d3 = DMatrix::from_fn(h - 3, h, |i, j| if j >= i && j < i + 4 { coef[j - i] } else { 0.0 });
    (d1, d3)
}

/// The penalized objective `(b−β̂)ᵀV⁻¹(b−β̂) + λ₁ bᵀD₁ᵀW₁D₁b + λ₂ bᵀD₃ᵀW₃D₃b`
/// with `V = V_β/σ²` and the variance-proportional weights, returned as
/// `(Hessian/2, linear term)` via direct construction.
pub fn penalized_objective(
    beta_hat: &DVector<f64>,
    cov: &DMatrix<f64>,
    lambda1: f64,
    lambda2: f64,
    k: usize,
) -> impl Fn(&DVector<f64>) -> (f64, DVector<f64>) {
    let h = beta_hat.len();
    let sigma2 = cov.trace() / h as f64;
    let v = cov / sigma2;
    let v_inv = gauss_jordan_inverse(&v);
    let (d1, d3) = differences(h);
    let v1 = &d1 * &v * d1.transpose();
    let v3 = &d3 * &v * d3.transpose();
    let tail: Vec<f64> = (k - 1..h - 1).map(|j| v1[(j, j)]).collect();
    let mean1 = tail.iter().sum::<f64>() / tail.len() as f64;
    let w1 = DVector::from_fn(h - 1, |j, _| if j + 1 < k { 0.0 } else { v1[(j, j)] / mean1 });
    let mean3 = (0..h - 3).map(|j| v3[(j, j)]).sum::<f64>() / (h - 3) as f64;
    let w3 = DVector::from_fn(h - 3, |j, _| v3[(j, j)] / mean3);
    let beta_hat = beta_hat.clone();
    move |b: &DVector<f64>| {
        let r = b - &beta_hat;
        let vr = &v_inv * &r;
        let e1 = &d1 * b;
        let e3 = &d3 * b;
        let we1 = e1.component_mul(&w1);
        let we3 = e3.component_mul(&w3);
        let value = r.dot(&vr) + lambda1 * e1.dot(&we1) + lambda2 * e3.dot(&we3);
        let grad = vr * 2.0 + d1.transpose() * we1 * (2.0 * lambda1) + d3.transpose() * we3 * (2.0 * lambda2);
        (value, grad)
    }
}

/// Minimize a strictly convex quadratic from value/gradient evaluations
/// with Fletcher–Reeves conjugate gradients and exact line search.
pub fn minimize_quadratic(f: impl Fn(&DVector<f64>) -> (f64, DVector<f64>), start: DVector<f64>) -> DVector<f64> {
    let n = start.len();
    let mut x = start;
    for _restart in 0..20 {
        let (_, mut g) = f(&x);
        let mut d = -g.clone();
        for _ in 0..n {
            if g.norm() < 1e-15 {
                return x;
            }
            // exact step for a quadratic: curvature from a gradient difference
            let (_, g_probe) = f(&(&x + &d));
            let curv = d.dot(&(&g_probe - &g));
            let t = -g.dot(&d) / curv;
            x += &d * t;
            let (_, g_new) = f(&x);
            let beta = g_new.norm_squared() / g.norm_squared();
            d = -&g_new + d * beta;
            g = g_new;
        }
    }
    x
}

/// `(1/n)·#{x_i ≤ t}` distance to Uniform(0,1).
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}
