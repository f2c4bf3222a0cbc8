#![allow(dead_code)]

use std::f64::consts::PI;

/// Modal variance of the driving noise, computed from scratch.
pub fn q(k: usize, exponent: Option<f64>) -> f64 {
    match exponent {
        None => 1.0,
        Some(s) => ((k as f64 * PI).powi(2)).powf(-s),
    }
}

/// `E‖X_T‖²` of the drift-free scheme `X_{m+1} = e^{-τA_N}(X_m + ΔW_m)`
/// started from `sin(πx)`, i.e. coefficient `1/√2` on the first mode.
///
/// Each mode is Gaussian with mean `e^{-λT} x_k` and variance
/// `q τ Σ_{j=1}^{M} e^{-2λτj}`.
pub fn linear_second_moment(n_modes: usize, steps: usize, horizon: f64, exponent: Option<f64>) -> f64 {
    let tau = horizon / steps as f64;
    (1..=n_modes)
        .map(|k| {
            let lam = (k as f64 * PI).powi(2);
            let mean = if k == 1 {
                (-lam * horizon).exp() / 2f64.sqrt()
            } else {
                0.0
            };
            let r = (-2.0 * lam * tau).exp();
            let geometric = r * -(-2.0 * lam * horizon).exp_m1() / -(-2.0 * lam * tau).exp_m1();
            mean * mean + q(k, exponent) * tau * geometric
        })
        .sum()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / 2f64.sqrt()))
}

/// Two-sided one-sample KS statistic against `cdf`.
pub fn ks_statistic(mut values: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail `P(√n D > t)`.
pub fn kolmogorov_tail(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as usize % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * t * t).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}
