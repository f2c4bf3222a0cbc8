//! The Allen–Cahn drift `F(v)(x) = v(x) - v(x)³`, its Galerkin projection
//! `P_N F`, and the tamed drift increment of the time stepper.
//!
//! `P_N F` is evaluated pseudospectrally: synthesize the `N` modes on a grid
//! with spacing `1 / (dealias_factor · N)`, apply `f` pointwise and analyze
//! back. A cubic of a band-`N` field has band `3N`, and the DST-I on `L`
//! intervals folds mode `m` onto `2L - m`, so the first `N` coefficients come
//! out alias-free as soon as `L > 2N`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdeError};
use crate::spectral::{l2_norm, SineTransform, SpectralField};

/// Scalar nonlinearity `f(u) = u - u³`.
#[inline]
pub fn allen_cahn(u: f64) -> f64 {
    u - u * u * u
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NemytskiiConfig {
    dealias_factor: usize,
}

impl Default for NemytskiiConfig {
    fn default() -> Self {
        Self { dealias_factor: 4 }
    }
}

impl NemytskiiConfig {
    pub fn new(dealias_factor: usize) -> Result<Self> {
        if dealias_factor < 3 {
            return Err(SpdeError::Domain(format!(
                "dealias factor must be at least 3, got {dealias_factor}"
            )));
        }
        Ok(Self { dealias_factor })
    }

    pub fn dealias_factor(&self) -> usize {
        self.dealias_factor
    }

    /// Number of grid intervals used for `n_modes` retained modes.
    pub fn grid_intervals(&self, n_modes: usize) -> usize {
        self.dealias_factor * n_modes
    }
}

/// Reusable evaluator of `P_N F` for a fixed mode count.
pub struct Nemytskii {
    n_modes: usize,
    transform: SineTransform,
    grid: Vec<f64>,
}

impl Nemytskii {
    pub fn new(n_modes: usize, config: NemytskiiConfig) -> Self {
        assert!(n_modes >= 1);
        let transform = SineTransform::new(config.grid_intervals(n_modes));
        let grid = vec![0.0; transform.grid_size()];
        Self {
            n_modes,
            transform,
            grid,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Writes `P_N F(coeffs)` into `out`.
    pub fn apply_into(&mut self, coeffs: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(coeffs.len(), self.n_modes);
        debug_assert_eq!(out.len(), self.n_modes);
        self.transform.synthesize(coeffs, &mut self.grid);
        let mut finite = true;
        for v in self.grid.iter_mut() {
            *v = allen_cahn(*v);
            finite &= v.is_finite();
        }
        if !finite {
            return Err(SpdeError::Diverged { step: None });
        }
        self.transform.analyze(&self.grid, out);
        Ok(())
    }

    /// Writes the tamed increment `τ g / (1 + τ‖g‖)`, `g = P_N F(coeffs)`,
    /// into `out` and returns `‖g‖`.
    pub fn tamed_into(&mut self, coeffs: &[f64], tau: f64, out: &mut [f64]) -> Result<f64> {
        self.apply_into(coeffs, out)?;
        let norm = l2_norm(out);
        let scale = tau / (1.0 + tau * norm);
        for g in out.iter_mut() {
            *g *= scale;
        }
        Ok(norm)
    }

    pub fn apply(&mut self, field: &SpectralField) -> Result<SpectralField> {
        let mut out = vec![0.0; self.n_modes];
        self.apply_into(field.coeffs(), &mut out)?;
        Ok(SpectralField::from_vec_unchecked(out))
    }
}

/// `P_N F(field)` with `N = field.n_modes()`.
pub fn apply_f(field: &SpectralField, config: NemytskiiConfig) -> Result<SpectralField> {
    Nemytskii::new(field.n_modes(), config).apply(field)
}

/// The pre-semigroup drift increment `τ P_N F(X) / (1 + τ‖P_N F(X)‖)`.
pub fn tamed_drift(field: &SpectralField, tau: f64, config: NemytskiiConfig) -> Result<SpectralField> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(SpdeError::InvalidTime(tau));
    }
    let mut out = vec![0.0; field.n_modes()];
    Nemytskii::new(field.n_modes(), config).tamed_into(field.coeffs(), tau, &mut out)?;
    Ok(SpectralField::from_vec_unchecked(out))
}

/// Scalar one-sided Lipschitz bound `(u - v)(f(u) - f(v)) ≤ (u - v)²`.
pub fn one_sided_check(u: f64, v: f64) -> bool {
    let d = u - v;
    d * (allen_cahn(u) - allen_cahn(v)) <= d * d + 1e-12
}

/// `P_N F` by explicit triple products of sine modes, `O(N³)`.
///
/// Uses `sin a sin b sin c = ¼[sin(a+b-c) + sin(a-b+c) + sin(-a+b+c) - sin(a+b+c)]`,
/// which for `v = Σ c_i e_i` gives
/// `⟨v³, e_k⟩ = ½ Σ_{i,j,l} c_i c_j c_l [s(i+j-l) + s(i-j+l) + s(-i+j+l) - s(i+j+l)]_k`
/// with `s(m) = sign(m) e_{|m|}`. Independent of the transform path, so it
/// serves as an oracle.
pub fn cubic_projection_direct(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() as i64;
    let mut cube = vec![0.0; coeffs.len()];
    let mut deposit = |m: i64, w: f64| {
        let k = m.abs();
        if k >= 1 && k <= n {
            cube[(k - 1) as usize] += m.signum() as f64 * w;
        }
    };
    for i in 1..=n {
        for j in 1..=n {
            let cij = coeffs[(i - 1) as usize] * coeffs[(j - 1) as usize];
            if cij == 0.0 {
                continue;
            }
            for l in 1..=n {
                let w = 0.5 * cij * coeffs[(l - 1) as usize];
                if w == 0.0 {
                    continue;
                }
                deposit(i + j - l, w);
                deposit(i - j + l, w);
                deposit(-i + j + l, w);
                deposit(i + j + l, -w);
            }
        }
    }
    coeffs.iter().zip(&cube).map(|(c, q)| c - q).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config() -> NemytskiiConfig {
        NemytskiiConfig::default()
    }

    #[test]
    fn rejects_small_dealias_factor() {
        assert!(NemytskiiConfig::new(2).is_err());
        assert_eq!(NemytskiiConfig::new(3).unwrap().grid_intervals(8), 24);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let out = apply_f(&SpectralField::zeros(7), config()).unwrap();
        assert!(out.coeffs().iter().all(|c| *c == 0.0));
        let tamed = tamed_drift(&SpectralField::zeros(7), 0.1, config()).unwrap();
        assert!(tamed.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn first_mode_cubic() {
        for factor in [3, 4, 5] {
            for n in [3, 4, 9, 16] {
                let e1 = SpectralField::unit(n, 1).unwrap();
                let out = apply_f(&e1, NemytskiiConfig::new(factor).unwrap()).unwrap();
                for (k, c) in out.coeffs().iter().enumerate() {
                    let expect = match k {
                        0 => -0.5,
                        2 => 0.5,
                        _ => 0.0,
                    };
                    assert!((c - expect).abs() < 1e-12, "factor={factor} n={n} k={k}: {c}");
                }
            }
        }
        let direct = cubic_projection_direct(&[1.0, 0.0, 0.0]);
        assert_eq!(direct, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn small_amplitude_is_linear() {
        let a = 1e-6;
        let mut c = vec![0.0; 8];
        c[0] = a;
        let out = apply_f(&SpectralField::new(c).unwrap(), config()).unwrap();
        assert!((out.coeffs()[0] - a).abs() < 1e-17);
    }

    #[test]
    fn divergence_is_reported() {
        let huge = SpectralField::new(vec![1e120, 0.0]).unwrap();
        assert!(matches!(apply_f(&huge, config()), Err(SpdeError::Diverged { .. })));
        assert!(matches!(
            tamed_drift(&huge, 0.1, config()),
            Err(SpdeError::Diverged { .. })
        ));
    }

    #[test]
    fn tamed_norm_examples() {
        // A field whose drift has unit norm: scale the first mode until ‖P_N F‖ = 1.
        let g_norm = |a: f64| {
            apply_f(&SpectralField::new(vec![a, 0.0, 0.0]).unwrap(), config())
                .unwrap()
                .h_norm()
        };
        let (mut lo, mut hi) = (1.0, 1.5);
        assert!(g_norm(lo) < 1.0 && g_norm(hi) > 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g_norm(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let field = SpectralField::new(vec![lo, 0.0, 0.0]).unwrap();
        let out = tamed_drift(&field, 0.5, config()).unwrap();
        assert!((out.h_norm() - 1.0 / 3.0).abs() < 1e-12);
        assert!(tamed_drift(&field, 0.0, config()).is_err());
    }

    #[test]
    fn one_sided_examples() {
        assert!(one_sided_check(0.7, 0.7));
        assert!(one_sided_check(2.0, -2.0));
        let d = 4.0 * (allen_cahn(2.0) - allen_cahn(-2.0));
        assert_eq!(d, -48.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2020);
        for _ in 0..1_000_000 {
            let u = rng.random_range(-100.0..100.0);
            let v = rng.random_range(-100.0..100.0);
            assert!(one_sided_check(u, v), "u={u} v={v}");
        }
    }

    fn coeffs(max_len: usize, amp: f64) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-amp..amp, 1..=max_len)
    }

    proptest! {
        #[test]
        fn dealiased_matches_triple_products(c in coeffs(32, 2.0), factor in 3usize..6) {
            let field = SpectralField::new(c.clone()).unwrap();
            let fast = apply_f(&field, NemytskiiConfig::new(factor).unwrap()).unwrap();
            let slow = cubic_projection_direct(&c);
            for (a, b) in fast.coeffs().iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
            }
        }

        #[test]
        fn odd_symmetry(c in coeffs(24, 3.0)) {
            let f = SpectralField::new(c.clone()).unwrap();
            let neg = SpectralField::new(c.iter().map(|v| -v).collect()).unwrap();
            let a = apply_f(&f, config()).unwrap();
            let b = apply_f(&neg, config()).unwrap();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                prop_assert_eq!(*x, -*y);
            }
        }

        #[test]
        fn galerkin_invariance(c in coeffs(16, 2.0), extra in 0usize..20) {
            let f = SpectralField::new(c).unwrap();
            let n = f.n_modes();
            let coarse = apply_f(&f, config()).unwrap();
            let fine = apply_f(&f.project(n + extra), config()).unwrap().project(n);
            for (a, b) in coarse.coeffs().iter().zip(fine.coeffs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn taming_bound_and_limit(c in coeffs(16, 4.0), log_tau in -8.0f64..0.0) {
            let tau = 10f64.powf(log_tau);
            let f = SpectralField::new(c).unwrap();
            let g = apply_f(&f, config()).unwrap();
            let tamed = tamed_drift(&f, tau, config()).unwrap();
            prop_assert!(tamed.h_norm() < 1.0);
            let untamed_norm = tau * g.h_norm();
            let deviation = tamed.distance(&SpectralField::new(
                g.coeffs().iter().map(|v| tau * v).collect()).unwrap());
            prop_assert!(deviation <= untamed_norm * untamed_norm * (1.0 + 1e-9) + 8.0 * f64::EPSILON * untamed_norm);
        }
    }
}
