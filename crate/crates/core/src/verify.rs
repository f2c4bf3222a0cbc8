//! Self-checks against independent oracles, run by `spde verify` and the
//! acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::experiment::{run_study, Axis, Resolution, StudyOptions, StudySpec, WeakFunctional};
use crate::integrator::{ode_oracle, run, Drift, RunConfig};
use crate::noise::{CovarianceSpec, NoiseKind, NoisePath};
use crate::nonlinearity::{apply_f, cubic_projection_direct, Nemytskii, NemytskiiConfig};
use crate::spectral::SpectralField;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

/// `P_3 F(√2 sin πx)` must equal `(-1/2, 0, 1/2)`.
pub fn dealias_single_mode() -> Result<Check> {
    let field = SpectralField::unit(3, 1)?;
    let out = apply_f(&field, NemytskiiConfig::default())?;
    let expected = [-0.5, 0.0, 0.5];
    let err = out
        .coeffs()
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Check::new(
        "dealias single mode",
        err <= 1e-12,
        format!("{:?}, max deviation {err:.2e} (tol 1e-12)", out.coeffs()),
    ))
}

/// Transform-based `P_N F` against the direct triple-product sum for random
/// fields with `N ≤ 32`.
pub fn dealias_brute_force(trials: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(1..=32);
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = apply_f(&SpectralField::new(coeffs.clone())?, NemytskiiConfig::default())?;
        let slow = cubic_projection_direct(&coeffs);
        let err = fast
            .coeffs()
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    Ok(Check::new(
        "dealias brute force",
        worst <= 1e-10,
        format!("{trials} random fields, N <= 32, max deviation {worst:.2e} (tol 1e-10)"),
    ))
}

/// The tamed drift increment has norm below one on random fields.
pub fn taming_bound(fields: usize, seed: u64) -> Result<Check> {
    const MAX_MODES: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluators: Vec<Nemytskii> = (1..=MAX_MODES)
        .map(|n| Nemytskii::new(n, NemytskiiConfig::default()))
        .collect();
    let mut coeffs = vec![0.0; MAX_MODES];
    let mut out = vec![0.0; MAX_MODES];
    let mut worst: f64 = 0.0;
    let mut violations = 0usize;
    for _ in 0..fields {
        let n = rng.random_range(1..=MAX_MODES);
        let amplitude = 10f64.powf(rng.random_range(-3.0..3.0));
        let tau = 10f64.powf(rng.random_range(-6.0..0.0));
        for c in &mut coeffs[..n] {
            *c = amplitude * rng.random_range(-1.0..1.0);
        }
        evaluators[n - 1].tamed_into(&coeffs[..n], tau, &mut out[..n])?;
        let norm = out[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm.is_nan() || norm >= 1.0 {
            violations += 1;
        }
        worst = worst.max(norm);
    }
    Ok(Check::new(
        "taming bound",
        violations == 0,
        format!(
            "{fields} random fields, largest increment norm 1 - {:.2e}, {violations} violations",
            1.0 - worst
        ),
    ))
}

/// Zero-noise scheme endpoint against the Runge–Kutta oracle.
pub fn ode_agreement(n_modes: usize, steps: usize) -> Result<Check> {
    let mut config = RunConfig::allen_cahn(1.0, steps, n_modes, CovarianceSpec::white(n_modes)?);
    config.drift = Drift::Tamed;
    let zero = NoisePath::from_increments(vec![0.0; steps * n_modes], steps, n_modes, config.tau())?;
    let scheme = run(&config, &zero)?;
    let oracle = ode_oracle(&config)?;
    let err = scheme.distance(&oracle);
    Ok(Check::new(
        "ODE oracle",
        err <= 1e-5,
        format!("N = {n_modes}, M = {steps}, endpoint distance {err:.3e} (tol 1e-5)"),
    ))
}

/// Same study, one worker and `workers` workers, compared byte for byte.
pub fn reproducibility(spec: &StudySpec, workers: usize) -> Result<Check> {
    let a = run_study(
        spec,
        StudyOptions {
            workers: 1,
            ..Default::default()
        },
    )?
    .to_csv();
    let b = run_study(
        spec,
        StudyOptions {
            workers,
            ..Default::default()
        },
    )?
    .to_csv();
    Ok(Check::new(
        "reproducibility",
        a == b,
        format!("1 vs {workers} workers, {} CSV bytes, identical: {}", a.len(), a == b),
    ))
}

/// A small temporal study used by the quick suite.
pub fn small_study() -> StudySpec {
    StudySpec {
        axis: Axis::Temporal,
        ladder: vec![8, 16, 32],
        fixed: 16,
        reference: Resolution { modes: 16, steps: 256 },
        samples: 24,
        functional: WeakFunctional::SinNorm,
        noise: NoiseKind::InversePower { exponent: 0.5005 },
        master_seed: 7,
        horizon: 1.0,
        nemytskii: NemytskiiConfig::default(),
        drift: Drift::Tamed,
    }
}

/// The quick suite behind `spde verify`; a few seconds on one core.
pub fn quick_suite() -> Result<Vec<Check>> {
    Ok(vec![
        dealias_single_mode()?,
        dealias_brute_force(200, 11)?,
        taming_bound(100_000, 12)?,
        ode_agreement(8, 1 << 14)?,
        reproducibility(&small_study(), 3)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        for check in [
            dealias_single_mode().unwrap(),
            dealias_brute_force(20, 1).unwrap(),
            taming_bound(2000, 2).unwrap(),
            ode_agreement(4, 1 << 12).unwrap(),
        ] {
            assert!(check.passed, "{check}");
        }
    }

    #[test]
    fn display_marks_status() {
        let c = Check::new("x", false, "d".into());
        assert_eq!(c.to_string(), "FAIL x: d");
    }
}
