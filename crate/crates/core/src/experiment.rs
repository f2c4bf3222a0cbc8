//! Monte Carlo estimation of strong and weak errors along a resolution ladder.
//!
//! Each sample draws one noise path at the reference resolution, runs the
//! reference scheme on it and then every ladder entry on the aggregated or
//! truncated path, so coarse and reference solutions share a realisation.
//! Per-sample results land in an index-ordered buffer and every reduction
//! walks that buffer in order, which makes the output independent of the
//! worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdeError};
use crate::integrator::{run, Drift, RunConfig};
use crate::noise::{CovarianceSpec, NoiseKind, NoisePath, RandomStream};
use crate::nonlinearity::NemytskiiConfig;
use crate::spectral::SpectralField;

/// Stream ids at or above this offset feed the uncoupled coarse runs.
const INDEPENDENT_STREAM: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Spatial,
    Temporal,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Spatial => "spatial",
            Axis::Temporal => "temporal",
        }
    }
}

/// Test functional `Φ` for the weak error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakFunctional {
    /// `Φ(X) = sin(‖X‖)`.
    #[default]
    SinNorm,
    /// `Φ(X) = ‖X‖²`.
    NormSquared,
    /// `Φ(X) = ⟨X, e_1⟩`.
    Mode1,
}

impl WeakFunctional {
    pub fn evaluate(&self, field: &SpectralField) -> f64 {
        match self {
            WeakFunctional::SinNorm => field.h_norm().sin(),
            WeakFunctional::NormSquared => field.coeffs().iter().map(|c| c * c).sum(),
            WeakFunctional::Mode1 => field.coeffs()[0],
        }
    }
}

/// How coarse runs are paired with reference runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Coarse runs reuse the reference path (common random numbers).
    #[default]
    Coupled,
    /// Weak errors compare the reference against coarse runs on independent
    /// paths. Strong errors stay coupled.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub modes: usize,
    pub steps: usize,
}

/// A convergence study along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct StudySpec {
    pub axis: Axis,
    /// Mode counts (spatial) or step counts (temporal), strictly increasing.
    pub ladder: Vec<usize>,
    /// The resolution held fixed: step count (spatial) or mode count (temporal).
    pub fixed: usize,
    pub reference: Resolution,
    pub samples: usize,
    pub functional: WeakFunctional,
    pub noise: NoiseKind,
    pub master_seed: u64,
    pub horizon: f64,
    pub nemytskii: NemytskiiConfig,
    pub drift: Drift,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(SpdeError::config("ladder", "ladder must not be empty"));
        }
        if self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpdeError::config("ladder", "ladder must be strictly increasing"));
        }
        if self.ladder[0] == 0 || self.fixed == 0 {
            return Err(SpdeError::config("ladder", "resolutions must be positive"));
        }
        if self.samples == 0 {
            return Err(SpdeError::config("samples", "need at least one sample"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SpdeError::config("horizon", "horizon must be positive and finite"));
        }
        let Resolution { modes, steps } = self.reference;
        if modes == 0 || steps == 0 {
            return Err(SpdeError::config("reference", "reference resolution must be positive"));
        }
        CovarianceSpec::new(self.noise, modes).map_err(|e| SpdeError::config("exponent", e.to_string()))?;
        for (n, m) in self.resolutions() {
            if n > modes {
                return Err(SpdeError::config(
                    "reference.modes",
                    format!("{n} modes do not embed into the {modes}-mode reference"),
                ));
            }
            if steps % m != 0 {
                return Err(SpdeError::config(
                    "reference.steps",
                    format!("{steps} reference steps are not divisible by {m}"),
                ));
            }
        }
        Ok(())
    }

    /// `(N, M)` of every ladder entry.
    pub fn resolutions(&self) -> Vec<(usize, usize)> {
        self.ladder
            .iter()
            .map(|&r| match self.axis {
                Axis::Spatial => (r, self.fixed),
                Axis::Temporal => (self.fixed, r),
            })
            .collect()
    }

    /// Step size (temporal) or `1/N` (spatial) of a ladder entry.
    pub fn measure(&self, resolution: usize) -> f64 {
        match self.axis {
            Axis::Spatial => 1.0 / resolution as f64,
            Axis::Temporal => self.horizon / resolution as f64,
        }
    }

    pub fn covariance(&self) -> Result<CovarianceSpec> {
        CovarianceSpec::new(self.noise, self.reference.modes)
    }

    fn run_config(&self, modes: usize, steps: usize, covariance: CovarianceSpec) -> RunConfig {
        RunConfig {
            horizon: self.horizon,
            steps,
            n_modes: modes,
            initial: SpectralField::sine_initial(modes),
            covariance,
            nemytskii: self.nemytskii,
            drift: self.drift,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyOptions {
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    pub estimator: Estimator,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            estimator: Estimator::Coupled,
        }
    }
}

/// Strong-error integrand `‖X_ref - X_coarse‖` with the coarse field zero-extended.
pub fn strong_error(reference: &SpectralField, coarse: &SpectralField) -> f64 {
    reference.distance(coarse)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub resolution: usize,
    /// `1/N` (spatial) or `τ` (temporal).
    pub measure: f64,
    pub strong_error: f64,
    pub strong_stderr: f64,
    pub weak_error: f64,
    pub weak_stderr: f64,
    pub n_samples: usize,
    pub n_diverged: usize,
}

impl RateRow {
    pub fn strong_resolved(&self) -> bool {
        self.strong_error > 3.0 * self.strong_stderr
    }

    pub fn weak_resolved(&self) -> bool {
        self.weak_error > 3.0 * self.weak_stderr
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_slope(points: &[(f64, f64)]) -> Result<Fit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = usable.len();
    if n < 2 {
        return Err(SpdeError::Fit {
            usable: n,
            detail: format!("{} points supplied", points.len()),
        });
    }
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &usable {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(SpdeError::Fit {
            usable: n,
            detail: "all abscissae coincide".into(),
        });
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(Fit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: n,
    })
}

/// Fitted slopes of a study. `None` means fewer than two rows rose above
/// the noise floor.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RateFits {
    /// Against `ln(1/N)` (spatial) or `ln τ` (temporal).
    pub strong: Option<Fit>,
    pub weak: Option<Fit>,
    /// Spatial only: against `ln(1/N²) = ln(1/λ_N) + const`.
    pub strong_lambda: Option<Fit>,
    pub weak_lambda: Option<Fit>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub axis: Axis,
    pub noise: NoiseKind,
    pub gamma: f64,
    pub rows: Vec<RateRow>,
    pub fits: RateFits,
}

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str =
    "axis,resolution,tau_or_invN,strong_error,strong_stderr,weak_error,weak_stderr,n_samples,n_diverged";

impl RateTable {
    pub fn new(axis: Axis, noise: NoiseKind, gamma: f64, rows: Vec<RateRow>) -> Self {
        let fits = fit_rows(axis, &rows);
        Self {
            axis,
            noise,
            gamma,
            rows,
            fits,
        }
    }

    pub fn total_diverged(&self) -> usize {
        self.rows.iter().map(|r| r.n_diverged).sum()
    }

    /// Theoretical `(weak, strong)` slopes against the plotted measure
    /// (`1/N` or `τ`).
    pub fn theoretical_slopes(&self) -> (f64, f64) {
        match self.axis {
            Axis::Spatial => (2.0 * self.gamma, self.gamma),
            Axis::Temporal => (self.gamma, 0.5 * self.gamma),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{:e},{},{}\n",
                self.axis.as_str(),
                r.resolution,
                r.measure,
                r.strong_error,
                r.strong_stderr,
                r.weak_error,
                r.weak_stderr,
                r.n_samples,
                r.n_diverged
            ));
        }
        out
    }
}

fn fit_rows(axis: Axis, rows: &[RateRow]) -> RateFits {
    let strong: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.strong_resolved())
        .map(|r| (r.measure, r.strong_error))
        .collect();
    let weak: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.weak_resolved())
        .map(|r| (r.measure, r.weak_error))
        .collect();
    let squared = |pts: &[(f64, f64)]| pts.iter().map(|(x, y)| (x * x, *y)).collect::<Vec<_>>();
    match axis {
        Axis::Spatial => RateFits {
            strong: fit_slope(&strong).ok(),
            weak: fit_slope(&weak).ok(),
            strong_lambda: fit_slope(&squared(&strong)).ok(),
            weak_lambda: fit_slope(&squared(&weak)).ok(),
        },
        Axis::Temporal => RateFits {
            strong: fit_slope(&strong).ok(),
            weak: fit_slope(&weak).ok(),
            strong_lambda: None,
            weak_lambda: None,
        },
    }
}

/// Per-sample values for one ladder entry; `None` when a run diverged.
#[derive(Clone, Copy, Debug)]
struct EntrySample {
    squared_distance: f64,
    phi_reference: f64,
    phi_coarse: f64,
    phi_independent: Option<f64>,
}

fn is_divergence(e: &SpdeError) -> bool {
    matches!(e, SpdeError::Diverged { .. })
}

struct Sampler<'a> {
    spec: &'a StudySpec,
    estimator: Estimator,
    covariance: CovarianceSpec,
    reference: RunConfig,
    coarse: Vec<RunConfig>,
}

impl<'a> Sampler<'a> {
    fn new(spec: &'a StudySpec, estimator: Estimator) -> Result<Self> {
        let covariance = spec.covariance()?;
        let reference = spec.run_config(spec.reference.modes, spec.reference.steps, covariance);
        let coarse = spec
            .resolutions()
            .into_iter()
            .map(|(n, m)| spec.run_config(n, m, covariance))
            .collect();
        Ok(Self {
            spec,
            estimator,
            covariance,
            reference,
            coarse,
        })
    }

    fn path(&self, stream_id: u64) -> Result<NoisePath> {
        let mut stream = RandomStream::new(self.spec.master_seed, stream_id);
        NoisePath::sample(
            &self.covariance,
            self.reference.steps,
            self.reference.tau(),
            &mut stream,
        )
    }

    fn coarse_run(&self, config: &RunConfig, path: &NoisePath) -> Result<Option<SpectralField>> {
        let factor = self.reference.steps / config.steps;
        let coarse_path = path.aggregate(factor, config.n_modes)?;
        match run(config, &coarse_path) {
            Ok(x) => Ok(Some(x)),
            Err(e) if is_divergence(&e) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// One entry per ladder rung; the outer `None` flags a diverged reference.
    fn sample(&self, index: usize) -> Result<Option<Vec<Option<EntrySample>>>> {
        let phi = self.spec.functional;
        let path = self.path(index as u64)?;
        let reference = match run(&self.reference, &path) {
            Ok(x) => x,
            Err(e) if is_divergence(&e) => return Ok(None),
            Err(e) => return Err(e),
        };
        let phi_reference = phi.evaluate(&reference);
        let independent_path = match self.estimator {
            Estimator::Coupled => None,
            Estimator::Independent => Some(self.path(INDEPENDENT_STREAM | index as u64)?),
        };

        let mut entries = Vec::with_capacity(self.coarse.len());
        for config in &self.coarse {
            let Some(coarse) = self.coarse_run(config, &path)? else {
                entries.push(None);
                continue;
            };
            let phi_independent = match &independent_path {
                None => None,
                Some(p) => match self.coarse_run(config, p)? {
                    Some(x) => Some(phi.evaluate(&x)),
                    None => {
                        entries.push(None);
                        continue;
                    }
                },
            };
            let d = strong_error(&reference, &coarse);
            entries.push(Some(EntrySample {
                squared_distance: d * d,
                phi_reference,
                phi_coarse: phi.evaluate(&coarse),
                phi_independent,
            }));
        }
        Ok(Some(entries))
    }
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var)
}

fn reduce_row(
    spec: &StudySpec,
    entry: usize,
    samples: &[Option<Vec<Option<EntrySample>>>],
    estimator: Estimator,
) -> RateRow {
    let mut used = Vec::with_capacity(samples.len());
    let mut n_diverged = 0;
    for s in samples {
        match s.as_ref().and_then(|entries| entries[entry]) {
            Some(e) => used.push(e),
            None => n_diverged += 1,
        }
    }
    let n = used.len();
    let root_n = (n as f64).sqrt();

    let squared: Vec<f64> = used.iter().map(|e| e.squared_distance).collect();
    let (ms, vs) = mean_and_var(&squared);
    let strong_error = ms.sqrt();
    // Delta method for the square root of a mean.
    let strong_stderr = if strong_error > 0.0 && n > 0 {
        vs.sqrt() / root_n / (2.0 * strong_error)
    } else {
        0.0
    };

    let (weak_error, weak_stderr) = match estimator {
        Estimator::Coupled => {
            let diffs: Vec<f64> = used.iter().map(|e| e.phi_reference - e.phi_coarse).collect();
            let (m, v) = mean_and_var(&diffs);
            (m.abs(), if n > 0 { v.sqrt() / root_n } else { 0.0 })
        }
        Estimator::Independent => {
            let refs: Vec<f64> = used.iter().map(|e| e.phi_reference).collect();
            let others: Vec<f64> = used.iter().filter_map(|e| e.phi_independent).collect();
            let (mr, vr) = mean_and_var(&refs);
            let (mo, vo) = mean_and_var(&others);
            let se = if n > 0 { ((vr + vo) / n as f64).sqrt() } else { 0.0 };
            ((mr - mo).abs(), se)
        }
    };

    let resolution = spec.ladder[entry];
    RateRow {
        resolution,
        measure: spec.measure(resolution),
        strong_error,
        strong_stderr,
        weak_error,
        weak_stderr,
        n_samples: n,
        n_diverged,
    }
}

/// Runs every sample of `spec` and reduces them to a [`RateTable`].
pub fn run_study(spec: &StudySpec, options: StudyOptions) -> Result<RateTable> {
    spec.validate()?;
    let sampler = Sampler::new(spec, options.estimator)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| SpdeError::Domain(format!("cannot start worker pool: {e}")))?;
    let samples: Vec<Option<Vec<Option<EntrySample>>>> = pool.install(|| {
        (0..spec.samples)
            .into_par_iter()
            .map(|i| sampler.sample(i))
            .collect::<Result<Vec<_>>>()
    })?;

    let rows = (0..spec.ladder.len())
        .map(|entry| reduce_row(spec, entry, &samples, options.estimator))
        .collect();
    let gamma = sampler.covariance.gamma();
    Ok(RateTable::new(spec.axis, spec.noise, gamma, rows))
}
