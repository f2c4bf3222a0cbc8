//! Study files and run manifests.
//!
//! A study file is a flat TOML document with one optional `[reference]`
//! section:
//!
//! ```toml
//! axis = "spatial"              # or "temporal"
//! ladder = [4, 8, 16, 32, 64]   # N values (spatial) or M values (temporal)
//! covariance = "inverse_power"  # or "white"
//! exponent = 0.5005             # Q = A^{-exponent}; inverse_power only
//! fixed = 4096                  # M (spatial) or N (temporal)
//! samples = 1000
//! seed = 1
//! functional = "sin_norm"       # "norm_squared", "mode1"
//! horizon = 1.0
//! dealias_factor = 4
//! drift = "tamed"               # "off" for the linear heat equation
//!
//! [reference]
//! modes = 256
//! steps = 4096
//! ```
//!
//! Only `axis`, `ladder` and `covariance` are required. Unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdeError};
use crate::experiment::{Axis, Estimator, RateTable, Resolution, StudySpec, WeakFunctional, CSV_SCHEMA_VERSION};
use crate::integrator::Drift;
use crate::noise::NoiseKind;
use crate::nonlinearity::NemytskiiConfig;

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_SPATIAL_STEPS: usize = 4096;
pub const DEFAULT_TEMPORAL_MODES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CovarianceName {
    White,
    InversePower,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyDocument {
    axis: Axis,
    ladder: Vec<usize>,
    covariance: CovarianceName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    functional: Option<WeakFunctional>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dealias_factor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    drift: Option<Drift>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<ReferenceSection>,
}

impl StudyDocument {
    fn into_spec(self) -> Result<StudySpec> {
        let noise = match (self.covariance, self.exponent) {
            (CovarianceName::White, None) => NoiseKind::White,
            (CovarianceName::White, Some(_)) => {
                return Err(SpdeError::config(
                    "exponent",
                    "only valid with covariance = \"inverse_power\"",
                ))
            }
            (CovarianceName::InversePower, Some(exponent)) => NoiseKind::InversePower { exponent },
            (CovarianceName::InversePower, None) => {
                return Err(SpdeError::config(
                    "exponent",
                    "missing key `exponent` required by covariance = \"inverse_power\"",
                ))
            }
        };
        let top = self.ladder.iter().copied().max().unwrap_or(0);
        let reference = self.reference.unwrap_or_default();
        let (fixed, reference) = match self.axis {
            Axis::Spatial => {
                let fixed = self.fixed.unwrap_or(DEFAULT_SPATIAL_STEPS);
                (
                    fixed,
                    Resolution {
                        modes: reference.modes.unwrap_or(4 * top),
                        steps: reference.steps.unwrap_or(fixed),
                    },
                )
            }
            Axis::Temporal => {
                let fixed = self.fixed.unwrap_or(DEFAULT_TEMPORAL_MODES);
                (
                    fixed,
                    Resolution {
                        modes: reference.modes.unwrap_or(fixed),
                        steps: reference.steps.unwrap_or(16 * top),
                    },
                )
            }
        };
        let nemytskii = NemytskiiConfig::new(self.dealias_factor.unwrap_or(4))
            .map_err(|e| SpdeError::config("dealias_factor", e.to_string()))?;
        let spec = StudySpec {
            axis: self.axis,
            ladder: self.ladder,
            fixed,
            reference,
            samples: self.samples.unwrap_or(DEFAULT_SAMPLES),
            functional: self.functional.unwrap_or_default(),
            noise,
            master_seed: self.seed.unwrap_or(0),
            horizon: self.horizon.unwrap_or(1.0),
            nemytskii,
            drift: self.drift.unwrap_or_default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn from_spec(spec: &StudySpec) -> Self {
        let (covariance, exponent) = match spec.noise {
            NoiseKind::White => (CovarianceName::White, None),
            NoiseKind::InversePower { exponent } => (CovarianceName::InversePower, Some(exponent)),
        };
        Self {
            axis: spec.axis,
            ladder: spec.ladder.clone(),
            covariance,
            exponent,
            fixed: Some(spec.fixed),
            samples: Some(spec.samples),
            seed: Some(spec.master_seed),
            functional: Some(spec.functional),
            horizon: Some(spec.horizon),
            dealias_factor: Some(spec.nemytskii.dealias_factor()),
            drift: Some(spec.drift),
            reference: Some(ReferenceSection {
                modes: Some(spec.reference.modes),
                steps: Some(spec.reference.steps),
            }),
        }
    }
}

/// Parses and validates a study file, filling defaults.
pub fn parse_config(text: &str) -> Result<StudySpec> {
    let doc: StudyDocument = toml::from_str(text)?;
    doc.into_spec()
}

/// Writes `spec` as a study file with every key explicit.
pub fn emit_config(spec: &StudySpec) -> Result<String> {
    Ok(toml::to_string(&StudyDocument::from_spec(spec))?)
}

pub fn read_config(path: &Path) -> Result<StudySpec> {
    let text = std::fs::read_to_string(path).map_err(|e| SpdeError::io(path, e))?;
    parse_config(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_squared_strong: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_squared_weak: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_slope_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_slope_lambda: Option<f64>,
}

impl FitRecord {
    pub fn from_table(table: &RateTable) -> Self {
        let f = &table.fits;
        Self {
            strong_slope: f.strong.map(|x| x.slope),
            weak_slope: f.weak.map(|x| x.slope),
            r_squared_strong: f.strong.map(|x| x.r_squared),
            r_squared_weak: f.weak.map(|x| x.r_squared),
            strong_slope_lambda: f.strong_lambda.map(|x| x.slope),
            weak_slope_lambda: f.weak_lambda.map(|x| x.slope),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub code_version: String,
    pub seed: u64,
    pub estimator: Estimator,
    pub workers: usize,
    pub wall_time_secs: f64,
    pub csv: String,
    pub csv_schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    pub total_diverged: usize,
}

/// Everything needed to reproduce a run, written next to its CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunRecord,
    pub fit: FitRecord,
    study: StudyDocument,
}

impl Manifest {
    pub fn new(spec: &StudySpec, run: RunRecord, table: &RateTable) -> Self {
        Self {
            run,
            fit: FitRecord::from_table(table),
            study: StudyDocument::from_spec(spec),
        }
    }

    pub fn spec(&self) -> Result<StudySpec> {
        self.study.clone().into_spec()
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

pub fn code_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn csv_schema() -> u32 {
    CSV_SCHEMA_VERSION
}
