//! Spectral Galerkin / tamed exponential Euler discretisation of the 1-D
//! stochastic Allen–Cahn equation
//!
//! ```text
//! dX + A X dt = (X - X³) dt + dW,   X(0) = sin(πx),   x ∈ (0, 1),
//! ```
//!
//! with homogeneous Dirichlet conditions and additive Q-Wiener noise, plus a
//! Monte Carlo harness that measures strong and weak convergence rates.

pub mod config;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod integrator;
pub mod noise;
pub mod nonlinearity;
pub mod plot;
pub mod spectral;
pub mod verify;

pub use config::{emit_config, parse_config, read_config, Manifest};
pub use error::{Result, SpdeError};
pub use experiment::{
    fit_slope, run_study, strong_error, Axis, Estimator, Fit, RateRow, RateTable, Resolution, StudyOptions, StudySpec,
    WeakFunctional,
};
pub use integrator::{ode_oracle, run, run_observed, Drift, RunConfig, SchemeState, TamedExponentialEuler};
pub use noise::{CovarianceSpec, NoiseKind, NoisePath, RandomStream};
pub use nonlinearity::{apply_f, one_sided_check, tamed_drift, Nemytskii, NemytskiiConfig};
pub use plot::{emit_plot, render_svg};
pub use spectral::{eigenvalue, EigenSpectrum, GridField, SineTransform, SpectralField};
