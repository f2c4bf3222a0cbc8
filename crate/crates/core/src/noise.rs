//! Modal increments of a Q-Wiener process whose covariance commutes with `A`.
//!
//! With `Q e_k = q_k e_k` the process is `W(t) = Σ_k √q_k β_k(t) e_k` for
//! independent scalar Brownian motions `β_k`, so an increment over a step of
//! length `τ` has independent `Normal(0, q_k τ)` coordinates. Paths are drawn
//! once on the finest time grid and summed down to coarser grids, which keeps
//! every discretisation of one sample driven by the same realisation.

use std::io::{Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpdeError};
use crate::spectral::lambda;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "covariance", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// Cylindrical noise, `Q = I`.
    White,
    /// `Q = A^{-exponent}`.
    InversePower { exponent: f64 },
}

/// Covariance operator `Q`, truncated to the first `n_modes_ref` eigenmodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceSpec {
    kind: NoiseKind,
    n_modes_ref: usize,
}

impl CovarianceSpec {
    pub fn white(n_modes_ref: usize) -> Result<Self> {
        Self::new(NoiseKind::White, n_modes_ref)
    }

    pub fn inverse_power(exponent: f64, n_modes_ref: usize) -> Result<Self> {
        Self::new(NoiseKind::InversePower { exponent }, n_modes_ref)
    }

    pub fn new(kind: NoiseKind, n_modes_ref: usize) -> Result<Self> {
        if n_modes_ref == 0 {
            return Err(SpdeError::ZeroMode(0));
        }
        if let NoiseKind::InversePower { exponent } = kind {
            if !(exponent >= 0.0 && exponent.is_finite()) {
                return Err(SpdeError::Domain(format!(
                    "covariance exponent must be finite and nonnegative, got {exponent}"
                )));
            }
        }
        Ok(Self { kind, n_modes_ref })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn n_modes_ref(&self) -> usize {
        self.n_modes_ref
    }

    /// Same covariance truncated at a different mode count.
    pub fn with_modes(&self, n_modes_ref: usize) -> Result<Self> {
        Self::new(self.kind, n_modes_ref)
    }

    /// `q_k`, the eigenvalue of `Q` on `e_k`.
    pub fn modal_variance(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.n_modes_ref {
            return Err(SpdeError::ModeOutOfRange {
                index: k,
                max: self.n_modes_ref,
            });
        }
        Ok(self.variance_unchecked(k))
    }

    fn variance_unchecked(&self, k: usize) -> f64 {
        match self.kind {
            NoiseKind::White => 1.0,
            NoiseKind::InversePower { exponent } => lambda(k).powf(-exponent),
        }
    }

    /// `q_1 .. q_{n_modes_ref}`.
    pub fn variances(&self) -> Vec<f64> {
        (1..=self.n_modes_ref).map(|k| self.variance_unchecked(k)).collect()
    }

    /// Regularity exponent `γ = sup{g ∈ (0, 1] : Σ_k λ_k^{g-1} q_k < ∞}`.
    ///
    /// With `q_k ∝ k^{-2s}` the series converges iff `g < s + 1/2`, so
    /// `γ = min(1, s + 1/2)`; white noise is the case `s = 0`.
    pub fn gamma(&self) -> f64 {
        match self.kind {
            NoiseKind::White => 0.5,
            NoiseKind::InversePower { exponent } => (exponent + 0.5).min(1.0),
        }
    }

    /// Whether the supremum defining [`gamma`](Self::gamma) is attained.
    pub fn gamma_attained(&self) -> bool {
        match self.kind {
            NoiseKind::White => false,
            NoiseKind::InversePower { exponent } => exponent + 0.5 > 1.0,
        }
    }
}

/// Deterministic per-sample random stream.
///
/// The stream for `(master_seed, stream_id)` is a ChaCha8 generator keyed by
/// the seed and positioned on its own 64-bit stream, so sample `i` gets the
/// same draws no matter which worker picks it up.
#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self { rng }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Increments `⟨ΔW_m, e_k⟩`, stored row-major (one row per time step).
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    increments: Vec<f64>,
    steps: usize,
    n_modes: usize,
    tau: f64,
}

impl NoisePath {
    /// Draws `steps × n_modes_ref` independent `Normal(0, q_k τ)` increments.
    pub fn sample(spec: &CovarianceSpec, steps: usize, tau: f64, stream: &mut RandomStream) -> Result<Self> {
        if steps == 0 {
            return Err(SpdeError::Domain("noise path needs at least one step".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SpdeError::InvalidTime(tau));
        }
        let n_modes = spec.n_modes_ref();
        let scales: Vec<f64> = spec.variances().iter().map(|q| (q * tau).sqrt()).collect();
        let mut increments = Vec::with_capacity(steps * n_modes);
        for _ in 0..steps {
            for s in &scales {
                increments.push(s * stream.standard_normal());
            }
        }
        Ok(Self {
            increments,
            steps,
            n_modes,
            tau,
        })
    }

    /// Wraps precomputed increments (`steps` rows of `n_modes`).
    pub fn from_increments(increments: Vec<f64>, steps: usize, n_modes: usize, tau: f64) -> Result<Self> {
        if steps == 0 || n_modes == 0 || increments.len() != steps * n_modes {
            return Err(SpdeError::Shape(format!(
                "{} increments do not form {steps} rows of {n_modes} modes",
                increments.len()
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SpdeError::InvalidTime(tau));
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(SpdeError::NonFinite("noise increments"));
        }
        Ok(Self {
            increments,
            steps,
            n_modes,
            tau,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.increments[m * self.n_modes..(m + 1) * self.n_modes]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Sums blocks of `factor` consecutive rows and keeps the first `n_modes`
    /// columns.
    ///
    /// Block sums are pairwise (recursive halving), so coarsening by `a·b` is
    /// bitwise identical to coarsening by `a` and then by `b` whenever both
    /// are powers of two.
    pub fn aggregate(&self, factor: usize, n_modes: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(SpdeError::Coarsening {
                steps: self.steps,
                factor,
            });
        }
        if n_modes == 0 || n_modes > self.n_modes {
            return Err(SpdeError::ModeOutOfRange {
                index: n_modes,
                max: self.n_modes,
            });
        }
        let steps = self.steps / factor;
        let mut increments = vec![0.0; steps * n_modes];
        for (i, out) in increments.chunks_exact_mut(n_modes).enumerate() {
            self.block_sum(i * factor, factor, out);
        }
        Ok(Self {
            increments,
            steps,
            n_modes,
            tau: self.tau * factor as f64,
        })
    }

    fn block_sum(&self, start: usize, len: usize, out: &mut [f64]) {
        let n = out.len();
        if len == 1 {
            out.copy_from_slice(&self.row(start)[..n]);
            return;
        }
        let half = len / 2;
        self.block_sum(start, half, out);
        let mut right = vec![0.0; n];
        self.block_sum(start + half, len - half, &mut right);
        for (o, r) in out.iter_mut().zip(&right) {
            *o += r;
        }
    }

    /// Debug dump: `u64` steps, `u64` modes, then the row-major increments,
    /// all little-endian.
    pub fn write_dump(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&(self.n_modes as u64).to_le_bytes())?;
        for v in &self.increments {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump written by [`write_dump`](Self::write_dump). The step size
    /// is not part of the format.
    pub fn read_dump(mut r: impl Read, tau: f64) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut word).map_err(|e| SpdeError::io("<noise dump>", e))?;
            Ok(word)
        };
        let steps = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_modes = u64::from_le_bytes(next(&mut r)?) as usize;
        let len = steps
            .checked_mul(n_modes)
            .ok_or_else(|| SpdeError::Shape("noise dump header overflows".into()))?;
        let mut increments = Vec::with_capacity(len);
        for _ in 0..len {
            increments.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_increments(increments, steps, n_modes, tau)
    }
}
