//! Sine eigenbasis of the Dirichlet Laplacian `A = -d²/dx²` on (0, 1).
//!
//! A state is stored as its coefficients in the orthonormal basis
//! `e_k(x) = √2 sin(kπx)`, `k = 1..N`, for which `A e_k = (kπ)² e_k`.
//! Every operator that commutes with `A` (the semigroup `e^{-tA}`, fractional
//! powers `A^α`, Galerkin projection) is then a diagonal scaling.
//!
//! Pointwise evaluation uses the `J` interior nodes `x_j = j / (J + 1)` and a
//! type-I discrete sine transform, normalised so that [`GridField::to_spectral`]
//! inverts [`SpectralField::to_grid`] exactly on band-limited fields.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex};

use crate::error::{Result, SpdeError};

/// `λ_k = (kπ)²`.
#[inline]
pub(crate) fn lambda(k: usize) -> f64 {
    let w = k as f64 * PI;
    w * w
}

/// Eigenvalue of `A` belonging to `e_k`.
pub fn eigenvalue(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(SpdeError::ZeroMode(k));
    }
    Ok(lambda(k))
}

/// The first `K` eigenvalues of `A`, strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSpectrum {
    eigenvalues: Vec<f64>,
}

impl EigenSpectrum {
    pub fn new(k_max: usize) -> Self {
        Self {
            eigenvalues: (1..=k_max).map(lambda).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues indexed from zero, i.e. `eigenvalues()[k - 1] = λ_k`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `e^{-λ_k t}` for every retained mode.
    pub fn decay_factors(&self, t: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (-l * t).exp()).collect()
    }
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SpdeError::NonFinite(what))
    }
}

/// A state in modal form: `Σ_k c_k e_k`.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("n_modes", &self.n_modes())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(SpdeError::Domain("a field needs at least one mode".into()));
        }
        check_finite(&coeffs, "spectral coefficients")?;
        Ok(Self { coeffs })
    }

    pub fn zeros(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "a field needs at least one mode");
        Self {
            coeffs: vec![0.0; n_modes],
        }
    }

    /// Unit coefficient on mode `k` (1-based).
    pub fn unit(n_modes: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n_modes {
            return Err(SpdeError::ModeOutOfRange { index: k, max: n_modes });
        }
        let mut field = Self::zeros(n_modes);
        field.coeffs[k - 1] = 1.0;
        Ok(field)
    }

    /// Modal vector of `X_0(x) = sin(πx)`, i.e. `e_1 / √2`.
    pub fn sine_initial(n_modes: usize) -> Self {
        let mut field = Self::zeros(n_modes);
        field.coeffs[0] = 1.0 / SQRT_2;
        field
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// `E(t) = e^{-tA}` applied mode by mode.
    pub fn semigroup(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(SpdeError::InvalidTime(t));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (-lambda(i + 1) * t).exp() * c)
            .collect();
        Ok(Self { coeffs })
    }

    /// `A^α` applied mode by mode; negative `α` is fine since `λ_k > 0`.
    pub fn fractional_power(&self, alpha: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| lambda(i + 1).powf(alpha) * c)
            .collect();
        Self { coeffs }
    }

    /// Galerkin projection `P_n`, zero-filling when `n` exceeds the current size.
    pub fn project(&self, n: usize) -> Self {
        assert!(n >= 1, "projection onto zero modes");
        let mut coeffs = vec![0.0; n];
        let m = n.min(self.coeffs.len());
        coeffs[..m].copy_from_slice(&self.coeffs[..m]);
        Self { coeffs }
    }

    /// `L²(0,1)` norm via Parseval.
    pub fn h_norm(&self) -> f64 {
        l2_norm(&self.coeffs)
    }

    /// `‖A^{α/2} x‖`.
    pub fn sobolev_norm(&self, alpha: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| lambda(i + 1).powf(alpha) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// `‖self - other‖` with the shorter field zero-extended.
    pub fn distance(&self, other: &SpectralField) -> f64 {
        let n = self.n_modes().max(other.n_modes());
        (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0.0);
                let b = other.coeffs.get(i).copied().unwrap_or(0.0);
                (a - b) * (a - b)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Point values at `x_j = j / (grid_size + 1)`, `j = 1..grid_size`.
    pub fn to_grid(&self, grid_size: usize) -> Result<GridField> {
        if grid_size < self.n_modes() {
            return Err(SpdeError::Aliasing {
                grid_size,
                n_modes: self.n_modes(),
            });
        }
        let mut transform = SineTransform::new(grid_size + 1);
        let mut values = vec![0.0; grid_size];
        transform.synthesize(&self.coeffs, &mut values);
        Ok(GridField { values })
    }
}

pub(crate) fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Point values on the interior nodes `x_j = j / (J + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SpdeError::Domain("a grid needs at least one node".into()));
        }
        check_finite(&values, "grid values")?;
        Ok(Self { values })
    }

    /// Samples `f` at the `grid_size` interior nodes.
    pub fn sample(grid_size: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(nodes(grid_size).into_iter().map(f).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute node value; a grid stand-in for the continuum sup-norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First `n_modes` sine coefficients of the grid function.
    pub fn to_spectral(&self, n_modes: usize) -> Result<SpectralField> {
        if n_modes == 0 {
            return Err(SpdeError::ZeroMode(0));
        }
        if n_modes > self.grid_size() {
            return Err(SpdeError::Aliasing {
                grid_size: self.grid_size(),
                n_modes,
            });
        }
        let mut transform = SineTransform::new(self.grid_size() + 1);
        let mut coeffs = vec![0.0; n_modes];
        transform.analyze(&self.values, &mut coeffs);
        Ok(SpectralField { coeffs })
    }
}

/// Interior collocation nodes `j / (grid_size + 1)`.
pub fn nodes(grid_size: usize) -> Vec<f64> {
    let h = 1.0 / (grid_size + 1) as f64;
    (1..=grid_size).map(|j| j as f64 * h).collect()
}

/// Type-I discrete sine transform on `L - 1` interior points,
///
/// ```text
/// F_k = Σ_{j=1}^{L-1} f_j sin(π j k / L),    k = 1..L-1,
/// ```
///
/// computed with one real FFT of length `L`: the input is folded into
/// `y_j = sin(jπ/L)(f_j + f_{L-j}) + (f_j - f_{L-j})/2`, whose spectrum gives
/// the even outputs directly (`F_2k = -Im Y_k`) and the odd ones through the
/// running sum `F_{2k+1} = F_{2k-1} + Re Y_k`, `F_1 = Re Y_0 / 2`.
///
/// Holds its own scratch buffers, so one instance per worker.
pub struct SineTransform {
    intervals: usize,
    fft: Arc<dyn RealToComplex<f64>>,
    weights: Vec<f64>,
    folded: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    raw: Vec<f64>,
}

impl SineTransform {
    /// Transform for `intervals - 1` interior nodes.
    pub fn new(intervals: usize) -> Self {
        assert!(intervals >= 2, "sine transform needs at least one interior node");
        let fft = RealFftPlanner::<f64>::new().plan_fft_forward(intervals);
        let weights = (0..intervals)
            .map(|j| (PI * j as f64 / intervals as f64).sin())
            .collect();
        let folded = fft.make_input_vec();
        let spectrum = fft.make_output_vec();
        let scratch = fft.make_scratch_vec();
        Self {
            intervals,
            fft,
            weights,
            folded,
            spectrum,
            scratch,
            raw: vec![0.0; intervals - 1],
        }
    }

    /// Number of interior nodes `J = L - 1`.
    pub fn grid_size(&self) -> usize {
        self.intervals - 1
    }

    /// Unnormalised DST-I. `input` shorter than `J` is zero-padded; only the
    /// first `output.len()` outputs are produced.
    pub fn dst1(&mut self, input: &[f64], output: &mut [f64]) {
        let l = self.intervals;
        assert!(input.len() < l && output.len() < l);
        let at = |j: usize| if j >= 1 && j <= input.len() { input[j - 1] } else { 0.0 };

        self.folded[0] = 0.0;
        for j in 1..l {
            let a = at(j);
            let b = at(l - j);
            self.folded[j] = self.weights[j] * (a + b) + 0.5 * (a - b);
        }
        self.fft
            .process_with_scratch(&mut self.folded, &mut self.spectrum, &mut self.scratch)
            .expect("buffer sizes come from the plan");

        let n = output.len();
        if n == 0 {
            return;
        }
        let mut odd = 0.5 * self.spectrum[0].re;
        output[0] = odd;
        let mut m = 1;
        while 2 * m <= n {
            output[2 * m - 1] = -self.spectrum[m].im;
            if 2 * m < n {
                odd += self.spectrum[m].re;
                output[2 * m] = odd;
            }
            m += 1;
        }
    }

    /// Point values `Σ_k c_k √2 sin(kπ x_j)` on all `J` nodes.
    pub fn synthesize(&mut self, coeffs: &[f64], values: &mut [f64]) {
        debug_assert_eq!(values.len(), self.grid_size());
        self.dst1(coeffs, values);
        for v in values.iter_mut() {
            *v *= SQRT_2;
        }
    }

    /// First `coeffs.len()` sine coefficients of the grid function `values`.
    pub fn analyze(&mut self, values: &[f64], coeffs: &mut [f64]) {
        debug_assert_eq!(values.len(), self.grid_size());
        let mut raw = std::mem::take(&mut self.raw);
        let n = coeffs.len();
        self.dst1(values, &mut raw[..n]);
        let scale = SQRT_2 / self.intervals as f64;
        for (c, r) in coeffs.iter_mut().zip(&raw[..n]) {
            *c = scale * r;
        }
        self.raw = raw;
    }
}
