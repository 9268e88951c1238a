//! Frequency grids and the two frequency-indexed matrix fields every route
//! produces: spectral density matrices and spectral factors.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, C64};

/// Two-sided grid `ν_k = k / n_points`, `k = 0..n_points`, over one full turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    n_points: usize,
}

impl FrequencyGrid {
    pub const DEFAULT_POINTS: usize = 512;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points == 0 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("grid size must be positive and even, got {n_points}")));
        }
        Ok(FrequencyGrid { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn nu(&self, k: usize) -> f64 {
        k as f64 / self.n_points as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.nu(k))
    }

    /// Number of points in the reporting band `0 <= ν < 0.5`.
    pub fn one_sided_len(&self) -> usize {
        self.n_points / 2
    }

    pub fn one_sided_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.one_sided_len()).map(move |k| self.nu(k))
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid { n_points: Self::DEFAULT_POINTS }
    }
}

/// An N×N Hermitian matrix per grid point.
#[derive(Clone, Debug)]
pub struct SpectralMatrix {
    pub grid: FrequencyGrid,
    pub values: Vec<CMat>,
}

impl SpectralMatrix {
    pub fn new(grid: FrequencyGrid, values: Vec<CMat>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::ShapeMismatch(format!(
                "{} spectral matrices for a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        let n = values.first().map_or(0, |m| m.nrows());
        if values.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::ShapeMismatch("spectral matrices differ in shape".into()));
        }
        Ok(SpectralMatrix { grid, values })
    }

    pub fn n_channels(&self) -> usize {
        self.values[0].nrows()
    }

    /// Largest absolute entry over the whole grid.
    pub fn scale(&self) -> f64 {
        self.values.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn max_hermitian_deviation(&self) -> f64 {
        self.values.iter().map(linalg::hermitian_deviation).fold(0.0, f64::max)
    }

    /// max_k |S(ν_{n-k}) - conj(S(ν_k))|
    pub fn max_conjugate_asymmetry(&self) -> f64 {
        let n = self.grid.n_points();
        (1..n).map(|k| linalg::max_abs(&(&self.values[n - k] - self.values[k].conjugate()))).fold(0.0, f64::max)
    }

    /// Mean of S over the full grid: the zero-lag autocovariance.
    pub fn grid_mean(&self) -> CMat {
        let n = self.n_channels();
        let sum = self.values.iter().fold(CMat::zeros(n, n), |acc, m| acc + m);
        sum / C64::new(self.grid.n_points() as f64, 0.0)
    }

    pub fn max_abs_difference(&self, other: &SpectralMatrix) -> Result<f64> {
        if self.grid != other.grid || self.n_channels() != other.n_channels() {
            return Err(Error::ShapeMismatch("spectra on different grids or channel counts".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnostics {
    pub iterations: usize,
    pub residual: f64,
}

/// `S(ν) = H(ν) Σ H(ν)^H` with a frequency-independent covariance.
#[derive(Clone, Debug)]
pub struct SpectralFactor {
    pub grid: FrequencyGrid,
    pub h: Vec<CMat>,
    pub sigma: RMat,
    pub diagnostics: Option<FactorDiagnostics>,
}

impl SpectralFactor {
    pub fn n_channels(&self) -> usize {
        self.sigma.nrows()
    }

    /// Reassembles the spectral density matrix.
    pub fn spectrum(&self) -> SpectralMatrix {
        let sigma = linalg::complexify(&self.sigma);
        let values = self.h.iter().map(|h| h * &sigma * h.adjoint()).collect();
        SpectralMatrix { grid: self.grid, values }
    }

    /// Impulse-response coefficients `h_l` with `H(ν_k) = Σ_l h_l e^{-j2πkl/n}`,
    /// lag `l` at index `l` (negative lags wrap to the top half).
    pub fn lag_coefficients(&self) -> Vec<CMat> {
        inverse_dft_field(&self.h)
    }

    /// Share of impulse-response energy on negative lags `n/2+1..n`.
    pub fn anticausal_energy_fraction(&self) -> f64 {
        let lags = self.lag_coefficients();
        let n = lags.len();
        let energy = |m: &CMat| m.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let total: f64 = lags.iter().map(energy).sum();
        let negative: f64 = lags[n / 2 + 1..].iter().map(energy).sum();
        if total == 0.0 {
            0.0
        } else {
            negative / total
        }
    }
}

/// Entrywise inverse DFT along the grid: `out[l] = (1/n) Σ_k f[k] e^{+j2πkl/n}`.
pub fn inverse_dft_field(field: &[CMat]) -> Vec<CMat> {
    transform_field(field, true)
}

/// Entrywise forward DFT along the grid: `out[k] = Σ_l f[l] e^{-j2πkl/n}`.
pub fn forward_dft_field(field: &[CMat]) -> Vec<CMat> {
    transform_field(field, false)
}

fn transform_field(field: &[CMat], inverse: bool) -> Vec<CMat> {
    let n = field.len();
    let (rows, cols) = field[0].shape();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut out = vec![CMat::zeros(rows, cols); n];
    let mut buf = vec![C64::new(0.0, 0.0); n];
    let norm = if inverse { 1.0 / n as f64 } else { 1.0 };
    for i in 0..rows {
        for j in 0..cols {
            for (b, m) in buf.iter_mut().zip(field) {
                *b = m[(i, j)];
            }
            fft.process(&mut buf);
            for (m, b) in out.iter_mut().zip(&buf) {
                m[(i, j)] = b * norm;
            }
        }
    }
    out
}

/// `e^{-j2πν s}`
pub fn delay_phasor(nu: f64, s: usize) -> C64 {
    C64::from_polar(1.0, -2.0 * PI * nu * s as f64)
}
