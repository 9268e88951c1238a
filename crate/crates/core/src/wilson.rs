//! Wilson's Newton-type spectral factorization on a full frequency circle.
//!
//! Starting from a constant factor `ψ = chol(mean S)`, iterate
//!
//! ```text
//! ψ ← ψ [ψ^{-1} S ψ^{-H} + I]_+
//! ```
//!
//! where `[·]_+` keeps the causal part of a matrix function: lags
//! `1..n/2-1` in full, half of lag 0, nothing else. At convergence
//! `ψ ψ^H = S` with `ψ` causal and minimum phase; normalizing by its
//! zero-lag coefficient `ψ_0` gives `H = ψ ψ_0^{-1}` and `Σ = ψ_0 ψ_0^H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, C64};
use crate::model::RootReport;
use crate::poly::MatrixPoly;
use crate::spectrum::{forward_dft_field, inverse_dft_field, FactorDiagnostics, SpectralFactor, SpectralMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonConfig {
    /// Stop when the largest entry change of ψ, relative to its largest entry, falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WilsonConfig {
    fn default() -> Self {
        WilsonConfig { tol: 1e-6, max_iter: 500 }
    }
}

/// Eigenvalues below `-PSD_TOL · scale` reject the input as indefinite.
const PSD_TOL: f64 = 1e-6;
/// Smallest eigenvalue at or below `SINGULAR_TOL · scale` rejects it as singular.
const SINGULAR_TOL: f64 = 1e-12;

pub fn wilson_factorize(spectrum: &SpectralMatrix, config: &WilsonConfig) -> Result<SpectralFactor> {
    let grid = spectrum.grid;
    let n = spectrum.n_channels();
    check_input(spectrum)?;

    let mean = linalg::hermitian_part(&spectrum.grid_mean()).map(|v| v.re);
    let start = linalg::cholesky_lower(&mean).ok_or(Error::SingularSpectrum { nu: 0.0 })?;
    let mut psi = vec![linalg::complexify(&start); grid.n_points()];
    let eye = linalg::identity(n);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let g: Vec<CMat> = psi
            .iter()
            .zip(&spectrum.values)
            .map(|(p, s)| {
                let inv = linalg::inverse(p).ok_or(Error::SingularSpectrum { nu: 0.0 })?;
                Ok(&inv * s * inv.adjoint() + &eye)
            })
            .collect::<Result<_>>()?;
        let plus = causal_part(&g);
        let next: Vec<CMat> = psi.iter().zip(&plus).map(|(p, c)| p * c).collect();

        let scale = psi.iter().map(linalg::max_abs).fold(0.0, f64::max);
        let change = psi.iter().zip(&next).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max) / scale;
        psi = next;
        if !change.is_finite() {
            break;
        }
        if change < config.tol {
            converged = true;
            break;
        }
    }

    let residual = relative_residual(&psi, spectrum);
    if !converged {
        return Err(Error::NoConvergence { iterations, residual });
    }

    let psi0 = inverse_dft_field(&psi).swap_remove(0);
    let psi0_inv = linalg::inverse(&psi0).ok_or(Error::SingularSpectrum { nu: 0.0 })?;
    let h = psi.iter().map(|p| p * &psi0_inv).collect();
    let sigma: RMat = linalg::symmetric_part(&(&psi0 * psi0.adjoint()).map(|v| v.re));
    Ok(SpectralFactor { grid, h, sigma, diagnostics: Some(FactorDiagnostics { iterations, residual }) })
}

fn check_input(spectrum: &SpectralMatrix) -> Result<()> {
    let eigs: Vec<Vec<f64>> = spectrum.values.iter().map(linalg::hermitian_eigenvalues).collect();
    let scale = eigs.iter().filter_map(|e| e.last().cloned()).fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(Error::SingularSpectrum { nu: 0.0 });
    }
    for (k, e) in eigs.iter().enumerate() {
        let nu = spectrum.grid.nu(k);
        if e[0] < -PSD_TOL * scale {
            return Err(Error::NotPositiveSemidefinite { nu, min_eigenvalue: e[0] });
        }
        if e[0] <= SINGULAR_TOL * scale {
            return Err(Error::SingularSpectrum { nu });
        }
    }
    Ok(())
}

/// `[g]_+`: inverse DFT, keep half of lag 0 and lags 1..n/2-1, forward DFT.
fn causal_part(g: &[CMat]) -> Vec<CMat> {
    let n = g.len();
    let mut lags = inverse_dft_field(g);
    lags[0] *= C64::new(0.5, 0.0);
    for lag in lags.iter_mut().skip(n / 2) {
        lag.fill(C64::new(0.0, 0.0));
    }
    forward_dft_field(&lags)
}

/// max_k ||ψ ψ^H - S||_max / max_k ||S||_max
fn relative_residual(psi: &[CMat], spectrum: &SpectralMatrix) -> f64 {
    let err =
        psi.iter().zip(&spectrum.values).map(|(p, s)| linalg::max_abs(&(p * p.adjoint() - s))).fold(0.0, f64::max);
    err / spectrum.scale()
}

/// Reconstruction error of a factor against a spectrum, relative to the spectrum's scale.
pub fn factorization_residual(factor: &SpectralFactor, spectrum: &SpectralMatrix) -> Result<f64> {
    Ok(factor.spectrum().max_abs_difference(spectrum)? / spectrum.scale())
}

/// Root report of the factor's impulse response read as an MA polynomial.
///
/// Lags are taken from 0 up to the last one whose energy exceeds
/// `tail_tol` times the total (capped at n/2 - 1).
pub fn factor_root_report(factor: &SpectralFactor, tail_tol: f64) -> RootReport {
    let lags = factor.lag_coefficients();
    let half = lags.len() / 2;
    let energy: Vec<f64> = lags[..half].iter().map(|m| m.iter().map(|v| v.norm_sqr()).sum()).collect();
    let total: f64 = energy.iter().sum();
    let last = energy.iter().rposition(|&e| e > tail_tol * total).unwrap_or(0);
    let blocks = lags[..=last].to_vec();
    RootReport::for_matrix_poly(&MatrixPoly { blocks })
}
