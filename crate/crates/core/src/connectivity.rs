//! Frequency-domain connectivity from a spectral factor `S = H Σ H^H`.
//!
//! With `D = diag Σ`, `R = D^{-1/2} Σ D^{-1/2}`, `D̃ = diag Σ^{-1}`,
//! `R̃ = D̃^{-1/2} Σ^{-1} D̃^{-1/2}`, `ρ = R - I`, `ρ̃ = R̃ - I` and
//! `Ā = H^{-1}`:
//!
//! ```text
//! coherency           C  = diag(S)^{-1/2} S diag(S)^{-1/2}   = Γ R Γ^H
//!                     Γ  = diag(S)^{-1/2} H D^{1/2}
//! partial coherence   K  = diag(S^{-1})^{-1/2} S^{-1} diag(S^{-1})^{-1/2} = Π^H R̃ Π
//!                     Π  = D̃^{1/2} Ā diag(S^{-1})^{-1/2}
//! total DTF           Γ ⊙ Γ* + (Γ ρ) ⊙ Γ*      rows sum to 1
//! total PDC           Π* ⊙ Π + Π* ⊙ (ρ̃ Π)      columns sum to 1
//! ```
//!
//! Entry (i, j) reads "from j to i". With diagonal Σ the total measures
//! collapse to squared directed coherence and generalized PDC.
//!
//! All fields are evaluated on the reporting band `0 <= ν < 0.5`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, C64};
use crate::spectrum::{FrequencyGrid, SpectralFactor, SpectralMatrix};

/// `H(ν)` condition number above which Π is not evaluated.
const MAX_TRANSFER_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    #[serde(rename = "tPDC")]
    TotalPdc,
    #[serde(rename = "tDTF")]
    TotalDtf,
    #[serde(rename = "coherency")]
    Coherency,
    #[serde(rename = "partial-coherence")]
    PartialCoherence,
    #[serde(rename = "gPDC")]
    Gpdc,
    #[serde(rename = "DC")]
    DirectedCoherence,
}

impl FieldKind {
    pub fn label(&self) -> &'static str {
        match self {
            FieldKind::TotalPdc => "tPDC",
            FieldKind::TotalDtf => "tDTF",
            FieldKind::Coherency => "coherency",
            FieldKind::PartialCoherence => "partial-coherence",
            FieldKind::Gpdc => "gPDC",
            FieldKind::DirectedCoherence => "DC",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [
            FieldKind::TotalPdc,
            FieldKind::TotalDtf,
            FieldKind::Coherency,
            FieldKind::PartialCoherence,
            FieldKind::Gpdc,
            FieldKind::DirectedCoherence,
        ]
        .into_iter()
        .find(|k| k.label() == s)
    }
}

/// One complex N×N matrix per point of the reporting band.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityField {
    pub grid: FrequencyGrid,
    pub values: Vec<CMat>,
    pub kind: FieldKind,
    pub method: String,
}

impl ConnectivityField {
    pub fn n_channels(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.one_sided_values().collect()
    }

    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }

    /// Largest imaginary-part magnitude over all entries and frequencies.
    pub fn max_imaginary(&self) -> f64 {
        self.values.iter().flat_map(|m| m.iter().map(|v| v.im.abs())).fold(0.0, f64::max)
    }

    /// Series of entry (i, j) across the band.
    pub fn entry(&self, i: usize, j: usize) -> Vec<C64> {
        self.values.iter().map(|m| m[(i, j)]).collect()
    }
}

/// Covariance-derived normalizations shared by every measure.
#[derive(Clone, Debug)]
pub struct InnovationStructure {
    /// diag Σ
    pub d: Vec<f64>,
    pub r: RMat,
    /// diag Σ^{-1}
    pub d_tilde: Vec<f64>,
    pub r_tilde: RMat,
    pub rho: RMat,
    pub rho_tilde: RMat,
    pub sigma_inv: RMat,
}

impl InnovationStructure {
    pub fn new(sigma: &RMat) -> Result<Self> {
        let n = sigma.nrows();
        if linalg::cholesky_lower(sigma).is_none() {
            return Err(Error::SingularCovariance);
        }
        let sigma_inv = linalg::symmetric_part(&linalg::real_inverse(sigma).ok_or(Error::SingularCovariance)?);
        let d: Vec<f64> = sigma.diagonal().iter().cloned().collect();
        let d_tilde: Vec<f64> = sigma_inv.diagonal().iter().cloned().collect();
        let normalize = |m: &RMat, diag: &[f64]| {
            let mut out = RMat::from_fn(n, n, |i, j| m[(i, j)] / (diag[i] * diag[j]).sqrt());
            out.fill_diagonal(1.0);
            out
        };
        let r = normalize(sigma, &d);
        let r_tilde = normalize(&sigma_inv, &d_tilde);
        let eye = RMat::identity(n, n);
        Ok(InnovationStructure { rho: &r - &eye, rho_tilde: &r_tilde - &eye, d, r, d_tilde, r_tilde, sigma_inv })
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.rho.amax() <= tol
    }
}

fn band_field(grid: FrequencyGrid, values: Vec<CMat>, kind: FieldKind, method: &str) -> ConnectivityField {
    ConnectivityField { grid, values, kind, method: method.to_string() }
}

fn positive_diagonal(s: &CMat, nu: f64) -> Result<Vec<f64>> {
    s.diagonal()
        .iter()
        .enumerate()
        .map(|(i, v)| if v.re > 0.0 && v.re.is_finite() { Ok(v.re) } else { Err(Error::ZeroPower { channel: i, nu }) })
        .collect()
}

/// `C_ij = S_ij / sqrt(S_ii S_jj)`
pub fn coherency(spectrum: &SpectralMatrix) -> Result<ConnectivityField> {
    let grid = spectrum.grid;
    let values = (0..grid.one_sided_len())
        .map(|k| {
            let s = &spectrum.values[k];
            let diag = positive_diagonal(s, grid.nu(k))?;
            Ok(CMat::from_fn(s.nrows(), s.ncols(), |i, j| s[(i, j)] / (diag[i] * diag[j]).sqrt()))
        })
        .collect::<Result<_>>()?;
    Ok(band_field(grid, values, FieldKind::Coherency, "spectrum"))
}

/// Inverse spectrum rescaled to a unit diagonal.
pub fn partial_coherence(spectrum: &SpectralMatrix) -> Result<ConnectivityField> {
    let grid = spectrum.grid;
    let values = (0..grid.one_sided_len())
        .map(|k| {
            let nu = grid.nu(k);
            let inv = linalg::inverse(&spectrum.values[k]).ok_or(Error::SingularSpectrum { nu })?;
            let diag = positive_diagonal(&inv, nu)?;
            Ok(CMat::from_fn(inv.nrows(), inv.ncols(), |i, j| inv[(i, j)] / (diag[i] * diag[j]).sqrt()))
        })
        .collect::<Result<_>>()?;
    Ok(band_field(grid, values, FieldKind::PartialCoherence, "spectrum"))
}

/// `Γ(ν) = diag(S)^{-1/2} H D^{1/2}` on the reporting band.
pub fn gamma_factor(factor: &SpectralFactor) -> Result<Vec<CMat>> {
    let sigma = linalg::complexify(&factor.sigma);
    let d_sqrt: Vec<f64> = factor.sigma.diagonal().iter().map(|v| v.sqrt()).collect();
    (0..factor.grid.one_sided_len())
        .map(|k| {
            let h = &factor.h[k];
            let s = h * &sigma * h.adjoint();
            let diag = positive_diagonal(&s, factor.grid.nu(k))?;
            Ok(CMat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * d_sqrt[j] / diag[i].sqrt()))
        })
        .collect()
}

/// `Π(ν) = D̃^{1/2} H^{-1} diag(S^{-1})^{-1/2}` on the reporting band.
pub fn pi_factor(factor: &SpectralFactor) -> Result<Vec<CMat>> {
    let inn = InnovationStructure::new(&factor.sigma)?;
    let sigma_inv = linalg::complexify(&inn.sigma_inv);
    let dt_sqrt: Vec<f64> = inn.d_tilde.iter().map(|v| v.sqrt()).collect();
    (0..factor.grid.one_sided_len())
        .map(|k| {
            let nu = factor.grid.nu(k);
            let h = &factor.h[k];
            if linalg::condition_number(h) > MAX_TRANSFER_CONDITION {
                return Err(Error::SingularTransfer { nu });
            }
            let a_bar = linalg::inverse(h).ok_or(Error::SingularTransfer { nu })?;
            let s_inv = a_bar.adjoint() * &sigma_inv * &a_bar;
            let diag = positive_diagonal(&s_inv, nu)?;
            Ok(CMat::from_fn(h.nrows(), h.ncols(), |i, j| a_bar[(i, j)] * dt_sqrt[i] / diag[j].sqrt()))
        })
        .collect()
}

/// `Γ ⊙ Γ* + (Γ ρ) ⊙ Γ*`
pub fn total_dtf(factor: &SpectralFactor) -> Result<ConnectivityField> {
    let inn = InnovationStructure::new(&factor.sigma)?;
    let rho = linalg::complexify(&inn.rho);
    let values = gamma_factor(factor)?
        .into_iter()
        .map(|g| {
            let g_rho = &g * &rho;
            CMat::from_fn(g.nrows(), g.ncols(), |i, j| (g[(i, j)] + g_rho[(i, j)]) * g[(i, j)].conj())
        })
        .collect();
    Ok(band_field(factor.grid, values, FieldKind::TotalDtf, ""))
}

/// `Π* ⊙ Π + Π* ⊙ (ρ̃ Π)`
pub fn total_pdc(factor: &SpectralFactor) -> Result<ConnectivityField> {
    let inn = InnovationStructure::new(&factor.sigma)?;
    let rho_tilde = linalg::complexify(&inn.rho_tilde);
    let values = pi_factor(factor)?
        .into_iter()
        .map(|p| {
            let rho_p = &rho_tilde * &p;
            CMat::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)].conj() * (p[(i, j)] + rho_p[(i, j)]))
        })
        .collect();
    Ok(band_field(factor.grid, values, FieldKind::TotalPdc, ""))
}

/// Generalized PDC: `D̃_i |Ā_ij|² / Σ_k D̃_k |Ā_kj|²`, columns sum to 1.
pub fn gpdc(factor: &SpectralFactor) -> Result<ConnectivityField> {
    let inn = InnovationStructure::new(&factor.sigma)?;
    let values = (0..factor.grid.one_sided_len())
        .map(|k| {
            let nu = factor.grid.nu(k);
            let h = &factor.h[k];
            if linalg::condition_number(h) > MAX_TRANSFER_CONDITION {
                return Err(Error::SingularTransfer { nu });
            }
            let a_bar = linalg::inverse(h).ok_or(Error::SingularTransfer { nu })?;
            let n = a_bar.nrows();
            let weighted = RMat::from_fn(n, n, |i, j| inn.d_tilde[i] * a_bar[(i, j)].norm_sqr());
            Ok(CMat::from_fn(n, n, |i, j| {
                let col: f64 = weighted.column(j).sum();
                C64::new(weighted[(i, j)] / col, 0.0)
            }))
        })
        .collect::<Result<_>>()?;
    Ok(band_field(factor.grid, values, FieldKind::Gpdc, ""))
}

/// Squared directed coherence: `D_j |H_ij|² / Σ_k D_k |H_ik|²`, rows sum to 1.
pub fn directed_coherence(factor: &SpectralFactor) -> Result<ConnectivityField> {
    let d: Vec<f64> = factor.sigma.diagonal().iter().cloned().collect();
    let values = (0..factor.grid.one_sided_len())
        .map(|k| {
            let h = &factor.h[k];
            let n = h.nrows();
            let weighted = RMat::from_fn(n, n, |i, j| d[j] * h[(i, j)].norm_sqr());
            CMat::from_fn(n, n, |i, j| C64::new(weighted[(i, j)] / weighted.row(i).sum(), 0.0))
        })
        .collect();
    Ok(band_field(factor.grid, values, FieldKind::DirectedCoherence, ""))
}

/// Mean over band points and all N² entries of `|est - ref|²`.
pub fn mse_vs_reference(estimate: &ConnectivityField, reference: &ConnectivityField) -> Result<f64> {
    if estimate.grid != reference.grid {
        return Err(Error::ShapeMismatch(format!(
            "grids differ: {} vs {} points",
            estimate.grid.n_points(),
            reference.grid.n_points()
        )));
    }
    if estimate.kind != reference.kind {
        return Err(Error::ShapeMismatch(format!(
            "field kinds differ: {} vs {}",
            estimate.kind.label(),
            reference.kind.label()
        )));
    }
    if estimate.values.len() != reference.values.len() || estimate.n_channels() != reference.n_channels() {
        return Err(Error::ShapeMismatch("fields differ in length or channel count".into()));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in estimate.values.iter().zip(&reference.values) {
        sum += (a - b).iter().map(|v| v.norm_sqr()).sum::<f64>();
        count += a.len();
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::model::VarmaModel;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::new(64).unwrap()
    }

    fn identity_factor(n: usize) -> SpectralFactor {
        VarmaModel::white_noise(RMat::identity(n, n)).unwrap().transfer_function(&grid()).unwrap()
    }

    fn assert_identity_field(f: &ConnectivityField) {
        let n = f.n_channels();
        for m in &f.values {
            assert!(linalg::max_abs(&(m - linalg::identity(n))) < 1e-14);
        }
    }

    #[test]
    fn innovation_structure_of_identity() {
        let s = InnovationStructure::new(&RMat::identity(3, 3)).unwrap();
        assert_eq!(s.r, RMat::identity(3, 3));
        assert_eq!(s.r_tilde, RMat::identity(3, 3));
        assert_eq!(s.rho.amax(), 0.0);
        assert_eq!(s.rho_tilde.amax(), 0.0);
    }

    #[test]
    fn innovation_structure_of_correlated_sigma() {
        let s = InnovationStructure::new(&catalog::correlated_sigma()).unwrap();
        let r = 1.0 / 5f64.sqrt();
        assert!((s.r[(0, 1)] - r).abs() < 1e-15);
        let inv = RMat::from_row_slice(2, 2, &[1.25, -0.25, -0.25, 0.25]);
        assert!((&s.sigma_inv - inv).amax() < 1e-15);
        assert!((s.r_tilde[(0, 1)] + r).abs() < 1e-15);
        assert_eq!(s.r_tilde, s.r_tilde.transpose());
    }

    #[test]
    fn diagonal_sigma_has_identity_correlations() {
        let s = InnovationStructure::new(&RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]))).unwrap();
        assert!((&s.r - RMat::identity(2, 2)).amax() < 1e-15);
        assert!((&s.r_tilde - RMat::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn singular_sigma_is_rejected() {
        let s = RMat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(InnovationStructure::new(&s), Err(Error::SingularCovariance)));
    }

    #[test]
    fn identity_model_gives_identity_fields() {
        let f = identity_factor(3);
        assert_identity_field(&coherency(&f.spectrum()).unwrap());
        assert_identity_field(&total_dtf(&f).unwrap());
        assert_identity_field(&total_pdc(&f).unwrap());
        assert_identity_field(&gpdc(&f).unwrap());
        for g in gamma_factor(&f).unwrap().iter().chain(pi_factor(&f).unwrap().iter()) {
            assert!(linalg::max_abs(&(g - linalg::identity(3))) < 1e-14);
        }
    }

    #[test]
    fn example1_coherency_at_zero_frequency() {
        let s = catalog::example1().theoretical_spectrum(&grid()).unwrap();
        let c = coherency(&s).unwrap();
        assert!((c.values[0][(0, 1)].re - 12.0 / 160f64.sqrt()).abs() < 1e-12);
        for m in &c.values {
            assert!(m.iter().all(|v| v.norm() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_power_channel_is_named() {
        let mut s = VarmaModel::white_noise(RMat::identity(2, 2)).unwrap().theoretical_spectrum(&grid()).unwrap();
        s.values[3][(1, 1)] = C64::new(0.0, 0.0);
        match coherency(&s) {
            Err(Error::ZeroPower { channel: 1, nu }) => assert_eq!(nu, 3.0 / 64.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_transfer_is_named() {
        // B(ν) of the VMA(1) model is singular exactly at ν = 0.5; an
        // 8-point grid would include it only in the upper half, so use a
        // factor with a singular H inside the band instead.
        let m =
            VarmaModel::vma(vec![RMat::identity(1, 1), RMat::from_element(1, 1, -1.0)], RMat::identity(1, 1)).unwrap();
        let f = m.transfer_function(&grid()).unwrap();
        assert!(matches!(pi_factor(&f), Err(Error::SingularTransfer { nu }) if nu == 0.0));
    }

    #[test]
    fn example4_theory_has_no_link_from_x1_to_x2() {
        let f = catalog::example4().canonical().transfer_function(&FrequencyGrid::new(512).unwrap()).unwrap();
        let t = total_pdc(&f).unwrap();
        assert!(t.entry(1, 0).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn example2_gpdc_columns_sum_to_one() {
        let f = catalog::example2().canonical().transfer_function(&grid()).unwrap();
        for m in &gpdc(&f).unwrap().values {
            for j in 0..3 {
                let col: f64 = (0..3).map(|i| m[(i, j)].re).sum();
                assert!((col - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mse_checks_shapes() {
        let f = identity_factor(2);
        let a = total_pdc(&f).unwrap();
        assert_eq!(mse_vs_reference(&a, &a).unwrap(), 0.0);
        let b = total_dtf(&f).unwrap();
        assert!(matches!(mse_vs_reference(&a, &b), Err(Error::ShapeMismatch(_))));
        let other = VarmaModel::white_noise(RMat::identity(2, 2))
            .unwrap()
            .transfer_function(&FrequencyGrid::new(32).unwrap())
            .unwrap();
        assert!(mse_vs_reference(&a, &total_pdc(&other).unwrap()).is_err());
    }

    #[test]
    fn mse_of_constant_offset() {
        let f = identity_factor(2);
        let a = total_pdc(&f).unwrap();
        let mut b = a.clone();
        for m in b.values.iter_mut() {
            m[(0, 1)] += C64::new(0.0, 0.2);
        }
        // one of four entries off by 0.2
        assert!((mse_vs_reference(&b, &a).unwrap() - 0.04 / 4.0).abs() < 1e-15);
    }
}
