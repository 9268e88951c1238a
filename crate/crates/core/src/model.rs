//! VARMA(p, q) models, their matrix polynomials on the unit circle, root
//! analysis, and the theoretical transfer function and spectrum.
//!
//! The model is
//!
//! ```text
//! x(n) = Σ_{r=1..p} A_r x(n-r) + Σ_{s=0..q} B_s w(n-s),   cov w(n) = Σ_w
//! ```
//!
//! with `A(ν) = I - Σ A_r e^{-j2πrν}`, `B(ν) = Σ B_s e^{-j2πsν}` and
//! `S(ν) = A^{-1}(ν) B(ν) Σ_w B^H(ν) A^{-H}(ν)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, C64};
use crate::poly::MatrixPoly;
use crate::spectrum::{delay_phasor, FrequencyGrid, SpectralFactor, SpectralMatrix};

/// Roots with `|z|` inside `1 - ROOT_BAND` count as stable; minimum phase
/// admits `|z| <= 1 + ROOT_BAND`.
pub const ROOT_BAND: f64 = 1e-9;

/// Condition number above which `A(ν)` is treated as singular.
pub const MAX_AR_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct VarmaModel {
    n_channels: usize,
    ar: Vec<RMat>,
    ma: Vec<RMat>,
    sigma: RMat,
}

impl VarmaModel {
    /// `ar` holds A_1..A_p, `ma` holds B_0..B_q (at least B_0).
    pub fn new(ar: Vec<RMat>, ma: Vec<RMat>, sigma: RMat) -> Result<Self> {
        let n = sigma.nrows();
        if n == 0 {
            return Err(Error::InvalidModel("model needs at least one channel".into()));
        }
        if ma.is_empty() {
            return Err(Error::InvalidModel("MA part needs at least the zero-lag block".into()));
        }
        let square = |m: &RMat| m.nrows() == n && m.ncols() == n;
        if !square(&sigma) || !ar.iter().all(square) || !ma.iter().all(square) {
            return Err(Error::InvalidModel(format!("all coefficient matrices must be {n}×{n}")));
        }
        if ar.iter().chain(&ma).chain(std::iter::once(&sigma)).any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidModel("coefficients must be finite".into()));
        }
        let asym = linalg::max_abs_real(&(&sigma - sigma.transpose()));
        if asym > 1e-12 * linalg::max_abs_real(&sigma).max(1.0) {
            return Err(Error::InvalidModel(format!("innovations covariance is not symmetric (deviation {asym:.3e})")));
        }
        let eig = linalg::symmetric_eigenvalues(&sigma);
        if eig[0] <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "innovations covariance is not positive definite (smallest eigenvalue {:.3e})",
                eig[0]
            )));
        }
        if linalg::real_condition_number(&ma[0]) > MAX_AR_CONDITION {
            return Err(Error::InvalidModel("zero-lag MA block B_0 is not invertible".into()));
        }
        Ok(VarmaModel { n_channels: n, ar, ma, sigma: linalg::symmetric_part(&sigma) })
    }

    /// Pure VAR(p) with identity zero-lag MA block.
    pub fn var(ar: Vec<RMat>, sigma: RMat) -> Result<Self> {
        let n = sigma.nrows();
        Self::new(ar, vec![RMat::identity(n, n)], sigma)
    }

    /// Pure VMA(q); `ma` holds B_0..B_q.
    pub fn vma(ma: Vec<RMat>, sigma: RMat) -> Result<Self> {
        Self::new(Vec::new(), ma, sigma)
    }

    pub fn white_noise(sigma: RMat) -> Result<Self> {
        let n = sigma.nrows();
        Self::new(Vec::new(), vec![RMat::identity(n, n)], sigma)
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn ar_order(&self) -> usize {
        self.ar.len()
    }

    pub fn ma_order(&self) -> usize {
        self.ma.len() - 1
    }

    pub fn ar_blocks(&self) -> &[RMat] {
        &self.ar
    }

    pub fn ma_blocks(&self) -> &[RMat] {
        &self.ma
    }

    pub fn innovations_cov(&self) -> &RMat {
        &self.sigma
    }

    /// `A(ν) = I - Σ_r A_r e^{-j2πrν}`
    pub fn eval_ar_polynomial(&self, nu: f64) -> CMat {
        let mut out = linalg::identity(self.n_channels);
        for (r, a) in self.ar.iter().enumerate() {
            out -= linalg::complexify(a) * delay_phasor(nu, r + 1);
        }
        out
    }

    /// `B(ν) = Σ_s B_s e^{-j2πsν}`
    pub fn eval_ma_polynomial(&self, nu: f64) -> CMat {
        let n = self.n_channels;
        self.ma
            .iter()
            .enumerate()
            .fold(CMat::zeros(n, n), |acc, (s, b)| acc + linalg::complexify(b) * delay_phasor(nu, s))
    }

    /// `H(ν_k) = A(ν_k)^{-1} B(ν_k)` paired with `Σ_w`.
    pub fn transfer_function(&self, grid: &FrequencyGrid) -> Result<SpectralFactor> {
        let h = grid
            .values()
            .map(|nu| {
                let a = self.eval_ar_polynomial(nu);
                let condition = linalg::condition_number(&a);
                if condition > MAX_AR_CONDITION {
                    return Err(Error::SingularAr { nu, condition });
                }
                let b = self.eval_ma_polynomial(nu);
                a.lu().solve(&b).ok_or(Error::SingularAr { nu, condition })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectralFactor { grid: *grid, h, sigma: self.sigma.clone(), diagnostics: None })
    }

    /// `S(ν_k) = H Σ_w H^H`
    pub fn theoretical_spectrum(&self, grid: &FrequencyGrid) -> Result<SpectralMatrix> {
        Ok(self.transfer_function(grid)?.spectrum())
    }

    /// The same process rewritten with `B_0 = I`: `B_s ← B_s B_0^{-1}`,
    /// `Σ_w ← B_0 Σ_w B_0^T`. This is the normalization every estimator
    /// (and Wilson's factor) returns, so reference connectivity is computed
    /// from it.
    pub fn canonical(&self) -> VarmaModel {
        let b0 = &self.ma[0];
        let b0_inv = linalg::real_inverse(b0).expect("B_0 invertibility is a model invariant");
        let ma = self.ma.iter().map(|b| b * &b0_inv).collect();
        let sigma = linalg::symmetric_part(&(b0 * &self.sigma * b0.transpose()));
        VarmaModel { n_channels: self.n_channels, ar: self.ar.clone(), ma, sigma }
    }

    pub fn ar_matrix_poly(&self) -> MatrixPoly {
        let mut blocks = vec![linalg::identity(self.n_channels)];
        blocks.extend(self.ar.iter().map(|a| -linalg::complexify(a)));
        MatrixPoly { blocks }
    }

    pub fn ma_matrix_poly(&self) -> MatrixPoly {
        MatrixPoly { blocks: self.ma.iter().map(linalg::complexify).collect() }
    }

    /// Roots of `det A(z) = 0`; stable iff every `|z| < 1`.
    pub fn ar_root_report(&self) -> RootReport {
        let roots = self.ar_matrix_poly().determinant().z_roots();
        RootReport::new(roots, RootKind::Autoregressive)
    }

    /// Roots of `det B(z) = 0`; minimum phase iff every `|z| <= 1`.
    pub fn ma_root_report(&self) -> RootReport {
        RootReport::for_matrix_poly(&self.ma_matrix_poly())
    }

    pub fn is_stable(&self) -> bool {
        self.ar_root_report().classification == RootClass::Stable
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootClass {
    Stable,
    Unstable,
    MinimumPhase,
    NonminimumPhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootKind {
    Autoregressive,
    MovingAverage,
}

#[derive(Clone, Debug, Serialize)]
pub struct RootReport {
    #[serde(serialize_with = "serialize_roots")]
    pub roots: Vec<C64>,
    pub magnitudes: Vec<f64>,
    pub classification: RootClass,
}

fn serialize_roots<S: serde::Serializer>(roots: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(roots.len()))?;
    for r in roots {
        seq.serialize_element(&[r.re, r.im])?;
    }
    seq.end()
}

impl RootReport {
    pub fn new(roots: Vec<C64>, kind: RootKind) -> Self {
        let magnitudes: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
        let classification = match kind {
            RootKind::Autoregressive => {
                if magnitudes.iter().all(|&m| m < 1.0 - ROOT_BAND) {
                    RootClass::Stable
                } else {
                    RootClass::Unstable
                }
            }
            RootKind::MovingAverage => {
                if magnitudes.iter().all(|&m| m <= 1.0 + ROOT_BAND) {
                    RootClass::MinimumPhase
                } else {
                    RootClass::NonminimumPhase
                }
            }
        };
        RootReport { roots, magnitudes, classification }
    }

    /// Minimum-phase report for an arbitrary lag-domain matrix polynomial.
    pub fn for_matrix_poly(poly: &MatrixPoly) -> Self {
        RootReport::new(poly.determinant().z_roots(), RootKind::MovingAverage)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes.iter().cloned().fold(0.0, f64::max)
    }
}
