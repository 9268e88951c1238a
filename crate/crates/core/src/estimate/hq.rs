//! Hannan-Quinn order selection.

use serde::{Deserialize, Serialize};

use crate::linalg::RMat;

/// `ln det Σ̂ + 2 k N² ln(ln n_s) / n_s`, with `k` coefficient blocks.
pub fn hannan_quinn_criterion(residual_cov: &RMat, n_blocks: usize, n_samples: usize) -> f64 {
    let n = residual_cov.nrows() as f64;
    let ns = n_samples as f64;
    residual_cov.determinant().ln() + 2.0 * n_blocks as f64 * n * n * ns.ln().ln() / ns
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionValue {
    pub p: usize,
    pub q: usize,
    pub value: f64,
}

/// Candidate with the smallest criterion; ties go to the fewest blocks, then the smaller AR order.
/// Non-finite values never win unless nothing else is available.
pub fn select_order(values: &[CriterionValue]) -> Option<CriterionValue> {
    values.iter().cloned().min_by(|a, b| {
        let key = |c: &CriterionValue| if c.value.is_nan() { f64::INFINITY } else { c.value };
        key(a).total_cmp(&key(b)).then((a.p + a.q).cmp(&(b.p + b.q))).then(a.p.cmp(&b.p))
    })
}

/// Hannan-Quinn choice among VAR orders, one residual covariance per order.
pub fn hannan_quinn(residual_covs: &[(usize, RMat)], n_samples: usize) -> Option<usize> {
    let values: Vec<CriterionValue> = residual_covs
        .iter()
        .map(|(p, cov)| CriterionValue { p: *p, q: 0, value: hannan_quinn_criterion(cov, *p, n_samples) })
        .collect();
    select_order(&values).map(|c| c.p)
}
