//! Nuttall-Strand multichannel Burg recursion.
//!
//! Each stage picks the partial correlation `Δ` that solves
//!
//! ```text
//! (P̂_f P_f^{-1}) Δ + Δ (P_b^{-1} P̂_b) = 2 P̂_fb
//! ```
//!
//! jointly weighting forward and backward prediction errors, then updates
//! the forward/backward predictors with the Levinson step. The resulting
//! models are stable by construction.

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};

/// Model of one order produced by the recursion.
#[derive(Clone, Debug)]
pub struct ArStage {
    /// `A_1..A_p` in `x(n) = Σ A_r x(n-r) + e(n)`.
    pub coefficients: Vec<RMat>,
    /// Forward prediction-error covariance, divisor n_s.
    pub forward_cov: RMat,
}

/// Runs the recursion on demeaned data (channels × samples) up to `max_order`
/// and returns one stage per order `1..=max_order`.
pub fn nuttall_strand(x: &RMat, max_order: usize) -> Result<Vec<ArStage>> {
    let n = x.nrows();
    let len = x.ncols();
    if max_order == 0 {
        return Ok(Vec::new());
    }
    if len <= max_order + 1 {
        return Err(Error::PanelTooShort { n_samples: len, required: max_order + 2 });
    }

    let mut ef = x.clone();
    let mut eb = x.clone();
    let mut pf = x * x.transpose();
    let mut pb = pf.clone();
    // forward[k] and backward[k] are the lag-k predictor blocks, [0] = I.
    let mut forward = vec![RMat::identity(n, n)];
    let mut backward = vec![RMat::identity(n, n)];
    let mut stages = Vec::with_capacity(max_order);

    for m in 1..=max_order {
        let f_cols = ef.columns(m, len - m);
        let b_cols = eb.columns(m - 1, len - m);
        let pf_hat = f_cols * f_cols.transpose();
        let pb_hat = b_cols * b_cols.transpose();
        let pfb_hat = f_cols * b_cols.transpose();

        let pf_inv = linalg::real_inverse(&pf).ok_or(Error::RankDeficient { condition: f64::INFINITY })?;
        let pb_inv = linalg::real_inverse(&pb).ok_or(Error::RankDeficient { condition: f64::INFINITY })?;
        let rho = linalg::solve_sylvester(&(&pf_hat * &pf_inv), &(&pb_inv * &pb_hat), &(pfb_hat * 2.0))
            .ok_or(Error::RankDeficient { condition: f64::INFINITY })?;

        let am = -(&rho * &pb_inv);
        let bm = -(rho.transpose() * &pf_inv);

        let old_forward = forward.clone();
        let old_backward = backward.clone();
        for k in 1..m {
            forward[k] = &old_forward[k] + &am * &old_backward[m - k];
            backward[m - k] = &old_backward[m - k] + &bm * &old_forward[k];
        }
        forward.push(am.clone());
        backward.push(bm.clone());

        pf = &pf - &am * &bm * &pf;
        pb = &pb - &bm * &am * &pb;
        pf = linalg::symmetric_part(&pf);
        pb = linalg::symmetric_part(&pb);

        let old_ef = ef.clone();
        let old_eb = eb.clone();
        for t in m..len {
            let f_new = old_ef.column(t) + &am * old_eb.column(t - 1);
            let b_new = old_eb.column(t - 1) + &bm * old_ef.column(t);
            ef.set_column(t, &f_new);
            eb.set_column(t, &b_new);
        }

        stages.push(ArStage { coefficients: forward[1..].iter().map(|a| -a).collect(), forward_cov: &pf / len as f64 });
    }
    Ok(stages)
}

/// One-step forward prediction errors `e(n) = x(n) - Σ A_r x(n-r)` for `n >= p`.
/// Column `t` of the result is the error at sample `p + t`.
pub fn prediction_errors(x: &RMat, coefficients: &[RMat]) -> RMat {
    let p = coefficients.len();
    let len = x.ncols();
    let mut out = x.columns(p, len - p).into_owned();
    for (r, a) in coefficients.iter().enumerate() {
        let lagged = x.columns(p - r - 1, len - p);
        out -= a * lagged;
    }
    out
}
