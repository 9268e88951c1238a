//! Parametric spectral factors: VAR by Nuttall-Strand with Hannan-Quinn
//! order choice, and VMA / VARMA by the two-step long-autoregression method.
//!
//! The two-step method fits a long VAR, takes its residuals `ε(n)` as
//! innovation proxies and then regresses `x(n) - ε(n)` on
//! `x(n-1..n-p)` and `ε(n-1..n-q)` by least squares, which pins the zero-lag
//! MA block to the identity.

pub mod hq;
pub mod nuttall_strand;

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::model::{RootClass, VarmaModel};
use crate::simulate::TimeSeriesPanel;

pub use hq::{hannan_quinn, hannan_quinn_criterion, select_order, CriterionValue};
pub use nuttall_strand::{nuttall_strand, prediction_errors, ArStage};

pub const DEFAULT_LONG_AR_ORDER: usize = 50;
pub const DEFAULT_MAX_VAR_ORDER: usize = 30;

/// Regressor condition number beyond which least squares is refused.
const MAX_REGRESSOR_CONDITION: f64 = 1e10;

#[derive(Clone, Debug)]
pub struct FitReport {
    pub model: VarmaModel,
    pub selected_order: (usize, usize),
    pub criterion_values: Vec<CriterionValue>,
    /// Covariance of the final one-step residuals.
    pub residual_cov: RMat,
    pub warnings: Vec<String>,
}

fn check_panel(panel: &TimeSeriesPanel) -> Result<RMat> {
    let x = panel.demeaned();
    for (i, row) in x.row_iter().enumerate() {
        if row.iter().all(|v| *v == 0.0) {
            return Err(Error::DegeneratePanel { channel: i });
        }
    }
    Ok(x)
}

/// VAR(p), p in `1..=p_max`, chosen by Hannan-Quinn.
pub fn fit_var(panel: &TimeSeriesPanel, p_max: usize) -> Result<FitReport> {
    if p_max == 0 {
        return Err(Error::Config("maximum VAR order must be positive".into()));
    }
    let n = panel.n_channels();
    let ns = panel.n_samples();
    if ns <= n * p_max + 1 {
        return Err(Error::PanelTooShort { n_samples: ns, required: n * p_max + 2 });
    }
    let x = check_panel(panel)?;
    let stages = nuttall_strand(&x, p_max)?;
    let criterion_values: Vec<CriterionValue> = stages
        .iter()
        .enumerate()
        .map(|(i, s)| CriterionValue { p: i + 1, q: 0, value: hannan_quinn_criterion(&s.forward_cov, i + 1, ns) })
        .collect();
    let best = select_order(&criterion_values).expect("at least one order");
    let stage = &stages[best.p - 1];
    let model = VarmaModel::var(stage.coefficients.clone(), stage.forward_cov.clone())?;
    Ok(FitReport {
        model,
        selected_order: (best.p, 0),
        criterion_values,
        residual_cov: stage.forward_cov.clone(),
        warnings: Vec::new(),
    })
}

/// VMA(q) by the two-step method.
pub fn fit_vma(panel: &TimeSeriesPanel, q: usize, long_ar_order: usize) -> Result<FitReport> {
    if q == 0 {
        return Err(Error::Config("VMA order must be positive".into()));
    }
    TwoStep::new(panel, long_ar_order, q)?.fit(0, q)
}

/// VARMA(p, q) by the two-step method. `q = 0` reduces to least-squares VAR(p).
pub fn fit_varma(panel: &TimeSeriesPanel, p: usize, q: usize, long_ar_order: usize) -> Result<FitReport> {
    TwoStep::new(panel, long_ar_order, p.max(q))?.fit(p, q)
}

/// VMA order chosen by Hannan-Quinn over `1..=q_max`.
pub fn select_vma(panel: &TimeSeriesPanel, q_max: usize, long_ar_order: usize) -> Result<FitReport> {
    select_two_step(panel, &[0], &(1..=q_max).collect::<Vec<_>>(), long_ar_order)
}

/// Exhaustive (p, q) sweep by Hannan-Quinn, `p in 1..=p_max`, `q in 1..=q_max`.
pub fn select_varma(panel: &TimeSeriesPanel, p_max: usize, q_max: usize, long_ar_order: usize) -> Result<FitReport> {
    select_two_step(panel, &(1..=p_max).collect::<Vec<_>>(), &(1..=q_max).collect::<Vec<_>>(), long_ar_order)
}

fn select_two_step(panel: &TimeSeriesPanel, ps: &[usize], qs: &[usize], long_ar_order: usize) -> Result<FitReport> {
    let max_lag = ps.iter().chain(qs).cloned().max().unwrap_or(0);
    if max_lag == 0 || ps.is_empty() || qs.is_empty() {
        return Err(Error::Config("order sweep needs at least one positive candidate".into()));
    }
    let stepper = TwoStep::new(panel, long_ar_order, max_lag)?;
    let moments = stepper.moments(ps.iter().cloned().max().unwrap_or(0), qs.iter().cloned().max().unwrap_or(0));
    let mut table = Vec::new();
    for &p in ps {
        for &q in qs {
            if p + q > 0 {
                table.push(CriterionValue { p, q, value: moments.criterion(p, q) });
            }
        }
    }
    let best = select_order(&table).expect("non-empty sweep");
    let mut report = stepper.fit(best.p, best.q)?;
    report.criterion_values = table;
    Ok(report)
}

/// Second-moment sums of the full sweep regressor stack
/// `[x(n-1..n-p_max), ε(n-1..n-q_max)]`, so each candidate order is a
/// small solve on a sub-block.
struct SweepMoments {
    n: usize,
    p_max: usize,
    rows: usize,
    zz: RMat,
    yz: RMat,
    xz: RMat,
    xx: RMat,
    x_mean: nalgebra::DVector<f64>,
    z_mean: nalgebra::DVector<f64>,
}

impl SweepMoments {
    fn indices(&self, p: usize, q: usize) -> Vec<usize> {
        (0..p * self.n).chain(self.p_max * self.n..(self.p_max + q) * self.n).collect()
    }

    /// Hannan-Quinn value of the (p, q) regression; infinite when the
    /// regressors are numerically singular.
    fn criterion(&self, p: usize, q: usize) -> f64 {
        let idx = self.indices(p, q);
        let g = self.zz.select_rows(&idx).select_columns(&idx);
        let Some(chol) = nalgebra::Cholesky::new(g.clone()) else {
            return f64::INFINITY;
        };
        let yz = self.yz.select_columns(&idx);
        let xz = self.xz.select_columns(&idx);
        // Θ = YZᵀ G⁻¹
        let theta = chol.solve(&yz.transpose()).transpose();
        let t = self.rows as f64;
        let tz = &theta * self.z_mean.select_rows(&idx);
        let mean = &self.x_mean - &tz;
        let cross = &xz * theta.transpose();
        let sum = &self.xx - &cross - cross.transpose() + &theta * &g * theta.transpose();
        let cov = linalg::symmetric_part(&(sum / t - &mean * mean.transpose()));
        hannan_quinn_criterion(&cov, p + q, self.rows)
    }
}

/// Shared first stage: demeaned data and long-AR residuals.
struct TwoStep {
    x: RMat,
    residuals: RMat,
    long_ar_order: usize,
    /// First sample index used by every regression in a sweep.
    start: usize,
}

impl TwoStep {
    fn new(panel: &TimeSeriesPanel, long_ar_order: usize, max_lag: usize) -> Result<Self> {
        if long_ar_order == 0 {
            return Err(Error::Config("long AR order must be positive".into()));
        }
        let n = panel.n_channels();
        let ns = panel.n_samples();
        let start = long_ar_order + max_lag;
        let required = (start + 2 * max_lag * n + 2).max(n * long_ar_order + 2);
        if ns < required {
            return Err(Error::PanelTooShort { n_samples: ns, required });
        }
        let x = check_panel(panel)?;
        let stages = nuttall_strand(&x, long_ar_order)?;
        let long = stages.last().expect("long_ar_order > 0");
        // Column t of `residuals` is ε at sample long_ar_order + t.
        let residuals = prediction_errors(&x, &long.coefficients);
        Ok(TwoStep { x, residuals, long_ar_order, start })
    }

    fn eps(&self, t: usize) -> nalgebra::DVectorView<'_, f64> {
        self.residuals.column(t - self.long_ar_order)
    }

    fn moments(&self, p_max: usize, q_max: usize) -> SweepMoments {
        let n = self.x.nrows();
        let ns = self.x.ncols();
        let rows = ns - self.start;
        let mut z = RMat::zeros((p_max + q_max) * n, rows);
        let mut x = RMat::zeros(n, rows);
        let mut y = RMat::zeros(n, rows);
        for (col, t) in (self.start..ns).enumerate() {
            x.set_column(col, &self.x.column(t));
            y.set_column(col, &(self.x.column(t) - self.eps(t)));
            for r in 1..=p_max {
                z.view_mut(((r - 1) * n, col), (n, 1)).copy_from(&self.x.column(t - r));
            }
            for s in 1..=q_max {
                z.view_mut(((p_max + s - 1) * n, col), (n, 1)).copy_from(&self.eps(t - s));
            }
        }
        let t = rows as f64;
        SweepMoments {
            n,
            p_max,
            rows,
            zz: &z * z.transpose(),
            yz: &y * z.transpose(),
            xz: &x * z.transpose(),
            xx: &x * x.transpose(),
            x_mean: x.column_sum() / t,
            z_mean: z.column_sum() / t,
        }
    }

    fn fit(&self, p: usize, q: usize) -> Result<FitReport> {
        if p + q == 0 {
            return Err(Error::Config("at least one of the AR and MA orders must be positive".into()));
        }
        let n = self.x.nrows();
        let ns = self.x.ncols();
        let rows = ns - self.start;
        let k = (p + q) * n;

        let mut z = RMat::zeros(k, rows);
        let mut y = RMat::zeros(n, rows);
        let mut eps = RMat::zeros(n, rows);
        for (col, t) in (self.start..ns).enumerate() {
            let e = self.eps(t);
            eps.set_column(col, &e);
            y.set_column(col, &(self.x.column(t) - e));
            for r in 1..=p {
                z.view_mut(((r - 1) * n, col), (n, 1)).copy_from(&self.x.column(t - r));
            }
            for s in 1..=q {
                z.view_mut(((p + s - 1) * n, col), (n, 1)).copy_from(&self.eps(t - s));
            }
        }

        let gram = &z * z.transpose();
        let condition = linalg::real_condition_number(&gram);
        if condition.is_nan() || condition >= MAX_REGRESSOR_CONDITION {
            return Err(Error::RankDeficient { condition });
        }
        let theta = (&y * z.transpose()) * linalg::real_inverse(&gram).ok_or(Error::RankDeficient { condition })?;

        let block = |i: usize| theta.columns(i * n, n).into_owned();
        let ar: Vec<RMat> = (0..p).map(block).collect();
        let mut ma = vec![RMat::identity(n, n)];
        ma.extend((p..p + q).map(block));

        let sigma = covariance(&eps);
        let full_residual = &y - &theta * &z + &eps;
        let residual_cov = covariance(&full_residual);

        let mut warnings = Vec::new();
        let model = VarmaModel::new(ar, ma, sigma)?;
        if p > 0 && model.ar_root_report().classification != RootClass::Stable {
            warnings.push(format!(
                "fitted VARMA({p},{q}) AR part is unstable (largest root magnitude {:.4})",
                model.ar_root_report().max_magnitude()
            ));
        }
        let value = hannan_quinn_criterion(&residual_cov, p + q, rows);
        Ok(FitReport {
            model,
            selected_order: (p, q),
            criterion_values: vec![CriterionValue { p, q, value }],
            residual_cov,
            warnings,
        })
    }
}

fn covariance(e: &RMat) -> RMat {
    let mut c = e.clone();
    for mut row in c.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    linalg::symmetric_part(&(&c * c.transpose())) / e.ncols() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::simulate::simulate;

    fn white(n: usize, ns: usize, seed: u64) -> TimeSeriesPanel {
        simulate(&VarmaModel::white_noise(RMat::identity(n, n)).unwrap(), ns, seed, 0).unwrap()
    }

    #[test]
    fn var_on_white_noise_finds_no_dynamics() {
        let fit = fit_var(&white(2, 16384, 1), 10).unwrap();
        for a in fit.model.ar_blocks() {
            assert!(a.amax() < 0.05);
        }
        let best = select_order(&fit.criterion_values).unwrap();
        assert_eq!(best.p, fit.selected_order.0);
    }

    #[test]
    fn var_rejects_zero_variance_channel() {
        let mut d = white(2, 500, 2).data().clone();
        d.row_mut(1).fill(4.0);
        let panel = TimeSeriesPanel::new(d).unwrap();
        assert!(matches!(fit_var(&panel, 3), Err(Error::DegeneratePanel { channel: 1 })));
    }

    #[test]
    fn var_needs_enough_samples() {
        assert!(matches!(fit_var(&white(2, 20, 3), 10), Err(Error::PanelTooShort { .. })));
    }

    #[test]
    fn vma_recovers_example1() {
        let panel = simulate(&catalog::example1(), 16384, 9, 1000).unwrap();
        let fit = fit_vma(&panel, 1, DEFAULT_LONG_AR_ORDER).unwrap();
        let b1 = &fit.model.ma_blocks()[1];
        let want = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        assert!((b1 - want).amax() < 0.05, "{b1}");
        let sigma = fit.model.innovations_cov();
        let target = catalog::correlated_sigma();
        for i in 0..2 {
            for j in 0..2 {
                assert!(((sigma[(i, j)] - target[(i, j)]) / target[(i, j)]).abs() < 0.05, "{sigma}");
            }
        }
    }

    #[test]
    fn vma_on_white_noise_is_flat() {
        let fit = fit_vma(&white(2, 16384, 4), 1, DEFAULT_LONG_AR_ORDER).unwrap();
        assert!(fit.model.ma_blocks()[1].amax() < 0.05);
    }

    #[test]
    fn varma_on_white_noise_is_flat() {
        // AR and MA parts may cancel, so only the spectrum is identified
        let fit = fit_varma(&white(2, 16384, 5), 1, 1, DEFAULT_LONG_AR_ORDER).unwrap();
        let grid = crate::FrequencyGrid::new(64).unwrap();
        let s = fit.model.theoretical_spectrum(&grid).unwrap();
        for m in &s.values {
            assert!(crate::linalg::max_abs(&(m - crate::linalg::identity(2))) < 0.1, "{m}");
        }
    }

    #[test]
    fn varma_without_ma_part_matches_burg_var() {
        let truth = VarmaModel::var(
            vec![
                RMat::from_row_slice(2, 2, &[0.5, 0.3, 0.0, -0.4]),
                RMat::from_row_slice(2, 2, &[-0.2, 0.0, 0.1, 0.2]),
            ],
            catalog::correlated_sigma(),
        )
        .unwrap();
        let panel = simulate(&truth, 16384, 6, 1000).unwrap();
        let ls = fit_varma(&panel, 2, 0, DEFAULT_LONG_AR_ORDER).unwrap();
        let burg = nuttall_strand(&panel.demeaned(), 2).unwrap().pop().unwrap();
        for (a, b) in ls.model.ar_blocks().iter().zip(&burg.coefficients) {
            assert!((a - b).amax() < 0.03);
        }
    }

    #[test]
    fn orders_must_be_positive() {
        let panel = white(2, 4096, 7);
        assert!(fit_vma(&panel, 0, 10).is_err());
        assert!(fit_varma(&panel, 0, 0, 10).is_err());
        assert!(fit_var(&panel, 0).is_err());
    }

    #[test]
    fn vma_sweep_selects_true_order_on_vma_data() {
        let panel = simulate(&catalog::example4(), 16384, 8, 1000).unwrap();
        let fit = select_vma(&panel, 4, 30).unwrap();
        assert_eq!(fit.selected_order, (0, 2));
        assert_eq!(fit.criterion_values.len(), 4);
    }

    #[test]
    fn sweep_criterion_matches_direct_fit() {
        let panel = simulate(&catalog::example2(), 4096, 9, 1000).unwrap();
        let stepper = TwoStep::new(&panel, 20, 3).unwrap();
        let moments = stepper.moments(3, 3);
        for (p, q) in [(0, 1), (0, 3), (2, 2), (3, 1), (1, 0)] {
            let direct = stepper.fit(p, q).unwrap().criterion_values[0].value;
            assert!((moments.criterion(p, q) - direct).abs() < 1e-9, "({p},{q})");
        }
    }

    #[test]
    fn fitted_vma_on_nonminimum_phase_data_is_minimum_phase() {
        let panel = simulate(&catalog::example4(), 16384, 10, 1000).unwrap();
        let fit = fit_vma(&panel, 2, DEFAULT_LONG_AR_ORDER).unwrap();
        assert!(fit.model.ma_root_report().max_magnitude() < 1.0);
    }
}
