//! Gaussian realizations of a VARMA model.
//!
//! The generator is ChaCha20 from `rand_chacha` 0.9, seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`; standard normals come from
//! `rand_distr` 0.5's `StandardNormal`. Innovations are `L z` with `L` the
//! lower Cholesky factor of `Σ_w`. A given seed reproduces bit-identical
//! panels as long as those two crate versions are kept.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::model::{RootClass, VarmaModel};

pub const DEFAULT_BURN_IN: usize = 1000;

/// N channels × n_s samples, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesPanel {
    data: RMat,
}

impl TimeSeriesPanel {
    pub fn new(data: RMat) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidPanel("panel needs at least one channel and one sample".into()));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            let (channel, sample) = (idx % data.nrows(), idx / data.nrows());
            return Err(Error::InvalidPanel(format!("non-finite value in channel {channel} at sample {sample}")));
        }
        Ok(TimeSeriesPanel { data })
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &RMat {
        &self.data
    }

    pub fn channel(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().cloned().collect()
    }

    /// Copy with each channel's mean removed.
    pub fn demeaned(&self) -> RMat {
        let mut out = self.data.clone();
        for mut row in out.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        out
    }

    /// Mean-removed covariance with divisor n_s.
    pub fn sample_covariance(&self) -> Result<RMat> {
        if self.n_samples() < 2 {
            return Err(Error::PanelTooShort { n_samples: self.n_samples(), required: 2 });
        }
        let x = self.demeaned();
        Ok(linalg::symmetric_part(&(&x * x.transpose())) / self.n_samples() as f64)
    }

    /// Samples `start..end` as a new panel.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        TimeSeriesPanel::new(self.data.columns(start, end - start).into_owned())
    }
}

/// Runs `burn_in + n_samples` steps from zero initial conditions and keeps the last `n_samples`.
pub fn simulate(model: &VarmaModel, n_samples: usize, seed: u64, burn_in: usize) -> Result<TimeSeriesPanel> {
    if n_samples == 0 {
        return Err(Error::Config("n_samples must be positive".into()));
    }
    let roots = model.ar_root_report();
    if roots.classification != RootClass::Stable {
        return Err(Error::UnstableModel { max_magnitude: roots.max_magnitude() });
    }
    let n = model.n_channels();
    let p = model.ar_order();
    let q = model.ma_order();
    let total = burn_in + n_samples;
    let chol = linalg::cholesky_lower(model.innovations_cov()).ok_or(Error::SingularCovariance)?;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut w = RMat::zeros(n, total);
    for t in 0..total {
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for i in 0..n {
            w[(i, t)] = (0..=i).map(|k| chol[(i, k)] * z[k]).sum();
        }
    }

    let mut x = RMat::zeros(n, total);
    let mut acc = vec![0.0; n];
    for t in 0..total {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for (r, a) in model.ar_blocks().iter().enumerate().take(p.min(t)) {
            let lag = t - r - 1;
            for i in 0..n {
                acc[i] += (0..n).map(|j| a[(i, j)] * x[(j, lag)]).sum::<f64>();
            }
        }
        for (s, b) in model.ma_blocks().iter().enumerate().take(q.min(t) + 1) {
            let lag = t - s;
            for i in 0..n {
                acc[i] += (0..n).map(|j| b[(i, j)] * w[(j, lag)]).sum::<f64>();
            }
        }
        for i in 0..n {
            x[(i, t)] = acc[i];
        }
    }
    TimeSeriesPanel::new(x.columns(burn_in, n_samples).into_owned())
}
