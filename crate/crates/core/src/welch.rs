//! Welch cross-spectral density estimate: von Hann window, 50% overlap,
//! per-channel mean removal, trailing partial segment dropped.
//!
//! `S_ij(ν_k) = (1/K) Σ_segments W_i(ν_k) conj(W_j(ν_k)) / (U L)` with `L`
//! the segment length and `U = mean(w²)`, so that the grid mean of `S_ii` is
//! the channel variance.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::simulate::TimeSeriesPanel;
use crate::spectrum::{FrequencyGrid, SpectralMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_len: usize,
}

impl WelchConfig {
    pub const DEFAULT_SEGMENT_LEN: usize = 256;

    pub fn new(segment_len: usize) -> Result<Self> {
        if segment_len < 2 || !segment_len.is_multiple_of(2) {
            return Err(Error::Config(format!("segment length must be even and at least 2, got {segment_len}")));
        }
        Ok(WelchConfig { segment_len })
    }

    pub fn hop(&self) -> usize {
        self.segment_len / 2
    }

    pub fn segment_count(&self, n_samples: usize) -> usize {
        if n_samples < self.segment_len {
            0
        } else {
            (n_samples - self.segment_len) / self.hop() + 1
        }
    }
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig { segment_len: Self::DEFAULT_SEGMENT_LEN }
    }
}

/// Periodic von Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len).map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos())).collect()
}

pub fn welch_cross_spectrum(panel: &TimeSeriesPanel, config: &WelchConfig) -> Result<SpectralMatrix> {
    let len = config.segment_len;
    let segments = config.segment_count(panel.n_samples());
    if segments == 0 {
        return Err(Error::PanelTooShort { n_samples: panel.n_samples(), required: len });
    }
    let n = panel.n_channels();
    let x = panel.demeaned();
    let window = hann_window(len);
    let u = window.iter().map(|w| w * w).sum::<f64>() / len as f64;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);

    let mut acc = vec![CMat::zeros(n, n); len];
    let mut spectra = vec![vec![C64::new(0.0, 0.0); len]; n];
    for seg in 0..segments {
        let start = seg * config.hop();
        for (ch, buf) in spectra.iter_mut().enumerate() {
            for (t, b) in buf.iter_mut().enumerate() {
                *b = C64::new(x[(ch, start + t)] * window[t], 0.0);
            }
            fft.process(buf);
        }
        for (k, m) in acc.iter_mut().enumerate() {
            for i in 0..n {
                for j in i..n {
                    m[(i, j)] += spectra[i][k] * spectra[j][k].conj();
                }
            }
        }
    }
    let norm = 1.0 / (segments as f64 * u * len as f64);
    for m in acc.iter_mut() {
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in i..n {
                m[(i, j)] *= norm;
                m[(j, i)] = m[(i, j)].conj();
            }
        }
    }
    SpectralMatrix::new(FrequencyGrid::new(len)?, acc)
}
