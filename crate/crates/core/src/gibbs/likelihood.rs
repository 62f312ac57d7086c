//! Cached likelihood evaluation for the sampler.
//!
//! Given a fixed return series, the long-memory convolution splits into two
//! d-dependent series
//!
//! ```text
//! A[t] = sum_i g_{i+2} y^2_{t-2-i},   B[t] = sum_i g_{i+1} y^2_{t-2-i}
//! ```
//!
//! so that the recursion's moving-average term is A[t] - b2 B[t]. A and B
//! depend on (d, K) and the data only; they are rebuilt when a regime's d
//! changes and reused across every other parameter sweep, which turns one
//! kernel evaluation into an O(T) pass.

use crate::error::{Error, Result};
use crate::fracdiff::FracDiffCoeffs;
use crate::model::logistic_weight;
use crate::stats::{self, normal_logpdf};

/// The estimation sample with its squared returns and initialization level.
#[derive(Debug, Clone)]
pub(crate) struct SeriesData {
    pub y: Vec<f64>,
    pub y_sq: Vec<f64>,
    /// Component variances at t = 0: the sample variance of the series.
    pub init_var: f64,
}

impl SeriesData {
    pub fn new(y: &[f64]) -> Self {
        let y_sq: Vec<f64> = y.iter().map(|v| v * v).collect();
        SeriesData {
            init_var: stats::sample_variance(y).max(1e-12),
            y: y.to_vec(),
            y_sq,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }
}

/// One regime's eight parameter slots inside the flat theta vector.
pub(crate) const SLOTS: usize = 8;
pub(crate) const SLOT_A0: usize = 0;
pub(crate) const SLOT_A1: usize = 1;
pub(crate) const SLOT_A2: usize = 2;
pub(crate) const SLOT_B0: usize = 3;
pub(crate) const SLOT_B1: usize = 4;
pub(crate) const SLOT_B2: usize = 5;
pub(crate) const SLOT_D: usize = 6;
pub(crate) const SLOT_SHAPE: usize = 7; // gamma, or the fixed weight

/// d-dependent caches for one regime.
#[derive(Debug, Clone)]
pub(crate) struct RegimeWorkspace {
    pub coeffs: FracDiffCoeffs,
    pub conv_a: Vec<f64>,
    pub conv_b: Vec<f64>,
}

impl RegimeWorkspace {
    pub fn new(d: f64, k: usize, data: &SeriesData) -> Result<Self> {
        let mut ws = RegimeWorkspace {
            coeffs: FracDiffCoeffs::compute(d, k)?,
            conv_a: Vec::new(),
            conv_b: Vec::new(),
        };
        fill_convolutions(&ws.coeffs, data, &mut ws.conv_a, &mut ws.conv_b);
        Ok(ws)
    }

    /// Swap in a new memory exponent, reusing the convolution buffers.
    pub fn rebuild(&mut self, d: f64, k: usize, data: &SeriesData) -> Result<()> {
        self.coeffs = FracDiffCoeffs::compute(d, k)?;
        fill_convolutions(&self.coeffs, data, &mut self.conv_a, &mut self.conv_b);
        Ok(())
    }
}

fn fill_convolutions(
    coeffs: &FracDiffCoeffs,
    data: &SeriesData,
    conv_a: &mut Vec<f64>,
    conv_b: &mut Vec<f64>,
) {
    let t_len = data.len();
    let g = coeffs.as_slice();
    let k = g.len();
    conv_a.clear();
    conv_a.resize(t_len, 0.0);
    conv_b.clear();
    conv_b.resize(t_len, 0.0);
    for t in 2..t_len {
        let max_i = (t - 2).min(k.saturating_sub(2));
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..=max_i {
            let y2 = data.y_sq[t - 2 - i];
            a += g[i + 1] * y2; // g_{i+2}
            b += g[i] * y2; // g_{i+1}
        }
        conv_a[t] = a;
        conv_b[t] = b;
    }
}

/// Evaluate the regime's mixed-variance path into `out`.
///
/// `theta_j` holds the regime's eight slots; `fixed_w` switches the mix to a
/// constant weight. Errors on an inadmissible coefficient combination.
pub(crate) fn regime_variance_path(
    theta_j: &[f64],
    ws: &RegimeWorkspace,
    data: &SeriesData,
    fixed_w: bool,
    out: &mut Vec<f64>,
) -> Result<()> {
    let (a0, a1, a2) = (theta_j[SLOT_A0], theta_j[SLOT_A1], theta_j[SLOT_A2]);
    let (b0, b1, b2) = (theta_j[SLOT_B0], theta_j[SLOT_B1], theta_j[SLOT_B2]);
    let shape = theta_j[SLOT_SHAPE];
    let g1 = ws.coeffs.g(1);
    if b2 - b1 + g1 < 0.0 {
        return Err(Error::invalid(format!(
            "negative shock coefficient b2 - b1 + g1 = {}",
            b2 - b1 + g1
        )));
    }
    if ws.coeffs.len() >= 2 && ws.coeffs.g(2) - b2 * g1 < 0.0 {
        return Err(Error::invalid("negative expansion coefficient at lag 2"));
    }
    let t_len = data.len();
    out.clear();
    out.reserve(t_len);
    let mut h1 = data.init_var;
    let mut h2 = data.init_var;
    out.push(data.init_var);
    for t in 1..t_len {
        let y_prev = data.y[t - 1];
        let y2_prev = data.y_sq[t - 1];
        h1 = a0 + a1 * h1 + a2 * y2_prev;
        h2 = b0 + b1 * h2 + (b2 - b1 + g1) * y2_prev + ws.conv_a[t] - b2 * ws.conv_b[t];
        let w = if fixed_w {
            shape
        } else {
            logistic_weight(shape, y_prev)
        };
        let h = (1.0 - w) * h1 + w * h2;
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::numeric(format!(
                "variance path left the positive domain at t = {t}"
            )));
        }
        out.push(h);
    }
    Ok(())
}

/// Gaussian log-likelihood of the observations assigned to regime `j` under
/// the given variance path. `states` of None sums every observation.
pub(crate) fn regime_loglik(h: &[f64], data: &SeriesData, states: Option<&[u8]>, j: u8) -> f64 {
    match states {
        None => data
            .y
            .iter()
            .zip(h)
            .map(|(y, v)| normal_logpdf(*y, *v))
            .sum(),
        Some(z) => z
            .iter()
            .zip(data.y.iter().zip(h))
            .filter(|(zt, _)| **zt == j)
            .map(|(_, (y, v))| normal_logpdf(*y, *v))
            .sum(),
    }
}
