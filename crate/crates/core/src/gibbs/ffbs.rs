//! Forward-filter backward-sampling of the latent state path.
//!
//! Forward pass: prediction by the chain, update by the per-regime Gaussian
//! likelihood (log space, normalized per step), starting from the stationary
//! distribution. Backward pass: draw z_T from the last filtered law, then
//! z_t proportional to filtered_t(j) p_{j, z_{t+1}}. One call returns one
//! exact joint draw of the path given parameters and data.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{sample_index, ModelSpec, TransitionMatrix, VarianceInit, VarianceRecursion};
use crate::stability::stationary_distribution;
use crate::stats::{self, normal_logpdf};

/// Draw one latent state path for a spec against a series. Component
/// variances initialize at the series' sample variance, matching the
/// sampler's likelihood path.
pub fn ffbs_sample_states<R: Rng + ?Sized>(
    spec: &ModelSpec,
    y: &[f64],
    rng: &mut R,
) -> Result<Vec<u8>> {
    if y.is_empty() {
        return Err(Error::invalid("state sampling needs observations"));
    }
    let m = spec.m();
    if m == 1 {
        return Ok(vec![0; y.len()]);
    }
    let init = stats::sample_variance(y).max(1e-12);
    let mut recursion = VarianceRecursion::new(spec, VarianceInit::Value(init))?;
    let mut h: Vec<Vec<f64>> = vec![Vec::with_capacity(y.len()); m];
    for t in 0..y.len() {
        for (j, hj) in recursion.components().h.iter().enumerate() {
            h[j].push(*hj);
        }
        if t + 1 < y.len() {
            recursion.advance(y[t])?;
        }
    }
    let pi = stationary_distribution(&spec.transition)?;
    ffbs_with_paths(&h, y, &spec.transition, &pi, rng)
}

/// FFBS over precomputed per-regime variance paths `h[j][t]`.
pub(crate) fn ffbs_with_paths<R: Rng + ?Sized>(
    h: &[Vec<f64>],
    y: &[f64],
    transition: &TransitionMatrix,
    pi: &[f64],
    rng: &mut R,
) -> Result<Vec<u8>> {
    let m = h.len();
    let t_len = y.len();
    let mut filtered = vec![0.0; t_len * m];
    let mut pred = pi.to_vec();
    let mut log_w = vec![0.0; m];
    for t in 0..t_len {
        for j in 0..m {
            log_w[j] = if pred[j] > 0.0 {
                pred[j].ln() + normal_logpdf(y[t], h[j][t])
            } else {
                f64::NEG_INFINITY
            };
        }
        let mx = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !mx.is_finite() {
            return Err(Error::numeric(format!(
                "state filter: all regime likelihoods vanished at t = {t}"
            )));
        }
        let mut norm = 0.0;
        for j in 0..m {
            let v = (log_w[j] - mx).exp();
            filtered[t * m + j] = v;
            norm += v;
        }
        for j in 0..m {
            filtered[t * m + j] /= norm;
        }
        if t + 1 < t_len {
            for (j, p) in pred.iter_mut().enumerate() {
                *p = (0..m)
                    .map(|k| filtered[t * m + k] * transition.prob(k, j))
                    .sum();
            }
        }
    }

    let mut z = vec![0u8; t_len];
    let last = &filtered[(t_len - 1) * m..t_len * m];
    z[t_len - 1] = sample_index(last, rng.random::<f64>()) as u8;
    let mut weights = vec![0.0; m];
    for t in (0..t_len - 1).rev() {
        let next = z[t + 1] as usize;
        let mut norm = 0.0;
        for j in 0..m {
            weights[j] = filtered[t * m + j] * transition.prob(j, next);
            norm += weights[j];
        }
        if norm <= 0.0 {
            return Err(Error::numeric(format!(
                "state sampler: zero backward mass at t = {t}"
            )));
        }
        for w in &mut weights {
            *w /= norm;
        }
        z[t] = sample_index(&weights, rng.random::<f64>()) as u8;
    }
    Ok(z)
}
