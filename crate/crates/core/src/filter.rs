//! Regime-probability filtering and one-step-ahead variance forecasts.
//!
//! The filter carries psi_j^(t) = p(Z_t = j | info through t-1) and advances
//! it with the previous observation's per-regime likelihood:
//!
//! ```text
//! psi_j^(t) = sum_k f(y_{t-1} | h_{t-1,k}) psi_k^(t-1) p_kj
//!             / sum_k f(y_{t-1} | h_{t-1,k}) psi_k^(t-1)
//! ```
//!
//! Per-regime densities are evaluated in log space and combined with the
//! log-sum-exp pattern; the component variances are advanced once per step
//! and shared between the filter update and the forecast so the two stay
//! consistent. The one-step-ahead variance is the psi-mixture of the regime
//! variances and the predictive density is the matching normal mixture.

use crate::error::{Error, Result};
use crate::model::{ModelSpec, RegimeComponents, VarianceInit, VarianceRecursion};
use crate::stability::stationary_distribution;
use crate::stats::{self, log_sum_exp, normal_logpdf};

/// Snapshot of the filter at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub t: usize,
    /// p(Z_t = j | info through t-1), normalized.
    pub psi: Vec<f64>,
    /// Per-regime component values at t.
    pub components: RegimeComponents,
}

/// One-step-ahead forecast alongside the predictive density at the realized
/// observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastRecord {
    pub t: usize,
    pub variance: f64,
    pub density: f64,
}

/// psi-weighted mixture of regime variances.
#[inline]
pub fn mixture_variance(psi: &[f64], h: &[f64]) -> f64 {
    psi.iter().zip(h).map(|(p, v)| p * v).sum()
}

/// Log of the psi-weighted normal mixture density at `y`.
pub fn mixture_logdensity(psi: &[f64], h: &[f64], y: f64) -> f64 {
    let terms: Vec<f64> = psi
        .iter()
        .zip(h)
        .map(|(p, v)| p.ln() + normal_logpdf(y, *v))
        .collect();
    log_sum_exp(&terms)
}

/// Sequential regime filter over one return series.
#[derive(Debug, Clone)]
pub struct Filter<'a> {
    spec: &'a ModelSpec,
    recursion: VarianceRecursion<'a>,
    psi: Vec<f64>,
    t: usize,
}

impl<'a> Filter<'a> {
    /// Start the filter at the chain's stationary distribution. Component
    /// variances initialize at the presample window's sample variance, or at
    /// the per-regime unconditional level when no presample is given.
    pub fn init(spec: &'a ModelSpec, presample: &[f64]) -> Result<Self> {
        let psi = stationary_distribution(&spec.transition)?;
        let init = if presample.len() >= 2 {
            VarianceInit::Value(stats::sample_variance(presample))
        } else {
            VarianceInit::Stationary
        };
        Ok(Filter {
            spec,
            recursion: VarianceRecursion::new(spec, init)?,
            psi,
            t: 0,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn components(&self) -> &RegimeComponents {
        self.recursion.components()
    }

    /// Replace the regime probabilities (warm restarts, counterfactuals).
    pub fn set_psi(&mut self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.spec.m() {
            return Err(Error::invalid("psi length must equal the regime count"));
        }
        let sum: f64 = psi.iter().sum();
        if psi.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("psi must be a probability vector"));
        }
        self.psi = psi.iter().map(|p| p / sum).collect();
        Ok(())
    }

    pub fn state(&self) -> FilterState {
        FilterState {
            t: self.t,
            psi: self.psi.clone(),
            components: self.recursion.components().clone(),
        }
    }

    /// Advance one step given the return realized at the current time.
    pub fn step(&mut self, y_prev: f64) -> Result<()> {
        let m = self.spec.m();
        let h = &self.recursion.components().h;
        let weights: Vec<f64> = (0..m)
            .map(|k| self.psi[k].ln() + normal_logpdf(y_prev, h[k]))
            .collect();
        let mx = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !mx.is_finite() {
            return Err(Error::numeric(format!(
                "all regime likelihoods vanished at t = {}",
                self.t
            )));
        }
        let mut posterior: Vec<f64> = weights.iter().map(|w| (w - mx).exp()).collect();
        let norm: f64 = posterior.iter().sum();
        for p in &mut posterior {
            *p /= norm;
        }
        let mut next = vec![0.0; m];
        for (k, rho_k) in posterior.iter().enumerate() {
            for (j, n) in next.iter_mut().enumerate() {
                *n += rho_k * self.spec.transition.prob(k, j);
            }
        }
        let total: f64 = next.iter().sum();
        for n in &mut next {
            *n /= total;
        }
        self.psi = next;
        self.recursion.advance(y_prev)?;
        self.t += 1;
        Ok(())
    }

    /// V(y_t | info through t-1) under the current state.
    pub fn forecast_variance(&self) -> f64 {
        mixture_variance(&self.psi, &self.recursion.components().h)
    }

    pub fn predictive_logdensity(&self, y: f64) -> f64 {
        mixture_logdensity(&self.psi, &self.recursion.components().h, y)
    }

    pub fn predictive_density(&self, y: f64) -> f64 {
        self.predictive_logdensity(y).exp()
    }
}

/// Run the filter over a full series, producing the one-step-ahead forecast
/// and predictive density at each realized observation.
pub fn forecast_series(
    spec: &ModelSpec,
    returns: &[f64],
    presample: &[f64],
) -> Result<Vec<ForecastRecord>> {
    let mut filter = Filter::init(spec, presample)?;
    let mut out = Vec::with_capacity(returns.len());
    for (t, &y) in returns.iter().enumerate() {
        out.push(ForecastRecord {
            t,
            variance: filter.forecast_variance(),
            density: filter.predictive_density(y),
        });
        filter.step(y)?;
    }
    Ok(out)
}

/// Forecast-evaluation metrics: RMSE of the variance forecast against squared
/// returns, and the accumulated log predictive likelihood.
pub fn run_metrics(forecasts: &[ForecastRecord], realized: &[f64]) -> Result<(f64, f64)> {
    if forecasts.len() != realized.len() {
        return Err(Error::LengthMismatch(format!(
            "{} forecasts against {} observations",
            forecasts.len(),
            realized.len()
        )));
    }
    if forecasts.is_empty() {
        return Err(Error::invalid("metrics need at least one observation"));
    }
    let mut sq = 0.0;
    let mut llv = 0.0;
    for (f, &y) in forecasts.iter().zip(realized) {
        let e = f.variance - y * y;
        sq += e * e;
        llv += f.density.ln();
    }
    Ok(((sq / forecasts.len() as f64).sqrt(), llv))
}
