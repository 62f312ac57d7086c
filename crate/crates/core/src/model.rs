//! Model family definition and variance recursions.
//!
//! One regime evaluates three coupled recursions driven by the observed
//! return history:
//!
//! ```text
//! h1_t = a0 + a1 h1_{t-1} + a2 y_{t-1}^2                       (short memory)
//! h2_t = b0 + b1 h2_{t-1} + (b2 - b1 + g_1) y_{t-1}^2
//!        + sum_{i>=0} (g_{i+2} - b2 g_{i+1}) y_{t-2-i}^2       (long memory)
//! w_t  = exp(-gamma y_{t-1}) / (1 + exp(-gamma y_{t-1}))
//! h_t  = (1 - w_t) h1_t + w_t h2_t
//! ```
//!
//! With m Markov states each carrying its own parameter set this is the
//! switching smooth-transition family; m = 1 with a logistic weight is the
//! smooth-transition special case and m = 1 with a fixed weight is the
//! classic fixed-mix model. All recursions are observation-driven: the
//! per-regime variances depend on past returns only, never on the hidden
//! state path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fracdiff::FracDiffCoeffs;
use crate::stability;

/// The eight continuous parameters of one regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    /// Short-memory intercept (variance units), strictly positive.
    pub a0: f64,
    /// Short-memory variance persistence.
    pub a1: f64,
    /// Short-memory shock loading.
    pub a2: f64,
    /// Long-memory intercept (variance units), strictly positive.
    pub b0: f64,
    /// Long-memory variance persistence.
    pub b1: f64,
    /// Long-memory moving-average coefficient; 0 <= b2 <= b1.
    pub b2: f64,
    /// Memory exponent, b1 <= d < 1.
    pub d: f64,
    /// Smoothing parameter of the logistic weight (ignored in fixed-weight mode).
    pub gamma: f64,
}

impl RegimeParams {
    /// Checks positivity and the ordering chain 0 <= b2 <= b1 <= d < 1.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a0, self.a1, self.a2, self.b0, self.b1, self.b2, self.d, self.gamma,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("regime parameters must be finite"));
        }
        if self.a0 <= 0.0 || self.a1 <= 0.0 || self.a2 <= 0.0 {
            return Err(Error::invalid(format!(
                "a0, a1, a2 must be strictly positive, got ({}, {}, {})",
                self.a0, self.a1, self.a2
            )));
        }
        if self.b0 <= 0.0 {
            return Err(Error::invalid(format!(
                "b0 must be strictly positive, got {}",
                self.b0
            )));
        }
        if self.gamma <= 0.0 {
            return Err(Error::invalid(format!(
                "gamma must be strictly positive, got {}",
                self.gamma
            )));
        }
        if self.b2 < 0.0 || self.b2 > self.b1 || self.b1 > self.d || self.d >= 1.0 || self.d <= 0.0
        {
            return Err(Error::invalid(format!(
                "need 0 <= b2 <= b1 <= d < 1, got b2={}, b1={}, d={}",
                self.b2, self.b1, self.d
            )));
        }
        Ok(())
    }
}

/// Row-stochastic m x m transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    m: usize,
    p: Vec<f64>, // row-major
}

impl TransitionMatrix {
    pub fn new(m: usize, entries: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("state count m must be at least 1"));
        }
        if entries.len() != m * m {
            return Err(Error::invalid(format!(
                "expected {} transition entries, got {}",
                m * m,
                entries.len()
            )));
        }
        for (i, &e) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) || !e.is_finite() {
                return Err(Error::invalid(format!(
                    "transition entry {i} must lie in [0,1], got {e}"
                )));
            }
        }
        for r in 0..m {
            let sum: f64 = entries[r * m..(r + 1) * m].iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "transition row {r} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(TransitionMatrix { m, p: entries })
    }

    /// Degenerate single-state chain.
    pub fn single_state() -> Self {
        TransitionMatrix { m: 1, p: vec![1.0] }
    }

    /// Two-state chain from the diagonal probabilities.
    pub fn two_state(p11: f64, p22: f64) -> Result<Self> {
        TransitionMatrix::new(2, vec![p11, 1.0 - p11, 1.0 - p22, p22])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// p(Z_t = s | Z_{t-1} = r).
    #[inline]
    pub fn prob(&self, r: usize, s: usize) -> f64 {
        self.p[r * self.m + s]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.p[r * self.m..(r + 1) * self.m]
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    /// k-th matrix power, row-major. `power(0)` is the identity.
    pub fn power(&self, k: usize) -> Vec<f64> {
        let m = self.m;
        let mut acc: Vec<f64> = (0..m * m)
            .map(|i| if i / m == i % m { 1.0 } else { 0.0 })
            .collect();
        for _ in 0..k {
            acc = mat_mul(&acc, &self.p, m);
        }
        acc
    }

    /// Primitivity (irreducible + aperiodic) via Wielandt's bound: the chain
    /// is primitive iff P^((m-1)^2 + 1) is entrywise positive.
    pub fn is_primitive(&self) -> bool {
        let m = self.m;
        let e = (m - 1) * (m - 1) + 1;
        self.power(e).iter().all(|&v| v > 0.0)
    }
}

pub(crate) fn mat_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    out
}

/// How the short- and long-memory components are mixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightMode {
    /// Observation-driven logistic weight per regime.
    Logistic,
    /// Constant weight in the unit interval; only admitted for m = 1
    /// (classic fixed-mix).
    Fixed(f64),
}

/// Complete model specification: regimes, transition chain, weight mode and
/// the truncation length of the fractional-differencing expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub regimes: Vec<RegimeParams>,
    pub transition: TransitionMatrix,
    pub weight_mode: WeightMode,
    pub trunc_k: usize,
}

impl ModelSpec {
    pub fn new(
        regimes: Vec<RegimeParams>,
        transition: TransitionMatrix,
        weight_mode: WeightMode,
        trunc_k: usize,
    ) -> Result<Self> {
        if regimes.is_empty() {
            return Err(Error::invalid("at least one regime is required"));
        }
        if regimes.len() != transition.m() {
            return Err(Error::invalid(format!(
                "{} regimes but transition matrix has m = {}",
                regimes.len(),
                transition.m()
            )));
        }
        for (j, r) in regimes.iter().enumerate() {
            r.validate()
                .map_err(|e| Error::invalid(format!("regime {}: {e}", j + 1)))?;
        }
        // identification: regimes ordered by ascending short-memory intercept
        for w in regimes.windows(2) {
            if w[1].a0 < w[0].a0 {
                return Err(Error::invalid(
                    "regimes must be ordered by ascending a0 (identification)",
                ));
            }
        }
        if let WeightMode::Fixed(w) = weight_mode {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!(
                    "fixed weight must lie in [0,1], got {w}"
                )));
            }
            if regimes.len() != 1 {
                return Err(Error::invalid(
                    "fixed-weight mode is only admitted with a single regime",
                ));
            }
        }
        if trunc_k < 1 {
            return Err(Error::invalid("truncation length must be at least 1"));
        }
        Ok(ModelSpec {
            regimes,
            transition,
            weight_mode,
            trunc_k,
        })
    }

    pub fn m(&self) -> usize {
        self.regimes.len()
    }

    /// Fractional-differencing coefficients per regime at this spec's
    /// truncation length.
    pub fn coeffs(&self) -> Result<Vec<FracDiffCoeffs>> {
        self.regimes
            .iter()
            .map(|r| FracDiffCoeffs::compute(r.d, self.trunc_k))
            .collect()
    }

    /// Mixing weight of regime `j` given the previous return.
    #[inline]
    pub fn weight_at(&self, j: usize, y_prev: f64) -> f64 {
        match self.weight_mode {
            WeightMode::Logistic => logistic_weight(self.regimes[j].gamma, y_prev),
            WeightMode::Fixed(w) => w,
        }
    }
}

/// Logistic weight exp(-gamma y)/(1 + exp(-gamma y)), evaluated overflow-safe.
///
/// Strictly inside (0,1) and monotone decreasing in `y_prev`: large negative
/// returns push the mix toward the long-memory component.
#[inline]
pub fn logistic_weight(gamma: f64, y_prev: f64) -> f64 {
    let x = -gamma * y_prev;
    if x <= 0.0 {
        let e = x.exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// One step of the short-memory recursion: a0 + a1 h1_prev + a2 y_prev^2.
#[inline]
pub fn garch_step(p: &RegimeParams, h1_prev: f64, y_prev_sq: f64) -> f64 {
    p.a0 + p.a1 * h1_prev + p.a2 * y_prev_sq
}

/// One step of the long-memory recursion over a squared-return history given
/// newest-first (`history[0]` is y_{t-1}^2). Lags beyond the available
/// history or beyond the truncation length contribute zero.
///
/// Errors if the expanded lag coefficients are not all non-negative, which
/// signals an inadmissible (b2, d) combination to the caller.
pub fn figarch_step(
    p: &RegimeParams,
    g: &FracDiffCoeffs,
    h2_prev: f64,
    y_sq_history: &[f64],
) -> Result<f64> {
    figarch_core(p, g, h2_prev, y_sq_history.iter().copied())
}

/// Checks positivity of every coefficient in the expanded lag polynomial.
///
/// The leading coefficient is b2 - b1 + g_1; the series coefficients are
/// g_{i+2} - b2 g_{i+1}, whose sign is governed by the ratio
/// g_{i+2}/g_{i+1} = (i+1-d)/(i+2), increasing in i, so the i = 0 term is
/// the binding one.
pub fn figarch_coeffs_admissible(p: &RegimeParams, g: &FracDiffCoeffs) -> Result<()> {
    let lead = p.b2 - p.b1 + g.g(1);
    if lead < 0.0 {
        return Err(Error::invalid(format!(
            "negative shock coefficient b2 - b1 + g1 = {lead}"
        )));
    }
    if g.len() >= 2 && g.g(2) - p.b2 * g.g(1) < 0.0 {
        return Err(Error::invalid(format!(
            "negative expansion coefficient at lag 2: b2 = {} exceeds (1-d)/2 = {}",
            p.b2,
            (1.0 - p.d) / 2.0
        )));
    }
    Ok(())
}

pub(crate) fn figarch_core<I>(
    p: &RegimeParams,
    g: &FracDiffCoeffs,
    h2_prev: f64,
    mut newest_first: I,
) -> Result<f64>
where
    I: Iterator<Item = f64>,
{
    figarch_coeffs_admissible(p, g)?;
    let mut acc = p.b0 + p.b1 * h2_prev;
    if let Some(y1) = newest_first.next() {
        acc += (p.b2 - p.b1 + g.g(1)) * y1;
    }
    let gs = g.as_slice();
    let k = gs.len();
    // series term i pairs g_{i+2} with y^2_{t-2-i}; truncation keeps i+2 <= K
    for (i, y) in newest_first.enumerate() {
        if i + 2 > k {
            break;
        }
        acc += (gs[i + 1] - p.b2 * gs[i]) * y;
    }
    Ok(acc)
}

/// Convex combination (1-w) h1 + w h2.
#[inline]
pub fn regime_variance(h1: f64, h2: f64, w: f64) -> f64 {
    (1.0 - w) * h1 + w * h2
}

/// Per-regime component values at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeComponents {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub w: Vec<f64>,
    pub h: Vec<f64>,
}

impl RegimeComponents {
    pub fn m(&self) -> usize {
        self.h.len()
    }
}

/// Full component history, one row per time step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariancePath {
    pub rows: Vec<RegimeComponents>,
}

/// Choice of the t = 0 component-variance level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceInit {
    /// Per regime: a0/(1 - a1 - a2) when a1 + a2 < 1, else 1.0.
    Stationary,
    /// A fixed positive level, e.g. the sample variance of a presample window.
    Value(f64),
}

impl VarianceInit {
    fn resolve(&self, p: &RegimeParams) -> Result<f64> {
        match *self {
            VarianceInit::Stationary => {
                let persist = p.a1 + p.a2;
                Ok(if persist < 1.0 {
                    p.a0 / (1.0 - persist)
                } else {
                    1.0
                })
            }
            VarianceInit::Value(v) => {
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::invalid(format!(
                        "initial variance must be positive and finite, got {v}"
                    )))
                }
            }
        }
    }
}

/// Advances the per-regime component recursions over an observed return
/// sequence. Owns the squared-return history; the coefficients are computed
/// once at construction and shared read-only afterwards.
#[derive(Debug, Clone)]
pub struct VarianceRecursion<'a> {
    spec: &'a ModelSpec,
    coeffs: Vec<FracDiffCoeffs>,
    y_sq: Vec<f64>,
    current: RegimeComponents,
    t: usize,
}

impl<'a> VarianceRecursion<'a> {
    /// State at t = 0: h1 = h2 = the initialization level, and the weight
    /// evaluated at a zero previous return (1/2 in logistic mode).
    pub fn new(spec: &'a ModelSpec, init: VarianceInit) -> Result<Self> {
        let coeffs = spec.coeffs()?;
        for (p, g) in spec.regimes.iter().zip(&coeffs) {
            figarch_coeffs_admissible(p, g)?;
        }
        let m = spec.m();
        let mut h1 = Vec::with_capacity(m);
        let mut h2 = Vec::with_capacity(m);
        let mut w = Vec::with_capacity(m);
        let mut h = Vec::with_capacity(m);
        for (j, p) in spec.regimes.iter().enumerate() {
            let v0 = init.resolve(p)?;
            let wj = spec.weight_at(j, 0.0);
            h1.push(v0);
            h2.push(v0);
            w.push(wj);
            h.push(regime_variance(v0, v0, wj));
        }
        Ok(VarianceRecursion {
            spec,
            coeffs,
            y_sq: Vec::new(),
            current: RegimeComponents { h1, h2, w, h },
            t: 0,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn components(&self) -> &RegimeComponents {
        &self.current
    }

    /// Advance to t+1 given the return realized at the current step.
    pub fn advance(&mut self, y_prev: f64) -> Result<&RegimeComponents> {
        let y_prev_sq = y_prev * y_prev;
        self.y_sq.push(y_prev_sq);
        let mut next = self.current.clone();
        for (j, p) in self.spec.regimes.iter().enumerate() {
            let w = self.spec.weight_at(j, y_prev);
            let h1 = garch_step(p, self.current.h1[j], y_prev_sq);
            let h2 = figarch_core(
                p,
                &self.coeffs[j],
                self.current.h2[j],
                self.y_sq.iter().rev().copied(),
            )?;
            next.h1[j] = h1;
            next.h2[j] = h2;
            next.w[j] = w;
            next.h[j] = regime_variance(h1, h2, w);
        }
        self.current = next;
        self.t += 1;
        Ok(&self.current)
    }
}

/// Output of a seeded simulation run, burn-in already removed.
#[derive(Debug, Clone)]
pub struct SimulatedPath {
    pub returns: Vec<f64>,
    pub states: Vec<usize>,
    pub path: VariancePath,
}

/// Draw `u` against a cumulative scan of `probs`.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Simulate `total` observations and discard the first `burn_in`.
///
/// The hidden chain starts from its stationary distribution, innovations are
/// i.i.d. standard normal drawn independently of the chain, and the output is
/// a deterministic function of the seed.
pub fn simulate_path(
    spec: &ModelSpec,
    total: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SimulatedPath> {
    if total < 1 {
        return Err(Error::invalid("simulation length must be at least 1"));
    }
    if burn_in >= total {
        return Err(Error::invalid(format!(
            "burn-in {burn_in} must be smaller than the simulation length {total}"
        )));
    }
    let pi = stability::stationary_distribution(&spec.transition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recursion = VarianceRecursion::new(spec, VarianceInit::Stationary)?;

    let mut returns = Vec::with_capacity(total);
    let mut states = Vec::with_capacity(total);
    let mut rows = Vec::with_capacity(total);

    let mut z = sample_index(&pi, rng.random::<f64>());
    for t in 0..total {
        let comps = recursion.components().clone();
        let eps: f64 = rng.sample(StandardNormal);
        let y = comps.h[z].sqrt() * eps;
        returns.push(y);
        states.push(z);
        rows.push(comps);
        if t + 1 < total {
            z = sample_index(spec.transition.row(z), rng.random::<f64>());
            recursion.advance(y)?;
        }
    }

    Ok(SimulatedPath {
        returns: returns.split_off(burn_in),
        states: states.split_off(burn_in),
        path: VariancePath {
            rows: rows.split_off(burn_in),
        },
    })
}
