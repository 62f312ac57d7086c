//! Three-block Gibbs sampler: latent state paths by forward-filter
//! backward-sampling, transition probabilities by conjugate Beta draws, and
//! the continuous parameters by per-parameter grid sweeps with numeric
//! inverse-CDF draws.
//!
//! One iteration draws (i) the state path given parameters, (ii) the
//! transition probabilities given the path, and (iii) every free continuous
//! parameter in turn from its full conditional, then reorders the regimes by
//! ascending short-memory intercept to pin the labeling. A chain is strictly
//! sequential; independent chains run in parallel, each owning its RNG.

mod ffbs;
mod griddy;
mod likelihood;

pub use ffbs::ffbs_sample_states;
pub use griddy::griddy_inverse_cdf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, RegimeParams, TransitionMatrix, WeightMode};
use likelihood::{
    regime_loglik, regime_variance_path, RegimeWorkspace, SeriesData, SLOTS, SLOT_A0, SLOT_B1,
    SLOT_B2, SLOT_D, SLOT_SHAPE,
};

/// Model family selector for estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFamily {
    /// Logistic-weight switching model with `m` regimes (m = 1 is the plain
    /// smooth-transition model).
    Logistic { m: usize },
    /// Single-regime fixed-weight mix; the weight is estimated in the slot
    /// otherwise occupied by the smoothing parameter.
    FixedWeight,
}

impl ModelFamily {
    pub fn m(&self) -> usize {
        match self {
            ModelFamily::Logistic { m } => *m,
            ModelFamily::FixedWeight => 1,
        }
    }

    fn fixed_weight(&self) -> bool {
        matches!(self, ModelFamily::FixedWeight)
    }
}

/// Closed interval of a uniform prior; lo == hi pins the parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub lo: f64,
    pub hi: f64,
}

impl ParamBounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        ParamBounds { lo, hi }
    }

    pub fn fixed(v: f64) -> Self {
        ParamBounds { lo: v, hi: v }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::invalid(format!(
                "prior bounds for {name} must be finite with lo <= hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Uniform prior bounds per continuous parameter (shared across regimes) and
/// Beta hyperparameters for the transition probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub a0: ParamBounds,
    pub a1: ParamBounds,
    pub a2: ParamBounds,
    pub b0: ParamBounds,
    pub b1: ParamBounds,
    pub b2: ParamBounds,
    pub d: ParamBounds,
    pub gamma: ParamBounds,
    /// Prior for the fixed weight (fixed-weight family only).
    pub weight: ParamBounds,
    /// (c11, c12): Beta prior of the stay probability of state 1.
    pub p11: (f64, f64),
    /// (c22, c21): Beta prior of the stay probability of state 2.
    pub p22: (f64, f64),
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            a0: ParamBounds::new(1e-3, 5.0),
            a1: ParamBounds::new(1e-3, 0.999),
            a2: ParamBounds::new(1e-3, 0.999),
            b0: ParamBounds::new(1e-3, 5.0),
            b1: ParamBounds::new(0.0, 0.999),
            // moving-average coefficient pinned at zero unless re-enabled
            b2: ParamBounds::fixed(0.0),
            d: ParamBounds::new(0.01, 0.99),
            gamma: ParamBounds::new(0.01, 10.0),
            weight: ParamBounds::new(0.0, 1.0),
            p11: (1.0, 1.0),
            p22: (1.0, 1.0),
        }
    }
}

impl PriorSpec {
    fn validate(&self) -> Result<()> {
        self.a0.validate("a0")?;
        self.a1.validate("a1")?;
        self.a2.validate("a2")?;
        self.b0.validate("b0")?;
        self.b1.validate("b1")?;
        self.b2.validate("b2")?;
        self.d.validate("d")?;
        self.gamma.validate("gamma")?;
        self.weight.validate("weight")?;
        for (name, (x, y)) in [("p11", self.p11), ("p22", self.p22)] {
            if !(x > 0.0 && y > 0.0) {
                return Err(Error::invalid(format!(
                    "Beta hyperparameters for {name} must be positive, got ({x}, {y})"
                )));
            }
        }
        if self.d.lo <= 0.0 || self.d.hi >= 1.0 {
            return Err(Error::invalid("d prior must lie strictly inside (0, 1)"));
        }
        if self.weight.lo < 0.0 || self.weight.hi > 1.0 {
            return Err(Error::invalid("weight prior must lie inside [0, 1]"));
        }
        Ok(())
    }

    fn slot(&self, slot: usize, family: ModelFamily) -> ParamBounds {
        match slot {
            SLOT_A0 => self.a0,
            1 => self.a1,
            2 => self.a2,
            3 => self.b0,
            SLOT_B1 => self.b1,
            SLOT_B2 => self.b2,
            SLOT_D => self.d,
            SLOT_SHAPE => {
                if family.fixed_weight() {
                    self.weight
                } else {
                    self.gamma
                }
            }
            _ => unreachable!("slot index"),
        }
    }
}

/// Sampler run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    pub iterations: usize,
    pub warmup: usize,
    /// Grid points per parameter sweep.
    pub grid_points: usize,
    pub seed: u64,
    pub chains: usize,
    /// Retain the latent state path of every kept iteration.
    pub store_states: bool,
    /// Truncation length of the fractional-differencing expansion.
    pub trunc_k: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            iterations: 10_000,
            warmup: 5_000,
            grid_points: 33,
            seed: 0,
            chains: 1,
            store_states: false,
            trunc_k: 1000,
        }
    }
}

impl GibbsConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.warmup >= self.iterations {
            return Err(Error::invalid(format!(
                "warmup {} must be below iterations {}",
                self.warmup, self.iterations
            )));
        }
        if self.grid_points < 3 {
            return Err(Error::invalid("grid needs at least 3 points"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("at least one chain is required"));
        }
        if self.trunc_k < 2 {
            return Err(Error::invalid("truncation length must be at least 2"));
        }
        Ok(())
    }
}

/// Posterior mean and spread of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub std_dev: f64,
}

/// Stored chain output: retained draws, optional state paths, summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub family: ModelFamily,
    pub trunc_k: usize,
    /// Column names of `theta`, regime-major.
    pub param_names: Vec<String>,
    /// Retained iterations x parameter count.
    pub theta: Vec<Vec<f64>>,
    /// Retained (p11, p22) draws; empty for single-regime fits.
    pub eta: Vec<[f64; 2]>,
    /// Retained latent state paths when requested (two-regime fits).
    pub states: Vec<Vec<u8>>,
    /// Per-parameter posterior summaries; transition probabilities last.
    pub summaries: Vec<ParamSummary>,
}

impl PosteriorDraws {
    /// Column-wise posterior means of the continuous parameters.
    pub fn theta_mean(&self) -> Vec<f64> {
        let n = self.theta.len() as f64;
        let cols = self.param_names.len();
        let mut out = vec![0.0; cols];
        for row in &self.theta {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|v| *v /= n);
        out
    }

    /// Posterior means of (p11, p22); None for single-regime fits.
    pub fn eta_mean(&self) -> Option<[f64; 2]> {
        if self.eta.is_empty() {
            return None;
        }
        let n = self.eta.len() as f64;
        let mut out = [0.0; 2];
        for e in &self.eta {
            out[0] += e[0];
            out[1] += e[1];
        }
        Some([out[0] / n, out[1] / n])
    }

    /// Model specification at the posterior means. Each retained draw
    /// satisfies the parameter chain and the label ordering, so the means do
    /// as well.
    pub fn mean_spec(&self) -> Result<ModelSpec> {
        let m = self.family.m();
        let means = self.theta_mean();
        let regimes: Vec<RegimeParams> = (0..m)
            .map(|j| {
                let s = &means[j * SLOTS..(j + 1) * SLOTS];
                RegimeParams {
                    a0: s[0],
                    a1: s[1],
                    a2: s[2],
                    b0: s[3],
                    b1: s[4],
                    b2: s[5],
                    d: s[6],
                    gamma: if self.family.fixed_weight() {
                        1.0
                    } else {
                        s[7]
                    },
                }
            })
            .collect();
        let transition = match self.eta_mean() {
            Some([p11, p22]) => TransitionMatrix::two_state(p11, p22)?,
            None => TransitionMatrix::single_state(),
        };
        let weight_mode = if self.family.fixed_weight() {
            WeightMode::Fixed(means[SLOT_SHAPE])
        } else {
            WeightMode::Logistic
        };
        ModelSpec::new(regimes, transition, weight_mode, self.trunc_k)
    }
}

/// Conjugate draw of the two stay probabilities given a state path: count
/// transitions and draw each stay probability from its Beta posterior. An
/// empty path falls back to the prior.
pub fn sample_transition<R: Rng + ?Sized>(
    prior: &PriorSpec,
    z: &[u8],
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut n = [[0usize; 2]; 2];
    for w in z.windows(2) {
        n[w[0] as usize][w[1] as usize] += 1;
    }
    let p11 = Beta::new(prior.p11.0 + n[0][0] as f64, prior.p11.1 + n[0][1] as f64)
        .map_err(|e| Error::numeric(format!("Beta draw for p11: {e}")))?
        .sample(rng);
    let p22 = Beta::new(prior.p22.0 + n[1][1] as f64, prior.p22.1 + n[1][0] as f64)
        .map_err(|e| Error::numeric(format!("Beta draw for p22: {e}")))?
        .sample(rng);
    Ok((p11, p22))
}

/// Support of one parameter's sweep given the rest of its regime: the prior
/// interval intersected with the coefficient chain b2 <= b1 <= d and the
/// positivity ceiling b2 <= (1-d)/2 (equivalently d <= 1 - 2 b2).
fn clipped_bounds(
    prior: &PriorSpec,
    family: ModelFamily,
    theta_j: &[f64],
    slot: usize,
) -> (f64, f64) {
    let b = prior.slot(slot, family);
    match slot {
        SLOT_B1 => (b.lo.max(theta_j[SLOT_B2]), b.hi.min(theta_j[SLOT_D])),
        SLOT_B2 => (
            b.lo,
            b.hi.min(theta_j[SLOT_B1])
                .min((1.0 - theta_j[SLOT_D]) / 2.0),
        ),
        SLOT_D => (
            b.lo.max(theta_j[SLOT_B1]),
            b.hi.min(1.0 - 2.0 * theta_j[SLOT_B2]),
        ),
        _ => (b.lo, b.hi),
    }
}

struct Chain<'d> {
    family: ModelFamily,
    prior: &'d PriorSpec,
    cfg: GibbsConfig,
    data: &'d SeriesData,
    theta: Vec<f64>,
    eta: [f64; 2],
    z: Vec<u8>,
    workspaces: Vec<RegimeWorkspace>,
    scratch_ws: RegimeWorkspace,
    path_buf: Vec<f64>,
    kernel_buf: Vec<f64>,
    h_paths: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl<'d> Chain<'d> {
    fn new(
        family: ModelFamily,
        prior: &'d PriorSpec,
        cfg: GibbsConfig,
        data: &'d SeriesData,
        seed: u64,
    ) -> Result<Self> {
        let m = family.m();
        // data-driven start: regime intercepts spread around the sample
        // variance (low state at half, high state at twice), moderate
        // persistence, gentle smoothing, persistent chain. Midpoint starts
        // leave switching chains in the spurious outlier-state mode.
        let clamp = |v: f64, b: ParamBounds| v.clamp(b.lo, b.hi);
        let mut theta = vec![0.0; m * SLOTS];
        for j in 0..m {
            let s = &mut theta[j * SLOTS..(j + 1) * SLOTS];
            let level = if m == 1 {
                1.0
            } else {
                0.5 + 1.5 * j as f64 / (m - 1) as f64
            };
            s[SLOT_D] = clamp(0.5, prior.d);
            s[SLOT_B2] = if prior.b2.is_fixed() {
                prior.b2.lo
            } else {
                clamp(0.0, prior.b2).min((1.0 - s[SLOT_D]) / 2.0)
            };
            s[SLOT_B1] = clamp(0.1, prior.b1).clamp(s[SLOT_B2], s[SLOT_D]);
            s[1] = clamp(0.2, prior.a1);
            s[2] = clamp(0.2, prior.a2);
            s[SLOT_A0] = clamp(level * data.init_var * (1.0 - s[1] - s[2]), prior.a0);
            s[3] = clamp(s[SLOT_A0], prior.b0);
            s[SLOT_SHAPE] = if family.fixed_weight() {
                clamp(0.5, prior.weight)
            } else {
                clamp(1.0, prior.gamma)
            };
        }
        let eta = [0.9, 0.9];
        let workspaces: Vec<RegimeWorkspace> = (0..m)
            .map(|j| RegimeWorkspace::new(theta[j * SLOTS + SLOT_D], cfg.trunc_k, data))
            .collect::<Result<_>>()?;
        let scratch_ws = workspaces[0].clone();
        Ok(Chain {
            family,
            prior,
            cfg,
            data,
            theta,
            eta,
            z: vec![0; data.len()],
            workspaces,
            scratch_ws,
            path_buf: Vec::new(),
            kernel_buf: Vec::new(),
            h_paths: vec![Vec::new(); m],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn transition(&self) -> Result<TransitionMatrix> {
        if self.family.m() == 2 {
            TransitionMatrix::two_state(self.eta[0], self.eta[1])
        } else {
            Ok(TransitionMatrix::single_state())
        }
    }

    fn draw_states(&mut self) -> Result<()> {
        let m = self.family.m();
        if m == 1 {
            return Ok(());
        }
        for j in 0..m {
            let theta_j = self.theta[j * SLOTS..(j + 1) * SLOTS].to_vec();
            regime_variance_path(
                &theta_j,
                &self.workspaces[j],
                self.data,
                self.family.fixed_weight(),
                &mut self.path_buf,
            )?;
            std::mem::swap(&mut self.h_paths[j], &mut self.path_buf);
        }
        let transition = self.transition()?;
        let pi = crate::stability::stationary_distribution(&transition)?;
        self.z =
            ffbs::ffbs_with_paths(&self.h_paths, &self.data.y, &transition, &pi, &mut self.rng)?;
        Ok(())
    }

    fn sweep_all(&mut self) -> Result<()> {
        let m = self.family.m();
        for j in 0..m {
            for slot in 0..SLOTS {
                self.sweep_one(j, slot).map_err(|e| {
                    Error::numeric(format!(
                        "regime {} parameter {}: {e}",
                        j + 1,
                        param_names(self.family)[j * SLOTS + slot]
                    ))
                })?;
            }
        }
        Ok(())
    }

    fn sweep_one(&mut self, j: usize, slot: usize) -> Result<()> {
        let bounds = self.prior.slot(slot, self.family);
        let theta_j: Vec<f64> = self.theta[j * SLOTS..(j + 1) * SLOTS].to_vec();
        let (lo, hi) = clipped_bounds(self.prior, self.family, &theta_j, slot);
        if bounds.is_fixed() || hi - lo <= 0.0 {
            self.theta[j * SLOTS + slot] = lo.min(bounds.hi).max(bounds.lo);
            return Ok(());
        }
        let grid = griddy::uniform_grid(lo, hi, self.cfg.grid_points);
        let states: Option<&[u8]> = if self.family.m() > 1 {
            Some(&self.z)
        } else {
            None
        };
        self.kernel_buf.clear();
        let mut candidate = theta_j.clone();
        for &point in &grid {
            candidate[slot] = point;
            let ws = if slot == SLOT_D {
                self.scratch_ws
                    .rebuild(point, self.cfg.trunc_k, self.data)?;
                &self.scratch_ws
            } else {
                &self.workspaces[j]
            };
            let lk = match regime_variance_path(
                &candidate,
                ws,
                self.data,
                self.family.fixed_weight(),
                &mut self.path_buf,
            ) {
                Ok(()) => regime_loglik(&self.path_buf, self.data, states, j as u8),
                Err(_) => f64::NEG_INFINITY,
            };
            self.kernel_buf.push(lk);
        }
        let u = self.rng.random::<f64>();
        let drawn = griddy_inverse_cdf(&grid, &self.kernel_buf, u)?;
        self.theta[j * SLOTS + slot] = drawn;
        if slot == SLOT_D {
            self.workspaces[j].rebuild(drawn, self.cfg.trunc_k, self.data)?;
        }
        Ok(())
    }

    /// Reorder regimes by ascending a0 and relabel everything that carries
    /// the state identity.
    fn reorder(&mut self) {
        if self.family.m() != 2 || self.theta[SLOTS + SLOT_A0] >= self.theta[SLOT_A0] {
            return;
        }
        for slot in 0..SLOTS {
            self.theta.swap(slot, SLOTS + slot);
        }
        self.workspaces.swap(0, 1);
        self.eta.swap(0, 1);
        for z in &mut self.z {
            *z = 1 - *z;
        }
    }

    fn run(&mut self) -> Result<PosteriorDraws> {
        let m = self.family.m();
        let retained = self.cfg.iterations - self.cfg.warmup;
        let mut theta_draws = Vec::with_capacity(retained);
        let mut eta_draws = Vec::with_capacity(if m == 2 { retained } else { 0 });
        let mut state_draws = Vec::new();
        for r in 0..self.cfg.iterations {
            self.draw_states()
                .map_err(|e| Error::numeric(format!("iteration {r}, state block: {e}")))?;
            if m == 2 {
                let (p11, p22) = sample_transition(self.prior, &self.z, &mut self.rng)?;
                self.eta = [p11, p22];
            }
            self.sweep_all()
                .map_err(|e| Error::numeric(format!("iteration {r}: {e}")))?;
            self.reorder();
            if r >= self.cfg.warmup {
                theta_draws.push(self.theta.clone());
                if m == 2 {
                    eta_draws.push(self.eta);
                    if self.cfg.store_states {
                        state_draws.push(self.z.clone());
                    }
                }
            }
        }

        let param_names = param_names(self.family);
        let mut summaries: Vec<ParamSummary> = (0..param_names.len())
            .map(|c| {
                let col: Vec<f64> = theta_draws.iter().map(|row| row[c]).collect();
                ParamSummary {
                    name: param_names[c].clone(),
                    mean: crate::stats::mean(&col),
                    std_dev: crate::stats::sample_variance(&col).sqrt(),
                }
            })
            .collect();
        if m == 2 {
            for (i, name) in ["p11", "p22"].iter().enumerate() {
                let col: Vec<f64> = eta_draws.iter().map(|e| e[i]).collect();
                summaries.push(ParamSummary {
                    name: (*name).to_string(),
                    mean: crate::stats::mean(&col),
                    std_dev: crate::stats::sample_variance(&col).sqrt(),
                });
            }
        }
        Ok(PosteriorDraws {
            family: self.family,
            trunc_k: self.cfg.trunc_k,
            param_names,
            theta: theta_draws,
            eta: eta_draws,
            states: state_draws,
            summaries,
        })
    }
}

/// Column names for the flat parameter vector, regime-major.
pub fn param_names(family: ModelFamily) -> Vec<String> {
    let m = family.m();
    let mut names = Vec::with_capacity(m * SLOTS);
    for j in 1..=m {
        for (slot, base) in ["a0", "a1", "a2", "b0", "b1", "b2", "d", "gamma"]
            .iter()
            .enumerate()
        {
            let base = if slot == SLOT_SHAPE && family.fixed_weight() {
                "w"
            } else {
                base
            };
            names.push(if m == 1 {
                (*base).to_string()
            } else {
                format!("{base}_{j}")
            });
        }
    }
    names
}

/// Run one Gibbs chain. Deterministic given the seed in `cfg`.
pub fn run_gibbs(
    y: &[f64],
    family: ModelFamily,
    prior: &PriorSpec,
    cfg: &GibbsConfig,
) -> Result<PosteriorDraws> {
    cfg.validate()?;
    prior.validate()?;
    if y.len() < 50 {
        return Err(Error::invalid(format!(
            "estimation needs at least 50 observations, got {}",
            y.len()
        )));
    }
    let m = family.m();
    if m == 0 || m > 2 {
        return Err(Error::invalid(
            "estimation supports one or two regimes (simulation and stability handle general m)",
        ));
    }
    let data = SeriesData::new(y);
    Chain::new(family, prior, *cfg, &data, cfg.seed)?.run()
}

/// Run `cfg.chains` independent chains in parallel with seeds
/// `cfg.seed`, `cfg.seed + 1`, ... and return them in seed order.
pub fn run_chains(
    y: &[f64],
    family: ModelFamily,
    prior: &PriorSpec,
    cfg: &GibbsConfig,
) -> Result<Vec<PosteriorDraws>> {
    cfg.validate()?;
    if cfg.chains == 1 {
        return Ok(vec![run_gibbs(y, family, prior, cfg)?]);
    }
    let mut results: Vec<Option<Result<PosteriorDraws>>> = (0..cfg.chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for k in 0..cfg.chains {
            let chain_cfg = GibbsConfig {
                seed: cfg.seed + k as u64,
                chains: 1,
                ..*cfg
            };
            handles.push(scope.spawn(move || run_gibbs(y, family, prior, &chain_cfg)));
        }
        for (slot, handle) in results.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("chain thread panicked"));
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("chain result recorded"))
        .collect()
}
