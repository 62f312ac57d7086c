//! Second-moment stability analysis.
//!
//! The squared-return process admits a linear recursion for the stacked
//! vector of conditional second moments
//!
//! ```text
//! H~_t <= Lambda + Q H~_{t-1},   H~_t = [H_t, H1_t, H2_t, H_{t-1}]
//! ```
//!
//! built from the per-regime coefficient diagonals and the reversed-chain lag
//! probabilities. The process is asymptotically stable in unconditional
//! second moment iff the spectral radius of the 4m x 4m matrix Q is below 1,
//! in which case lim E(y_t^2) <= Pi' (I - Q)^{-1} Lambda.
//!
//! The long-memory block folds the infinite lag series at a unit backshift:
//! entries are sums of expansion coefficients times lag probabilities. The
//! series is truncated at `lag_cap` and the remaining coefficient mass
//! (closed form: 1 - g_1 - b2) is assigned the stationary probabilities,
//! which the lag probabilities approach geometrically fast. The spectral
//! radius is therefore insensitive to the cap far beyond the listed
//! tolerances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fracdiff::FracDiffCoeffs;
use crate::model::{ModelSpec, TransitionMatrix};

/// Default truncation of the lag series inside the long-memory block.
pub const DEFAULT_LAG_CAP: usize = 500;

/// Outcome of the stability analysis for one model specification.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Spectral radius of Q.
    pub rho: f64,
    /// rho < 1.
    pub stable: bool,
    /// Asymptotic bound on E(y_t^2); present only when stable.
    pub bound: Option<f64>,
    /// Stationary distribution of the chain.
    pub pi: Vec<f64>,
    /// The 4m x 4m matrix, row by row.
    pub q: Vec<Vec<f64>>,
    /// The length-4m intercept vector.
    pub lambda: Vec<f64>,
    /// Lag truncation used for the long-memory block.
    pub lag_cap: usize,
}

/// Stationary distribution of a row-stochastic matrix: the unique
/// probability vector with pi' P = pi'.
///
/// Fails if the chain is not primitive (no unique limiting distribution).
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let m = p.m();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    if !p.is_primitive() {
        return Err(Error::numeric(
            "transition chain is reducible or periodic; no unique stationary distribution",
        ));
    }
    // solve (P' - I) pi = 0 with the last equation replaced by sum(pi) = 1
    let mut a = DMatrix::<f64>::zeros(m, m);
    for r in 0..m {
        for s in 0..m {
            a[(s, r)] = p.prob(r, s) - if r == s { 1.0 } else { 0.0 };
        }
    }
    for c in 0..m {
        a[(m - 1, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[m - 1] = 1.0;
    let pi = a.lu().solve(&rhs).ok_or_else(|| {
        Error::numeric("singular system while solving for the stationary distribution")
    })?;
    let out: Vec<f64> = pi.iter().copied().collect();
    if out.iter().any(|&v| v < -1e-12) {
        return Err(Error::numeric("stationary distribution has negative mass"));
    }
    Ok(out.into_iter().map(|v| v.max(0.0)).collect())
}

/// Reversed-chain lag probability p(z_{t-i} = r | z_t = s) = (pi_r / pi_s) (P^i)_{rs}.
pub fn lag_probability(
    p: &TransitionMatrix,
    pi: &[f64],
    i: usize,
    r: usize,
    s: usize,
) -> Result<f64> {
    if i < 1 {
        return Err(Error::invalid("lag must be at least 1"));
    }
    if pi[s] <= 0.0 {
        return Err(Error::numeric(format!(
            "stationary probability of state {s} vanishes"
        )));
    }
    let pk = p.power(i);
    Ok(pi[r] / pi[s] * pk[r * p.m() + s])
}

/// Assemble Q and Lambda for one specification.
///
/// `coeffs` holds the fractional-differencing coefficients per regime; the
/// lag series is truncated at `lag_cap` (clamped so the needed coefficients
/// exist) and completed with the stationary-weighted coefficient tail.
pub fn build_q(
    spec: &ModelSpec,
    coeffs: &[FracDiffCoeffs],
    lag_cap: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = spec.m();
    if coeffs.len() != m {
        return Err(Error::invalid(format!(
            "expected {m} coefficient sets, got {}",
            coeffs.len()
        )));
    }
    let pi = stationary_distribution(&spec.transition)?;
    let cap = coeffs
        .iter()
        .map(|g| g.len().saturating_sub(2))
        .min()
        .unwrap_or(0)
        .min(lag_cap);

    // f_{jr} = sum_i (g_{i+2} - b2 g_{i+1}) p(z_{t-2-i} = r | z_t = j),
    // tail mass completed at pi_r.
    let mut f = DMatrix::<f64>::zeros(m, m);
    let p = &spec.transition;
    let mut pk = p.power(2);
    for (j, &pj) in pi.iter().enumerate() {
        if pj <= 0.0 {
            return Err(Error::numeric(format!(
                "stationary probability of state {j} vanishes"
            )));
        }
    }
    let mut partial = vec![0.0; m];
    for i in 0..=cap {
        for j in 0..m {
            let g = &coeffs[j];
            let c = g.g(i + 2) - spec.regimes[j].b2 * g.g(i + 1);
            partial[j] += c;
            for r in 0..m {
                f[(j, r)] += c * pi[r] / pi[j] * pk[r * m + j];
            }
        }
        pk = crate::model::mat_mul(&pk, p.entries(), m);
    }
    for j in 0..m {
        let total = 1.0 - coeffs[j].g(1) - spec.regimes[j].b2;
        let tail = (total - partial[j]).max(0.0);
        for r in 0..m {
            f[(j, r)] += tail * pi[r];
        }
    }

    // per-regime coefficient diagonals; the H-row shock coefficient is taken
    // in absolute value, matching the bound the recursion dominates. Every
    // lagged block carries the same reversed-chain weighting p(z_{t-1}=r|z_t=j)
    // as the long-memory block; the spectrum is invariant to dropping the
    // stationary ratios uniformly (similarity through diag(pi)).
    let mut q = DMatrix::<f64>::zeros(4 * m, 4 * m);
    let pi_ref = &pi;
    let block = |q: &mut DMatrix<f64>, br: usize, bc: usize, scale: &dyn Fn(usize) -> f64| {
        for j in 0..m {
            for r in 0..m {
                q[(br * m + j, bc * m + r)] =
                    scale(j) * pi_ref[r] / pi_ref[j] * spec.transition.prob(r, j);
            }
        }
    };
    let nu = |j: usize| {
        let p = &spec.regimes[j];
        (p.b2 - p.b1 + coeffs[j].g(1) - p.a2).abs()
    };
    let tau = |j: usize| {
        let p = &spec.regimes[j];
        p.b2 - p.b1 + coeffs[j].g(1)
    };

    block(&mut q, 0, 0, &nu);
    block(&mut q, 0, 1, &|j| spec.regimes[j].a1);
    block(&mut q, 0, 2, &|j| spec.regimes[j].b1);
    block(&mut q, 1, 0, &|j| spec.regimes[j].a2);
    block(&mut q, 1, 1, &|j| spec.regimes[j].a1);
    block(&mut q, 2, 0, &tau);
    block(&mut q, 2, 2, &|j| spec.regimes[j].b1);
    for j in 0..m {
        for r in 0..m {
            q[(j, 3 * m + r)] = f[(j, r)];
            q[(2 * m + j, 3 * m + r)] = f[(j, r)];
        }
        q[(3 * m + j, j)] = 1.0;
    }

    let mut lambda = DVector::<f64>::zeros(4 * m);
    for j in 0..m {
        let p = &spec.regimes[j];
        lambda[j] = p.a0 + (p.b0 - p.a0).abs();
        lambda[m + j] = p.a0;
        lambda[2 * m + j] = p.b0;
    }

    Ok((q, lambda))
}

/// Largest eigenvalue modulus, from a full dense eigenvalue solve. The
/// matrices here are at most 4m x 4m, so the dense solve is exact and cheap.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Power-iteration estimate of the spectral radius, kept as an independent
/// cross-check of the dense solve. Returns None when the Rayleigh quotient
/// has not settled within `max_iter` sweeps (complex dominant pair).
pub fn power_iteration_radius(m: &DMatrix<f64>, max_iter: usize, tol: f64) -> Option<f64> {
    let n = m.nrows();
    let mut x = DVector::<f64>::from_element(n, 1.0 / n as f64);
    let mut prev = 0.0;
    for _ in 0..max_iter {
        let y = m * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return Some(0.0);
        }
        let lambda = x.dot(&y) / x.dot(&x);
        x = y / norm;
        if (lambda - prev).abs() < tol {
            return Some(lambda.abs());
        }
        prev = lambda;
    }
    None
}

/// Full stability analysis at the default lag truncation.
pub fn stability_report(spec: &ModelSpec) -> Result<StabilityReport> {
    stability_report_with(spec, DEFAULT_LAG_CAP)
}

/// Full stability analysis with an explicit lag truncation for the
/// long-memory block.
pub fn stability_report_with(spec: &ModelSpec, lag_cap: usize) -> Result<StabilityReport> {
    let m = spec.m();
    let coeffs: Vec<FracDiffCoeffs> = spec
        .regimes
        .iter()
        .map(|r| FracDiffCoeffs::compute(r.d, lag_cap + 2))
        .collect::<Result<_>>()?;
    let pi = stationary_distribution(&spec.transition)?;
    let (q, lambda) = build_q(spec, &coeffs, lag_cap)?;
    let rho = spectral_radius(&q);
    let stable = rho < 1.0;
    let bound = if stable {
        let n = q.nrows();
        let eye = DMatrix::<f64>::identity(n, n);
        let solved = (eye - &q)
            .lu()
            .solve(&lambda)
            .ok_or_else(|| Error::numeric("(I - Q) singular despite rho < 1"))?;
        // only the first m components (the mixed-variance block) are weighted
        Some((0..m).map(|j| pi[j] * solved[j]).sum())
    } else {
        None
    };
    Ok(StabilityReport {
        rho,
        stable,
        bound,
        pi,
        q: (0..q.nrows())
            .map(|i| q.row(i).iter().copied().collect())
            .collect(),
        lambda: lambda.iter().copied().collect(),
        lag_cap,
    })
}
