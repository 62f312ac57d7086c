//! Value-at-risk forecasts and likelihood-ratio coverage backtests.
//!
//! VaR_t(rho) = F^{-1}(rho) sigma_t with F^{-1} the empirical quantile of the
//! in-sample standardized returns y_t/sigma_t. A day is an exception when the
//! realized return falls strictly below the VaR line. Three tests judge the
//! exception sequence:
//!
//! - unconditional coverage: the exception frequency matches rho,
//! - independence: exceptions do not cluster (first-order Markov alternative),
//! - conditional coverage: both at once.
//!
//! Degenerate counts use the 0 log 0 = 0 convention throughout so every
//! statistic is a total function. The unconditional test runs over all T
//! observations while the transition-based tests run over the T-1 pairs; the
//! reported joint statistic is the sum of the two, which the standalone
//! formula reproduces exactly when evaluated on the shared pair window.

use crate::error::{Error, Result};
use crate::stats::normal_quantile;

/// 5% critical value for the one-degree-of-freedom tests.
pub const CRIT_UC_IND_5PCT: f64 = 3.84;
/// 5% critical value for the two-degrees-of-freedom joint test.
pub const CRIT_CC_5PCT: f64 = 5.99;

/// Minimum in-sample size for the empirical standardized quantile.
pub const MIN_QUANTILE_OBS: usize = 100;

/// A VaR forecast series at one risk level.
#[derive(Debug, Clone, PartialEq)]
pub struct VarSeries {
    /// Left-tail risk level, in (0, 0.5).
    pub rho: f64,
    /// Standardized quantile F^{-1}(rho); negative on centered data.
    pub quantile: f64,
    /// Per-day VaR values, quantile * sigma_t.
    pub values: Vec<f64>,
}

/// Exception indicators and their transition counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionSeries {
    pub q: Vec<bool>,
    pub n: usize,
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
    pub t: usize,
}

impl ExceptionSeries {
    /// Mark exceptions (y_t < VaR_t, strict) and count pair transitions.
    pub fn build(realized: &[f64], var_values: &[f64]) -> Result<Self> {
        if realized.len() != var_values.len() {
            return Err(Error::LengthMismatch(format!(
                "{} returns against {} VaR values",
                realized.len(),
                var_values.len()
            )));
        }
        if realized.is_empty() {
            return Err(Error::invalid("backtest needs at least one observation"));
        }
        let q: Vec<bool> = realized
            .iter()
            .zip(var_values)
            .map(|(y, v)| y < v)
            .collect();
        let n = q.iter().filter(|&&b| b).count();
        let (mut n00, mut n01, mut n10, mut n11) = (0, 0, 0, 0);
        for w in q.windows(2) {
            match (w[0], w[1]) {
                (false, false) => n00 += 1,
                (false, true) => n01 += 1,
                (true, false) => n10 += 1,
                (true, true) => n11 += 1,
            }
        }
        Ok(ExceptionSeries {
            t: q.len(),
            q,
            n,
            n00,
            n01,
            n10,
            n11,
        })
    }
}

/// LR statistics and 5%-level verdicts for one risk level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktestReport {
    pub rho: f64,
    pub t: usize,
    /// Expected exceptions rho * T.
    pub expected: f64,
    /// Observed exceptions.
    pub n: usize,
    pub lr_uc: f64,
    pub lr_ind: f64,
    pub lr_cc: f64,
    pub pass_uc: bool,
    pub pass_ind: bool,
    pub pass_cc: bool,
}

#[inline]
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Empirical rho-quantile of the standardized returns y_t/sigma_t over an
/// in-sample window, with sigma_t the square root of the variance forecast.
/// Linear-interpolation convention: at rank h = (n-1) rho the value is
/// x_(floor h) + (h - floor h)(x_(floor h + 1) - x_(floor h)) on the sorted
/// sample.
///
/// Fails below MIN_QUANTILE_OBS observations; pass `normal_fallback` to use
/// the normal quantile on short windows instead.
pub fn standardized_quantile(
    in_sample: &[f64],
    variance_forecasts: &[f64],
    rho: f64,
    normal_fallback: bool,
) -> Result<f64> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::invalid(format!(
            "risk level must lie in (0, 0.5), got {rho}"
        )));
    }
    if in_sample.len() != variance_forecasts.len() {
        return Err(Error::LengthMismatch(format!(
            "{} returns against {} variance forecasts",
            in_sample.len(),
            variance_forecasts.len()
        )));
    }
    if in_sample.len() < MIN_QUANTILE_OBS {
        if normal_fallback {
            return Ok(normal_quantile(rho));
        }
        return Err(Error::invalid(format!(
            "{} observations are too few for an empirical quantile (need {}); \
             enable the normal-quantile fallback for short windows",
            in_sample.len(),
            MIN_QUANTILE_OBS
        )));
    }
    let mut std_resid: Vec<f64> = in_sample
        .iter()
        .zip(variance_forecasts)
        .map(|(y, v)| {
            if *v > 0.0 {
                Ok(y / v.sqrt())
            } else {
                Err(Error::invalid(format!(
                    "non-positive variance forecast {v}"
                )))
            }
        })
        .collect::<Result<_>>()?;
    std_resid.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let h = (std_resid.len() - 1) as f64 * rho;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < std_resid.len() {
        Ok(std_resid[lo] + frac * (std_resid[lo + 1] - std_resid[lo]))
    } else {
        Ok(std_resid[lo])
    }
}

/// VaR_t = quantile * sigma_t.
#[inline]
pub fn var_forecast(sigma_t: f64, quantile: f64) -> f64 {
    quantile * sigma_t
}

/// Unconditional-coverage LR statistic:
/// -2 log[rho^n (1-rho)^(T-n) / (phi^n (1-phi)^(T-n))], phi = n/T.
pub fn kupiec_uc(n: usize, t: usize, rho: f64) -> f64 {
    let (nf, tf) = (n as f64, t as f64);
    let phi = nf / tf;
    let ll0 = xlogy(nf, rho) + xlogy(tf - nf, 1.0 - rho);
    let ll1 = xlogy(nf, phi) + xlogy(tf - nf, 1.0 - phi);
    (-2.0 * (ll0 - ll1)).max(0.0)
}

/// Independence LR statistic over the transition counts, first-order Markov
/// alternative against the pooled Bernoulli null.
pub fn christoffersen_ind(n00: usize, n01: usize, n10: usize, n11: usize) -> f64 {
    let pairs = (n00 + n01 + n10 + n11) as f64;
    if pairs == 0.0 {
        return 0.0;
    }
    let hits = (n01 + n11) as f64;
    let phi = hits / pairs;
    let ll0 = xlogy(hits, phi) + xlogy(pairs - hits, 1.0 - phi);
    let ll1 = markov_loglik(n00, n01, n10, n11);
    (-2.0 * (ll0 - ll1)).max(0.0)
}

/// Conditional-coverage LR statistic, the exact coverage null against the
/// Markov alternative. Equals kupiec_uc + christoffersen_ind when `n` and
/// `t` are taken from the same transition window as the counts.
pub fn christoffersen_cc(
    n: usize,
    t: usize,
    rho: f64,
    counts: (usize, usize, usize, usize),
) -> f64 {
    let (n00, n01, n10, n11) = counts;
    let (nf, tf) = (n as f64, t as f64);
    let ll0 = xlogy(nf, rho) + xlogy(tf - nf, 1.0 - rho);
    let ll1 = markov_loglik(n00, n01, n10, n11);
    (-2.0 * (ll0 - ll1)).max(0.0)
}

fn markov_loglik(n00: usize, n01: usize, n10: usize, n11: usize) -> f64 {
    let mut ll = 0.0;
    if n00 + n01 > 0 {
        let phi01 = n01 as f64 / (n00 + n01) as f64;
        ll += xlogy(n01 as f64, phi01) + xlogy(n00 as f64, 1.0 - phi01);
    }
    if n10 + n11 > 0 {
        let phi11 = n11 as f64 / (n10 + n11) as f64;
        ll += xlogy(n11 as f64, phi11) + xlogy(n10 as f64, 1.0 - phi11);
    }
    ll
}

/// Run all three coverage tests on a realized series against a VaR series.
///
/// The unconditional statistic uses all T observations; the independence
/// statistic uses the T-1 transition pairs; the joint statistic is reported
/// as their sum.
pub fn backtest(realized: &[f64], var: &VarSeries) -> Result<BacktestReport> {
    let ex = ExceptionSeries::build(realized, &var.values)?;
    report_from_exceptions(&ex, var.rho)
}

/// Same tests from pre-built exception indicators.
pub fn report_from_exceptions(ex: &ExceptionSeries, rho: f64) -> Result<BacktestReport> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::invalid(format!(
            "risk level must lie in (0, 0.5), got {rho}"
        )));
    }
    let lr_uc = kupiec_uc(ex.n, ex.t, rho);
    let lr_ind = christoffersen_ind(ex.n00, ex.n01, ex.n10, ex.n11);
    let lr_cc = lr_uc + lr_ind;
    Ok(BacktestReport {
        rho,
        t: ex.t,
        expected: rho * ex.t as f64,
        n: ex.n,
        lr_uc,
        lr_ind,
        lr_cc,
        pass_uc: lr_uc < CRIT_UC_IND_5PCT,
        pass_ind: lr_ind < CRIT_UC_IND_5PCT,
        pass_cc: lr_cc < CRIT_CC_5PCT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // independent likelihood oracle: plain Bernoulli / Markov log-likelihoods
    // evaluated over an explicit indicator sequence
    fn bernoulli_ll(q: &[bool], p: f64) -> f64 {
        q.iter()
            .map(|&b| if b { p } else { 1.0 - p })
            .map(|v| if v > 0.0 { v.ln() } else { 0.0 })
            .sum()
    }

    fn markov_ll_oracle(q: &[bool]) -> f64 {
        let mut counts = [[0usize; 2]; 2];
        for w in q.windows(2) {
            counts[w[0] as usize][w[1] as usize] += 1;
        }
        let mut ll = 0.0;
        for row in 0..2 {
            let total = counts[row][0] + counts[row][1];
            if total == 0 {
                continue;
            }
            for col in 0..2 {
                let c = counts[row][col];
                if c > 0 {
                    ll += c as f64 * (c as f64 / total as f64).ln();
                }
            }
        }
        ll
    }

    fn uc_oracle(q: &[bool], rho: f64) -> f64 {
        let phi = q.iter().filter(|&&b| b).count() as f64 / q.len() as f64;
        -2.0 * (bernoulli_ll(q, rho) - bernoulli_ll(q, phi))
    }

    fn ind_oracle(q: &[bool]) -> f64 {
        let pairs_second: Vec<bool> = q.windows(2).map(|w| w[1]).collect();
        let phi =
            pairs_second.iter().filter(|&&b| b).count() as f64 / pairs_second.len().max(1) as f64;
        -2.0 * (bernoulli_ll(&pairs_second, phi) - markov_ll_oracle(q))
    }

    fn cc_oracle(q: &[bool], rho: f64) -> f64 {
        let pairs_second: Vec<bool> = q.windows(2).map(|w| w[1]).collect();
        -2.0 * (bernoulli_ll(&pairs_second, rho) - markov_ll_oracle(q))
    }

    fn counts_of(q: &[bool]) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for w in q.windows(2) {
            match (w[0], w[1]) {
                (false, false) => c.0 += 1,
                (false, true) => c.1 += 1,
                (true, false) => c.2 += 1,
                (true, true) => c.3 += 1,
            }
        }
        c
    }

    #[test]
    fn kupiec_pinned_values() {
        assert_eq!(kupiec_uc(25, 500, 0.05), 0.0);
        assert!((kupiec_uc(20, 500, 0.05) - 1.1266).abs() < 1e-3);
        let expect = -2.0 * 500.0 * (0.95f64).ln();
        assert!((kupiec_uc(0, 500, 0.05) - expect).abs() < 1e-10);
        assert!((expect - 51.29).abs() < 0.01);
        // total at both boundaries
        assert!(kupiec_uc(500, 500, 0.05).is_finite());
    }

    #[test]
    fn independence_null_cases() {
        // phi01 = phi11 = 0.1 exactly
        assert_eq!(christoffersen_ind(45, 5, 45, 5), 0.0);
        // no exceptions at all
        assert_eq!(christoffersen_ind(99, 0, 0, 0), 0.0);
        // clustered exceptions reject
        assert!(christoffersen_ind(80, 1, 1, 18) > CRIT_UC_IND_5PCT);
    }

    #[test]
    fn cc_full_null_is_zero() {
        // phi01 = phi11 = rho = 0.1 and hits/pairs = 0.1
        let (n00, n01, n10, n11) = (81, 9, 9, 1);
        let n = n01 + n11;
        let t = n00 + n01 + n10 + n11;
        let lr = christoffersen_cc(n, t, 0.1, (n00, n01, n10, n11));
        assert!(lr < 1e-10, "lr = {lr}");
    }

    #[test]
    fn statistics_match_independent_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let t = rng.random_range(20..200);
            let p = rng.random_range(0.02..0.5);
            let q: Vec<bool> = (0..t).map(|_| rng.random::<f64>() < p).collect();
            let rho = rng.random_range(0.01..0.49);
            let n = q.iter().filter(|&&b| b).count();
            let counts = counts_of(&q);

            let uc = kupiec_uc(n, t, rho);
            assert!((uc - uc_oracle(&q, rho)).abs() < 1e-10);
            assert!(uc >= 0.0);

            let ind = christoffersen_ind(counts.0, counts.1, counts.2, counts.3);
            assert!((ind - ind_oracle(&q)).abs() < 1e-10);
            assert!(ind >= 0.0);

            // additivity on the shared pair window
            let pairs_second: Vec<bool> = q.windows(2).map(|w| w[1]).collect();
            let n_w = pairs_second.iter().filter(|&&b| b).count();
            let t_w = pairs_second.len();
            let cc = christoffersen_cc(n_w, t_w, rho, counts);
            let uc_w = kupiec_uc(n_w, t_w, rho);
            assert!(
                (cc - (uc_w + ind)).abs() < 1e-10,
                "cc {cc} vs uc {uc_w} + ind {ind}"
            );
            assert!((cc - cc_oracle(&q, rho)).abs() < 1e-10);
        }
    }

    #[test]
    fn uc_minimized_at_expected_count() {
        let t = 500;
        let rho = 0.05;
        assert_eq!(kupiec_uc(25, t, rho), 0.0);
        for n in [0usize, 10, 20, 24, 26, 30, 60] {
            assert!(kupiec_uc(n, t, rho) > 0.0);
        }
    }

    #[test]
    fn anti_clustered_sequence_rejects_independence() {
        // q = 0,1,0,1,...: the Markov alternative fits far better than pooling
        let q: Vec<bool> = (0..100).map(|i| i % 2 == 1).collect();
        let c = counts_of(&q);
        assert!(christoffersen_ind(c.0, c.1, c.2, c.3) > CRIT_UC_IND_5PCT);
        let n = q.iter().filter(|&&b| b).count();
        assert!(kupiec_uc(n, q.len(), 0.499) < 1e-2);
    }

    #[test]
    fn standardized_quantile_normal_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let sigma = 2.0;
        let returns: Vec<f64> = (0..n)
            .map(|_| sigma * rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let variances = vec![sigma * sigma; n];
        let q = standardized_quantile(&returns, &variances, 0.05, false).unwrap();
        assert!((q + 1.645).abs() < 0.05, "quantile {q}");
    }

    #[test]
    fn standardized_quantile_degenerate_and_errors() {
        let returns = vec![3.0; 200];
        let variances = vec![4.0; 200];
        for rho in [0.05, 0.2, 0.45] {
            let q = standardized_quantile(&returns, &variances, rho, false).unwrap();
            assert!((q - 1.5).abs() < 1e-12);
        }
        assert!(standardized_quantile(&returns, &variances, 0.5, false).is_err());
        let short = vec![0.1; 50];
        let vshort = vec![1.0; 50];
        assert!(standardized_quantile(&short, &vshort, 0.05, false).is_err());
        let q = standardized_quantile(&short, &vshort, 0.05, true).unwrap();
        assert!((q + 1.6449).abs() < 1e-3);
    }

    #[test]
    fn var_forecast_scaling() {
        assert!((var_forecast(2.0, -1.645) + 3.29).abs() < 1e-12);
        assert_eq!(var_forecast(1.0, -1.2), -1.2);
        let v1 = var_forecast(1.5, -1.645);
        let v2 = var_forecast(3.0, -1.645);
        assert!((v2 - 2.0 * v1).abs() < 1e-12);
    }

    #[test]
    fn backtest_counts_and_verdicts() {
        // no exceptions: UC rejects (51.29 > 3.84), IND passes
        let realized = vec![1.0; 500];
        let var = VarSeries {
            rho: 0.05,
            quantile: -1.6,
            values: vec![-1.6; 500],
        };
        let report = backtest(&realized, &var).unwrap();
        assert_eq!(report.n, 0);
        assert_eq!(report.expected, 25.0);
        assert!(!report.pass_uc);
        assert!(report.pass_ind);
        assert!((report.lr_cc - (report.lr_uc + report.lr_ind)).abs() < 1e-12);

        let var10 = VarSeries {
            rho: 0.10,
            quantile: -1.28,
            values: vec![-1.28; 500],
        };
        let report = backtest(&realized, &var10).unwrap();
        assert_eq!(report.expected, 50.0);
    }

    #[test]
    fn null_simulation_rejection_rate() {
        // i.i.d. Bernoulli(rho) exceptions: UC rejection at 3.84 near 5%
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (t, rho, reps) = (500usize, 0.05f64, 10_000usize);
        let mut rejections = 0;
        for _ in 0..reps {
            let n = (0..t).filter(|_| rng.random::<f64>() < rho).count();
            if kupiec_uc(n, t, rho) > CRIT_UC_IND_5PCT {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / reps as f64;
        assert!(
            (0.03..=0.07).contains(&rate),
            "rejection rate {rate} outside [0.03, 0.07]"
        );
    }
}
