//! Independent oracles shared by the integration suites. Everything here is
//! deliberately written against the definitions, not against the library's
//! production code paths.

#![allow(dead_code)]

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Fractional-differencing coefficient straight from the gamma-function
/// formula g_i = d Gamma(i - d) / (Gamma(1 - d) Gamma(i + 1)).
pub fn frac_coeff_gamma_formula(d: f64, i: usize) -> f64 {
    (d.ln() + ln_gamma(i as f64 - d) - ln_gamma(1.0 - d) - ln_gamma(i as f64 + 1.0)).exp()
}

/// Kolmogorov-Smirnov distance of a sample against a CDF.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).abs().max((f - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_crit_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Bernoulli log-likelihood with the 0 log 0 convention.
pub fn bernoulli_loglik(q: &[bool], p: f64) -> f64 {
    q.iter()
        .map(|&b| if b { p } else { 1.0 - p })
        .map(|v| if v > 0.0 { v.ln() } else { 0.0 })
        .sum()
}

/// First-order Markov log-likelihood at the transition-count MLEs.
pub fn markov_loglik(q: &[bool]) -> f64 {
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

pub fn transition_counts(q: &[bool]) -> (usize, usize, usize, usize) {
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

/// Lag-polynomial coefficients of 1 - b1 B - (1 - b2 B)(1 - B)^d, truncated
/// after K coefficients of the expansion; index = lag.
pub fn lag_polynomial(b1: f64, b2: f64, d: f64, k: usize) -> Vec<f64> {
    // (1 - B)^d = 1 - sum g_i B^i by the gamma formula
    let mut frac = vec![0.0; k + 1];
    frac[0] = 1.0;
    for i in 1..=k {
        frac[i] = -frac_coeff_gamma_formula(d, i);
    }
    // (1 - b2 B) * frac
    let mut prod = vec![0.0; k + 2];
    for (i, &c) in frac.iter().enumerate() {
        prod[i] += c;
        prod[i + 1] -= b2 * c;
    }
    let mut lag = vec![0.0; k + 2];
    lag[0] = 1.0 - prod[0];
    for i in 1..k + 2 {
        lag[i] = -prod[i];
    }
    lag[1] -= b1;
    lag
}

/// Deterministic xorshift-style generator for oracle-side randomness that
/// must not depend on the library's RNG choices.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
