//! Fractional-differencing coefficients.
//!
//! The long-memory filter (1-B)^d expands as 1 - sum_{i>=1} g_i B^i with
//!
//! ```text
//! g_1 = d,    g_i = g_{i-1} * (i - 1 - d) / i
//! ```
//!
//! For 0 < d < 1 every g_i is positive, the sequence decays hyperbolically
//! (g_i ~ i^{-1-d}) and the full series sums to one. The recurrence is the
//! production path; direct evaluation through gamma functions overflows
//! Gamma(i+1) long before the truncation lengths used here and is kept only
//! as a test oracle.

use crate::error::{Error, Result};

/// Truncated fractional-differencing coefficients g_1..g_K for one memory
/// exponent `d`. Computed once per (d, K) and immutable afterwards; cheap to
/// share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FracDiffCoeffs {
    d: f64,
    coeffs: Vec<f64>,
}

impl FracDiffCoeffs {
    /// Compute g_1..g_K by the stable recurrence.
    ///
    /// Errors if `d` is outside (0, 1) or `k` is zero.
    pub fn compute(d: f64, k: usize) -> Result<Self> {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::invalid(format!(
                "memory exponent d must lie in (0,1), got {d}"
            )));
        }
        if k < 1 {
            return Err(Error::invalid("truncation length K must be at least 1"));
        }
        let mut coeffs = Vec::with_capacity(k);
        coeffs.push(d);
        for j in 1..k {
            // g_{j+1} = g_j * (j - d) / (j + 1) in 1-based terms
            let prev = coeffs[j - 1];
            coeffs.push(prev * (j as f64 - d) / (j as f64 + 1.0));
        }
        Ok(FracDiffCoeffs { d, coeffs })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Truncation length K.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // K >= 1 by construction
    }

    /// g_i for 1-based i in 1..=K.
    #[inline]
    pub fn g(&self, i: usize) -> f64 {
        self.coeffs[i - 1]
    }

    /// The coefficients as a slice, g_1 at index 0.
    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    /// Sum of the retained coefficients; strictly below 1.
    pub fn partial_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Mass discarded by the truncation, 1 - sum_{i<=K} g_i; non-negative.
    pub fn tail_weight(&self) -> f64 {
        1.0 - self.partial_sum()
    }
}
