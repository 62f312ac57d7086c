//! Numeric inverse-CDF sampling from a tabulated kernel.
//!
//! The full conditional of one parameter is evaluated on a grid (log space),
//! integrated to a cumulative by the trapezoid rule, and inverted at a
//! uniform draw by solving the within-segment quadratic. The returned value
//! lies strictly inside the grid range and is monotone in the uniform draw.

use crate::error::{Error, Result};

/// `n` equally spaced points covering [lo, hi] inclusive.
pub(crate) fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Draw from the density proportional to exp(log_kernel) tabulated on an
/// ascending grid, by trapezoid integration and numeric inversion at
/// `u` in [0, 1).
///
/// Errors when the kernel carries no mass anywhere on the grid.
pub fn griddy_inverse_cdf(grid: &[f64], log_kernel: &[f64], u: f64) -> Result<f64> {
    if grid.len() != log_kernel.len() || grid.len() < 2 {
        return Err(Error::invalid(
            "grid and kernel must share a length of at least 2",
        ));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::invalid(format!("uniform draw {u} outside [0,1)")));
    }
    let mx = log_kernel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return Err(Error::numeric(
            "full-conditional kernel vanished on the entire grid",
        ));
    }
    let k: Vec<f64> = log_kernel.iter().map(|l| (l - mx).exp()).collect();

    let mut cum = Vec::with_capacity(grid.len());
    cum.push(0.0);
    for i in 1..grid.len() {
        let seg = 0.5 * (k[i - 1] + k[i]) * (grid[i] - grid[i - 1]);
        cum.push(cum[i - 1] + seg);
    }
    let total = *cum.last().expect("nonempty cumulative");
    if total <= 0.0 || total.is_nan() {
        return Err(Error::numeric(
            "full-conditional kernel integrates to zero on the grid",
        ));
    }

    let target = u * total;
    let mut seg = grid.len() - 2;
    for i in 0..grid.len() - 1 {
        if target < cum[i + 1] {
            seg = i;
            break;
        }
    }
    let (x0, x1) = (grid[seg], grid[seg + 1]);
    let (k0, k1) = (k[seg], k[seg + 1]);
    let rem = target - cum[seg];
    let width = x1 - x0;
    let slope = (k1 - k0) / width;
    // solve 0.5 slope s^2 + k0 s = rem for the offset s in [0, width]
    let s = if slope.abs() * width < 1e-12 * k0.max(1e-300) {
        if k0 > 0.0 {
            rem / k0
        } else {
            0.5 * width
        }
    } else {
        let disc = (k0 * k0 + 2.0 * slope * rem).max(0.0);
        (disc.sqrt() - k0) / slope
    };
    Ok((x0 + s.clamp(0.0, width)).clamp(x0, x1))
}
