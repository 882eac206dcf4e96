//! Exact small-instance oracles: Poisson tails and the continuous-time
//! random-walk transition kernel.

use statrs::function::factorial::ln_factorial;

use crate::lattice::{Dim, Site};

/// Relative size below which the remaining series mass is ignored.
const SERIES_REL_TOL: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `P(N >= threshold)`
    AtLeast,
    /// `P(N <= threshold)`
    AtMost,
}

#[inline]
fn ln_pmf(mean: f64, k: u64) -> f64 {
    -mean + k as f64 * mean.ln() - ln_factorial(k)
}

/// `P(N <= k)` summed downward from `k`, valid (and accurate) for `k <= mean`.
fn lower_sum(mean: f64, k: u64) -> f64 {
    let mut term = ln_pmf(mean, k).exp();
    let mut sum = 0.0;
    let mut j = k;
    loop {
        sum += term;
        if j == 0 || term == 0.0 {
            break;
        }
        let ratio = j as f64 / mean;
        term *= ratio;
        j -= 1;
        // ratios j/mean decrease as j decreases, so the rest is geometric-bounded
        if ratio < 1.0 && term / (1.0 - ratio) <= SERIES_REL_TOL * sum {
            sum += term;
            break;
        }
    }
    sum
}

/// `P(N >= k)` summed upward from `k`, valid for `k >= mean`.
fn upper_sum(mean: f64, k: u64) -> f64 {
    let mut term = ln_pmf(mean, k).exp();
    let mut sum = 0.0;
    let mut j = k;
    loop {
        sum += term;
        if term == 0.0 {
            break;
        }
        let ratio = mean / (j + 1) as f64;
        term *= ratio;
        j += 1;
        if ratio < 1.0 && term / (1.0 - ratio) <= SERIES_REL_TOL * sum {
            sum += term;
            break;
        }
    }
    sum
}

/// `P(N <= k)` for `N ~ Poisson(mean)`.
pub fn poisson_cdf(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return 1.0;
    }
    if (k as f64) <= mean {
        lower_sum(mean, k)
    } else {
        (1.0 - upper_sum(mean, k + 1)).max(0.0)
    }
}

/// `P(N >= k)` for `N ~ Poisson(mean)`.
pub fn poisson_sf(mean: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mean == 0.0 {
        return 0.0;
    }
    if (k as f64) >= mean {
        upper_sum(mean, k)
    } else {
        (1.0 - lower_sum(mean, k - 1)).max(0.0)
    }
}

/// Exact Poisson tail by direct pmf summation. The threshold may be any real:
/// `P(N >= x) = P(N >= ceil x)` and `P(N <= x) = P(N <= floor x)`.
pub fn exact_poisson_tail(mean: f64, threshold: f64, side: Tail) -> f64 {
    assert!(mean >= 0.0 && mean.is_finite(), "Poisson mean must be finite and >= 0");
    match side {
        Tail::AtLeast => {
            if threshold <= 0.0 {
                1.0
            } else {
                poisson_sf(mean, threshold.ceil() as u64)
            }
        }
        Tail::AtMost => {
            if threshold < 0.0 {
                0.0
            } else {
                poisson_cdf(mean, threshold.floor() as u64)
            }
        }
    }
}

/// One-dimensional kernel `P_0(X(a) = x)` for a ±1 walk jumping at total rate 1
/// observed at time `a`, by uniformization: condition on the Poisson number of
/// jumps `|x| + 2j` and split left/right binomially.
///
/// Returns the value and a certified bound on the neglected series tail.
pub fn ctrw_kernel_1d(x: i64, a: f64) -> (f64, f64) {
    assert!(a >= 0.0, "time must be >= 0");
    let x = x.unsigned_abs();
    if a == 0.0 {
        return (if x == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    let half = a / 2.0;
    let ln_half = half.ln();
    // ln of term j: -a + (x + 2j) ln(a/2) - ln j! - ln (x+j)!
    let mut ln_terms = Vec::new();
    let mut ln_t = -a + x as f64 * ln_half - ln_factorial(x);
    let mut max_ln = f64::NEG_INFINITY;
    let mut j: u64 = 0;
    let ln_tail_bound = loop {
        ln_terms.push(ln_t);
        max_ln = max_ln.max(ln_t);
        let ratio = half * half / ((j + 1) as f64 * (x + j + 1) as f64);
        let ln_next = ln_t + ratio.ln();
        j += 1;
        if ratio < 1.0 {
            // ratios decrease in j: tail <= next / (1 - ratio)
            let ln_bound = ln_next - (1.0 - ratio).ln();
            if ln_bound < max_ln + SERIES_REL_TOL.ln() || ln_bound < -745.0 {
                break ln_bound;
            }
        }
        ln_t = ln_next;
    };
    let scaled: f64 = ln_terms.iter().map(|l| (l - max_ln).exp()).sum();
    let value = scaled * max_ln.exp();
    (value, ln_tail_bound.exp())
}

/// Exact `P_0(zeta(t) = z)` for the rate-1 continuous-time simple random walk
/// on `Z^d`: coordinates are independent walks of rate `1/d` each.
pub fn exact_ctrw_kernel(z: Site, t: f64, dim: Dim) -> f64 {
    let a = t / dim.get() as f64;
    z.coords(dim)
        .iter()
        .map(|&x| ctrw_kernel_1d(x as i64, a).0)
        .product()
}
