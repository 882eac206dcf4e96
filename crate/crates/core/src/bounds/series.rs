use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::oracle::{poisson_cdf, poisson_sf};
use crate::lattice::Dim;
use statrs::function::factorial::ln_factorial;

/// Constants and truncation control for the generation series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QSeriesParams {
    /// Multiplies `ρ T` in the Poisson weights.
    pub c_rho: f64,
    /// Multiplies `R²/T` (first series) or `R` (second series).
    pub c: f64,
    /// Fixed truncation order; `None` picks the smallest order whose weight
    /// tail is below `1e-12`.
    pub n_max: Option<u32>,
    /// Truncation error above which the result is flagged.
    pub tolerance: f64,
}

impl Default for QSeriesParams {
    fn default() -> Self {
        QSeriesParams {
            c_rho: 1.0,
            c: 1.0,
            n_max: None,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QSeriesValue {
    pub value: f64,
    /// Upper bound on the dropped terms `Σ_{n > n_max} a^n / n!`.
    pub truncation_error: f64,
    pub n_max: u32,
    /// Truncation error exceeds the tolerance.
    pub flagged: bool,
}

/// `Σ_{n > n} a^n / n! = e^a P(Poisson(a) > n)`.
fn weight_tail(a: f64, n: u32) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    (a + poisson_sf(a, n as u64 + 1).ln()).exp()
}

fn auto_order(a: f64) -> u32 {
    let mut n = 1;
    while weight_tail(a, n) >= 1e-12 {
        n += 1;
    }
    n
}

/// `Σ_{n=1}^{n_max} a^n/n! · P(Erlang(k(n)) >= x)` where the Erlang tail is
/// `P(Poisson(x) <= k(n) - 1)`.
fn erlang_series(a: f64, x: f64, shape: impl Fn(u32) -> u64, params: &QSeriesParams) -> Result<QSeriesValue> {
    let n_max = match params.n_max {
        Some(0) => return Err(Error::InvalidConfig("n_max must be >= 1".into())),
        Some(n) => n,
        None => auto_order(a),
    };
    let mut value = 0.0;
    if a > 0.0 {
        let ln_a = a.ln();
        for n in 1..=n_max {
            let tail = poisson_cdf(x, shape(n) - 1);
            if tail > 0.0 {
                value += (n as f64 * ln_a - ln_factorial(n as u64) + tail.ln()).exp();
            }
        }
    }
    let truncation_error = weight_tail(a, n_max);
    Ok(QSeriesValue {
        value,
        truncation_error,
        n_max,
        flagged: truncation_error > params.tolerance,
    })
}

fn check_args(r: f64, t: f64, rho: f64) -> Result<()> {
    if !(r > 0.0 && t > 0.0 && rho >= 0.0) {
        return Err(Error::Domain(format!("need R, T > 0 and ρ >= 0 (got R={r}, T={t}, ρ={rho})")));
    }
    Ok(())
}

/// Diffusive-regime series: Erlang shape `⌈nd/2⌉` at `c R²/T`.
pub fn q1_series(r: f64, t: f64, rho: f64, dim: Dim, params: &QSeriesParams) -> Result<QSeriesValue> {
    check_args(r, t, rho)?;
    let d = dim.get() as u64;
    erlang_series(params.c_rho * rho * t, params.c * r * r / t, |n| (n as u64 * d).div_ceil(2), params)
}

/// Ballistic-regime series: Erlang shape `nd` at `c R`.
pub fn q2_series(r: f64, t: f64, rho: f64, dim: Dim, params: &QSeriesParams) -> Result<QSeriesValue> {
    check_args(r, t, rho)?;
    let d = dim.get() as u64;
    erlang_series(params.c_rho * rho * t, params.c * r, |n| n as u64 * d, params)
}
