use std::io::Write;

use serde::{Deserialize, Serialize};

/// Radius threshold and probability bound of a front-speed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub threshold: f64,
    /// `None` when only the functional form of the radius is available.
    pub probability: Option<f64>,
}

/// Front-speed estimates with their calibration constant `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum VelocityBound {
    /// Any red/blue process: radius `max(ρ, √ρ) t / δ`.
    Rb { delta: f64 },
    /// Frog model in one dimension: radius `ρ t / δ`.
    #[serde(rename = "frog-1d")]
    Frog1D { delta: f64 },
    /// Red/blue Kawasaki: radius `e^{δβ} √ρ T` with `ρ = e^{-Δβ}`.
    Rbk { beta: f64, density_exp: f64, delta: f64 },
}

impl VelocityBound {
    pub fn delta(&self) -> f64 {
        match *self {
            VelocityBound::Rb { delta } | VelocityBound::Frog1D { delta } | VelocityBound::Rbk { delta, .. } => delta,
        }
    }

    /// Same model with another `δ`.
    pub fn with_delta(&self, delta: f64) -> Self {
        match *self {
            VelocityBound::Rb { .. } => VelocityBound::Rb { delta },
            VelocityBound::Frog1D { .. } => VelocityBound::Frog1D { delta },
            VelocityBound::Rbk { beta, density_exp, .. } => VelocityBound::Rbk {
                beta,
                density_exp,
                delta,
            },
        }
    }

    /// Bound at density `rho` (ignored for the Kawasaki model, whose density
    /// is fixed by `β` and `Δ`) and time `t`.
    pub fn eval(&self, rho: f64, t: f64) -> BoundValue {
        match *self {
            VelocityBound::Rb { delta } => theorem1_bound(rho, t, delta),
            VelocityBound::Frog1D { delta } => prop_pf1_bound(rho, t, delta),
            VelocityBound::Rbk {
                beta,
                density_exp,
                delta,
            } => rbk_bound(beta, density_exp, t, delta),
        }
    }

    /// Radius threshold divided by `t` at `δ = 1`; the threshold is this
    /// rate times `t / δ` for the two red/blue models.
    pub fn unit_rate(&self, rho: f64) -> f64 {
        self.with_delta(1.0).eval(rho, 1.0).threshold
    }
}

/// Radius `max(ρ, √ρ) t / δ`, probability `e^{-δρt} / (δρ⁴)`.
pub fn theorem1_bound(rho: f64, t: f64, delta: f64) -> BoundValue {
    BoundValue {
        threshold: rho.max(rho.sqrt()) * t / delta,
        probability: Some((-delta * rho * t).exp() / (delta * rho.powi(4))),
    }
}

/// Radius `ρ t / δ`, probability `e^{-δρ²t} / (δρ²)`.
pub fn prop_pf1_bound(rho: f64, t: f64, delta: f64) -> BoundValue {
    BoundValue {
        threshold: rho * t / delta,
        probability: Some((-delta * rho * rho * t).exp() / (delta * rho * rho)),
    }
}

/// Radius `e^{δβ} √ρ T`; the probability is only known to vanish faster
/// than any `e^{-Cβ}`.
pub fn rbk_bound(beta: f64, density_exp: f64, t: f64, delta: f64) -> BoundValue {
    let rho = (-density_exp * beta).exp();
    BoundValue {
        threshold: (delta * beta).exp() * rho.sqrt() * t,
        probability: None,
    }
}

/// Writes `rho,t,threshold,prob_bound` rows for every grid pair.
pub fn write_bound_curve<W: Write>(mut w: W, bound: &VelocityBound, rhos: &[f64], times: &[f64]) -> std::io::Result<()> {
    writeln!(w, "rho,t,threshold,prob_bound")?;
    for &rho in rhos {
        for &t in times {
            let v = bound.eval(rho, t);
            match v.probability {
                Some(p) => writeln!(w, "{rho},{t},{},{p}", v.threshold)?,
                None => writeln!(w, "{rho},{t},{},", v.threshold)?,
            }
        }
    }
    Ok(())
}
