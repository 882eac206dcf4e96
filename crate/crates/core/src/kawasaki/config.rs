use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The slowly increasing cap `λ(β)` on particles per small box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaFn {
    /// `sqrt(ln β)`, or 0 for `β <= 1`.
    #[default]
    SqrtLnBeta,
    Constant { value: f64 },
}

impl LambdaFn {
    pub fn eval(&self, beta: f64) -> f64 {
        match *self {
            LambdaFn::SqrtLnBeta => {
                if beta > 1.0 {
                    beta.ln().sqrt()
                } else {
                    0.0
                }
            }
            LambdaFn::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KawasakiConfig {
    pub beta: f64,
    /// Binding energy; neighbouring particles contribute `-U` each.
    pub u: f64,
    /// Density exponent: `ρ = e^{-Δβ}`.
    pub delta: f64,
    /// Volume exponent: `L² ≈ e^{Θβ}`.
    pub theta: f64,
    pub alpha: f64,
    #[serde(default)]
    pub lambda: LambdaFn,
    pub t_max: f64,
    /// Replaces the torus side derived from `Θ`.
    #[serde(default)]
    pub side_override: Option<u32>,
    /// Replaces the particle number derived from `Δ`.
    #[serde(default)]
    pub n_override: Option<usize>,
    /// Events between concentration checks; defaults to `N`.
    #[serde(default)]
    pub check_every: Option<u64>,
    /// Assert conservation and exclusion after every event.
    #[serde(default)]
    pub check_invariants: bool,
}

impl KawasakiConfig {
    pub fn new(beta: f64, u: f64, delta: f64, theta: f64, t_max: f64) -> Self {
        KawasakiConfig {
            beta,
            u,
            delta,
            theta,
            alpha: delta / 2.0,
            lambda: LambdaFn::default(),
            t_max,
            side_override: None,
            n_override: None,
            check_every: None,
            check_invariants: false,
        }
    }

    /// A fixed `side × side` torus with `n` particles.
    pub fn explicit(side: u32, n: usize, beta: f64, u: f64, t_max: f64) -> Self {
        let mut cfg = Self::new(beta, u, 1.0, 2.0, t_max);
        cfg.side_override = Some(side);
        cfg.n_override = Some(n);
        cfg
    }

    pub fn density(&self) -> f64 {
        (-self.delta * self.beta).exp()
    }

    pub fn side(&self) -> u32 {
        self.side_override
            .unwrap_or_else(|| (self.theta * self.beta / 2.0).exp().round() as u32)
    }

    pub fn n_particles(&self) -> usize {
        self.n_override.unwrap_or_else(|| {
            let l = self.side() as f64;
            (self.density() * l * l).round() as usize
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.eval(self.beta)
    }

    /// Side of the largest square box of volume `<= e^{β(Δ-α/4)}`.
    pub fn box_side(&self) -> u32 {
        let vol = (self.beta * (self.delta - self.alpha / 4.0)).exp();
        // guard against sqrt landing just below an exact integer
        let s = vol.sqrt();
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            r as u32
        } else {
            s.floor() as u32
        }
    }

    /// A box is anomalous when it holds more than this many particles.
    pub fn concentration_threshold(&self) -> f64 {
        self.lambda() / 4.0
    }

    /// `T_α = e^{(Δ-α)β}`.
    pub fn t_alpha(&self) -> f64 {
        ((self.delta - self.alpha) * self.beta).exp()
    }

    /// `e^{αβ/4} sqrt(T_α)`.
    pub fn cloud_radius(&self) -> f64 {
        (self.alpha * self.beta / 4.0).exp() * self.t_alpha().sqrt()
    }

    pub fn check_every(&self) -> u64 {
        self.check_every.unwrap_or(self.n_particles().max(1) as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if !(self.u >= 0.0) {
            return bad(format!("U must be >= 0, got {}", self.u));
        }
        if !(self.theta > self.delta) {
            return bad(format!("need Θ > Δ, got Θ={} Δ={}", self.theta, self.delta));
        }
        if !(self.alpha > 0.0 && self.alpha < self.delta) {
            return bad(format!("need 0 < α < Δ, got α={} Δ={}", self.alpha, self.delta));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be finite and >= 0, got {}", self.t_max));
        }
        let side = self.side();
        if side < 3 {
            return bad(format!("torus side must be at least 3, got {side}"));
        }
        let n = self.n_particles();
        if n == 0 {
            return bad("N = round(ρ L²) is 0".into());
        }
        if n > (side as usize).pow(2) {
            return bad(format!("{n} particles do not fit on a {side}x{side} torus"));
        }
        if self.check_every == Some(0) {
            return bad("check_every must be >= 1".into());
        }
        Ok(())
    }
}
