use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Poisson large-deviation estimate to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LdKind {
    /// `P(N >= γ E[N])`
    Upper,
    /// `P(N <= E[N] / γ)`
    Lower,
    /// `P(N / E[N] >= γ N' / E[N'])` for independent `N'` with `E[N'] >= γ E[N]`.
    Ratio,
}

/// The intermediate level `(γ - 1) / ln γ` used by the ratio bound.
pub fn ratio_level(gamma: f64) -> f64 {
    (gamma - 1.0) / gamma.ln()
}

/// Chernoff-type bounds for a Poisson variable of mean `lambda`.
pub fn poisson_ld(kind: LdKind, lambda: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("γ must exceed 1, got {gamma}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("λ must be >= 0, got {lambda}")));
    }
    let lg = gamma.ln();
    Ok(match kind {
        LdKind::Upper => (-lambda * (gamma * lg - (gamma - 1.0))).exp(),
        LdKind::Lower => (-lambda * ((1.0 - 1.0 / gamma) - lg / gamma)).exp(),
        LdKind::Ratio => {
            let t = ratio_level(gamma);
            2.0 * (-lambda * (t * t.ln() - (t - 1.0))).exp()
        }
    })
}
