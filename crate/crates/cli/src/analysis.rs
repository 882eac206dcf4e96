//! Front-velocity fits, density scaling exponents and bound compliance.

use rbfront_core::bounds::VelocityBound;
use rbfront_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Time interval used by a velocity fit (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub start: f64,
    pub end: f64,
}

impl FitWindow {
    /// `[burn_in * t_max, t_max]`.
    pub fn burn_in(t_max: f64, fraction: f64) -> Self {
        FitWindow {
            start: fraction * t_max,
            end: t_max,
        }
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityEstimate {
    pub rho: f64,
    /// Mean over replicas of the least-squares slope of `max_radius` on `t`.
    pub v_hat: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub window: FitWindow,
}

#[derive(Debug, Clone, Copy)]
struct Ols {
    slope: f64,
    intercept: f64,
    slope_se: f64,
}

fn ols(points: &[(f64, f64)]) -> Ols {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if points.len() > 2 {
        let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ols {
        slope,
        intercept,
        slope_se,
    }
}

/// Per-replica least-squares slope of `(t, radius)` inside `window`, averaged
/// over replicas. With one replica the standard error is the regression's
/// own slope error.
pub fn estimate_velocity(rho: f64, trajectories: &[Vec<(f64, f64)>], window: FitWindow) -> Result<VelocityEstimate> {
    if trajectories.is_empty() {
        return Err(Error::DegenerateWindow("no trajectories".into()));
    }
    let mut slopes = Vec::with_capacity(trajectories.len());
    let mut single_se = 0.0;
    for (i, traj) in trajectories.iter().enumerate() {
        let pts: Vec<(f64, f64)> = traj.iter().copied().filter(|p| window.contains(p.0)).collect();
        let distinct = pts.windows(2).filter(|w| w[1].0 != w[0].0).count() + usize::from(!pts.is_empty());
        if distinct < 2 {
            return Err(Error::DegenerateWindow(format!(
                "trajectory {i} has {distinct} sample time(s) in [{}, {}]",
                window.start, window.end
            )));
        }
        let fit = ols(&pts);
        single_se = fit.slope_se;
        slopes.push(fit.slope);
    }
    let n = slopes.len() as f64;
    let v_hat = slopes.iter().sum::<f64>() / n;
    let stderr = if slopes.len() > 1 {
        let var = slopes.iter().map(|s| (s - v_hat).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        single_se
    };
    Ok(VelocityEstimate {
        rho,
        v_hat,
        stderr,
        replicas: slopes.len(),
        window,
    })
}

/// Least-squares fit of `log v_hat` on `log ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub intercept: f64,
    pub exponent_se: f64,
    pub r_squared: f64,
    pub rhos: Vec<f64>,
    pub velocities: Vec<f64>,
    /// `log v_hat - (intercept + exponent log ρ)` per grid point.
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    pub fn predict(&self, rho: f64) -> f64 {
        (self.intercept + self.exponent * rho.ln()).exp()
    }
}

pub fn fit_scaling_exponent(estimates: &[VelocityEstimate]) -> Result<ScalingFit> {
    if estimates.len() < 4 {
        return Err(Error::Domain(format!(
            "a scaling fit needs at least 4 grid points, got {}",
            estimates.len()
        )));
    }
    for e in estimates {
        if !(e.v_hat > 0.0) || !(e.rho > 0.0) {
            return Err(Error::NonPositiveVelocity {
                density: e.rho,
                value: e.v_hat,
            });
        }
    }
    let pts: Vec<(f64, f64)> = estimates.iter().map(|e| (e.rho.ln(), e.v_hat.ln())).collect();
    let fit = ols(&pts);
    let residuals: Vec<f64> = pts.iter().map(|p| p.1 - fit.intercept - fit.slope * p.0).collect();
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let tss: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(ScalingFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        exponent_se: fit.slope_se,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        rhos: estimates.iter().map(|e| e.rho).collect(),
        velocities: estimates.iter().map(|e| e.v_hat).collect(),
        residuals,
    })
}

/// Final radii of the replicas at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalRadii {
    pub rho: f64,
    pub t_max: f64,
    /// `(replica id, max radius at t_max)`.
    pub radii: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCompliance {
    pub rho: f64,
    pub t_max: f64,
    pub threshold: f64,
    pub max_radius: f64,
    /// Replica ids whose radius exceeded the threshold.
    pub violations: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: VelocityBound,
    pub points: Vec<PointCompliance>,
    pub replicas: usize,
    pub violations: usize,
    /// For the red/blue bounds the largest `δ` at which every replica
    /// complies; for the Kawasaki bound (increasing in `δ`) the smallest.
    /// `None` when no replica constrains `δ`.
    pub critical_delta: Option<f64>,
}

/// Checks every replica's final radius against the bound at `t_max`.
pub fn compare_to_bound(points: &[FinalRadii], bound: &VelocityBound) -> BoundReport {
    let rbk = matches!(bound, VelocityBound::Rbk { .. });
    let mut critical: Option<f64> = None;
    let mut out = Vec::with_capacity(points.len());
    let mut replicas = 0;
    for p in points {
        let threshold = bound.eval(p.rho, p.t_max).threshold;
        let unit = bound.with_delta(1.0).eval(p.rho, p.t_max).threshold;
        let mut violations = Vec::new();
        let mut max_radius: f64 = 0.0;
        for &(id, r) in &p.radii {
            replicas += 1;
            max_radius = max_radius.max(r);
            if !(r <= threshold) {
                violations.push(id);
            }
            if r > 0.0 {
                let d = match *bound {
                    VelocityBound::Rbk { beta, .. } => (r / unit).ln() / beta + 1.0,
                    _ => unit / r,
                };
                if d.is_finite() {
                    critical = Some(match critical {
                        None => d,
                        Some(c) if rbk => c.max(d),
                        Some(c) => c.min(d),
                    });
                }
            }
        }
        out.push(PointCompliance {
            rho: p.rho,
            t_max: p.t_max,
            threshold,
            max_radius,
            violations,
        });
    }
    let violations = out.iter().map(|p| p.violations.len()).sum();
    BoundReport {
        bound: *bound,
        points: out,
        replicas,
        violations,
        critical_delta: critical,
    }
}
