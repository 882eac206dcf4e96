use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::exact_ctrw_kernel;
use crate::lattice::{euclidean_norm, Dim, Site};

/// The two constants of the heat-kernel estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub c1: f64,
    pub c2: f64,
}

/// Gaussian bound `c1 t^{-d/2} e^{-c2|z|²/t}` for `|z| <= t`, exponential
/// bound `c1 e^{-c2|z|}` for `|z| >= t` (the larger of the two at `|z| = t`).
/// At `t = 0` it is the indicator of `z = 0`.
pub fn kernel_bound(z: Site, t: f64, dim: Dim, c1: f64, c2: f64) -> f64 {
    let r = euclidean_norm(z);
    if t <= 0.0 {
        return if r == 0.0 { 1.0 } else { 0.0 };
    }
    let diffusive = || c1 * t.powf(-(dim.get() as f64) / 2.0) * (-c2 * r * r / t).exp();
    let ballistic = || c1 * (-c2 * r).exp();
    if r < t {
        diffusive()
    } else if r > t {
        ballistic()
    } else {
        diffusive().max(ballistic())
    }
}

/// Scanned values of `c2`, geometric between `1e-3` and `2`.
fn c2_scan() -> impl Iterator<Item = f64> {
    let n = 240;
    (0..=n).map(move |i| 1e-3 * 2000f64.powf(i as f64 / n as f64))
}

/// Chooses `(c1, c2)` so that the bound dominates the exact kernel at every
/// grid point. For each scanned `c2`, `c1` is the smallest dominating value;
/// among those pairs the one with the least total bound over the grid wins.
/// `c2` is then shrunk by `margin` and `c1` inflated by `1 + margin`, which
/// keeps the bound above the kernel between grid points.
pub fn calibrate_kernel_constants(dim: Dim, grid: &[(Site, f64)], margin: f64) -> Result<KernelConstants> {
    if grid.is_empty() {
        return Err(Error::Infeasible);
    }
    let exact: Vec<f64> = grid.iter().map(|&(z, t)| exact_ctrw_kernel(z, t, dim)).collect();
    let fit = |c2: f64| -> Option<(f64, f64)> {
        let mut c1: f64 = 0.0;
        for (&(z, t), &p) in grid.iter().zip(&exact) {
            let shape = kernel_bound(z, t, dim, 1.0, c2);
            if p > 0.0 {
                if shape <= 0.0 {
                    return None;
                }
                c1 = c1.max(p / shape);
            }
        }
        let c1 = c1.max(f64::MIN_POSITIVE);
        let mass: f64 = grid.iter().map(|&(z, t)| kernel_bound(z, t, dim, c1, c2)).sum();
        mass.is_finite().then_some((c1, mass))
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for c2 in c2_scan() {
        if let Some((c1, mass)) = fit(c2) {
            if best.is_none_or(|(_, _, m)| mass < m) {
                best = Some((c1, c2, mass));
            }
        }
    }
    let (_, c2, _) = best.ok_or(Error::Infeasible)?;
    let c2 = c2 * (1.0 - margin).max(0.0);
    let (c1, _) = fit(c2).ok_or(Error::Infeasible)?;
    Ok(KernelConstants {
        c1: c1 * (1.0 + margin),
        c2,
    })
}

/// Calibration points: every `t` in `times` and sites along a few rays
/// (axis, diagonals) with `|z|_∞` up to `radius`.
pub fn calibration_grid(dim: Dim, times: &[f64], radius: i32) -> Vec<(Site, f64)> {
    let mut out = Vec::new();
    for &t in times {
        for k in 0..=radius {
            let rays: &[[i32; 3]] = match dim {
                Dim::One => &[[k, 0, 0]],
                Dim::Two => &[[k, 0, 0], [k, k / 2, 0], [k, k, 0]],
                Dim::Three => &[[k, 0, 0], [k, k, 0], [k, k, k]],
            };
            out.extend(rays.iter().map(|&c| (Site(c), t)));
        }
    }
    out
}
