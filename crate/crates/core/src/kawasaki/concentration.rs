use serde::{Deserialize, Serialize};

use super::config::KawasakiConfig;
use super::state::KawasakiState;
use crate::lattice::{BoxSpec, Site, TorusSite};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub triggered: bool,
    pub first_time: Option<f64>,
    /// Box (corner on the torus, wrapped) holding the excess.
    pub witness_box: Option<BoxSpec>,
    pub witness_count: u32,
    pub box_side: u32,
    pub threshold: f64,
}

impl ConcentrationReport {
    pub fn quiet(cfg: &KawasakiConfig) -> Self {
        ConcentrationReport {
            triggered: false,
            first_time: None,
            witness_box: None,
            witness_count: 0,
            box_side: cfg.box_side(),
            threshold: cfg.concentration_threshold(),
        }
    }
}

/// Maximum particle count over all wrapped `k × k` boxes, with the corner of
/// one maximising box. `k` is clamped to the torus side.
pub fn max_box_count(occupied: impl Fn(TorusSite) -> bool, side: u32, k: u32) -> (u32, TorusSite) {
    let l = side as usize;
    let k = (k as usize).min(l);
    let w = l + k;
    // prefix sums over the torus unrolled to (L+k) × (L+k)
    let mut pre = vec![0u32; (w + 1) * (w + 1)];
    for y in 0..w {
        for x in 0..w {
            let s = TorusSite {
                x: (x % l) as u32,
                y: (y % l) as u32,
                side,
            };
            pre[(y + 1) * (w + 1) + x + 1] =
                occupied(s) as u32 + pre[y * (w + 1) + x + 1] + pre[(y + 1) * (w + 1) + x] - pre[y * (w + 1) + x];
        }
    }
    let mut best = (0, TorusSite { x: 0, y: 0, side });
    for y in 0..l {
        for x in 0..l {
            let c = pre[(y + k) * (w + 1) + x + k] + pre[y * (w + 1) + x] - pre[y * (w + 1) + x + k] - pre[(y + k) * (w + 1) + x];
            if c > best.0 {
                best = (
                    c,
                    TorusSite {
                        x: x as u32,
                        y: y as u32,
                        side,
                    },
                );
            }
        }
    }
    best
}

/// Checks whether some admissible square box holds more than `λ(β)/4`
/// particles. Only the largest admissible side is scanned: any box inside a
/// violating box carries at most as many particles.
pub fn detect_concentration(state: &KawasakiState, t_now: f64, cfg: &KawasakiConfig) -> ConcentrationReport {
    let mut report = ConcentrationReport::quiet(cfg);
    let k = report.box_side;
    if k == 0 || state.is_empty() {
        return report;
    }
    let (count, corner) = max_box_count(|s| state.is_occupied(s), state.side(), k);
    if count as f64 > report.threshold {
        report.triggered = true;
        report.first_time = Some(t_now);
        report.witness_count = count;
        report.witness_box = Some(BoxSpec {
            corner: Site([corner.x as i32, corner.y as i32, 0]),
            side: k.min(state.side()),
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kawasaki::LambdaFn;
    use crate::rng::RngStream;

    fn brute(occ: &[bool], side: u32, kmax: u32) -> u32 {
        let mut best = 0;
        for k in 1..=kmax.min(side) {
            for y0 in 0..side {
                for x0 in 0..side {
                    let mut c = 0;
                    for dy in 0..k {
                        for dx in 0..k {
                            let i = ((y0 + dy) % side) * side + (x0 + dx) % side;
                            c += occ[i as usize] as u32;
                        }
                    }
                    best = best.max(c);
                }
            }
        }
        best
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = RngStream::new(7, 0).rng();
        for case in 0..60 {
            let side = 3 + case % 12;
            let n = 1 + case as usize % ((side * side) as usize - 1);
            let s = KawasakiState::uniform(side, n, 1.0, 0.0, &mut rng).unwrap();
            let occ: Vec<bool> = (0..side * side)
                .map(|i| s.is_occupied(TorusSite::from_index(i as usize, side)))
                .collect();
            for k in 1..=side + 2 {
                let (c, corner) = max_box_count(|z| s.is_occupied(z), side, k);
                assert_eq!(c, brute(&occ, side, k));
                let (c2, _) = max_box_count(|z| s.is_occupied(z), side, 1);
                assert!(c2 <= c);
                // the witness corner really holds `c`
                let kk = k.min(side);
                let mut w = 0;
                for dy in 0..kk {
                    for dx in 0..kk {
                        w += s.is_occupied(corner.offset(dx as i64, dy as i64)) as u32;
                    }
                }
                assert_eq!(w, c);
            }
        }
    }

    #[test]
    fn single_particle_threshold() {
        let mut rng = RngStream::new(1, 0).rng();
        let s = KawasakiState::uniform(10, 1, 3.0, 0.0, &mut rng).unwrap();
        let mut cfg = KawasakiConfig::explicit(10, 1, 3.0, 0.0, 1.0);
        cfg.lambda = LambdaFn::Constant { value: 4.0 };
        assert!(!detect_concentration(&s, 0.0, &cfg).triggered);
        cfg.lambda = LambdaFn::Constant { value: 3.9 };
        let r = detect_concentration(&s, 0.5, &cfg);
        assert!(r.triggered);
        assert_eq!(r.first_time, Some(0.5));
    }

    #[test]
    fn packed_box_is_witnessed() {
        let side = 12;
        let pts: Vec<TorusSite> = (0..9).map(|i| TorusSite { x: 4 + i % 3, y: 7 + i / 3, side }).collect();
        let s = KawasakiState::new(side, 3.0, 1.0, &pts, &mut RngStream::new(0, 0).rng()).unwrap();
        let mut cfg = KawasakiConfig::explicit(side, 9, 3.0, 1.0, 1.0);
        cfg.alpha = 0.4;
        cfg.lambda = LambdaFn::Constant { value: 8.0 };
        let r = detect_concentration(&s, 0.0, &cfg);
        assert_eq!(r.box_side, 3);
        assert!(r.triggered);
        assert_eq!(r.witness_count, 9);
        assert_eq!(r.witness_box.unwrap().corner, Site([4, 7, 0]));
    }
}
