use rand::Rng;
use serde::{Deserialize, Serialize};

use super::concentration::detect_concentration;
use super::config::KawasakiConfig;
use super::state::{KawasakiState, Tint};
use crate::error::{Error, Result};
use crate::lattice::{torus_distance, BoxSpec, TorusSite};
use crate::rng::{RngStream, SimRng};

/// Predicate of the stopped trajectory restricted to one box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventSpec {
    Always,
    /// Some particle moves into the box from outside.
    Enters,
    /// The box holds more than `k` particles at some time.
    OccupancyExceeds { k: u32 },
    /// Independent coin with success probability `p` (calibration).
    CoinFlip { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBoxReport {
    pub replicas: u64,
    pub p1: f64,
    pub p2: f64,
    pub p12: f64,
    pub se1: f64,
    pub se2: f64,
    pub se12: f64,
    /// `|P(A1 ∩ A2) - P(A1) P(A2)|`.
    pub discrepancy: f64,
    /// Delta-method standard error of the signed discrepancy.
    pub discrepancy_se: f64,
    /// Replicas where the concentration time came before `T`.
    pub stopped_early: u64,
    pub box_distance: f64,
    /// Fraction of replicas where the black and white zones met.
    pub met_fraction: Option<f64>,
}

/// Torus distance between the nearest sites of two boxes (0 if they share a site).
pub fn box_distance(a: &BoxSpec, b: &BoxSpec, side: u32) -> f64 {
    let sa = torus_box_sites(a, side);
    let sb = torus_box_sites(b, side);
    let mut best = f64::INFINITY;
    for &x in &sa {
        for &y in &sb {
            best = best.min(torus_distance(x, y));
        }
    }
    best
}

fn torus_box_sites(b: &BoxSpec, side: u32) -> Vec<TorusSite> {
    let k = b.side.min(side);
    let corner = crate::lattice::torus_wrap((b.corner.0[0] as i64, b.corner.0[1] as i64), side);
    let mut out = Vec::with_capacity((k * k) as usize);
    for dy in 0..k {
        for dx in 0..k {
            out.push(corner.offset(dx as i64, dy as i64));
        }
    }
    out
}

struct Watch {
    spec: EventSpec,
    inside: Vec<bool>,
    count: u32,
    hit: bool,
}

impl Watch {
    fn new(spec: EventSpec, b: &BoxSpec, state: &KawasakiState, coin: &mut SimRng) -> Self {
        let side = state.side();
        let mut inside = vec![false; (side as usize).pow(2)];
        for s in torus_box_sites(b, side) {
            inside[s.index()] = true;
        }
        let count = state.positions().iter().filter(|p| inside[p.index()]).count() as u32;
        let hit = match spec {
            EventSpec::Always => true,
            EventSpec::Enters => false,
            EventSpec::OccupancyExceeds { k } => count > k,
            EventSpec::CoinFlip { p } => coin.random::<f64>() < p,
        };
        Watch {
            spec,
            inside,
            count,
            hit,
        }
    }

    fn on_move(&mut self, from: TorusSite, to: TorusSite) {
        let (a, b) = (self.inside[from.index()], self.inside[to.index()]);
        if a == b {
            return;
        }
        if b {
            self.count += 1;
        } else {
            self.count -= 1;
        }
        match self.spec {
            EventSpec::Enters => self.hit |= b,
            EventSpec::OccupancyExceeds { k } => self.hit |= self.count > k,
            _ => {}
        }
    }
}

/// Black/white tagging: particles starting in either box are black, those
/// starting far from both are white, and each colour spreads to unmarked
/// particles sharing its cluster.
struct Tagging {
    black_seen: Vec<bool>,
    white_seen: Vec<bool>,
    met: bool,
}

impl Tagging {
    fn new(state: &mut KawasakiState, boxes: [&BoxSpec; 2], far: f64) -> Self {
        let side = state.side();
        let vol = (side as usize).pow(2);
        let sites: Vec<TorusSite> = boxes.iter().flat_map(|b| torus_box_sites(b, side)).collect();
        let mut in_b = vec![false; vol];
        for s in &sites {
            in_b[s.index()] = true;
        }
        let mut tag = Tagging {
            black_seen: vec![false; vol],
            white_seen: vec![false; vol],
            met: false,
        };
        for i in 0..state.len() {
            let p = state.positions()[i];
            state.colors[i] = if in_b[p.index()] {
                Tint::Black
            } else if sites.iter().all(|&s| torus_distance(s, p) > far) {
                Tint::White
            } else {
                Tint::Unmarked
            };
            tag.mark(p, state.colors[i]);
        }
        for i in 0..state.len() {
            tag.spread(state, state.positions()[i]);
        }
        tag
    }

    fn mark(&mut self, s: TorusSite, c: Tint) {
        match c {
            Tint::Black => {
                self.black_seen[s.index()] = true;
                self.met |= self.white_seen[s.index()];
            }
            Tint::White => {
                self.white_seen[s.index()] = true;
                self.met |= self.black_seen[s.index()];
            }
            _ => {}
        }
    }

    fn spread(&mut self, state: &mut KawasakiState, site: TorusSite) {
        let ids = state.cluster_at(site);
        let has = |t| ids.iter().any(|&i| state.colors[i as usize] == t);
        let (black, white) = (has(Tint::Black), has(Tint::White));
        if black && white {
            self.met = true;
        }
        let paint = match (black, white) {
            (true, false) => Tint::Black,
            (false, true) => Tint::White,
            _ => return,
        };
        for i in ids {
            if state.colors[i as usize] == Tint::Unmarked {
                state.colors[i as usize] = paint;
                self.mark(state.positions()[i as usize], paint);
            }
        }
    }
}

/// Estimates `P(A1)`, `P(A2)` and `P(A1 ∩ A2)` for events observed in two
/// disjoint boxes up to `T ∧ T_{α,λ}`. `tag_delta` switches on the
/// black/white tagging with white region at distance `> e^{-δβ/2} d(Λ1, Λ2)`.
#[allow(clippy::too_many_arguments)]
pub fn two_box_experiment(
    cfg: &KawasakiConfig,
    box1: &BoxSpec,
    box2: &BoxSpec,
    events: (EventSpec, EventSpec),
    t: f64,
    replicas: u64,
    stream: RngStream,
    tag_delta: Option<f64>,
) -> Result<TwoBoxReport> {
    cfg.validate()?;
    let side = cfg.side();
    let dist = box_distance(box1, box2, side);
    if dist == 0.0 {
        return Err(Error::Overlap);
    }
    if replicas == 0 {
        return Err(Error::InvalidConfig("replicas must be >= 1".into()));
    }
    let n = cfg.n_particles();
    let check_every = cfg.check_every();
    let (mut c1, mut c2, mut c12, mut early, mut met) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut flags = Vec::with_capacity(replicas as usize);
    for r in 0..replicas {
        let sub = stream.fork(r);
        let mut rng = sub.rng();
        let mut coin = sub.fork(u64::MAX).rng();
        let mut state = KawasakiState::uniform(side, n, cfg.beta, cfg.u, &mut rng)?;
        let mut w1 = Watch::new(events.0, box1, &state, &mut coin);
        let mut w2 = Watch::new(events.1, box2, &state, &mut coin);
        let mut tag = tag_delta.map(|d| Tagging::new(&mut state, [box1, box2], (-d * cfg.beta / 2.0).exp() * dist));
        let mut stopped = detect_concentration(&state, 0.0, cfg).triggered;
        let mut steps = 0u64;
        while !stopped && state.next_time() <= t {
            let out = state.step(&mut rng);
            steps += 1;
            if out.accepted {
                w1.on_move(out.from, out.target);
                w2.on_move(out.from, out.target);
                if let Some(tag) = tag.as_mut() {
                    tag.mark(out.target, state.colors[out.particle as usize]);
                    tag.spread(&mut state, out.target);
                }
            }
            if steps.is_multiple_of(check_every) {
                stopped = detect_concentration(&state, out.time, cfg).triggered;
            }
        }
        if stopped {
            early += 1;
        }
        if tag.is_some_and(|t| t.met) {
            met += 1;
        }
        c1 += w1.hit as u64;
        c2 += w2.hit as u64;
        c12 += (w1.hit && w2.hit) as u64;
        flags.push((w1.hit, w2.hit));
    }
    let nf = replicas as f64;
    let (p1, p2, p12) = (c1 as f64 / nf, c2 as f64 / nf, c12 as f64 / nf);
    let binom = |p: f64| (p * (1.0 - p) / nf).sqrt();
    // influence function of p12 - p1 p2
    let psi: Vec<f64> = flags
        .iter()
        .map(|&(a, b)| (a && b) as u8 as f64 - p2 * a as u8 as f64 - p1 * b as u8 as f64)
        .collect();
    let mean = psi.iter().sum::<f64>() / nf;
    let var = if replicas > 1 {
        psi.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    Ok(TwoBoxReport {
        replicas,
        p1,
        p2,
        p12,
        se1: binom(p1),
        se2: binom(p2),
        se12: binom(p12),
        discrepancy: (p12 - p1 * p2).abs(),
        discrepancy_se: (var / nf).sqrt(),
        stopped_early: early,
        box_distance: dist,
        met_fraction: tag_delta.map(|_| met as f64 / nf),
    })
}
