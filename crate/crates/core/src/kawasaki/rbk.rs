use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cloud::{cloud_partition, overfull_clouds};
use super::concentration::{detect_concentration, ConcentrationReport};
use super::config::KawasakiConfig;
use super::state::{KawasakiState, Tint};
use crate::error::Result;
use crate::lattice::{torus_distance, TorusSite};
use crate::rb::{SampleGrid, TraceSample};
use crate::rng::{RngStream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub clusters: usize,
    pub max_size: u32,
    pub mean_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbkTrajectory {
    /// Radius is the largest torus distance from the seed's initial site.
    pub samples: Vec<TraceSample>,
    pub concentration: ConcentrationReport,
    pub final_time: f64,
    pub side: u32,
    pub n_particles: usize,
    pub seed_site: TorusSite,
    pub clusters: ClusterStats,
    /// Times a particle went from no occupied neighbour to at least one.
    pub contact_starts: u64,
    /// Concentration checks before `T_{α,λ}` that found a cloud with more
    /// than `λ` particles.
    pub cloud_violations: u64,
    pub events: u64,
    pub accepted_moves: u64,
    pub config: KawasakiConfig,
    pub stream: RngStream,
}

/// Tracks which torus sites ever held a red particle.
struct Zone {
    seen: Vec<bool>,
    visited: u64,
    origin: TorusSite,
    max_radius: f64,
}

impl Zone {
    fn mark(&mut self, s: TorusSite) {
        let slot = &mut self.seen[s.index()];
        if !*slot {
            *slot = true;
            self.visited += 1;
            self.max_radius = self.max_radius.max(torus_distance(self.origin, s));
        }
    }
}

/// Per-particle contact bookkeeping (an occupied neighbour or not).
struct Contacts {
    touching: Vec<bool>,
    starts: u64,
}

impl Contacts {
    fn new(state: &KawasakiState) -> Self {
        let touching = state.positions().iter().map(|&p| state.occupied_neighbors(p) > 0).collect();
        Contacts { touching, starts: 0 }
    }

    fn refresh(&mut self, state: &KawasakiState, around: [TorusSite; 2]) {
        for c in around {
            for s in std::iter::once(c).chain(c.neighbors()) {
                if let Some(i) = state.occupant(s) {
                    let now = state.occupied_neighbors(s) > 0;
                    let was = std::mem::replace(&mut self.touching[i as usize], now);
                    if now && !was {
                        self.starts += 1;
                    }
                }
            }
        }
    }
}

/// Recolours the cluster at `site` red if it mixes colours; returns the
/// number of particles that turned red.
fn infect_cluster(state: &mut KawasakiState, site: TorusSite, zone: &mut Zone) -> usize {
    let ids = state.cluster_at(site);
    if !ids.iter().any(|&i| state.colors[i as usize] == Tint::Red) {
        return 0;
    }
    let mut n = 0;
    for i in ids {
        if state.colors[i as usize] == Tint::Blue {
            state.colors[i as usize] = Tint::Red;
            zone.mark(state.positions()[i as usize]);
            n += 1;
        }
    }
    n
}

fn cluster_stats(state: &KawasakiState) -> ClusterStats {
    let c = state.clusters();
    ClusterStats {
        clusters: c.count(),
        max_size: c.sizes.iter().copied().max().unwrap_or(0),
        mean_size: state.len() as f64 / c.count().max(1) as f64,
    }
}

fn assert_cluster_closure(state: &KawasakiState) {
    let c = state.clusters();
    let mut has_red = vec![false; c.count()];
    for (i, &t) in state.colors.iter().enumerate() {
        if t == Tint::Red {
            has_red[c.labels[i] as usize] = true;
        }
    }
    for (i, &t) in state.colors.iter().enumerate() {
        assert!(
            !(has_red[c.labels[i] as usize] && t != Tint::Red),
            "cluster with a red particle is not all red"
        );
    }
}

/// Red/blue Kawasaki run: the seed particle's cluster starts red and red
/// spreads to every cluster it joins.
pub fn run_rbk(cfg: &KawasakiConfig, stream: RngStream) -> Result<RbkTrajectory> {
    cfg.validate()?;
    let mut rng: SimRng = stream.rng();
    let side = cfg.side();
    let n = cfg.n_particles();
    let mut state = KawasakiState::uniform(side, n, cfg.beta, cfg.u, &mut rng)?;
    let seed = rng.random_range(0..n);
    let seed_site = state.positions()[seed];
    state.colors[seed] = Tint::Red;
    let mut zone = Zone {
        seen: vec![false; (side as usize).pow(2)],
        visited: 0,
        origin: seed_site,
        max_radius: 0.0,
    };
    zone.mark(seed_site);
    infect_cluster(&mut state, seed_site, &mut zone);
    let mut n_red = state.colors.iter().filter(|&&c| c == Tint::Red).count() as u64;

    let mut contacts = Contacts::new(&state);
    let mut concentration = detect_concentration(&state, 0.0, cfg);
    let mut cloud_violations = 0;
    let check_every = cfg.check_every();
    let mut check_clouds = |state: &KawasakiState, t: f64, report: &ConcentrationReport| {
        if !report.triggered {
            let (_, sizes) = cloud_partition(state.positions(), cfg.cloud_radius());
            if overfull_clouds(&sizes, cfg.lambda(), t) > 0 {
                cloud_violations += 1;
            }
        }
    };
    check_clouds(&state, 0.0, &concentration);

    let times = SampleGrid::default().times(cfg.t_max);
    let mut next_sample = 0;
    let mut samples = Vec::with_capacity(times.len());
    let (mut events, mut accepted) = (0u64, 0u64);
    loop {
        let t_next = state.next_time();
        while next_sample < times.len() && times[next_sample] < t_next {
            samples.push(TraceSample {
                time: times[next_sample],
                max_radius: zone.max_radius,
                n_red,
                visited: zone.visited,
            });
            next_sample += 1;
        }
        if t_next > cfg.t_max {
            break;
        }
        let out = state.step(&mut rng);
        events += 1;
        if out.accepted {
            accepted += 1;
            contacts.refresh(&state, [out.from, out.target]);
            if state.colors[out.particle as usize] == Tint::Red {
                zone.mark(out.target);
            }
            n_red += infect_cluster(&mut state, out.target, &mut zone) as u64;
            if cfg.check_invariants {
                state.assert_consistent();
                assert_cluster_closure(&state);
            }
        }
        if events % check_every == 0 && !concentration.triggered {
            concentration = detect_concentration(&state, out.time, cfg);
            check_clouds(&state, out.time, &concentration);
        }
    }
    Ok(RbkTrajectory {
        samples,
        concentration,
        final_time: cfg.t_max,
        side,
        n_particles: n,
        seed_site,
        clusters: cluster_stats(&state),
        contact_starts: contacts.starts,
        cloud_violations,
        events,
        accepted_moves: accepted,
        config: cfg.clone(),
        stream,
    })
}
