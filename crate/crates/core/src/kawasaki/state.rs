use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::blue::exp_wait;
use crate::lattice::TorusSite;
use crate::rb::EventQueue;
use crate::rng::SimRng;
use crate::unionfind::UnionFind;

const EMPTY: u32 = u32::MAX;

/// Particle colour; the last three are used by the two-box tagging experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tint {
    Red,
    Blue,
    Black,
    White,
    Unmarked,
}

impl Tint {
    fn glyph(self) -> char {
        match self {
            Tint::Red => 'r',
            Tint::Blue => 'b',
            Tint::Black => 'k',
            Tint::White => 'w',
            Tint::Unmarked => 'o',
        }
    }
}

/// Outcome of one clock ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub time: f64,
    pub particle: u32,
    pub from: TorusSite,
    pub target: TorusSite,
    pub accepted: bool,
}

/// Kawasaki lattice gas on an `L × L` torus.
#[derive(Debug, Clone)]
pub struct KawasakiState {
    side: u32,
    beta: f64,
    u: f64,
    occ: Vec<u32>,
    positions: Vec<TorusSite>,
    pub colors: Vec<Tint>,
    clocks: EventQueue,
    time: f64,
}

impl KawasakiState {
    /// Places particles at the given distinct sites and starts their clocks.
    pub fn new(side: u32, beta: f64, u: f64, sites: &[TorusSite], rng: &mut SimRng) -> Result<Self> {
        let mut occ = vec![EMPTY; (side as usize).pow(2)];
        for (i, s) in sites.iter().enumerate() {
            if s.side != side {
                return Err(Error::Domain(format!("site {s:?} is not on the {side}-torus")));
            }
            let slot = &mut occ[s.index()];
            if *slot != EMPTY {
                return Err(Error::Domain(format!("site {s:?} occupied twice")));
            }
            *slot = i as u32;
        }
        let mut clocks = EventQueue::with_capacity(sites.len());
        for i in 0..sites.len() {
            clocks.push(exp_wait(1.0, rng), i as u64);
        }
        Ok(KawasakiState {
            side,
            beta,
            u,
            occ,
            positions: sites.to_vec(),
            colors: vec![Tint::Blue; sites.len()],
            clocks,
            time: 0.0,
        })
    }

    /// `n` particles at uniformly chosen distinct sites.
    pub fn uniform(side: u32, n: usize, beta: f64, u: f64, rng: &mut SimRng) -> Result<Self> {
        let vol = (side as usize).pow(2);
        if n > vol {
            return Err(Error::Capacity {
                what: "torus sites",
                requested: n,
                budget: vol,
            });
        }
        let sites: Vec<TorusSite> = sample(rng, vol, n)
            .into_iter()
            .map(|i| TorusSite::from_index(i, side))
            .collect();
        Self::new(side, beta, u, &sites, rng)
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[TorusSite] {
        &self.positions
    }

    /// Particle on `site`, if any.
    pub fn occupant(&self, site: TorusSite) -> Option<u32> {
        let v = self.occ[site.index()];
        (v != EMPTY).then_some(v)
    }

    pub fn is_occupied(&self, site: TorusSite) -> bool {
        self.occ[site.index()] != EMPTY
    }

    /// Occupied nearest neighbours of `site`.
    pub fn occupied_neighbors(&self, site: TorusSite) -> u32 {
        site.neighbors().iter().filter(|n| self.is_occupied(**n)).count() as u32
    }

    /// Unordered nearest-neighbour occupied pairs.
    pub fn bonds(&self) -> u64 {
        self.positions
            .iter()
            .map(|p| {
                let right = p.offset(1, 0);
                let up = p.offset(0, 1);
                self.is_occupied(right) as u64 + self.is_occupied(up) as u64
            })
            .sum()
    }

    /// `H = -U × bonds`.
    pub fn energy(&self) -> f64 {
        -self.u * self.bonds() as f64
    }

    /// `H(after) - H(before)` for moving the particle at `from` to the vacant `to`.
    pub fn move_energy_change(&self, from: TorusSite, to: TorusSite) -> f64 {
        let lost = self.occupied_neighbors(from);
        // `from` is a neighbour of `to` and still occupied
        let gained = self.occupied_neighbors(to) - 1;
        self.u * (lost as f64 - gained as f64)
    }

    /// Metropolis acceptance probability `e^{-β [ΔH]_+}`.
    pub fn acceptance(&self, d_h: f64) -> f64 {
        if d_h <= 0.0 {
            1.0
        } else {
            (-self.beta * d_h).exp()
        }
    }

    /// Rings the earliest clock and applies the move rule.
    pub fn step(&mut self, rng: &mut SimRng) -> StepOutcome {
        let (t, id) = self.clocks.pop().expect("at least one particle");
        self.time = t;
        let i = id as u32;
        let from = self.positions[id as usize];
        let target = from.neighbors()[rng.random_range(0..4)];
        let mut accepted = false;
        if !self.is_occupied(target) {
            let p = self.acceptance(self.move_energy_change(from, target));
            if p >= 1.0 || rng.random::<f64>() < p {
                self.occ[from.index()] = EMPTY;
                self.occ[target.index()] = i;
                self.positions[id as usize] = target;
                accepted = true;
            }
        }
        self.clocks.push(t + exp_wait(1.0, rng), id);
        StepOutcome {
            time: t,
            particle: i,
            from,
            target,
            accepted,
        }
    }

    /// Time of the next clock ring.
    pub fn next_time(&self) -> f64 {
        self.clocks.peek().map_or(f64::INFINITY, |(t, _)| t)
    }

    /// Panics unless the occupancy grid and particle array agree.
    pub fn assert_consistent(&self) {
        let filled = self.occ.iter().filter(|&&v| v != EMPTY).count();
        assert_eq!(filled, self.positions.len(), "particle conservation");
        for (i, p) in self.positions.iter().enumerate() {
            assert_eq!(self.occ[p.index()], i as u32, "exclusion / index mismatch at {p:?}");
        }
    }

    /// Nearest-neighbour clusters of occupied sites.
    pub fn clusters(&self) -> ClusterDecomposition {
        let mut uf = UnionFind::new(self.positions.len());
        for (i, p) in self.positions.iter().enumerate() {
            for q in [p.offset(1, 0), p.offset(0, 1)] {
                if let Some(j) = self.occupant(q) {
                    uf.union(i as u32, j);
                }
            }
        }
        let (labels, sizes) = uf.labels();
        ClusterDecomposition { labels, sizes }
    }

    /// Particle ids in the cluster containing `site` (empty if vacant).
    pub fn cluster_at(&self, site: TorusSite) -> Vec<u32> {
        let Some(start) = self.occupant(site) else {
            return Vec::new();
        };
        let mut seen = vec![start];
        let mut queue = VecDeque::from([site]);
        let mut mark = rustc_hash::FxHashSet::default();
        mark.insert(start);
        while let Some(s) = queue.pop_front() {
            for n in s.neighbors() {
                if let Some(j) = self.occupant(n) {
                    if mark.insert(j) {
                        seen.push(j);
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }

    /// Occupancy as run-length encoded rows: `.` empty, one letter per colour.
    pub fn to_rle(&self) -> String {
        let mut out = String::new();
        for y in 0..self.side {
            let mut run: Option<(char, u32)> = None;
            for x in 0..self.side {
                let s = TorusSite { x, y, side: self.side };
                let c = self.occupant(s).map_or('.', |i| self.colors[i as usize].glyph());
                run = match run {
                    Some((rc, k)) if rc == c => Some((rc, k + 1)),
                    Some((rc, k)) => {
                        push_run(&mut out, rc, k);
                        Some((c, 1))
                    }
                    None => Some((c, 1)),
                };
            }
            if let Some((rc, k)) = run {
                push_run(&mut out, rc, k);
            }
            out.push('\n');
        }
        out
    }
}

fn push_run(out: &mut String, c: char, k: u32) {
    if k > 1 {
        out.push_str(&k.to_string());
    }
    out.push(c);
}

/// Connected components of occupied sites under nearest-neighbour adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterDecomposition {
    /// Cluster id per particle.
    pub labels: Vec<u32>,
    pub sizes: Vec<u32>,
}

impl ClusterDecomposition {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

/// Colours every particle red whose cluster holds a red particle. Returns
/// the ids that changed.
pub fn propagate_red(state: &mut KawasakiState, clusters: &ClusterDecomposition) -> Vec<u32> {
    spread_tint(state, clusters, Tint::Red, Tint::Blue)
}

/// Recolours `from`-coloured particles sharing a cluster with a `tint` particle.
pub fn spread_tint(state: &mut KawasakiState, clusters: &ClusterDecomposition, tint: Tint, from: Tint) -> Vec<u32> {
    let mut hot = vec![false; clusters.count()];
    for (i, &c) in state.colors.iter().enumerate() {
        if c == tint {
            hot[clusters.labels[i] as usize] = true;
        }
    }
    let mut changed = Vec::new();
    for (i, c) in state.colors.iter_mut().enumerate() {
        if *c == from && hot[clusters.labels[i] as usize] {
            *c = tint;
            changed.push(i as u32);
        }
    }
    changed
}
