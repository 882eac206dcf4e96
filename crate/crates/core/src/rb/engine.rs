//! Event-driven simulation of red/blue processes on `Z^d`.
//!
//! All clocks are exponential, so the next event is drawn from the
//! superposition of the red clocks (rate 1 each), the tracked blue clocks and,
//! in lazy mode, the stream of untracked blue particles jumping into the red
//! zone. Deterministic blue shifts and observation times are scheduled in an
//! [`EventQueue`].
//!
//! In lazy mode a blue particle is only materialised when it first stands on a
//! site of the red zone, either because the zone grew onto its site or
//! because it jumped in. Until then its path cannot have met a red particle,
//! so it is independent of everything simulated so far. The untracked
//! particles form a Poisson process of paths restricted to those avoiding the
//! space-time red zone; each candidate is drawn from the stationary
//! (unconditioned) Poisson(ρ) flow and kept only if its time-reversed path
//! avoids the zone, which is an exact thinning of that restricted process.

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::config::{FieldMode, RbConfig};
use super::queue::EventQueue;
use super::trajectory::{ParticleSnapshot, RbTrajectory, RunStats, TraceSample};
use super::zone::{remove_id, RedZone, SiteTable};
use crate::error::{Error, Result};
use crate::kernels::blue::{exp_wait, gamma_wait, sum_jumps, sum_unit_steps, unit_step};
use crate::kernels::field::{sample_count, sample_poisson_field, seed_particle_and_recenter, InitialParticle};
use crate::kernels::BlueProcessSpec;
use crate::lattice::{euclidean_norm, BoxSpec, Site};
use crate::rng::{RngStream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Site,
    pub color: Color,
    /// Infection depth, starting at 1 for the seed; 0 while blue.
    pub generation: u32,
    /// Red particle whose site this one was infected on (lowest generation there).
    pub parent: Option<u32>,
    /// Position when the particle entered the simulation (initial position in
    /// window mode, activation site in lazy mode).
    pub first_site: Site,
    pub first_time: f64,
    pub infected_site: Option<Site>,
    pub infected_at: f64,
    /// Unwrapped displacement since `first_site`.
    pub displacement: Site,
    slot: u32,
}

/// Sites where untracked particles can enter the zone with a given jump:
/// `z` is listed when `z` is in the zone and `z - step` is not.
#[derive(Debug, Default)]
struct Boundary {
    step: Site,
    weight: f64,
    sites: Vec<Site>,
    index: FxHashMap<Site, u32>,
}

impl Boundary {
    fn insert(&mut self, z: Site) {
        if let std::collections::hash_map::Entry::Vacant(e) = self.index.entry(z) {
            e.insert(self.sites.len() as u32);
            self.sites.push(z);
        }
    }

    fn remove(&mut self, z: Site) {
        if let Some(i) = self.index.remove(&z) {
            let i = i as usize;
            self.sites.swap_remove(i);
            if i < self.sites.len() {
                self.index.insert(self.sites[i], i as u32);
            }
        }
    }
}

const SHIFT_EVENT: u64 = 0;
const SAMPLE_EVENT: u64 = 1;

pub struct RbSim {
    cfg: RbConfig,
    stream: RngStream,
    rng: SimRng,
    t: f64,
    particles: Vec<Particle>,
    reds: Vec<u32>,
    blues: Vec<u32>,
    table: SiteTable,
    zone: RedZone,
    window: Option<BoxSpec>,
    lazy: bool,
    cand_rate: f64,
    max_step: f64,
    boundaries: Vec<Boundary>,
    schedule: EventQueue,
    stats: RunStats,
    aborted: Option<f64>,
    /// Completed deterministic shifts.
    shifts_done: u64,
}

impl RbSim {
    /// Samples the initial configuration and places the seed at the origin.
    pub fn new(cfg: RbConfig, stream: RngStream) -> Result<Self> {
        cfg.validate()?;
        let mut rng = stream.rng();
        match cfg.field {
            FieldMode::Lazy => {
                let mut sim = Self::empty(cfg, stream, rng, None);
                // Palm distribution: the chosen particle plus an independent
                // Poisson(ρ) crowd on its site.
                let extra = sample_count(sim.cfg.density, &mut sim.rng);
                for _ in 0..=extra {
                    sim.create(Site::ORIGIN, Color::Red, 1, None)?;
                }
                sim.grow_zone(Site::ORIGIN);
                Ok(sim)
            }
            FieldMode::Window { half_width } => {
                let window = BoxSpec::centered(cfg.dim, half_width);
                let field = sample_poisson_field(cfg.density, window, cfg.dim, &mut rng)?;
                let seeded = seed_particle_and_recenter(&field, cfg.seed_rule, &mut rng)?;
                let mut sim = Self::empty(cfg, stream, rng, Some(seeded.window));
                sim.populate(&seeded.particles)?;
                Ok(sim)
            }
        }
    }

    /// Starts from an explicit configuration (positions already recentred so
    /// that the red seed is at the origin). `window`, when given, bounds the
    /// simulation as in [`FieldMode::Window`]; otherwise nothing outside the
    /// listed particles exists.
    pub fn from_particles(
        cfg: RbConfig,
        stream: RngStream,
        particles: &[InitialParticle],
        window: Option<BoxSpec>,
    ) -> Result<Self> {
        cfg.validate()?;
        let rng = stream.rng();
        let window = window.or(Some(BoxSpec::centered(cfg.dim, i32::MAX as u32 / 4)));
        let mut sim = Self::empty(cfg, stream, rng, window);
        sim.populate(particles)?;
        Ok(sim)
    }

    fn empty(cfg: RbConfig, stream: RngStream, rng: SimRng, window: Option<BoxSpec>) -> Self {
        let lazy = window.is_none();
        let mut boundaries = Vec::new();
        if lazy && cfg.blue.is_mobile() {
            let cand = cfg.blue.candidate_rate();
            match &cfg.blue {
                BlueProcessSpec::DeterministicShift { displacement, .. } => boundaries.push(Boundary {
                    step: *displacement,
                    ..Default::default()
                }),
                other => {
                    for (step, p) in other.jump_support(cfg.dim) {
                        boundaries.push(Boundary {
                            step,
                            weight: cfg.density * cand * p,
                            ..Default::default()
                        });
                    }
                }
            }
        }
        let mut schedule = EventQueue::new();
        if let BlueProcessSpec::DeterministicShift { period, .. } = cfg.blue {
            if cfg.blue.is_mobile() {
                schedule.push(period, SHIFT_EVENT);
            }
        }
        RbSim {
            cand_rate: cfg.blue.candidate_rate(),
            max_step: cfg.blue.max_step_norm(cfg.dim).max(1.0),
            cfg,
            stream,
            rng,
            t: 0.0,
            particles: Vec::new(),
            reds: Vec::new(),
            blues: Vec::new(),
            table: SiteTable::default(),
            zone: RedZone::new(),
            window,
            lazy,
            boundaries,
            schedule,
            stats: RunStats::default(),
            aborted: None,
            shifts_done: 0,
        }
    }

    fn populate(&mut self, particles: &[InitialParticle]) -> Result<()> {
        if !particles.iter().any(|p| p.red) {
            return Err(Error::EmptyField);
        }
        for p in particles {
            let red = p.position == Site::ORIGIN;
            debug_assert_eq!(red, p.red, "only particles at the origin start red");
            let color = if red { Color::Red } else { Color::Blue };
            self.create(p.position, color, if red { 1 } else { 0 }, None)?;
        }
        self.grow_zone(Site::ORIGIN);
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn zone(&self) -> &RedZone {
        &self.zone
    }

    pub fn red_count(&self) -> usize {
        self.reds.len()
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }

    /// Whether `site` has been visited by a red particle.
    pub fn in_zone(&self, site: Site) -> bool {
        self.entered(site).is_finite()
    }

    #[inline]
    fn entered(&self, site: Site) -> f64 {
        self.table.get(&site).map_or(f64::INFINITY, |c| c.entered)
    }

    fn create(&mut self, position: Site, color: Color, generation: u32, parent: Option<u32>) -> Result<u32> {
        if self.particles.len() >= self.cfg.particle_budget {
            return Err(Error::Capacity {
                what: "live particles",
                requested: self.particles.len() + 1,
                budget: self.cfg.particle_budget,
            });
        }
        let id = self.particles.len() as u32;
        let cell = self.table.entry(position).or_default();
        let slot = match color {
            Color::Red => {
                cell.reds.push(id);
                self.reds.push(id);
                self.reds.len() - 1
            }
            Color::Blue => {
                cell.blues.push(id);
                self.blues.push(id);
                self.blues.len() - 1
            }
        };
        let red = color == Color::Red;
        self.particles.push(Particle {
            position,
            color,
            generation,
            parent,
            first_site: position,
            first_time: self.t,
            infected_site: red.then_some(position),
            infected_at: if red { self.t } else { f64::INFINITY },
            displacement: Site::ORIGIN,
            slot: slot as u32,
        });
        Ok(id)
    }

    /// Lowest-generation red particle on `site` (lowest id on ties).
    fn lowest_red(&self, site: Site) -> Option<(u32, u32)> {
        let cell = self.table.get(&site)?;
        cell.reds
            .iter()
            .map(|&id| (self.particles[id as usize].generation, id))
            .min()
            .map(|(g, id)| (id, g))
    }

    fn make_red(&mut self, id: u32, generation: u32, parent: Option<u32>) {
        let p = &mut self.particles[id as usize];
        assert_eq!(p.color, Color::Blue, "red is absorbing");
        p.color = Color::Red;
        p.generation = generation;
        p.parent = parent;
        p.infected_at = self.t;
        p.infected_site = Some(p.position);
        let slot = p.slot as usize;
        let site = p.position;
        self.blues.swap_remove(slot);
        if slot < self.blues.len() {
            self.particles[self.blues[slot] as usize].slot = slot as u32;
        }
        self.particles[id as usize].slot = self.reds.len() as u32;
        self.reds.push(id);
        let cell = self.table.get_mut(&site).expect("occupied site");
        remove_id(&mut cell.blues, id);
        cell.reds.push(id);
        self.stats.infections += 1;
        self.stats.max_generation = self.stats.max_generation.max(generation);
    }

    /// Turns every blue particle on `site` red with generation
    /// `infector_generation + 1`. Returns the ids that changed colour.
    pub fn infect_site(&mut self, site: Site, infector_generation: u32) -> Vec<u32> {
        let parent = self.table.get(&site).and_then(|c| {
            c.reds
                .iter()
                .copied()
                .filter(|&id| self.particles[id as usize].generation == infector_generation)
                .min()
        });
        self.infect_site_from(site, infector_generation, parent)
    }

    fn infect_site_from(&mut self, site: Site, infector_generation: u32, parent: Option<u32>) -> Vec<u32> {
        let ids: Vec<u32> = match self.table.get(&site) {
            Some(c) if !c.blues.is_empty() => c.blues.to_vec(),
            _ => return Vec::new(),
        };
        for &id in &ids {
            self.make_red(id, infector_generation + 1, parent);
        }
        ids
    }

    fn infect_from_lowest(&mut self, site: Site) {
        if let Some((pid, g)) = self.lowest_red(site) {
            self.infect_site_from(site, g, Some(pid));
        }
    }

    /// Adds `site` to the red zone (no-op if already there).
    fn grow_zone(&mut self, site: Site) -> bool {
        let t = self.t;
        let cell = self.table.entry(site).or_default();
        if cell.entered.is_finite() {
            return false;
        }
        cell.entered = t;
        self.zone.record(site, t);
        for b in 0..self.boundaries.len() {
            let step = self.boundaries[b].step;
            if !self.in_zone(site - step) {
                self.boundaries[b].insert(site);
            }
            let ahead = site + step;
            if self.in_zone(ahead) {
                self.boundaries[b].remove(ahead);
            }
        }
        true
    }

    /// Moves red particle `id` by `step`, applying zone growth and infections.
    pub fn move_red(&mut self, id: u32, step: Site) -> Result<()> {
        let p = &self.particles[id as usize];
        assert_eq!(p.color, Color::Red);
        let old = p.position;
        let new = old + step;
        if let Some(w) = self.window {
            if !w.contains(new, self.cfg.dim) {
                self.aborted = Some(self.t);
                return Ok(());
            }
        }
        remove_id(&mut self.table.get_mut(&old).expect("occupied").reds, id);
        let p = &mut self.particles[id as usize];
        p.position = new;
        p.displacement = p.displacement + step;
        let cell = self.table.entry(new).or_default();
        cell.reds.push(id);
        self.stats.red_moves += 1;
        if self.grow_zone(new) && self.lazy {
            self.activate_on_growth(new)?;
        }
        if !self.table[&new].blues.is_empty() {
            self.infect_from_lowest(new);
        }
        Ok(())
    }

    /// Moves tracked blue particle `id` by `step`; it turns red if it lands on
    /// a red particle.
    pub fn move_blue(&mut self, id: u32, step: Site) {
        self.relocate_blue(id, step);
        let site = self.particles[id as usize].position;
        if !self.table[&site].reds.is_empty() {
            self.infect_from_lowest(site);
        }
    }

    fn relocate_blue(&mut self, id: u32, step: Site) {
        let p = &self.particles[id as usize];
        debug_assert_eq!(p.color, Color::Blue);
        let old = p.position;
        let mut new = old + step;
        if let Some(w) = self.window {
            new = w.wrap(new, self.cfg.dim);
        }
        remove_id(&mut self.table.get_mut(&old).expect("occupied").blues, id);
        let p = &mut self.particles[id as usize];
        p.position = new;
        p.displacement = p.displacement + step;
        self.table.entry(new).or_default().blues.push(id);
        self.stats.blue_moves += 1;
    }

    /// Untracked blues standing on a site the zone just reached.
    fn activate_on_growth(&mut self, site: Site) -> Result<()> {
        let n = sample_count(self.cfg.density, &mut self.rng);
        if n == 0 {
            return Ok(());
        }
        self.stats.growth_candidates += n as u64;
        let deterministic = matches!(
            self.cfg.blue,
            BlueProcessSpec::Frozen | BlueProcessSpec::DeterministicShift { .. }
        );
        let accepted = if deterministic {
            if self.path_avoids_zone(site, self.t) {
                n
            } else {
                0
            }
        } else {
            (0..n).filter(|_| self.path_avoids_zone(site, self.t)).count() as u32
        };
        if accepted == 0 {
            return Ok(());
        }
        self.stats.growth_accepted += accepted as u64;
        let (pid, g) = self.lowest_red(site).expect("a red just landed here");
        for _ in 0..accepted {
            self.create(site, Color::Red, g + 1, Some(pid))?;
            self.stats.infections += 1;
            self.stats.max_generation = self.stats.max_generation.max(g + 1);
        }
        Ok(())
    }

    /// Whether the time-reversed path of a blue particle standing at `start`
    /// just before time `t` avoided the red zone at all earlier times.
    fn path_avoids_zone(&mut self, start: Site, t: f64) -> bool {
        match &self.cfg.blue {
            BlueProcessSpec::Frozen => true,
            BlueProcessSpec::DeterministicShift { displacement, period } => {
                let (step, period) = (*displacement, *period);
                let mut cur = start;
                let mut hi = t;
                let mut n = self.shifts_done;
                loop {
                    if euclidean_norm(cur) <= self.zone.radius_at(hi) && self.entered(cur) < hi {
                        return false;
                    }
                    if n == 0 {
                        return true;
                    }
                    hi = n as f64 * period;
                    n -= 1;
                    cur = cur - step;
                }
            }
            _ => self.backward_walk(start, t),
        }
    }

    fn backward_walk(&mut self, start: Site, t: f64) -> bool {
        let dim = self.cfg.dim;
        let rate = self.cand_rate;
        let jump = self.max_step;
        let blue = self.cfg.blue.clone();
        let support = match &blue {
            BlueProcessSpec::LongRangeDrift { .. } => blue.jump_support(dim),
            _ => Vec::new(),
        };
        let mut cur = start;
        let mut hi = t;
        loop {
            let gap = euclidean_norm(cur) - self.zone.radius_at(hi);
            if gap > jump {
                // k more jumps cannot bring the walk back to any zone site
                let k = ((gap / jump).ceil() - 1.0) as u64;
                let dt = gamma_wait(k, rate, &mut self.rng);
                if hi - dt <= 0.0 {
                    return true;
                }
                let taken = match &blue {
                    BlueProcessSpec::TimeVaryingWalk { .. } => {
                        // thinning needs the individual candidate times
                        let mut u = hi;
                        let mut n = 0;
                        for _ in 0..k {
                            u -= exp_wait(rate, &mut self.rng);
                            if blue.accept_candidate(u.max(0.0), &mut self.rng) {
                                n += 1;
                            }
                        }
                        hi = u;
                        n
                    }
                    _ => {
                        hi -= dt;
                        k
                    }
                };
                if hi <= 0.0 {
                    return true;
                }
                // reversed-time displacements are the negated forward ones
                cur = match &blue {
                    BlueProcessSpec::LongRangeDrift { .. } => cur - sum_jumps(&support, taken, &mut self.rng),
                    _ => cur - sum_unit_steps(dim, taken, &mut self.rng),
                };
                continue;
            }
            if gap <= 0.0 && self.entered(cur) < hi {
                return false;
            }
            hi -= exp_wait(rate, &mut self.rng);
            if hi <= 0.0 {
                return true;
            }
            if blue.accept_candidate(hi, &mut self.rng) {
                cur = cur - blue.sample_displacement(dim, &mut self.rng);
            }
        }
    }

    /// An untracked blue particle jumps from outside the zone onto `target`.
    fn flux_event(&mut self, b: usize) -> Result<()> {
        let n = self.boundaries[b].sites.len();
        let target = self.boundaries[b].sites[self.rng.random_range(0..n)];
        let source = target - self.boundaries[b].step;
        self.stats.flux_candidates += 1;
        if !self.cfg.blue.accept_candidate(self.t, &mut self.rng) {
            return Ok(());
        }
        if !self.path_avoids_zone(source, self.t) {
            return Ok(());
        }
        self.stats.flux_accepted += 1;
        match self.lowest_red(target) {
            Some((pid, g)) => {
                self.create(target, Color::Red, g + 1, Some(pid))?;
                self.stats.infections += 1;
                self.stats.max_generation = self.stats.max_generation.max(g + 1);
            }
            None => {
                self.create(target, Color::Blue, 0, None)?;
            }
        }
        Ok(())
    }

    fn shift_event(&mut self) -> Result<()> {
        let BlueProcessSpec::DeterministicShift { displacement, .. } = self.cfg.blue else {
            return Ok(());
        };
        let moving = self.blues.clone();
        for &id in &moving {
            self.relocate_blue(id, displacement);
        }
        if self.lazy {
            let targets = self.boundaries[0].sites.clone();
            for z in targets {
                let n = sample_count(self.cfg.density, &mut self.rng);
                if n == 0 {
                    continue;
                }
                self.stats.flux_candidates += n as u64;
                if self.path_avoids_zone(z - displacement, self.t) {
                    self.stats.flux_accepted += n as u64;
                    for _ in 0..n {
                        self.create(z, Color::Blue, 0, None)?;
                    }
                }
            }
        }
        self.shifts_done += 1;
        let blues = self.blues.clone();
        for id in blues {
            let p = &self.particles[id as usize];
            if p.color == Color::Blue && !self.table[&p.position].reds.is_empty() {
                let site = p.position;
                self.infect_from_lowest(site);
            }
        }
        Ok(())
    }

    fn sample(&self) -> TraceSample {
        TraceSample {
            time: self.t,
            max_radius: self.zone.max_radius,
            n_red: self.reds.len() as u64,
            visited: self.zone.visited,
        }
    }

    fn check_containment(&self) {
        for &id in &self.reds {
            let p = &self.particles[id as usize];
            assert!(
                self.entered(p.position) <= self.t,
                "red particle {id} outside the red zone at t={}",
                self.t
            );
        }
    }

    /// Advances the process by one random event, or to `until` if no event
    /// occurs before it. Returns `false` when `until` was reached.
    pub fn step_until(&mut self, until: f64) -> Result<bool> {
        let n_red = self.reds.len() as f64;
        let blue_rate = self.blues.len() as f64 * self.cand_rate;
        let flux_rate: f64 = if self.lazy {
            self.boundaries.iter().map(|b| b.weight * b.sites.len() as f64).sum()
        } else {
            0.0
        };
        let total = n_red + blue_rate + flux_rate;
        let dt = exp_wait(total, &mut self.rng);
        if self.t + dt >= until {
            self.t = until;
            return Ok(false);
        }
        self.t += dt;
        self.stats.events += 1;
        let u = self.rng.random::<f64>() * total;
        if u < n_red {
            let id = self.reds[self.rng.random_range(0..self.reds.len())];
            let step = unit_step(self.cfg.dim, &mut self.rng);
            self.move_red(id, step)?;
        } else if u < n_red + blue_rate {
            let id = self.blues[self.rng.random_range(0..self.blues.len())];
            if self.cfg.blue.accept_candidate(self.t, &mut self.rng) {
                let step = self.cfg.blue.sample_displacement(self.cfg.dim, &mut self.rng);
                self.move_blue(id, step);
            }
        } else {
            let mut v = u - n_red - blue_rate;
            let mut pick = self.boundaries.len() - 1;
            for (i, b) in self.boundaries.iter().enumerate() {
                let w = b.weight * b.sites.len() as f64;
                if v < w {
                    pick = i;
                    break;
                }
                v -= w;
            }
            self.flux_event(pick)?;
        }
        Ok(true)
    }

    /// Runs to `t_max` and returns the observed trajectory.
    pub fn run(mut self) -> Result<RbTrajectory> {
        let times = self.cfg.grid.times(self.cfg.t_max);
        for (i, &t) in times.iter().enumerate() {
            self.schedule.push(t, SAMPLE_EVENT + i as u64);
        }
        let mut samples = Vec::with_capacity(times.len());
        while let Some((t_event, id)) = self.schedule.peek() {
            if self.step_until(t_event)? {
                if self.aborted.is_some() {
                    break;
                }
                continue;
            }
            self.schedule.pop();
            if id == SHIFT_EVENT {
                self.shift_event()?;
                if let BlueProcessSpec::DeterministicShift { period, .. } = self.cfg.blue {
                    let next = (self.shifts_done + 1) as f64 * period;
                    if next <= self.cfg.t_max {
                        self.schedule.push(next, SHIFT_EVENT);
                    }
                }
            } else {
                if self.cfg.check_invariants {
                    self.check_containment();
                }
                samples.push(self.sample());
            }
        }
        let final_time = self.aborted.unwrap_or(self.cfg.t_max);
        let particles = self.cfg.record_particles.then(|| {
            self.particles
                .iter()
                .enumerate()
                .map(|(i, p)| ParticleSnapshot {
                    id: i as u32,
                    position: p.position,
                    color: p.color,
                    generation: p.generation,
                    parent: p.parent,
                    first_site: p.first_site,
                    first_time: p.first_time,
                    infected_site: p.infected_site,
                    infected_at: p.infected_at.is_finite().then_some(p.infected_at),
                    displacement: p.displacement,
                })
                .collect()
        });
        let mut stats = self.stats;
        stats.live_particles = self.particles.len() as u64;
        stats.tracked_blue = self.blues.len() as u64;
        Ok(RbTrajectory {
            samples,
            final_time,
            aborted: self.aborted.is_some(),
            config: self.cfg,
            stream: self.stream,
            stats,
            particles,
        })
    }
}

/// Simulates one replica.
pub fn run_rb(cfg: &RbConfig, stream: RngStream) -> Result<RbTrajectory> {
    RbSim::new(cfg.clone(), stream)?.run()
}

impl std::fmt::Debug for RbSim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RbSim")
            .field("t", &self.t)
            .field("reds", &self.reds.len())
            .field("tracked_blues", &self.blues.len())
            .field("visited", &self.zone.visited)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Dim;

    fn frog_pair() -> RbSim {
        let cfg = RbConfig::frog(Dim::One, 1.0, 10.0);
        let parts = [
            InitialParticle {
                position: Site::ORIGIN,
                red: true,
            },
            InitialParticle {
                position: Site::new(&[1]),
                red: false,
            },
        ];
        RbSim::from_particles(cfg, RngStream::new(1, 0), &parts, None).unwrap()
    }

    #[test]
    fn zero_time_run() {
        for field in [FieldMode::Lazy, FieldMode::Window { half_width: 20 }] {
            let mut cfg = RbConfig::ks(Dim::Two, 0.7, 1.0, 0.0);
            cfg.field = field;
            let tr = run_rb(&cfg, RngStream::new(3, 0)).unwrap();
            let s = tr.sample_red_zone(0.0).unwrap();
            assert_eq!((s.visited, s.max_radius), (1, 0.0));
            assert!(s.n_red >= 1);
            assert!(tr.sample_red_zone(0.1).is_err());
        }
    }

    #[test]
    fn single_jump_infects() {
        let mut sim = frog_pair();
        sim.move_red(0, Site::new(&[1])).unwrap();
        let p = sim.particles();
        assert_eq!(p[1].color, Color::Red);
        assert_eq!(p[1].generation, 2);
        assert_eq!(p[1].parent, Some(0));
        assert_eq!(sim.red_count(), 2);
    }

    #[test]
    fn infect_site_counts() {
        let cfg = RbConfig::frog(Dim::One, 1.0, 10.0);
        let mut parts = vec![InitialParticle {
            position: Site::ORIGIN,
            red: true,
        }];
        for _ in 0..3 {
            parts.push(InitialParticle {
                position: Site::new(&[2]),
                red: false,
            });
        }
        let mut sim = RbSim::from_particles(cfg, RngStream::new(1, 0), &parts, None).unwrap();
        assert!(sim.infect_site(Site::new(&[5]), 1).is_empty());
        let ids = sim.infect_site(Site::new(&[2]), 1);
        assert_eq!(ids.len(), 3);
        assert!(ids.iter().all(|&i| sim.particles()[i as usize].generation == 2));
        assert!(sim.infect_site(Site::new(&[2]), 1).is_empty());
    }

    #[test]
    fn generation_chain() {
        let cfg = RbConfig::frog(Dim::One, 1.0, 10.0);
        let parts = [0, 2, 3].map(|x| InitialParticle {
            position: Site::new(&[x]),
            red: x == 0,
        });
        let mut sim = RbSim::from_particles(cfg, RngStream::new(1, 0), &parts, None).unwrap();
        let e = Site::new(&[1]);
        sim.move_red(0, e).unwrap();
        sim.move_red(0, e).unwrap();
        assert_eq!(sim.particles()[1].generation, 2);
        sim.move_red(1, e).unwrap();
        let g: Vec<u32> = sim.particles().iter().map(|p| p.generation).collect();
        assert_eq!(g, vec![1, 2, 3]);
    }

    #[test]
    fn lowest_generation_wins() {
        let cfg = RbConfig::frog(Dim::One, 1.0, 10.0);
        let parts = [0, 1, 2].map(|x| InitialParticle {
            position: Site::new(&[x]),
            red: x == 0,
        });
        let mut sim = RbSim::from_particles(cfg, RngStream::new(1, 0), &parts, None).unwrap();
        let e = Site::new(&[1]);
        sim.move_red(0, e).unwrap();
        sim.move_red(1, e).unwrap();
        assert_eq!(sim.particles()[2].generation, 3);
        let parts = [0, 1, 2, 3].map(|x| InitialParticle {
            position: Site::new(&[x]),
            red: x == 0,
        });
        let cfg = RbConfig::frog(Dim::One, 1.0, 10.0);
        let mut sim = RbSim::from_particles(cfg, RngStream::new(1, 0), &parts, None).unwrap();
        sim.move_red(0, e).unwrap();
        sim.move_red(1, e).unwrap();
        sim.move_red(2, e).unwrap();
        // generation-1 red arrives where a generation-3 red already sits
        sim.move_red(0, e).unwrap();
        sim.move_red(0, e).unwrap();
        assert_eq!(sim.particles()[3].generation, 4);
        let ids = sim.infect_site(Site::new(&[3]), 1);
        assert!(ids.is_empty());
    }

    #[test]
    fn blue_landing_on_red() {
        let cfg = RbConfig::ks(Dim::One, 1.0, 1.0, 10.0);
        let parts = [0, 2].map(|x| InitialParticle {
            position: Site::new(&[x]),
            red: x == 0,
        });
        let mut sim = RbSim::from_particles(cfg, RngStream::new(1, 0), &parts, None).unwrap();
        sim.move_blue(1, Site::new(&[-1]));
        assert_eq!(sim.particles()[1].color, Color::Blue);
        sim.move_blue(1, Site::new(&[-1]));
        assert_eq!(sim.particles()[1].color, Color::Red);
        assert_eq!(sim.particles()[1].generation, 2);
        assert!(!sim.in_zone(Site::new(&[1])));
    }

    fn check_trajectory(tr: &RbTrajectory) {
        for w in tr.samples.windows(2) {
            assert!(w[0].time <= w[1].time);
            assert!(w[0].n_red <= w[1].n_red);
            assert!(w[0].visited <= w[1].visited);
            assert!(w[0].max_radius <= w[1].max_radius);
        }
        let parts = tr.particles.as_ref().unwrap();
        for p in parts {
            match p.color {
                Color::Red => {
                    assert!(p.generation >= 1);
                    if let Some(q) = p.parent {
                        let q = &parts[q as usize];
                        assert_eq!(q.color, Color::Red);
                        assert!(p.generation == q.generation + 1);
                    } else {
                        assert_eq!(p.generation, 1);
                    }
                }
                Color::Blue => assert_eq!(p.generation, 0),
            }
        }
    }

    #[test]
    fn runs_respect_invariants() {
        let blues = [
            BlueProcessSpec::Frozen,
            BlueProcessSpec::SimpleWalk { rate: 0.5 },
            BlueProcessSpec::DeterministicShift {
                displacement: Site::new(&[1, 0]),
                period: 0.7,
            },
        ];
        for blue in blues {
            for field in [FieldMode::Lazy, FieldMode::Window { half_width: 60 }] {
                let mut cfg = RbConfig::new(Dim::Two, 0.8, blue.clone(), 15.0);
                cfg.field = field;
                if field != FieldMode::Lazy {
                    cfg.seed_rule = crate::kernels::SeedRule::NearestOrigin;
                }
                cfg.record_particles = true;
                cfg.check_invariants = true;
                let tr = run_rb(&cfg, RngStream::new(11, 2)).unwrap();
                assert!(!tr.aborted);
                assert!(tr.samples.last().unwrap().n_red > 1);
                check_trajectory(&tr);
            }
        }
    }

    #[test]
    fn frozen_blues_are_infected_in_place() {
        let mut cfg = RbConfig::frog(Dim::One, 0.5, 50.0);
        cfg.field = FieldMode::Window { half_width: 200 };
        cfg.record_particles = true;
        let tr = run_rb(&cfg, RngStream::new(5, 0)).unwrap();
        for p in tr.particles.unwrap() {
            if let (Some(site), true) = (p.infected_site, p.first_time == 0.0) {
                assert_eq!(site, p.first_site);
            }
            if p.color == Color::Blue {
                assert_eq!(p.displacement, Site::ORIGIN);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut cfg = RbConfig::ks(Dim::Two, 1.0, 1.0, 20.0);
        cfg.record_particles = true;
        let a = run_rb(&cfg, RngStream::new(9, 4)).unwrap();
        let b = run_rb(&cfg, RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
        let c = run_rb(&cfg, RngStream::new(9, 5)).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn small_window_aborts() {
        let mut cfg = RbConfig::ks(Dim::One, 2.0, 1.0, 100.0);
        cfg.field = FieldMode::Window { half_width: 3 };
        let tr = run_rb(&cfg, RngStream::new(2, 0)).unwrap();
        assert!(tr.aborted);
        assert!(tr.final_time < 100.0);
        assert!(tr.samples.last().unwrap().time <= tr.final_time);
    }

    #[test]
    fn budget_is_enforced() {
        let mut cfg = RbConfig::ks(Dim::Two, 5.0, 1.0, 50.0);
        cfg.particle_budget = 50;
        assert!(matches!(
            run_rb(&cfg, RngStream::new(1, 0)),
            Err(Error::Capacity { .. })
        ));
    }
}
