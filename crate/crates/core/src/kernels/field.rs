//! Poisson initial configurations and seed selection.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{euclidean_norm, BoxSpec, Dim, Site};
use crate::rng::SimRng;

/// Independent Poisson(`density`) particle counts on every site of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonField {
    pub dim: Dim,
    pub window: BoxSpec,
    pub density: f64,
    /// Counts in the lexicographic site order of `window.sites(dim)`.
    pub counts: Vec<u32>,
    pub total: u64,
}

impl PoissonField {
    /// Non-empty sites with their counts.
    pub fn occupied(&self) -> impl Iterator<Item = (Site, u32)> + '_ {
        self.window
            .sites(self.dim)
            .zip(self.counts.iter().copied())
            .filter(|&(_, c)| c > 0)
    }

    /// A field built from explicit counts (e.g. a quenched configuration).
    pub fn from_counts(dim: Dim, window: BoxSpec, density: f64, counts: Vec<u32>) -> Result<Self> {
        if counts.len() as u64 != window.volume(dim) {
            return Err(Error::InvalidConfig(format!(
                "{} counts for a window of {} sites",
                counts.len(),
                window.volume(dim)
            )));
        }
        let total = counts.iter().map(|&c| c as u64).sum();
        Ok(PoissonField { dim, window, density, counts, total })
    }
}

pub fn sample_count(density: f64, rng: &mut SimRng) -> u32 {
    if density <= 0.0 {
        return 0;
    }
    Poisson::new(density).expect("positive mean").sample(rng) as u32
}

pub fn sample_poisson_field(density: f64, window: BoxSpec, dim: Dim, rng: &mut SimRng) -> Result<PoissonField> {
    if !(density >= 0.0 && density.is_finite()) {
        return Err(Error::Domain(format!("density must be finite and >= 0, got {density}")));
    }
    let n = window.volume(dim);
    let counts: Vec<u32> = (0..n).map(|_| sample_count(density, rng)).collect();
    let total = counts.iter().map(|&c| c as u64).sum();
    Ok(PoissonField { dim, window, density, counts, total })
}

/// How the initial red particle is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedRule {
    /// Uniformly among all sampled particles.
    #[default]
    UniformParticle,
    /// A particle on the occupied site closest to the origin (lexicographic
    /// tie break).
    NearestOrigin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialParticle {
    /// Position after recentring on the seed.
    pub position: Site,
    pub red: bool,
}

/// Initial configuration with the seed particle moved to the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededConfiguration {
    pub particles: Vec<InitialParticle>,
    /// Index of the chosen particle in `particles`.
    pub seed_index: usize,
    /// Original position of the seed; every position was shifted by its negative.
    pub seed_site: Site,
    /// Window after recentring.
    pub window: BoxSpec,
}

pub fn seed_particle_and_recenter(field: &PoissonField, rule: SeedRule, rng: &mut SimRng) -> Result<SeededConfiguration> {
    if field.total == 0 {
        return Err(Error::EmptyField);
    }
    let occupied: Vec<(Site, u32)> = field.occupied().collect();
    let (seed_site, seed_index) = match rule {
        SeedRule::UniformParticle => {
            let mut pick = rng.random_range(0..field.total);
            let mut idx = 0usize;
            let mut chosen = None;
            for &(s, c) in &occupied {
                if pick < c as u64 {
                    chosen = Some((s, idx + pick as usize));
                    break;
                }
                pick -= c as u64;
                idx += c as usize;
            }
            chosen.expect("pick below total")
        }
        SeedRule::NearestOrigin => {
            let mut idx = 0usize;
            let mut best: Option<(i64, Site, usize)> = None;
            for &(s, c) in &occupied {
                let key = s.norm_sq();
                if best.is_none_or(|(k, _, _)| key < k) {
                    best = Some((key, s, idx));
                }
                idx += c as usize;
            }
            let (_, s, i) = best.unwrap();
            (s, i)
        }
    };
    let particles = occupied
        .iter()
        .flat_map(|&(s, c)| {
            let position = s - seed_site;
            (0..c).map(move |_| InitialParticle {
                position,
                red: position == Site::ORIGIN,
            })
        })
        .collect();
    let window = BoxSpec {
        corner: field.window.corner - seed_site,
        side: field.window.side,
    };
    debug_assert!(euclidean_norm(Site::ORIGIN) == 0.0);
    Ok(SeededConfiguration { particles, seed_index, seed_site, window })
}
