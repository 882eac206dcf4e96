use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::lattice::Site;

/// Occupants of one lattice site plus its red-zone entry time.
#[derive(Debug, Clone)]
pub struct Cell {
    pub reds: SmallVec<[u32; 4]>,
    pub blues: SmallVec<[u32; 2]>,
    /// First time a red particle stood here; `+inf` if never.
    pub entered: f64,
}

impl Default for Cell {
    fn default() -> Self {
        Cell {
            reds: SmallVec::new(),
            blues: SmallVec::new(),
            entered: f64::INFINITY,
        }
    }
}

/// Per-site occupancy index. The red zone's membership lives in the same
/// table (`Cell::entered`) so a landing costs one lookup.
pub type SiteTable = FxHashMap<Site, Cell>;

/// Running summary of the red zone: every site ever visited by a red particle.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RedZone {
    pub visited: u64,
    pub max_radius: f64,
    max_radius_sq: i64,
    /// `(time, radius)` each time the running maximum grew.
    pub radius_steps: Vec<(f64, f64)>,
}

impl RedZone {
    pub fn new() -> Self {
        RedZone {
            visited: 0,
            max_radius: 0.0,
            max_radius_sq: -1,
            radius_steps: Vec::new(),
        }
    }

    /// Records a newly visited site.
    pub fn record(&mut self, site: Site, t: f64) {
        self.visited += 1;
        let r2 = site.norm_sq();
        if r2 > self.max_radius_sq {
            self.max_radius_sq = r2;
            self.max_radius = (r2 as f64).sqrt();
            self.radius_steps.push((t, self.max_radius));
        }
    }

    /// Max radius of the zone as it stood at time `t` (`-inf` before the start).
    pub fn radius_at(&self, t: f64) -> f64 {
        let i = self.radius_steps.partition_point(|&(s, _)| s <= t);
        if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.radius_steps[i - 1].1
        }
    }
}

/// Removes one occurrence of `id`; order is not preserved.
#[inline]
pub(crate) fn remove_id<A: smallvec::Array<Item = u32>>(v: &mut SmallVec<A>, id: u32) {
    let pos = v.iter().position(|&x| x == id).expect("particle registered at its site");
    v.swap_remove(pos);
}
