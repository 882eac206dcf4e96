use crate::lattice::{torus_distance_sq, TorusSite};
use crate::unionfind::UnionFind;

/// Groups particles whose radius-`r` balls overlap, transitively. Returns a
/// cloud label per particle and the cloud sizes.
pub fn cloud_partition(positions: &[TorusSite], r: f64) -> (Vec<u32>, Vec<u32>) {
    let n = positions.len();
    let mut uf = UnionFind::new(n);
    let reach = 2.0 * r;
    let reach_sq = reach * reach;
    for i in 0..n {
        for j in (i + 1)..n {
            if (torus_distance_sq(positions[i], positions[j]) as f64) <= reach_sq {
                uf.union(i as u32, j as u32);
            }
        }
    }
    uf.labels()
}

/// Number of clouds with more than `cap` particles; each is logged.
pub fn overfull_clouds(sizes: &[u32], cap: f64, t: f64) -> usize {
    let mut bad = 0;
    for (c, &s) in sizes.iter().enumerate() {
        if s as f64 > cap {
            log::warn!("cloud {c} holds {s} particles (> λ = {cap:.3}) at t = {t:.3}");
            bad += 1;
        }
    }
    bad
}
