use std::collections::{HashMap, VecDeque};

use rbfront_core::kawasaki::cloud_partition;
use rbfront_core::kawasaki::{propagate_red, KawasakiState, Tint};
use rbfront_core::lattice::{torus_distance, TorusSite};
use rbfront_core::RngStream;

fn pair_key(s: &KawasakiState) -> (usize, usize) {
    let a = s.positions()[0].index();
    let b = s.positions()[1].index();
    (a.min(b), a.max(b))
}

fn adjacent(a: usize, b: usize, side: u32) -> bool {
    let (x, y) = (TorusSite::from_index(a, side), TorusSite::from_index(b, side));
    x.neighbors().contains(&y)
}

/// Batch-means comparison of per-event configuration frequencies with the
/// canonical weights on the 4×4 torus.
#[test]
fn two_particle_gas_is_gibbs() {
    let (side, beta, u) = (4u32, 1.0, 1.0);
    let mut rng = RngStream::new(17, 0).rng();
    let mut s = KawasakiState::uniform(side, 2, beta, u, &mut rng).unwrap();
    let batches = 60usize;
    let per_batch = 50_000usize;
    let mut freq: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for _ in 0..10_000 {
        s.step(&mut rng);
    }
    for b in 0..batches {
        for _ in 0..per_batch {
            s.step(&mut rng);
            freq.entry(pair_key(&s)).or_insert_with(|| vec![0.0; batches])[b] += 1.0 / per_batch as f64;
        }
    }
    let vol = (side * side) as usize;
    let mut weights = HashMap::new();
    for a in 0..vol {
        for b in (a + 1)..vol {
            let bonds = adjacent(a, b, side) as u8 as f64;
            weights.insert((a, b), (beta * u * bonds).exp());
        }
    }
    assert_eq!(weights.len(), 120);
    let z: f64 = weights.values().sum();
    for (key, w) in &weights {
        let p = w / z;
        let xs = freq.get(key).cloned().unwrap_or(vec![0.0; batches]);
        let m = xs.iter().sum::<f64>() / batches as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
        let se = (v / batches as f64).sqrt();
        assert!((m - p).abs() < 4.0 * se, "{key:?}: {m} vs {p} (se {se})");
    }
}

fn flood_fill_sizes(occ: &[bool], side: u32) -> Vec<u32> {
    let mut seen = vec![false; occ.len()];
    let mut sizes = Vec::new();
    for start in 0..occ.len() {
        if !occ[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        let mut n = 0;
        while let Some(i) = q.pop_front() {
            n += 1;
            for nb in TorusSite::from_index(i, side).neighbors() {
                let j = nb.index();
                if occ[j] && !seen[j] {
                    seen[j] = true;
                    q.push_back(j);
                }
            }
        }
        sizes.push(n);
    }
    sizes.sort();
    sizes
}

#[test]
fn clusters_match_flood_fill() {
    let mut rng = RngStream::new(5, 0).rng();
    for case in 0..200u32 {
        let side = 3 + case % 30;
        let vol = (side * side) as usize;
        let n = 1 + (case as usize * 7919) % vol;
        let s = KawasakiState::uniform(side, n, 1.0, 1.0, &mut rng).unwrap();
        let occ: Vec<bool> = (0..vol).map(|i| s.is_occupied(TorusSite::from_index(i, side))).collect();
        let mut ours = s.clusters().sizes;
        ours.sort();
        assert_eq!(ours, flood_fill_sizes(&occ, side));
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn clouds_match_transitive_closure() {
    let mut rng = RngStream::new(6, 0).rng();
    for case in 0..200u32 {
        let side = 20 + case % 40;
        let n = 2 + case as usize % 49;
        let s = KawasakiState::uniform(side, n, 1.0, 1.0, &mut rng).unwrap();
        let r = 0.5 + (case % 9) as f64;
        let pos = s.positions();
        // reachability matrix closed by Floyd-Warshall
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                reach[i][j] = i == j || torus_distance(pos[i], pos[j]) <= 2.0 * r;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        let (labels, _) = cloud_partition(pos, r);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(labels[i] == labels[j], reach[i][j]);
            }
        }
    }
}

#[test]
fn chain_joins_red_in_one_move() {
    // blue chain at x = 2..=5 on row 0, red at (0, 0); moving the red to
    // (1, 0) connects everything
    let side = 10;
    let sites: Vec<TorusSite> = [(0, 1), (2, 0), (3, 0), (4, 0), (5, 0)]
        .iter()
        .map(|&(x, y)| TorusSite { x, y, side })
        .collect();
    let mut rng = RngStream::new(0, 0).rng();
    let mut s = KawasakiState::new(side, 1.0, 0.0, &sites, &mut rng).unwrap();
    s.colors[0] = Tint::Red;
    let c = s.clusters();
    assert!(propagate_red(&mut s, &c).is_empty());
    let moved: Vec<TorusSite> = std::iter::once(TorusSite { x: 1, y: 0, side })
        .chain(sites[1..].iter().copied())
        .collect();
    let mut s2 = KawasakiState::new(side, 1.0, 0.0, &moved, &mut rng).unwrap();
    s2.colors[0] = Tint::Red;
    let c = s2.clusters();
    assert_eq!(propagate_red(&mut s2, &c).len(), 4);
    assert!(s2.colors.iter().all(|&c| c == Tint::Red));
}
