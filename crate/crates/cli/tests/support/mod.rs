//! Reference computations that share no code with the crates under test.

use std::collections::VecDeque;

/// `ln k!` for `k < n` by cumulative summation.
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(n: usize) -> Self {
        let mut v = Vec::with_capacity(n);
        let mut acc = 0.0;
        v.push(0.0);
        for k in 1..n {
            acc += (k as f64).ln();
            v.push(acc);
        }
        LnFactorials(v)
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }
}

fn ln_pmf(lf: &LnFactorials, mean: f64, k: usize) -> f64 {
    -mean + k as f64 * mean.ln() - lf.get(k)
}

/// `P(N >= threshold)` for `N ~ Poisson(mean)` by summing the pmf upward
/// until the terms vanish.
pub fn poisson_upper(mean: f64, threshold: f64) -> f64 {
    let lf = LnFactorials::new(4096);
    let start = threshold.max(0.0).ceil() as usize;
    let mut sum = 0.0;
    for k in start..4096 {
        let term = ln_pmf(&lf, mean, k).exp();
        sum += term;
        if k as f64 > mean && term < 1e-300 {
            break;
        }
    }
    sum
}

/// `P(N <= threshold)` by direct summation.
pub fn poisson_lower(mean: f64, threshold: f64) -> f64 {
    if threshold < 0.0 {
        return 0.0;
    }
    let lf = LnFactorials::new(4096);
    (0..=threshold.floor() as usize).map(|k| ln_pmf(&lf, mean, k).exp()).sum()
}

/// `e^{-a} I_n(a)` from the power series of the modified Bessel function,
/// summed in log space.
pub fn bessel_kernel(n: u32, a: f64, lf: &LnFactorials) -> f64 {
    if a == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n = n as usize;
    let lh = (a / 2.0).ln();
    let mut sum = 0.0;
    let mut k = 0usize;
    loop {
        let term = (-a + (2 * k + n) as f64 * lh - lf.get(k) - lf.get(k + n)).exp();
        sum += term;
        if k as f64 > a && term <= sum * 1e-18 {
            break;
        }
        k += 1;
    }
    sum
}

/// Component sizes of the occupied sites of an `side × side` torus under
/// nearest-neighbour adjacency, sorted.
pub fn flood_fill_sizes(occ: &[bool], side: usize) -> Vec<u32> {
    let mut seen = vec![false; occ.len()];
    let mut sizes = Vec::new();
    for start in 0..occ.len() {
        if !occ[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut n = 0;
        while let Some(i) = queue.pop_front() {
            n += 1;
            let (x, y) = (i % side, i / side);
            for (nx, ny) in [
                ((x + 1) % side, y),
                ((x + side - 1) % side, y),
                (x, (y + 1) % side),
                (x, (y + side - 1) % side),
            ] {
                let j = ny * side + nx;
                if occ[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(n);
    }
    sizes.sort();
    sizes
}

/// Largest particle count over every wrapped square box of side `1..=kmax`.
pub fn box_scan(occ: &[bool], side: usize, kmax: usize) -> u32 {
    let mut best = 0;
    for k in 1..=kmax.min(side) {
        for y0 in 0..side {
            for x0 in 0..side {
                let mut c = 0;
                for dy in 0..k {
                    for dx in 0..k {
                        c += occ[((y0 + dy) % side) * side + (x0 + dx) % side] as u32;
                    }
                }
                best = best.max(c);
            }
        }
    }
    best
}

/// Squared Euclidean distance on the torus.
pub fn torus_dist_sq(a: (usize, usize), b: (usize, usize), side: usize) -> f64 {
    let d = |u: usize, v: usize| {
        let d = u.abs_diff(v);
        d.min(side - d) as f64
    };
    d(a.0, b.0).powi(2) + d(a.1, b.1).powi(2)
}

/// Reachability under "balls of radius `r` overlap", closed by Floyd-Warshall.
#[allow(clippy::needless_range_loop)]
pub fn ball_closure(pos: &[(usize, usize)], r: f64, side: usize) -> Vec<Vec<bool>> {
    let n = pos.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = i == j || torus_dist_sq(pos[i], pos[j], side).sqrt() <= 2.0 * r;
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
    reach
}

/// Canonical weights `e^{βU·bonds}` of two particles on the torus, keyed by
/// the ordered site pair.
pub fn two_particle_weights(side: usize, beta: f64, u: f64) -> Vec<((usize, usize), f64)> {
    let vol = side * side;
    let mut out = Vec::new();
    for a in 0..vol {
        for b in (a + 1)..vol {
            let bonded = torus_dist_sq((a % side, a / side), (b % side, b / side), side) == 1.0;
            out.push(((a, b), (beta * u * bonded as u8 as f64).exp()));
        }
    }
    out
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

