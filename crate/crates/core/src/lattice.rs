//! Lattice geometry on `Z^d` (d = 1, 2, 3) and on the square periodic torus.
//!
//! Coordinates are integers; floating point only appears in norms and
//! distances. Unused trailing coordinates of a [`Site`] are always zero, so
//! sites of the same dimension compare and hash consistently.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    One,
    Two,
    Three,
}

impl Dim {
    pub fn get(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::InvalidConfig(format!(
                "dimension must be 1, 2 or 3, got {d}"
            ))),
        }
    }

    /// The `2d` nearest-neighbour unit displacements, ordered `+e1, -e1, +e2, ...`.
    pub fn unit_steps(self) -> &'static [Site] {
        const S1: [Site; 2] = [Site::raw([1, 0, 0]), Site::raw([-1, 0, 0])];
        const S2: [Site; 4] = [
            Site::raw([1, 0, 0]),
            Site::raw([-1, 0, 0]),
            Site::raw([0, 1, 0]),
            Site::raw([0, -1, 0]),
        ];
        const S3: [Site; 6] = [
            Site::raw([1, 0, 0]),
            Site::raw([-1, 0, 0]),
            Site::raw([0, 1, 0]),
            Site::raw([0, -1, 0]),
            Site::raw([0, 0, 1]),
            Site::raw([0, 0, -1]),
        ];
        match self {
            Dim::One => &S1,
            Dim::Two => &S2,
            Dim::Three => &S3,
        }
    }
}

impl TryFrom<u8> for Dim {
    type Error = Error;
    fn try_from(d: u8) -> Result<Self> {
        Dim::from_usize(d as usize)
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.get() as u8
    }
}

/// A point of `Z^d`, stored as a packed triple with zero padding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Site(pub [i32; 3]);

impl Site {
    pub const ORIGIN: Site = Site([0, 0, 0]);

    pub const fn raw(c: [i32; 3]) -> Self {
        Site(c)
    }

    /// Builds a site from 1 to 3 coordinates.
    pub fn new(coords: &[i32]) -> Self {
        assert!(
            (1..=3).contains(&coords.len()),
            "sites have 1 to 3 coordinates"
        );
        let mut c = [0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Site(c)
    }

    pub fn coords(&self, dim: Dim) -> &[i32] {
        &self.0[..dim.get()]
    }

    #[inline]
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|&x| (x as i64) * (x as i64)).sum()
    }

    #[inline]
    pub fn l1(&self) -> i64 {
        self.0.iter().map(|&x| (x as i64).abs()).sum()
    }
}

impl std::ops::Add for Site {
    type Output = Site;
    #[inline]
    fn add(self, o: Site) -> Site {
        Site([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl std::ops::Sub for Site {
    type Output = Site;
    #[inline]
    fn sub(self, o: Site) -> Site {
        Site([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl std::ops::Neg for Site {
    type Output = Site;
    #[inline]
    fn neg(self) -> Site {
        Site([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

#[inline]
pub fn euclidean_norm(z: Site) -> f64 {
    (z.norm_sq() as f64).sqrt()
}

/// Every site `z` with `|z - center| <= r`, in lexicographic order.
///
/// Fails with [`Error::Capacity`] when the bounding cube holds more than
/// `budget` sites.
pub fn ball_sites(center: Site, dim: Dim, r: f64, budget: usize) -> Result<Vec<Site>> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("ball radius must be >= 0, got {r}")));
    }
    let reach = r.floor() as i64;
    let side = (2 * reach + 1) as u128;
    let cube = side.pow(dim.get() as u32);
    if cube > budget as u128 {
        return Err(Error::Capacity {
            what: "ball enumeration",
            requested: cube.min(usize::MAX as u128) as usize,
            budget,
        });
    }
    // Compare squared integer norms against floor(r^2) to stay exact.
    let r2 = (r * r).floor() as i64;
    let reach = reach as i32;
    let span = |active: bool| if active { -reach..=reach } else { 0..=0 };
    let d = dim.get();
    let mut out = Vec::new();
    for x in span(true) {
        for y in span(d >= 2) {
            for z in span(d >= 3) {
                let off = Site([x, y, z]);
                if off.norm_sq() <= r2 {
                    out.push(center + off);
                }
            }
        }
    }
    Ok(out)
}

/// A site of the `side x side` periodic torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorusSite {
    pub x: u32,
    pub y: u32,
    pub side: u32,
}

impl TorusSite {
    #[inline]
    pub fn index(&self) -> usize {
        (self.y as usize) * (self.side as usize) + self.x as usize
    }

    #[inline]
    pub fn from_index(i: usize, side: u32) -> Self {
        TorusSite {
            x: (i % side as usize) as u32,
            y: (i / side as usize) as u32,
            side,
        }
    }

    /// The four nearest neighbours, ordered `+x, -x, +y, -y`.
    #[inline]
    pub fn neighbors(&self) -> [TorusSite; 4] {
        let l = self.side;
        let t = |x, y| TorusSite { x, y, side: l };
        [
            t(if self.x + 1 == l { 0 } else { self.x + 1 }, self.y),
            t(if self.x == 0 { l - 1 } else { self.x - 1 }, self.y),
            t(self.x, if self.y + 1 == l { 0 } else { self.y + 1 }),
            t(self.x, if self.y == 0 { l - 1 } else { self.y - 1 }),
        ]
    }

    pub fn offset(&self, dx: i64, dy: i64) -> TorusSite {
        torus_wrap((self.x as i64 + dx, self.y as i64 + dy), self.side)
    }
}

/// Reduces each coordinate modulo `side` into `[0, side)`.
pub fn torus_wrap(raw: (i64, i64), side: u32) -> TorusSite {
    assert!(side >= 1, "torus side must be >= 1");
    let l = side as i64;
    TorusSite {
        x: raw.0.rem_euclid(l) as u32,
        y: raw.1.rem_euclid(l) as u32,
        side,
    }
}

/// Signed minimal-image offset `b - a` along one axis.
#[inline]
pub fn torus_delta(a: u32, b: u32, side: u32) -> i64 {
    let l = side as i64;
    let d = (b as i64 - a as i64).rem_euclid(l);
    if 2 * d > l {
        d - l
    } else {
        d
    }
}

#[inline]
pub fn torus_distance_sq(a: TorusSite, b: TorusSite) -> i64 {
    debug_assert_eq!(a.side, b.side);
    let dx = torus_delta(a.x, b.x, a.side);
    let dy = torus_delta(a.y, b.y, a.side);
    dx * dx + dy * dy
}

/// Minimal Euclidean distance over periodic images.
pub fn torus_distance(a: TorusSite, b: TorusSite) -> f64 {
    (torus_distance_sq(a, b) as f64).sqrt()
}

/// Corner and side of a square (or cubic) box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub corner: Site,
    pub side: u32,
}

impl BoxSpec {
    pub fn new(corner: Site, side: u32) -> Result<Self> {
        if side == 0 {
            return Err(Error::Domain("box side must be >= 1".into()));
        }
        Ok(BoxSpec { corner, side })
    }

    /// A box of odd-ish side roughly centred on the origin.
    pub fn centered(dim: Dim, half_width: u32) -> Self {
        let h = half_width as i32;
        let mut c = [0; 3];
        for x in c.iter_mut().take(dim.get()) {
            *x = -h;
        }
        BoxSpec {
            corner: Site(c),
            side: 2 * half_width + 1,
        }
    }

    pub fn volume(&self, dim: Dim) -> u64 {
        (self.side as u64).pow(dim.get() as u32)
    }

    pub fn contains(&self, z: Site, dim: Dim) -> bool {
        (0..dim.get()).all(|k| {
            let rel = z.0[k] as i64 - self.corner.0[k] as i64;
            (0..self.side as i64).contains(&rel)
        })
    }

    /// Sites of the box in lexicographic order.
    pub fn sites(&self, dim: Dim) -> impl Iterator<Item = Site> + '_ {
        let n = self.volume(dim);
        let side = self.side as u64;
        let d = dim.get();
        (0..n).map(move |mut i| {
            let mut c = self.corner.0;
            for k in (0..d).rev() {
                c[k] += (i % side) as i32;
                i /= side;
            }
            Site(c)
        })
    }

    /// Periodic reduction of `z` into the box.
    pub fn wrap(&self, z: Site, dim: Dim) -> Site {
        let mut c = z.0;
        for (k, x) in c.iter_mut().enumerate().take(dim.get()) {
            let rel = (*x as i64 - self.corner.0[k] as i64).rem_euclid(self.side as i64);
            *x = self.corner.0[k] + rel as i32;
        }
        Site(c)
    }

    /// Torus-box membership test for a wrapped box on the `side` torus.
    pub fn contains_torus(&self, z: TorusSite) -> bool {
        let dx = (z.x as i64 - self.corner.0[0] as i64).rem_euclid(z.side as i64);
        let dy = (z.y as i64 - self.corner.0[1] as i64).rem_euclid(z.side as i64);
        dx < self.side as i64 && dy < self.side as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norms() {
        assert_eq!(euclidean_norm(Site::new(&[0, 0])), 0.0);
        assert_eq!(euclidean_norm(Site::new(&[3, 4])), 5.0);
        assert!((euclidean_norm(Site::new(&[1, 1, 1])) - 1.7320508).abs() < 1e-7);
    }

    #[test]
    fn unit_ball_2d() {
        let b = ball_sites(Site::ORIGIN, Dim::Two, 1.0, 1000).unwrap();
        assert_eq!(b.len(), 5);
        for s in [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert!(b.contains(&Site::new(&s)));
        }
    }

    #[test]
    fn ball_1d_and_radius_two() {
        let b = ball_sites(Site::ORIGIN, Dim::One, 2.5, 1000).unwrap();
        let xs: Vec<i32> = b.iter().map(|s| s.0[0]).collect();
        assert_eq!(xs, vec![-2, -1, 0, 1, 2]);

        // brute force over [-2, 2]^2
        let mut count = 0;
        for x in -2i32..=2 {
            for y in -2i32..=2 {
                if x * x + y * y <= 4 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 13);
        assert_eq!(ball_sites(Site::ORIGIN, Dim::Two, 2.0, 1000).unwrap().len(), 13);
    }

    #[test]
    fn ball_budget() {
        let err = ball_sites(Site::ORIGIN, Dim::Three, 50.0, 1000).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }

    #[test]
    fn wrap_examples() {
        let w = torus_wrap((9, -1), 8);
        assert_eq!((w.x, w.y), (1, 7));
        let w = torus_wrap((0, 0), 8);
        assert_eq!((w.x, w.y), (0, 0));
        let w = torus_wrap((16, 8), 8);
        assert_eq!((w.x, w.y), (0, 0));
    }

    #[test]
    fn distance_examples() {
        let a = torus_wrap((0, 0), 8);
        assert_eq!(torus_distance(a, torus_wrap((7, 0), 8)), 1.0);
        assert_eq!(torus_distance(a, a), 0.0);
        assert_eq!(torus_distance(a, torus_wrap((4, 4), 8)), 32f64.sqrt());
    }

    #[test]
    fn box_sites_and_wrap() {
        let b = BoxSpec::centered(Dim::Two, 2);
        assert_eq!(b.sites(Dim::Two).count(), 25);
        assert!(b.sites(Dim::Two).all(|s| b.contains(s, Dim::Two)));
        assert_eq!(b.wrap(Site::new(&[3, -3]), Dim::Two), Site::new(&[-2, 2]));
    }

    fn site_strategy() -> impl Strategy<Value = (Dim, Site)> {
        (1usize..=3, -4i32..=4, -4i32..=4, -4i32..=4).prop_map(|(d, x, y, z)| {
            let dim = Dim::from_usize(d).unwrap();
            let mut c = [x, y, z];
            for v in c.iter_mut().skip(d) {
                *v = 0;
            }
            (dim, Site(c))
        })
    }

    proptest! {
        #[test]
        fn ball_closed_under_symmetries((dim, center) in site_strategy(), r in 0.0f64..4.5) {
            let ball = ball_sites(center, dim, r, 100_000).unwrap();
            let set: std::collections::HashSet<Site> = ball.iter().copied().collect();
            let d = dim.get();
            for s in &ball {
                let off = *s - center;
                for k in 0..d {
                    let mut flipped = off;
                    flipped.0[k] = -flipped.0[k];
                    prop_assert!(set.contains(&(center + flipped)));
                    for j in 0..d {
                        let mut swapped = off;
                        swapped.0.swap(k, j);
                        prop_assert!(set.contains(&(center + swapped)));
                    }
                }
                prop_assert!(euclidean_norm(off) <= r + 1e-12);
            }
        }

        #[test]
        fn ball_size_monotone(d in 1usize..=3, r in 0.0f64..5.0, dr in 0.0f64..2.0) {
            let dim = Dim::from_usize(d).unwrap();
            let a = ball_sites(Site::ORIGIN, dim, r, 1_000_000).unwrap().len();
            let b = ball_sites(Site::ORIGIN, dim, r + dr, 1_000_000).unwrap().len();
            prop_assert!(a <= b);
        }

        #[test]
        fn torus_metric(
            side in 1u32..20,
            a in (-50i64..50, -50i64..50),
            b in (-50i64..50, -50i64..50),
            c in (-50i64..50, -50i64..50),
        ) {
            let (ta, tb, tc) = (torus_wrap(a, side), torus_wrap(b, side), torus_wrap(c, side));
            let dab = torus_distance(ta, tb);
            prop_assert_eq!(dab, torus_distance(tb, ta));
            prop_assert_eq!(torus_distance(ta, ta), 0.0);
            prop_assert!(dab <= torus_distance(ta, tc) + torus_distance(tc, tb) + 1e-9);
            let raw = (((b.0 - a.0).pow(2) + (b.1 - a.1).pow(2)) as f64).sqrt();
            prop_assert!(dab <= raw + 1e-9);
        }
    }
}
