//! Red and blue single-particle dynamics.
//!
//! Red particles are rate-1 nearest-neighbour walks. Blue particles follow one
//! of a family of translation-invariant processes whose transition kernels are
//! bistochastic (they preserve the counting measure on `Z^d`).

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Dim, Site};
use crate::rng::SimRng;

/// Piecewise-constant jump rate, optionally repeating with a period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    /// `(start_time, rate)` pairs; the first must start at 0.
    pub pieces: Vec<(f64, f64)>,
    #[serde(default)]
    pub period: Option<f64>,
}

impl RateSchedule {
    pub fn constant(rate: f64) -> Self {
        RateSchedule {
            pieces: vec![(0.0, rate)],
            period: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("rate schedule: {m}")));
        if self.pieces.is_empty() || self.pieces[0].0 != 0.0 {
            return bad("the first piece must start at time 0");
        }
        if self.pieces.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return bad("piece start times must be strictly increasing");
        }
        if self.pieces.iter().any(|&(_, r)| !(r >= 0.0 && r.is_finite())) {
            return bad("rates must be finite and >= 0 (unbounded rates are rejected)");
        }
        if let Some(p) = self.period {
            if !(p > 0.0 && p.is_finite()) || self.pieces.last().unwrap().0 >= p {
                return bad("period must be positive and exceed the last piece start");
            }
        }
        Ok(())
    }

    /// Bounded envelope used for thinning.
    pub fn envelope(&self) -> f64 {
        self.pieces.iter().map(|&(_, r)| r).fold(0.0, f64::max)
    }

    fn local(&self, t: f64) -> f64 {
        match self.period {
            Some(p) => t.rem_euclid(p),
            None => t,
        }
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        let u = self.local(t);
        let i = self.pieces.partition_point(|&(s, _)| s <= u);
        self.pieces[i.saturating_sub(1)].1
    }

    /// Start of the constant piece containing `t` (in absolute time).
    fn piece_start(&self, t: f64) -> f64 {
        let u = self.local(t);
        let i = self.pieces.partition_point(|&(s, _)| s <= u).saturating_sub(1);
        t - (u - self.pieces[i].0)
    }
}

/// A displacement of a long-range jump law, with its probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub step: Site,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlueProcessSpec {
    /// Blue particles never move (frog model).
    Frozen,
    /// Nearest-neighbour walk at constant rate.
    SimpleWalk { rate: f64 },
    /// Nearest-neighbour walk with a bounded time-dependent rate.
    TimeVaryingWalk { schedule: RateSchedule },
    /// Walk with a finitely supported, possibly asymmetric jump law.
    LongRangeDrift { rate: f64, jumps: Vec<Jump> },
    /// Every blue moves by `displacement` at times `period, 2 period, ...`.
    DeterministicShift { displacement: Site, period: f64 },
}

impl BlueProcessSpec {
    pub fn validate(&self, dim: Dim) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let in_dim = |s: &Site| s.0.iter().skip(dim.get()).all(|&c| c == 0);
        match self {
            BlueProcessSpec::Frozen => Ok(()),
            BlueProcessSpec::SimpleWalk { rate } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return bad(format!("simple walk rate must be finite and >= 0, got {rate}"));
                }
                Ok(())
            }
            BlueProcessSpec::TimeVaryingWalk { schedule } => schedule.validate(),
            BlueProcessSpec::LongRangeDrift { rate, jumps } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return bad(format!("jump rate must be finite and >= 0, got {rate}"));
                }
                if jumps.is_empty() {
                    return bad("long-range jump law needs a finite, non-empty support".into());
                }
                if jumps.iter().any(|j| !(j.prob >= 0.0) || !in_dim(&j.step)) {
                    return bad("jump probabilities must be >= 0 and steps must fit the dimension".into());
                }
                let total: f64 = jumps.iter().map(|j| j.prob).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("jump probabilities sum to {total}, expected 1"));
                }
                Ok(())
            }
            BlueProcessSpec::DeterministicShift { displacement, period } => {
                if !(*period > 0.0 && period.is_finite()) {
                    return bad(format!("shift period must be positive, got {period}"));
                }
                if !in_dim(displacement) {
                    return bad("shift displacement must fit the dimension".into());
                }
                Ok(())
            }
        }
    }

    /// Whether blue particles ever move.
    pub fn is_mobile(&self) -> bool {
        match self {
            BlueProcessSpec::Frozen => false,
            BlueProcessSpec::SimpleWalk { rate } => *rate > 0.0,
            BlueProcessSpec::TimeVaryingWalk { schedule } => schedule.envelope() > 0.0,
            BlueProcessSpec::LongRangeDrift { rate, jumps } => {
                *rate > 0.0 && jumps.iter().any(|j| j.prob > 0.0 && j.step != Site::ORIGIN)
            }
            BlueProcessSpec::DeterministicShift { displacement, .. } => {
                *displacement != Site::ORIGIN
            }
        }
    }

    /// Per-particle rate of candidate jump events (the thinning envelope for
    /// time-varying walks). Deterministic shifts are scheduled, not random.
    pub fn candidate_rate(&self) -> f64 {
        match self {
            BlueProcessSpec::SimpleWalk { rate } => *rate,
            BlueProcessSpec::TimeVaryingWalk { schedule } => schedule.envelope(),
            BlueProcessSpec::LongRangeDrift { rate, .. } => *rate,
            BlueProcessSpec::Frozen | BlueProcessSpec::DeterministicShift { .. } => 0.0,
        }
    }

    /// Thinning acceptance of a candidate jump at time `t`.
    pub fn accept_candidate(&self, t: f64, rng: &mut SimRng) -> bool {
        match self {
            BlueProcessSpec::TimeVaryingWalk { schedule } => {
                let env = schedule.envelope();
                rng.random::<f64>() * env < schedule.rate_at(t)
            }
            _ => true,
        }
    }

    /// Displacements a random jump can make, with probabilities.
    pub fn jump_support(&self, dim: Dim) -> Vec<(Site, f64)> {
        match self {
            BlueProcessSpec::SimpleWalk { .. } | BlueProcessSpec::TimeVaryingWalk { .. } => {
                let steps = dim.unit_steps();
                let p = 1.0 / steps.len() as f64;
                steps.iter().map(|&s| (s, p)).collect()
            }
            BlueProcessSpec::LongRangeDrift { jumps, .. } => jumps
                .iter()
                .filter(|j| j.prob > 0.0 && j.step != Site::ORIGIN)
                .map(|j| (j.step, j.prob))
                .collect(),
            BlueProcessSpec::Frozen | BlueProcessSpec::DeterministicShift { .. } => Vec::new(),
        }
    }

    /// Largest Euclidean length of a single move.
    pub fn max_step_norm(&self, dim: Dim) -> f64 {
        match self {
            BlueProcessSpec::DeterministicShift { displacement, .. } => {
                crate::lattice::euclidean_norm(*displacement)
            }
            _ => self
                .jump_support(dim)
                .iter()
                .map(|(s, _)| crate::lattice::euclidean_norm(*s))
                .fold(0.0, f64::max),
        }
    }

    /// Displacement of one accepted jump.
    pub fn sample_displacement(&self, dim: Dim, rng: &mut SimRng) -> Site {
        match self {
            BlueProcessSpec::SimpleWalk { .. } | BlueProcessSpec::TimeVaryingWalk { .. } => {
                unit_step(dim, rng)
            }
            BlueProcessSpec::LongRangeDrift { jumps, .. } => {
                let mut u = rng.random::<f64>();
                for j in jumps {
                    if u < j.prob {
                        return j.step;
                    }
                    u -= j.prob;
                }
                jumps.last().map(|j| j.step).unwrap_or(Site::ORIGIN)
            }
            BlueProcessSpec::DeterministicShift { displacement, .. } => *displacement,
            BlueProcessSpec::Frozen => Site::ORIGIN,
        }
    }
}

/// One scheduled move of a single particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    /// Absolute time of the move; `+inf` when the particle never moves again.
    pub time: f64,
    pub displacement: Site,
}

#[inline]
pub fn unit_step(dim: Dim, rng: &mut SimRng) -> Site {
    let steps = dim.unit_steps();
    steps[rng.random_range(0..steps.len())]
}

#[inline]
pub fn exp_wait(rate: f64, rng: &mut SimRng) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    Exp::new(rate).expect("positive rate").sample(rng)
}

/// Next move of a red particle: exponential(1) wait, uniform neighbour.
pub fn red_step(dim: Dim, t_now: f64, rng: &mut SimRng) -> StepEvent {
    StepEvent {
        time: t_now + exp_wait(1.0, rng),
        displacement: unit_step(dim, rng),
    }
}

/// Next move of a blue particle following `spec`.
pub fn blue_step(spec: &BlueProcessSpec, dim: Dim, t_now: f64, rng: &mut SimRng) -> StepEvent {
    let never = StepEvent {
        time: f64::INFINITY,
        displacement: Site::ORIGIN,
    };
    match spec {
        BlueProcessSpec::Frozen => never,
        BlueProcessSpec::SimpleWalk { rate } | BlueProcessSpec::LongRangeDrift { rate, .. } => {
            if *rate <= 0.0 {
                return never;
            }
            StepEvent {
                time: t_now + exp_wait(*rate, rng),
                displacement: spec.sample_displacement(dim, rng),
            }
        }
        BlueProcessSpec::TimeVaryingWalk { schedule } => {
            let env = schedule.envelope();
            if env <= 0.0 {
                return never;
            }
            let mut t = t_now;
            // A periodic schedule with a zero-rate gap still fires eventually;
            // an aperiodic one whose tail rate is 0 may never fire.
            let tail_dead = schedule.period.is_none() && schedule.pieces.last().unwrap().1 == 0.0;
            loop {
                t += exp_wait(env, rng);
                if tail_dead && t >= schedule.pieces.last().unwrap().0 {
                    return never;
                }
                if spec.accept_candidate(t, rng) {
                    return StepEvent {
                        time: t,
                        displacement: unit_step(dim, rng),
                    };
                }
            }
        }
        BlueProcessSpec::DeterministicShift { displacement, period } => StepEvent {
            time: ((t_now / period).floor() + 1.0) * period,
            displacement: *displacement,
        },
    }
}

/// Sum of `k` i.i.d. unit nearest-neighbour steps, in O(1) per axis.
pub fn sum_unit_steps(dim: Dim, k: u64, rng: &mut SimRng) -> Site {
    fn pm_walk(n: u64, rng: &mut SimRng) -> i32 {
        if n == 0 {
            return 0;
        }
        // fair coin counts by popcount for short walks
        let up = if n <= 1024 {
            let mut up = 0u64;
            let mut left = n;
            while left > 0 {
                let take = left.min(64);
                let mask = if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
                up += (rng.next_u64() & mask).count_ones() as u64;
                left -= take;
            }
            up
        } else {
            Binomial::new(n, 0.5).unwrap().sample(rng)
        };
        (2 * up as i64 - n as i64) as i32
    }
    match dim {
        Dim::One => Site([pm_walk(k, rng), 0, 0]),
        // In rotated coordinates u = x + y, v = x - y each step moves both by ±1
        // independently.
        Dim::Two => {
            let u = pm_walk(k, rng);
            let v = pm_walk(k, rng);
            Site([(u + v) / 2, (u - v) / 2, 0])
        }
        Dim::Three => {
            let kx = if k == 0 { 0 } else { Binomial::new(k, 1.0 / 3.0).unwrap().sample(rng) };
            let rest = k - kx;
            let ky = if rest == 0 { 0 } else { Binomial::new(rest, 0.5).unwrap().sample(rng) };
            let kz = rest - ky;
            Site([pm_walk(kx, rng), pm_walk(ky, rng), pm_walk(kz, rng)])
        }
    }
}

/// Sum of `k` i.i.d. draws from a finite jump law, via sequential binomials.
pub fn sum_jumps(support: &[(Site, f64)], k: u64, rng: &mut SimRng) -> Site {
    let mut left = k;
    let mut mass = 1.0;
    let mut acc = Site::ORIGIN;
    for (i, &(step, p)) in support.iter().enumerate() {
        if left == 0 {
            break;
        }
        let n = if i + 1 == support.len() || mass <= p {
            left
        } else {
            Binomial::new(left, (p / mass).clamp(0.0, 1.0)).unwrap().sample(rng)
        };
        left -= n;
        mass -= p;
        let n = n as i32;
        acc = acc + Site([step.0[0] * n, step.0[1] * n, step.0[2] * n]);
    }
    acc
}

/// Time taken by `k` jumps of a rate-`rate` Poisson clock.
pub fn gamma_wait(k: u64, rate: f64, rng: &mut SimRng) -> f64 {
    match k {
        0 => 0.0,
        1 => exp_wait(rate, rng),
        _ => Gamma::new(k as f64, 1.0 / rate).unwrap().sample(rng),
    }
}

/// Helper for backward path sampling of time-varying walks: the constant
/// rate in force just before time `t` and the start of that piece.
pub fn rate_piece_before(schedule: &RateSchedule, t: f64) -> (f64, f64) {
    let probe = (t - 1e-12 * t.abs().max(1.0)).max(0.0);
    (schedule.rate_at(probe), schedule.piece_start(probe).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn frozen_never_fires() {
        let mut rng = RngStream::new(1, 0).rng();
        let e = blue_step(&BlueProcessSpec::Frozen, Dim::Two, 3.0, &mut rng);
        assert!(e.time.is_infinite());
    }

    #[test]
    fn shift_fires_on_schedule() {
        let spec = BlueProcessSpec::DeterministicShift {
            displacement: Site::new(&[1, 0]),
            period: 1.0,
        };
        let mut rng = RngStream::new(1, 0).rng();
        let e = blue_step(&spec, Dim::Two, 0.0, &mut rng);
        assert_eq!(e.time, 1.0);
        assert_eq!(e.displacement, Site::new(&[1, 0]));
        assert_eq!(blue_step(&spec, Dim::Two, 1.0, &mut rng).time, 2.0);
    }

    #[test]
    fn simple_walk_mean_wait() {
        let spec = BlueProcessSpec::SimpleWalk { rate: 1.0 };
        let mut rng = RngStream::new(7, 0).rng();
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| blue_step(&spec, Dim::Two, 0.0, &mut rng).time)
            .sum::<f64>()
            / n as f64;
        // exponential(1): sd of the mean is 1/sqrt(n) ~ 0.0032
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn red_step_laws() {
        let mut rng = RngStream::new(11, 3).rng();
        for _ in 0..1000 {
            let e = red_step(Dim::One, 0.0, &mut rng);
            assert!(e.displacement == Site::new(&[1]) || e.displacement == Site::new(&[-1]));
        }
        let n = 1_000_000;
        let mut counts = [0usize; 4];
        let mut wait = 0.0;
        for _ in 0..n {
            let e = red_step(Dim::Two, 0.0, &mut rng);
            wait += e.time;
            let i = Dim::Two.unit_steps().iter().position(|&s| s == e.displacement).unwrap();
            counts[i] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.005);
        }
        assert!((wait / n as f64 - 1.0).abs() < 0.01);
    }

    #[test]
    fn time_varying_thinning_rate() {
        // rate 2 on [0,1), 0 on [1,2), periodic: mean rate 1
        let spec = BlueProcessSpec::TimeVaryingWalk {
            schedule: RateSchedule {
                pieces: vec![(0.0, 2.0), (1.0, 0.0)],
                period: Some(2.0),
            },
        };
        spec.validate(Dim::One).unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        let mut t = 0.0;
        let mut n = 0;
        while t < 20_000.0 {
            let e = blue_step(&spec, Dim::One, t, &mut rng);
            t = e.time;
            assert!(t.rem_euclid(2.0) < 1.0, "jump during the zero-rate phase");
            n += 1;
        }
        let rate = n as f64 / 20_000.0;
        assert!((rate - 1.0).abs() < 0.03, "{rate}");
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let unbounded = BlueProcessSpec::TimeVaryingWalk {
            schedule: RateSchedule::constant(f64::INFINITY),
        };
        assert!(unbounded.validate(Dim::Two).is_err());
        let bad_law = BlueProcessSpec::LongRangeDrift {
            rate: 1.0,
            jumps: vec![Jump { step: Site::new(&[2, 0]), prob: 0.7 }],
        };
        assert!(bad_law.validate(Dim::Two).is_err());
        let wrong_dim = BlueProcessSpec::DeterministicShift {
            displacement: Site::new(&[0, 1]),
            period: 1.0,
        };
        assert!(wrong_dim.validate(Dim::One).is_err());
    }

    #[test]
    fn multi_step_sums_match_moments() {
        let mut rng = RngStream::new(2, 0).rng();
        for dim in [Dim::One, Dim::Two, Dim::Three] {
            let k = 37u64;
            let n = 20_000;
            let mut sq = 0.0;
            for _ in 0..n {
                let s = sum_unit_steps(dim, k, &mut rng);
                assert_eq!(s.l1() % 2, (k % 2) as i64, "parity");
                assert!(s.l1() <= k as i64);
                sq += s.norm_sq() as f64;
            }
            // E|S_k|^2 = k for unit steps
            assert!((sq / n as f64 - k as f64).abs() < 1.5, "{dim:?}");
        }
        let law = vec![(Site::new(&[2, 0]), 0.5), (Site::new(&[-1, 1]), 0.5)];
        let mut mean = [0.0; 2];
        for _ in 0..20_000 {
            let s = sum_jumps(&law, 10, &mut rng);
            mean[0] += s.0[0] as f64;
            mean[1] += s.0[1] as f64;
        }
        assert!((mean[0] / 20_000.0 - 5.0).abs() < 0.1);
        assert!((mean[1] / 20_000.0 - 5.0).abs() < 0.1);
    }
}
