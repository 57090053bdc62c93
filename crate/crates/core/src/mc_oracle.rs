//! Seeded Monte Carlo estimates of information-density tails and of the
//! rank process of fountain coding over GF(2).
//!
//! Trial `i` draws from a ChaCha8 generator seeded with `seed` on stream `i`,
//! so any partition of the trial range gives the same tallies. Tallies are
//! integers and merge exactly.

use core::ops::Range;

use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, log, sqrt};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::channels::{biawgn_info_density, Channel};
use crate::error::{arg_err, Result};

/// Trial count and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(arg_err!("need at least one trial"));
        }
        Ok(SimConfig { trials, seed })
    }
}

/// Empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl TailEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        TailEstimate { p_hat: p, stderr: sqrt(p * (1.0 - p) / trials as f64), trials }
    }
}

/// Generator for trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform on `(0, 1]` with 53 random bits.
pub fn unit_open<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn bernoulli<R: RngCore>(rng: &mut R, p: f64) -> bool {
    unit_open(rng) <= p
}

/// Standard normal by Box–Muller, cosine branch only.
fn normal<R: RngCore>(rng: &mut R) -> f64 {
    let u1 = unit_open(rng);
    let u2 = unit_open(rng);
    sqrt(-2.0 * log(u1)) * cos(core::f64::consts::TAU * u2)
}

/// One information-density sample (bits) under uniform input.
pub fn sample_info_density<R: RngCore>(ch: &Channel, rng: &mut R) -> f64 {
    match *ch {
        Channel::BiAwgn { snr } => {
            let a = sqrt(snr);
            let x = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            let y = x * a + normal(rng);
            // ι depends on x·y only
            biawgn_info_density(a, x * y)
        }
        Channel::Bsc { p } => {
            if bernoulli(rng, p) {
                libm::log2(2.0 * p)
            } else {
                libm::log2(2.0 - 2.0 * p)
            }
        }
        Channel::Bec { p } => {
            if bernoulli(rng, p) {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Hits `Σ_{t≤n} ι_t ≥ γ` for every `n = 1..=n_max` over a trial range.
/// Entry `n − 1` counts trials whose sum at time `n` reaches `γ`.
pub fn info_density_hits(ch: &Channel, gamma: f64, n_max: u64, seed: u64, trials: Range<u64>) -> Vec<u64> {
    let mut hits = vec![0u64; n_max as usize];
    for t in trials {
        let mut rng = trial_rng(seed, t);
        let mut s = 0.0;
        for h in hits.iter_mut() {
            s += sample_info_density(ch, &mut rng);
            if s >= gamma {
                *h += 1;
            }
        }
    }
    hits
}

/// Estimate of `P[Σ_{t≤n} ι_t ≥ γ]`.
pub fn simulate_info_density_tail(ch: &Channel, gamma: f64, n: u64, cfg: &SimConfig) -> Result<TailEstimate> {
    ch.validate()?;
    if n == 0 {
        return Err(arg_err!("need n ≥ 1"));
    }
    let hits = info_density_hits(ch, gamma, n, cfg.seed, 0..cfg.trials);
    Ok(TailEstimate::from_counts(hits[n as usize - 1], cfg.trials))
}

/// Row-reduced basis of a GF(2) subspace of `{0,1}^64`, keyed by leading bit.
#[derive(Debug, Clone)]
pub struct Gf2Basis {
    rows: [u64; 64],
    rank: u32,
}

impl Default for Gf2Basis {
    fn default() -> Self {
        Gf2Basis { rows: [0; 64], rank: 0 }
    }
}

impl Gf2Basis {
    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Adds `v`; returns whether the rank grew.
    pub fn insert(&mut self, mut v: u64) -> bool {
        while v != 0 {
            let b = 63 - v.leading_zeros() as usize;
            if self.rows[b] == 0 {
                self.rows[b] = v;
                self.rank += 1;
                return true;
            }
            v ^= self.rows[b];
        }
        false
    }
}

/// Rank-process tallies over a range of trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTally {
    /// Entry `n` counts trials with full rank after `n` symbols.
    pub full_rank: Vec<u64>,
    pub trials: u64,
    pub tau_sum: u64,
    pub tau_sq_sum: u128,
}

impl RankTally {
    pub fn empty(n_max: u64) -> Self {
        RankTally { full_rank: vec![0; n_max as usize + 1], trials: 0, tau_sum: 0, tau_sq_sum: 0 }
    }

    pub fn merge(&mut self, other: &RankTally) {
        for (a, b) in self.full_rank.iter_mut().zip(&other.full_rank) {
            *a += b;
        }
        self.trials += other.trials;
        self.tau_sum += other.tau_sum;
        self.tau_sq_sum += other.tau_sq_sum;
    }

    /// Empirical `P[S_n = k]` for `n = 0..=n_max`.
    pub fn full_rank_freq(&self) -> Vec<TailEstimate> {
        self.full_rank.iter().map(|&h| TailEstimate::from_counts(h, self.trials)).collect()
    }

    pub fn mean_tau(&self) -> f64 {
        self.tau_sum as f64 / self.trials as f64
    }

    /// Standard error of the mean stopping time.
    pub fn tau_stderr(&self) -> f64 {
        let n = self.trials as f64;
        let mean = self.mean_tau();
        let var = (self.tau_sq_sum as f64 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        sqrt(var / n)
    }
}

/// Simulates systematic transmission of `k` bits followed by uniformly
/// drawn nonzero combinations over an erasure channel, for a trial range.
pub fn rlfc_rank_trials(k: u32, p: f64, n_max: u64, seed: u64, trials: Range<u64>) -> RankTally {
    let mut tally = RankTally::empty(n_max);
    let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    for t in trials {
        let mut rng = trial_rng(seed, t);
        let mut basis = Gf2Basis::default();
        let mut n = 0u64;
        while basis.rank() < k {
            n += 1;
            let erased = bernoulli(&mut rng, p);
            let g = if n <= k as u64 {
                1u64 << (n - 1)
            } else {
                loop {
                    let w = rng.next_u64() & mask;
                    if w != 0 {
                        break w;
                    }
                }
            };
            if !erased {
                basis.insert(g);
            }
        }
        for h in tally.full_rank.iter_mut().skip(n as usize) {
            *h += 1;
        }
        tally.trials += 1;
        tally.tau_sum += n;
        tally.tau_sq_sum += (n as u128) * (n as u128);
    }
    tally
}

/// Empirical full-rank curve and mean stopping time.
pub fn simulate_rlfc_rank(k: u32, p: f64, n_max: u64, cfg: &SimConfig) -> Result<RankTally> {
    if !(1..=64).contains(&k) {
        return Err(arg_err!("rank simulation needs 1 ≤ k ≤ 64, got {k}"));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(arg_err!("erasure probability must lie in [0, 1), got {p}"));
    }
    Ok(rlfc_rank_trials(k, p, n_max, cfg.seed, 0..cfg.trials))
}
