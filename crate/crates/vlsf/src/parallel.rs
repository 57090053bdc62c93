//! Rayon wrappers around the core routines. Work is split into fixed chunks
//! and merged in chunk order, so results do not depend on the thread count.

use rayon::prelude::*;
use vlsf_core::channels::channel_stats;
use vlsf_core::mc_oracle::{info_density_hits, rlfc_rank_trials, RankTally, SimConfig};
use vlsf_core::sdo::{solve_at_delta, two_step_refine, SdoSolution, TwoStepOptions};
use vlsf_core::{Channel, Result};

const CHUNK: u64 = 4096;

fn chunks(trials: u64) -> Vec<std::ops::Range<u64>> {
    (0..trials).step_by(CHUNK as usize).map(|a| a..(a + CHUNK).min(trials)).collect()
}

/// Rank-process tallies over `cfg.trials` trials.
pub fn rank_tally(k: u32, p: f64, n_max: u64, cfg: &SimConfig) -> RankTally {
    let parts: Vec<RankTally> =
        chunks(cfg.trials).into_par_iter().map(|r| rlfc_rank_trials(k, p, n_max, cfg.seed, r)).collect();
    let mut total = RankTally::empty(n_max);
    for t in &parts {
        total.merge(t);
    }
    total
}

/// Counts of `Σ_{t≤n} ι_t ≥ γ` for `n = 1..=n_max`.
pub fn info_density_counts(ch: &Channel, gamma: f64, n_max: u64, cfg: &SimConfig) -> Vec<u64> {
    let parts: Vec<Vec<u64>> =
        chunks(cfg.trials).into_par_iter().map(|r| info_density_hits(ch, gamma, n_max, cfg.seed, r)).collect();
    let mut total = vec![0u64; n_max as usize];
    for part in &parts {
        for (a, b) in total.iter_mut().zip(part) {
            *a += b;
        }
    }
    total
}

/// Two-step minimization with the coarse `δ` grid evaluated in parallel.
pub fn two_step(ch: &Channel, m: usize, k: u32, eps: f64, opts: &TwoStepOptions) -> Result<(SdoSolution, f64)> {
    let stats = channel_stats(ch)?;
    let evaluated: Vec<_> =
        opts.delta_grid().into_par_iter().map(|d| (d, solve_at_delta(ch, &stats, m, k, eps, d, opts))).collect();
    two_step_refine(ch, &stats, m, k, eps, evaluated, opts)
}
