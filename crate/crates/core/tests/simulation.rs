#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use vlsf_core::bounds::{rank_full_probs, rank_markov, st_rlfc_zero_error_bound};
use vlsf_core::channels::tail_exact_bsc;
use vlsf_core::mc_oracle::{
    rlfc_rank_trials, simulate_info_density_tail, simulate_rlfc_rank, Gf2Basis, RankTally, SimConfig,
};
use vlsf_core::special::normal_sf;
use vlsf_core::Channel;

/// Rank of 0/1 rows by textbook elimination on a dense matrix.
fn naive_rank(rows: &[u8], width: usize) -> usize {
    let mut m: Vec<Vec<u8>> = rows.iter().map(|r| (0..width).map(|b| (r >> b) & 1).collect()).collect();
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] == 1) else { continue };
        m.swap(rank, pivot);
        for r in 0..m.len() {
            if r != rank && m[r][col] == 1 {
                for c in 0..width {
                    m[r][c] ^= m[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

proptest! {
    #[test]
    fn basis_rank_matches_elimination(width in 1usize..=8, rows in prop::collection::vec(any::<u8>(), 0..12)) {
        let mask = if width == 8 { 0xff } else { (1u8 << width) - 1 };
        let rows: Vec<u8> = rows.into_iter().map(|r| r & mask).collect();
        let mut basis = Gf2Basis::default();
        for &r in &rows {
            basis.insert(r as u64);
        }
        prop_assert_eq!(basis.rank() as usize, naive_rank(&rows, width));
    }
}

#[test]
fn runs_are_reproducible_and_split_invariant() {
    let a = rlfc_rank_trials(6, 0.4, 40, 99, 0..5000);
    let b = rlfc_rank_trials(6, 0.4, 40, 99, 0..5000);
    assert_eq!(a, b);
    let mut merged = RankTally::empty(40);
    for r in [0..1234, 1234..1235, 1235..5000] {
        merged.merge(&rlfc_rank_trials(6, 0.4, 40, 99, r));
    }
    assert_eq!(merged, a);
    assert_ne!(rlfc_rank_trials(6, 0.4, 40, 100, 0..5000), a);
}

#[test]
fn no_erasures_means_rank_at_k() {
    let t = simulate_rlfc_rank(9, 0.0, 20, &SimConfig::new(2000, 3).unwrap()).unwrap();
    assert_eq!(t.mean_tau(), 9.0);
    assert!(t.full_rank[..9].iter().all(|&c| c == 0));
    assert!(t.full_rank[9..].iter().all(|&c| c == 2000));
}

#[test]
fn single_bit_follows_the_geometric_law() {
    let trials = 100_000;
    let t = simulate_rlfc_rank(1, 0.6, 8, &SimConfig::new(trials, 11).unwrap()).unwrap();
    for (n, est) in t.full_rank_freq().iter().enumerate().skip(1) {
        let q = 1.0 - 0.6f64.powi(n as i32);
        let se = (q * (1.0 - q) / trials as f64).sqrt();
        assert!((est.p_hat - q).abs() <= 3.0 * se, "n = {n}: {} vs {q}", est.p_hat);
    }
}

#[test]
fn mean_stopping_time_matches_the_closed_form() {
    let t = simulate_rlfc_rank(8, 0.5, 0, &SimConfig::new(100_000, 5).unwrap()).unwrap();
    let exact = st_rlfc_zero_error_bound(8, 0.5).unwrap();
    assert!((t.mean_tau() - exact).abs() <= 3.0 * t.tau_stderr(), "{} ± {} vs {exact}", t.mean_tau(), t.tau_stderr());
}

/// Every point of the full-rank curve at once, at family-wise level 1e-3
/// (Bonferroni), on points where the normal approximation to the binomial
/// count is usable.
#[test]
fn full_rank_curve_matches_simulation_family_wise() {
    let trials = 1_000_000u64;
    for (k, p) in [(4u32, 0.5), (8, 0.5), (8, 0.2)] {
        let n_max = (4.0 * k as f64 / (1.0 - p)) as u64;
        let model = rank_full_probs(&rank_markov(k, p).unwrap(), n_max);
        let sim = simulate_rlfc_rank(k, p, n_max, &SimConfig::new(trials, 2024).unwrap()).unwrap();
        let usable: Vec<usize> =
            (0..=n_max as usize).filter(|&n| trials as f64 * model[n].min(1.0 - model[n]) >= 10.0).collect();
        let alpha = 1e-3 / usable.len() as f64;
        let z_max = (1..200).map(|i| i as f64 * 0.05).find(|&z| 2.0 * normal_sf(z) <= alpha).unwrap();
        for &n in &usable {
            let q = model[n];
            let z = (sim.full_rank[n] as f64 / trials as f64 - q).abs() / (q * (1.0 - q) / trials as f64).sqrt();
            assert!(z <= z_max, "(k={k}, p={p}) n = {n}: z = {z:.2} > {z_max:.2}");
        }
    }
}

#[test]
fn bsc_tail_simulation_within_three_standard_errors() {
    let (p, gamma, n) = (0.11, 8.0, 24u64);
    let est = simulate_info_density_tail(&Channel::Bsc { p }, gamma, n, &SimConfig::new(200_000, 17).unwrap()).unwrap();
    let q = tail_exact_bsc(n, gamma, p);
    assert!((est.p_hat - q).abs() <= 3.0 * est.stderr, "{} ± {} vs {q}", est.p_hat, est.stderr);
}

#[test]
fn nonpositive_threshold_is_always_crossed_on_the_bec() {
    let est = simulate_info_density_tail(&Channel::Bec { p: 0.7 }, 0.0, 5, &SimConfig::new(1000, 1).unwrap()).unwrap();
    assert_eq!(est.p_hat, 1.0);
}

#[test]
fn zero_trials_are_rejected() {
    assert!(SimConfig::new(0, 1).is_err());
}
