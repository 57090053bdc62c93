#![allow(clippy::needless_range_loop)]

use vlsf_core::bounds::{
    apply_stop_at_zero, backoff_bounds, critical_epsilon, devassy_bound, polyanskiy_bound, rank_full_prob,
    rank_full_probs, rank_markov, st_rlfc_finite_bound, st_rlfc_sdo, st_rlfc_zero_error_bound,
    st_rlfc_zero_error_bound_markov,
};
use vlsf_core::channels::channel_stats;
use vlsf_core::Channel;

/// Probability that `k = 2` bits are decodable after `n` symbols, summing
/// over every erasure pattern and every coded vector in `{01, 10, 11}`.
fn k2_full_rank_by_paths(n: u32, p: f64) -> f64 {
    fn go(t: u32, n: u32, p: f64, span: u8, weight: f64) -> f64 {
        if t == n {
            return if span == 0b1111 { weight } else { 0.0 };
        }
        let erased = go(t + 1, n, p, span, weight * p);
        let received = if t < 2 {
            go(t + 1, n, p, close(span, 1 << t), weight * (1.0 - p))
        } else {
            (1u8..=3).map(|v| go(t + 1, n, p, close(span, v), weight * (1.0 - p) / 3.0)).sum()
        };
        erased + received
    }
    // `span` is the set of vectors in the received span, as a bitmask over {00, 01, 10, 11}.
    fn close(span: u8, v: u8) -> u8 {
        let mut out = span;
        for u in 0..4u8 {
            if span & (1 << u) != 0 {
                out |= 1 << (u ^ v);
            }
        }
        out
    }
    go(0, n, p, 0b0001, 1.0)
}

/// Transient block and initial law built directly from the transition rule.
fn dense_chain(k: u32, p: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let q = 2f64.powi(k as i32);
    let mut t = vec![vec![0.0; k as usize]; k as usize];
    for r in 0..k as usize {
        t[r][r] = p + (1.0 - p) * (2f64.powi(r as i32) - 1.0) / (q - 1.0);
        if r + 1 < k as usize {
            t[r][r + 1] = (1.0 - p) * (q - 2f64.powi(r as i32)) / (q - 1.0);
        }
    }
    let binom = |n: u32, c: u32| (0..c).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let alpha = (0..k).map(|r| binom(k, r) * (1.0 - p).powi(r as i32) * p.powi((k - r) as i32)).collect();
    (t, alpha)
}

fn dense_full_prob(k: u32, p: f64, n: u64) -> f64 {
    if n < k as u64 {
        return 0.0;
    }
    let (t, mut v) = dense_chain(k, p);
    for _ in 0..n - k as u64 {
        v = (0..k as usize).map(|c| (0..k as usize).map(|r| v[r] * t[r][c]).sum()).collect();
    }
    1.0 - v.iter().sum::<f64>()
}

#[test]
fn k2_chain_matches_path_enumeration() {
    for p in [0.1, 0.5, 0.8] {
        let mc = rank_markov(2, p).unwrap();
        for n in 0..=6 {
            let brute = k2_full_rank_by_paths(n, p);
            assert!((rank_full_prob(&mc, n as u64) - brute).abs() < 1e-14, "p = {p}, n = {n}");
        }
    }
}

#[test]
fn k2_transient_block() {
    let p = 0.3;
    let t = rank_markov(2, p).unwrap().transient_matrix();
    assert_eq!(t[0][0], p);
    assert!((t[0][1] - (1.0 - p)).abs() < 1e-15);
    assert_eq!(t[1][0], 0.0);
    assert!((t[1][1] - (p + (1.0 - p) / 3.0)).abs() < 1e-15);
}

#[test]
fn chain_rows_are_stochastic_with_absorption() {
    for k in [1u32, 2, 5, 20, 64, 80, 200] {
        for p in [0.0, 0.2, 0.9] {
            let mc = rank_markov(k, p).unwrap();
            let t = mc.transient_matrix();
            let a = mc.absorption();
            for r in 0..k as usize {
                let row: f64 = t[r].iter().sum::<f64>() + a[r];
                assert!((row - 1.0).abs() < 1e-12, "k = {k}, p = {p}, r = {r}");
                assert!(t[r].iter().chain([&a[r]]).all(|&x| (-1e-15..=1.0 + 1e-15).contains(&x)));
            }
        }
    }
}

#[test]
fn full_rank_curve_against_dense_products() {
    for (k, p) in [(4u32, 0.5), (7, 0.2), (10, 0.65)] {
        let mc = rank_markov(k, p).unwrap();
        let curve = rank_full_probs(&mc, 60);
        for n in 0..=60u64 {
            assert!((curve[n as usize] - dense_full_prob(k, p, n)).abs() < 1e-13);
        }
        assert!(curve.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }
}

#[test]
fn single_bit_is_geometric() {
    let mc = rank_markov(1, 0.4).unwrap();
    for n in 0..30 {
        assert!((rank_full_prob(&mc, n) - (1.0 - 0.4f64.powi(n as i32))).abs() < 1e-15);
    }
}

#[test]
fn zero_error_bound_is_the_mean_stopping_time() {
    for (k, p) in [(3u32, 0.5), (8, 0.5), (12, 0.3)] {
        let mc = rank_markov(k, p).unwrap();
        let mut n = k as u64;
        let mut mean = k as f64;
        loop {
            let miss = 1.0 - rank_full_prob(&mc, n);
            mean += miss;
            n += 1;
            if miss < 1e-17 {
                break;
            }
        }
        let closed = st_rlfc_zero_error_bound(k, p).unwrap();
        assert!((mean - closed).abs() < 1e-10 * closed, "k = {k}: {mean} vs {closed}");
        assert!((st_rlfc_zero_error_bound_markov(k, p).unwrap() - closed).abs() < 1e-10 * closed);
    }
}

#[test]
fn zero_error_bound_edges() {
    assert_eq!(st_rlfc_zero_error_bound(17, 0.0).unwrap(), 17.0);
    assert!((st_rlfc_zero_error_bound(1, 0.3).unwrap() - 1.0 / 0.7).abs() < 1e-15);
}

#[test]
fn devassy_by_direct_summation() {
    let (k, p) = (10u32, 0.5);
    let q = 2f64.powi(k as i32);
    let sum: f64 = (1..k).map(|i| (2f64.powi(i as i32) - 1.0) / (q - 2f64.powi(i as i32))).sum();
    assert!((devassy_bound(k, p).unwrap() - (k as f64 + sum) / (1.0 - p)).abs() < 1e-12);
    assert!((devassy_bound(3, 0.25).unwrap() - (47.0 / 12.0) / 0.75).abs() < 1e-14);
    assert_eq!(devassy_bound(1, 0.5).unwrap(), 2.0);
}

#[test]
fn systematic_bound_never_exceeds_the_fountain_bound() {
    for k in 1..=20 {
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let new = st_rlfc_zero_error_bound(k, p).unwrap();
            let old = devassy_bound(k, p).unwrap();
            assert!(new <= old + 1e-9, "k = {k}, p = {p}");
            if k == 1 {
                assert!((new - old).abs() < 1e-12);
            }
        }
        let (new, old) = (st_rlfc_zero_error_bound(k, 0.999).unwrap(), devassy_bound(k, 0.999).unwrap());
        assert!((old - new) / old < 1e-6, "k = {k}: relative gap {}", (old - new) / old);
    }
}

#[test]
fn backoff_limits_and_monotonicity() {
    let (old, new_hi) = backoff_bounds(3, 1.0 - 1e-9).unwrap();
    assert!((old - 11.0 / 47.0).abs() < 1e-15);
    assert!((new_hi - old).abs() < 1e-6);
    assert!(backoff_bounds(3, 1e-9).unwrap().1.abs() < 1e-6);
    for k in [2u32, 3, 8, 30] {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let (old, new) = backoff_bounds(k, i as f64 / 100.0).unwrap();
            assert!(new >= prev - 1e-12 && new <= old + 1e-12, "k = {k}, p = {}", i as f64 / 100.0);
            prev = new;
        }
    }
}

#[test]
fn finite_bound_by_hand() {
    let mc = rank_markov(4, 0.5).unwrap();
    let (l, e) = st_rlfc_finite_bound(&mc, &[6, 8, 12]).unwrap();
    let f = |n| dense_full_prob(4, 0.5, n);
    assert!((l - (12.0 + (6.0 - 8.0) * f(6) + (8.0 - 12.0) * f(8))).abs() < 1e-12);
    assert!((e - (1.0 - f(12))).abs() < 1e-12);
    let (l, e) = st_rlfc_finite_bound(&mc, &[2, 3]).unwrap();
    assert_eq!((l, e), (3.0, 1.0));
}

#[test]
fn fountain_times_against_pair_search() {
    let (k, p, eps) = (5u32, 0.5, 1e-2);
    let f: Vec<f64> = (0..=80).map(|n| dense_full_prob(k, p, n)).collect();
    let last = (0..).find(|&n| 1.0 - f[n] <= eps).unwrap();
    let single = st_rlfc_sdo(k, p, 1, eps).unwrap();
    assert_eq!(single.integer_times(), vec![last as u64]);
    let mut best = (0, f64::INFINITY);
    for n2 in last..last + 4 {
        for n1 in 1..n2 {
            let v = n2 as f64 + (n1 as f64 - n2 as f64) * f[n1];
            if v < best.1 - 1e-12 {
                best = (n1, v);
            }
        }
    }
    let pair = st_rlfc_sdo(k, p, 2, eps).unwrap();
    assert_eq!(pair.integer_times(), vec![best.0 as u64, last as u64]);
    assert!((pair.objective - best.1).abs() < 1e-12);
}

#[test]
fn baseline_arithmetic() {
    let bec = channel_stats(&Channel::Bec { p: 0.5 }).unwrap();
    let l = polyanskiy_bound(100, 1e-3, &bec).unwrap();
    assert!((l - 221.93).abs() < 0.01, "{l}");
    let k1 = polyanskiy_bound(1, 0.01, &bec).unwrap();
    assert!((k1 - (1.0 - 0.01f64.log2()) / 0.5).abs() < 1e-12);
    assert!((apply_stop_at_zero(100.0, 1e-3).unwrap() - 99.9).abs() < 1e-12);
    assert_eq!(apply_stop_at_zero(42.0, 0.0).unwrap(), 42.0);
}

#[test]
fn critical_epsilon_solves_the_first_order_condition() {
    for k in [1u32, 10, 100, 1000] {
        for a0 in [1.0, 0.8] {
            let x = critical_epsilon(k, a0);
            let h = |x: f64| (k as f64 + a0 - x.log2()) / (1.0 - x);
            let grid_min = (1..4000)
                .map(|i| 10f64.powf(-8.0 + 8.0 * i as f64 / 4000.0))
                .filter(|&x| x < 1.0)
                .map(h)
                .fold(f64::INFINITY, f64::min);
            assert!(h(x) <= grid_min * (1.0 + 1e-9), "k = {k}");
            let dh = (h(x * (1.0 + 1e-6)) - h(x * (1.0 - 1e-6))) / (2e-6 * x);
            assert!(dh.abs() * x < 1e-6 * h(x), "k = {k}, slope {dh}");
        }
    }
}
