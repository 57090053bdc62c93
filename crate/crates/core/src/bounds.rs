//! Closed-form baselines and the systematic random linear fountain code.
//!
//! Powers of two are formed exactly in `u128` for `k ≤ 64` and through
//! ratios `2^{i−k}` beyond that.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::log2;

use crate::channels::{log2_m_minus_1, ChannelStats, DiscreteTail};
use crate::error::{arg_err, Error, Result};
use crate::sdo::{discrete_sdo, SdoProblem, SdoSolution};
use crate::special::{binomial_cdf, binomial_pmf, LN_2};

/// Largest `k` with exact powers of two.
pub const EXACT_POW2_K: u32 = 64;

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(arg_err!("k must be at least 1"));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(arg_err!("erasure probability must lie in [0, 1), got {p}"));
    }
    Ok(())
}

/// `(2^a − 2^b) / (2^c − 2^d)` for exponents up to `k`.
fn pow2_ratio(k: u32, a: u32, b: u32, c: u32, d: u32) -> f64 {
    if k <= EXACT_POW2_K {
        let p = |e: u32| 1u128 << e;
        (p(a) - p(b)) as f64 / (p(c) - p(d)) as f64
    } else {
        let q = |e: u32| libm::exp2(e as f64 - k as f64);
        (q(a) - q(b)) / (q(c) - q(d))
    }
}

/// `(2^k − 1)/(2^k − 2^i)` for `i = 0..k−1`.
fn rank_weights(k: u32) -> Vec<f64> {
    (0..k).map(|i| pow2_ratio(k, k, 0, k, i)).collect()
}

/// `(log₂(M−1) − log₂ε + a₀)/C` with `M = 2^k`.
pub fn polyanskiy_bound(k: u32, eps: f64, stats: &ChannelStats) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(arg_err!("ε must lie in (0, 1), got {eps}"));
    }
    Ok((log2_m_minus_1(k) - log2(eps) + stats.a0) / stats.capacity)
}

/// Minimizer over `x ∈ (0, 1)` of `(k + a₀ − log₂ x)/(1 − x)`.
///
/// Solved from the first-order condition
/// `(1 − x)/(x ln 2) = k + a₀ − log₂ x`, whose left side minus right side
/// is decreasing in `x`.
pub fn critical_epsilon(k: u32, a0: f64) -> f64 {
    let g = |x: f64| (1.0 - x) / (x * LN_2) - (k as f64 + a0 - log2(x));
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    for _ in 0..2000 {
        let mid = if hi / lo > 4.0 { libm::sqrt(lo * hi) } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zero-error fountain bound `(1/C)(k + Σ_{i=1}^{k−1} (2^i−1)/(2^k−2^i))`.
pub fn devassy_bound(k: u32, p: f64) -> Result<f64> {
    check_k(k)?;
    check_p(p)?;
    Ok((k as f64 + devassy_sum(k)) / (1.0 - p))
}

fn devassy_sum(k: u32) -> f64 {
    (1..k).map(|i| pow2_ratio(k, i, 0, k, i)).sum()
}

/// `Σ_{i<k} (2^k−1)/(2^k−2^i) F(i; k, 1−p)`.
fn weighted_cdf_sum(k: u32, p: f64) -> f64 {
    rank_weights(k).iter().enumerate().map(|(i, w)| w * binomial_cdf(i as i64, k as u64, 1.0 - p)).sum()
}

/// Zero-error bound of systematic transmission followed by fountain
/// coding: `k + (1/C) Σ_{i<k} (2^k−1)/(2^k−2^i) F(i; k, 1−p)`.
pub fn st_rlfc_zero_error_bound(k: u32, p: f64) -> Result<f64> {
    check_k(k)?;
    check_p(p)?;
    Ok(k as f64 + weighted_cdf_sum(k, p) / (1.0 - p))
}

/// The same bound as `k + αᵀ(I − T)⁻¹1` through the rank chain.
pub fn st_rlfc_zero_error_bound_markov(k: u32, p: f64) -> Result<f64> {
    let mc = rank_markov(k, p)?;
    let inv = mc.fundamental_row_sums();
    Ok(k as f64 + mc.initial_pmf().iter().zip(&inv).map(|(a, b)| a * b).sum::<f64>())
}

/// Backoff from capacity: `(old, new)` where `old` is the zero-error
/// fountain bound's `p`-independent fraction and `new` uses the systematic
/// scheme.
pub fn backoff_bounds(k: u32, p: f64) -> Result<(f64, f64)> {
    check_k(k)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(arg_err!("erasure probability must lie in (0, 1), got {p}"));
    }
    let s = devassy_sum(k);
    let a = weighted_cdf_sum(k, p);
    let kf = k as f64;
    // `+ 0.0` turns a signed zero at k = 1 into +0.
    Ok((s / (kf + s) + 0.0, (a - kf * p) / (a + kf * (1.0 - p)) + 0.0))
}

/// `l·(1 − ε)`: stopping at time zero with probability `ε`.
pub fn apply_stop_at_zero(l: f64, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(arg_err!("ε must lie in [0, 1), got {eps}"));
    }
    Ok(l * (1.0 - eps))
}

/// Rank of the received generator matrix after the systematic phase, as an
/// absorbing chain on ranks `0..k` with transient block `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMarkov {
    k: u32,
    p: f64,
    stay: Vec<f64>,
    up: Vec<f64>,
    initial: Vec<f64>,
}

/// Builds the chain for `k ≥ 1` and `p ∈ [0, 1)`.
pub fn rank_markov(k: u32, p: f64) -> Result<RankMarkov> {
    check_k(k)?;
    check_p(p)?;
    let stay = (0..k).map(|r| p + (1.0 - p) * pow2_ratio(k, r, 0, k, 0)).collect();
    let up = (0..k).map(|r| (1.0 - p) * pow2_ratio(k, k, r, k, 0)).collect();
    let initial = (0..k).map(|r| binomial_pmf(r as u64, k as u64, 1.0 - p)).collect();
    Ok(RankMarkov { k, p, stay, up, initial })
}

impl RankMarkov {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Diagonal of `T`: probability the rank stays at `r`.
    pub fn stay(&self) -> &[f64] {
        &self.stay
    }

    /// Probability the rank moves from `r` to `r + 1`; the last entry is
    /// the absorption probability from rank `k − 1`.
    pub fn up(&self) -> &[f64] {
        &self.up
    }

    /// Distribution of the rank after the `k` systematic symbols,
    /// `P[S_k = r]` for `r < k`.
    pub fn initial_pmf(&self) -> &[f64] {
        &self.initial
    }

    /// Cumulative weights `F(r; k, 1−p)` for `r < k`.
    pub fn cdf_weights(&self) -> Vec<f64> {
        (0..self.k).map(|r| binomial_cdf(r as i64, self.k as u64, 1.0 - self.p)).collect()
    }

    /// Dense `T`.
    pub fn transient_matrix(&self) -> Vec<Vec<f64>> {
        let k = self.k as usize;
        let mut t = vec![vec![0.0; k]; k];
        for r in 0..k {
            t[r][r] = self.stay[r];
            if r + 1 < k {
                t[r][r + 1] = self.up[r];
            }
        }
        t
    }

    /// Absorption column `t = (I − T)1`.
    pub fn absorption(&self) -> Vec<f64> {
        let k = self.k as usize;
        (0..k).map(|r| if r + 1 < k { 1.0 - self.stay[r] - self.up[r] } else { 1.0 - self.stay[r] }).collect()
    }

    /// `v ← vᵀT`.
    pub fn step(&self, v: &mut [f64]) {
        for r in (0..v.len()).rev() {
            let from_below = if r > 0 { v[r - 1] * self.up[r - 1] } else { 0.0 };
            v[r] = v[r] * self.stay[r] + from_below;
        }
    }

    /// `(I − T)⁻¹1` from the bidiagonal factorization:
    /// row `r` is `(1−p)⁻¹ Σ_{j≥r} (2^k−1)/(2^k−2^j)`.
    pub fn fundamental_row_sums(&self) -> Vec<f64> {
        let w = rank_weights(self.k);
        let mut out = vec![0.0; w.len()];
        let mut acc = 0.0;
        for r in (0..w.len()).rev() {
            acc += w[r];
            out[r] = acc / (1.0 - self.p);
        }
        out
    }
}

/// `P[S_n = k] = 1 − αᵀT^{n−k}1` for `n ≥ k`, zero before.
pub fn rank_full_prob(mc: &RankMarkov, n: u64) -> f64 {
    let k = mc.k as u64;
    if n < k {
        return 0.0;
    }
    let mut v = mc.initial.clone();
    for _ in 0..n - k {
        mc.step(&mut v);
    }
    1.0 - v.iter().sum::<f64>()
}

/// `P[S_n = k]` for `n = 0..=n_max`.
pub fn rank_full_probs(mc: &RankMarkov, n_max: u64) -> Vec<f64> {
    let k = mc.k as u64;
    let mut out = vec![0.0; n_max as usize + 1];
    let mut v = mc.initial.clone();
    for n in k..=n_max {
        if n > k {
            mc.step(&mut v);
        }
        out[n as usize] = 1.0 - v.iter().sum::<f64>();
    }
    out
}

/// Finite-decoding-time bound at given times: `(l bound, ε bound)`.
pub fn st_rlfc_finite_bound(mc: &RankMarkov, times: &[u64]) -> Result<(f64, f64)> {
    if times.is_empty() || times[0] == 0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(arg_err!("decoding times must be positive and strictly ascending"));
    }
    let probs = rank_full_probs(mc, *times.last().unwrap());
    let m = times.len();
    let mut l = times[m - 1] as f64;
    for i in 0..m - 1 {
        l += (times[i] as f64 - times[i + 1] as f64) * probs[times[i] as usize];
    }
    Ok((l, 1.0 - probs[times[m - 1] as usize]))
}

/// `P[S_n = k]` tabulated up to the first `n` that reaches a target.
struct RankTail {
    probs: Vec<f64>,
}

impl DiscreteTail for RankTail {
    fn prob_at(&self, n: u64) -> f64 {
        self.probs.get(n as usize).copied().unwrap_or(*self.probs.last().unwrap())
    }
}

/// Decoding times minimizing the finite-time bound subject to
/// `1 − P[S_{n_m} = k] ≤ ε`.
pub fn st_rlfc_sdo(k: u32, p: f64, m: usize, eps: f64) -> Result<SdoSolution> {
    let mc = rank_markov(k, p)?;
    let prob = SdoProblem::with_target(m, 1.0 - eps)?;
    let mut probs = vec![0.0; k as usize];
    let mut v = mc.initial.clone();
    loop {
        let n = probs.len() as u64;
        if n > k as u64 {
            mc.step(&mut v);
        }
        let full = 1.0 - v.iter().sum::<f64>();
        probs.push(full);
        if full >= prob.target {
            break;
        }
        if n >= crate::channels::MAX_HORIZON {
            return Err(Error::Infeasible(alloc::format!("rank never reaches target 1 − {eps} within the horizon")));
        }
    }
    discrete_sdo(&prob, &RankTail { probs })
}

/// One point of a rate curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurvePoint {
    pub source: String,
    pub k: u32,
    pub m: usize,
    pub eps: f64,
    pub avg_blocklength_bound: f64,
    pub rate: f64,
    pub gamma_star: Option<f64>,
    pub delta_star: Option<f64>,
}

impl RateCurvePoint {
    pub fn new(source: &str, k: u32, m: usize, eps: f64, avg_blocklength_bound: f64) -> Self {
        RateCurvePoint {
            source: source.into(),
            k,
            m,
            eps,
            avg_blocklength_bound,
            rate: k as f64 / avg_blocklength_bound,
            gamma_star: None,
            delta_star: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let p = 0.3;
        let mc = rank_markov(2, p).unwrap();
        let t = mc.transient_matrix();
        assert!((t[0][0] - p).abs() < 1e-15);
        assert!((t[0][1] - (1.0 - p)).abs() < 1e-15);
        assert_eq!(t[1][0], 0.0);
        assert!((t[1][1] - (p + (1.0 - p) / 3.0)).abs() < 1e-15);
        let abs = mc.absorption();
        for r in 0..2 {
            assert!((t[r].iter().sum::<f64>() + abs[r] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn devassy_small_k() {
        assert!((devassy_bound(1, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((devassy_bound(3, 0.0).unwrap() - 47.0 / 12.0).abs() < 1e-14);
        let (old, _) = backoff_bounds(3, 0.5).unwrap();
        assert!((old - 11.0 / 47.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_form_matches_exact_at_boundary() {
        for i in 0..64 {
            let exact = pow2_ratio(64, i, 0, 64, i);
            let q = |e: u32| libm::exp2(e as f64 - 64.0);
            let ratio = (q(i) - q(0)) / (q(64) - q(i));
            assert!((exact - ratio).abs() <= 1e-14 * exact.max(1e-300));
        }
    }

    #[test]
    fn full_rank_single_bit() {
        let mc = rank_markov(1, 0.4).unwrap();
        for n in 0..8u64 {
            let want = if n == 0 { 0.0 } else { 1.0 - libm::pow(0.4, n as f64) };
            assert!((rank_full_prob(&mc, n) - want).abs() < 1e-15);
        }
    }
}
