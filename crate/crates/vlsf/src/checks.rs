//! The acceptance suite: eleven numbered checks, each reporting a verdict
//! and a one-line detail. Run by `vlsf check` and by the `acceptance`
//! test target.

use std::fmt;
use std::time::{Duration, Instant};

use vlsf_core::bounds::{
    backoff_bounds, critical_epsilon, devassy_bound, polyanskiy_bound, rank_full_probs, rank_markov, st_rlfc_sdo,
    st_rlfc_zero_error_bound, st_rlfc_zero_error_bound_markov,
};
use vlsf_core::channels::{
    channel_stats, gamma_from_delta, invert_discrete, make_tail_model, make_tail_model_with, reliability_target,
    tail_exact_bec, tail_model_inverse, ContinuousTail, DiscreteTail, TailConfig,
};
use vlsf_core::mc_oracle::{trial_rng, unit_open, SimConfig};
use vlsf_core::sdo::{discrete_sdo, gap_constrained_sdo, kkt_report, SdoOptions, SdoProblem, TwoStepOptions};
use vlsf_core::Channel;

use crate::parallel;

/// Settings shared by the Monte Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckConfig {
    pub trials: u64,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { trials: 100_000, seed: 0x5eed_2024 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2}. {} ({:.2} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

type CheckFn = fn(&CheckConfig) -> (bool, String);

/// `(id, title, runtime budget in seconds, body)`.
pub const CHECKS: [(u32, &str, u64, CheckFn); 11] = [
    (1, "switch point of the BI-AWGN tail", 5, switch_point),
    (2, "threshold and last time at the 2^20 operating point", 10, operating_point),
    (3, "critical error regime", 10, critical_regime),
    (4, "zero-error fountain backoff peak", 1, backoff_peak),
    (5, "systematic fountain bound below the zero-error fountain bound", 1, fountain_ordering),
    (6, "rank chain against simulation", 60, rank_chain_vs_simulation),
    (7, "two evaluations of the zero-error systematic bound", 1, zero_error_routes),
    (8, "integer search against exhaustive enumeration", 120, discrete_vs_exhaustive),
    (9, "optimality conditions of gap-constrained times", 60, kkt_grid),
    (10, "qualitative rate-curve properties", 600, rate_curve_properties),
    (11, "corrected lattice series against the exact BEC tail", 5, corrected_series),
];

/// Runs one check by id.
pub fn run_check(id: u32, cfg: &CheckConfig) -> Option<CheckOutcome> {
    let &(id, title, budget, body) = CHECKS.iter().find(|c| c.0 == id)?;
    let t0 = Instant::now();
    let (ok, detail) = body(cfg);
    let elapsed = t0.elapsed();
    let budget = Duration::from_secs(budget);
    let within = elapsed <= budget;
    let detail = if within { detail } else { format!("{detail}; over the {} s budget", budget.as_secs()) };
    Some(CheckOutcome { id, title, passed: ok && within, detail, elapsed, budget })
}

pub fn run_all(cfg: &CheckConfig) -> Vec<CheckOutcome> {
    CHECKS.iter().filter_map(|c| run_check(c.0, cfg)).collect()
}

fn switch_point(_: &CheckConfig) -> (bool, String) {
    match make_tail_model(&Channel::biawgn_db(0.2), 13.62) {
        Ok(tm) => match tm.switch_point() {
            Some(n) => ((16.79..=16.89).contains(&n), format!("n* = {n:.6}")),
            None => (false, "no crossing found".into()),
        },
        Err(e) => (false, e.to_string()),
    }
}

fn operating_point(_: &CheckConfig) -> (bool, String) {
    let gamma = gamma_from_delta(20, 1e-2, 0.5);
    let target = reliability_target(20, 1e-2, gamma);
    let last = make_tail_model(&Channel::biawgn_db(0.2), gamma).and_then(|tm| tail_model_inverse(&tm, target));
    match last {
        Ok(n) => {
            ((gamma - 27.64).abs() <= 0.01 && (n - 101.91).abs() <= 0.15, format!("γ = {gamma:.4}, n_m* = {n:.4}"))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn critical_regime(_: &CheckConfig) -> (bool, String) {
    let a0s = [1.0, (2.0f64 * 0.89).log2()];
    let mut worst = (f64::INFINITY, 0, 0.0);
    for k in 1..=1000 {
        for &a0 in &a0s {
            let e = critical_epsilon(k, a0);
            if e < worst.0 {
                worst = (e, k, a0);
            }
        }
    }
    (worst.0 >= 1.4e-3, format!("min ε* = {:.5e} at k = {}, a₀ = {:.4}", worst.0, worst.1, worst.2))
}

fn backoff_peak(_: &CheckConfig) -> (bool, String) {
    let mut best = (0, f64::NEG_INFINITY);
    for k in 2..=64 {
        match backoff_bounds(k, 0.5) {
            Ok((old, _)) if old > best.1 => best = (k, old),
            Ok(_) => {}
            Err(e) => return (false, e.to_string()),
        }
    }
    (best.0 == 3 && (best.1 - 0.234).abs() <= 1e-3, format!("max {:.5} at k = {}", best.1, best.0))
}

fn fountain_ordering(_: &CheckConfig) -> (bool, String) {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_k1: f64 = 0.0;
    for k in 1..=20 {
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let (Ok(a), Ok(b)) = (st_rlfc_zero_error_bound(k, p), devassy_bound(k, p)) else {
                return (false, format!("evaluation failed at k = {k}, p = {p}"));
            };
            worst_gap = worst_gap.max(a - b);
            if k == 1 {
                worst_k1 = worst_k1.max((a - b).abs());
            }
        }
    }
    (
        worst_gap <= 1e-9 && worst_k1 <= 1e-9,
        format!("max(new − old) = {worst_gap:.3e}, |new − old| at k = 1 ≤ {worst_k1:.3e}"),
    )
}

fn rank_chain_vs_simulation(cfg: &CheckConfig) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(k, p) in &[(4u32, 0.5), (8, 0.5), (8, 0.2)] {
        let n_max = (4.0 * k as f64 / (1.0 - p)).floor() as u64;
        let Ok(mc) = rank_markov(k, p) else { return (false, "chain construction failed".into()) };
        let model = rank_full_probs(&mc, n_max);
        let sim = parallel::rank_tally(k, p, n_max, &SimConfig { trials: cfg.trials, seed: cfg.seed });
        let t = cfg.trials as f64;
        let mut worst_z: f64 = 0.0;
        let mut misses = 0;
        for n in 0..=n_max as usize {
            let q = model[n];
            let se = (q * (1.0 - q) / t).sqrt();
            let diff = (sim.full_rank[n] as f64 / t - q).abs();
            if diff > 3.0 * se + 1e-12 {
                misses += 1;
            }
            if se > 0.0 {
                worst_z = worst_z.max(diff / se);
            }
        }
        let exact = st_rlfc_zero_error_bound(k, p).unwrap_or(f64::NAN);
        let tau_z = (sim.mean_tau() - exact).abs() / sim.tau_stderr();
        ok &= misses == 0 && tau_z <= 3.0;
        parts.push(format!("(k={k}, p={p}): worst z {worst_z:.2}, E[τ] z {tau_z:.2}"));
    }
    (ok, parts.join("; "))
}

fn zero_error_routes(_: &CheckConfig) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for k in 1..=20 {
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            match (st_rlfc_zero_error_bound(k, p), st_rlfc_zero_error_bound_markov(k, p)) {
                (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
                _ => return (false, format!("evaluation failed at k = {k}, p = {p}")),
            }
        }
    }
    (worst <= 1e-10, format!("max difference {worst:.3e}"))
}

/// Exact BSC or BEC tail on the integers.
struct ExactTail {
    ch: Channel,
    gamma: f64,
}

impl DiscreteTail for ExactTail {
    fn prob_at(&self, n: u64) -> f64 {
        match self.ch {
            Channel::Bsc { p } => vlsf_core::channels::tail_exact_bsc(n, self.gamma, p),
            Channel::Bec { p } => tail_exact_bec(n, self.gamma, p),
            Channel::BiAwgn { .. } => unreachable!(),
        }
    }
}

/// Minimum of `N` over all ascending tuples ending at `last`, ties to the
/// lexicographically smallest tuple.
pub fn exhaustive_minimum(f: &[f64], last: u64, m: usize) -> (Vec<u64>, f64) {
    fn rec(f: &[f64], last: u64, t: &mut Vec<u64>, free: usize, best: &mut (Vec<u64>, f64)) {
        if t.len() == free {
            let mut times = t.clone();
            times.push(last);
            let mut n = last as f64;
            for w in times.windows(2) {
                n += (w[0] as f64 - w[1] as f64) * f[w[0] as usize];
            }
            if n < best.1 - 1e-12 * n.abs().max(1.0) {
                *best = (times, n);
            }
            return;
        }
        let start = t.last().map_or(1, |&v| v + 1);
        for c in start..last {
            t.push(c);
            rec(f, last, t, free, best);
            t.pop();
        }
    }
    let mut best = (Vec::new(), f64::INFINITY);
    rec(f, last, &mut Vec::new(), m - 1, &mut best);
    best
}

fn discrete_vs_exhaustive(cfg: &CheckConfig) -> (bool, String) {
    let mut rng = trial_rng(cfg.seed, u64::MAX);
    let mut u = move || unit_open(&mut rng);
    let mut done = 0;
    let mut mismatches = Vec::new();
    let mut attempts = 0;
    while done < 50 && attempts < 100_000 {
        attempts += 1;
        let ch = if u() < 0.5 { Channel::Bsc { p: 0.03 + 0.37 * u() } } else { Channel::Bec { p: 0.02 + 0.6 * u() } };
        let k = 1 + (u() * 6.0) as u32;
        let eps = 0.02 + 0.28 * u();
        let delta = 0.1 + 0.8 * u();
        let m = 1 + (u() * 4.0) as usize;
        let gamma = gamma_from_delta(k, eps, delta);
        let tail = ExactTail { ch, gamma };
        let Ok(prob) = SdoProblem::from_delta(m, k, eps, delta) else { continue };
        let Ok(last) = invert_discrete(&tail, prob.target, 1) else { continue };
        if last > 40 || (last as usize) < m {
            continue;
        }
        let sol = match discrete_sdo(&prob, &tail) {
            Ok(s) => s,
            Err(e) => {
                mismatches.push(format!("{ch:?} k={k} m={m}: {e}"));
                done += 1;
                continue;
            }
        };
        let f: Vec<f64> = (0..=last).map(|n| if n == 0 { 0.0 } else { tail.prob_at(n) }).collect();
        let (times, n) = exhaustive_minimum(&f, last, m);
        if sol.integer_times() != times || (sol.objective - n).abs() > 1e-9 {
            mismatches.push(format!("{ch:?} k={k} m={m}: {:?} vs {times:?}", sol.integer_times()));
        }
        done += 1;
    }
    (
        done == 50 && mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{done} instances agree")
        } else {
            format!("{} of {done} differ, first: {}", mismatches.len(), mismatches[0])
        },
    )
}

fn kkt_grid(_: &CheckConfig) -> (bool, String) {
    let ch = Channel::biawgn_db(0.2);
    let Ok(stats) = channel_stats(&ch) else { return (false, "channel statistics failed".into()) };
    let ks = [10u32, 20, 50, 100, 200];
    let ms = [2usize, 4, 8, 16];
    let deltas = [0.3, 0.5, 0.7, 0.9];
    let mut worst: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    let mut failures = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        for (j, &m) in ms.iter().enumerate() {
            let delta = deltas[(i + j) % deltas.len()];
            let eps = if k == 20 { 1e-2 } else { 1e-3 };
            let gamma = gamma_from_delta(k, eps, delta);
            let r = SdoProblem::from_delta(m, k, eps, delta).and_then(|prob| {
                let tm = vlsf_core::channels::make_tail_model_with_stats(&ch, &stats, gamma, &TailConfig::default())?;
                let sol = gap_constrained_sdo(&prob, &tm, &SdoOptions::default())?;
                Ok(kkt_report(&sol, &tm))
            });
            match r {
                Ok(rep) => {
                    worst = worst.max(rep.max_stationarity()).max(rep.max_complementarity());
                    min_gap = min_gap.min(rep.min_gap);
                    if !rep.passes(1e-6) {
                        failures.push(format!("k={k} m={m} δ={delta}"));
                    }
                }
                Err(e) => failures.push(format!("k={k} m={m} δ={delta}: {e}")),
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "20 points, max residual {worst:.2e}, min gap {min_gap:.4}{}",
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join(", ")) }
        ),
    )
}

fn rate_curve_properties(_: &CheckConfig) -> (bool, String) {
    let mut notes = Vec::new();
    let mut ok = true;

    // (a) BI-AWGN, k = 100, m = 16 against the Polyanskiy rate.
    let ch = Channel::biawgn_db(0.2);
    let opts = TwoStepOptions::default();
    let ms = [1usize, 2, 4, 8, 16];
    let mut biawgn = Vec::new();
    for &m in &ms {
        match parallel::two_step(&ch, m, 100, 1e-3, &opts) {
            Ok((s, _)) => biawgn.push(s.objective),
            Err(e) => {
                return (false, format!("two-step minimization failed at m = {m}: {e}"));
            }
        }
    }
    let poly = channel_stats(&ch).and_then(|s| polyanskiy_bound(100, 1e-3, &s)).unwrap_or(f64::NAN);
    let ratio = poly / biawgn[4];
    let a = ratio >= 0.95;
    ok &= a;
    notes.push(format!("(a) rate ratio {ratio:.4}"));

    // (b) BEC(0.5), fountain scheme with m = 2, k ∈ [4, 100].
    let bec = Channel::Bec { p: 0.5 };
    let bec_stats = channel_stats(&bec).expect("BEC statistics");
    let mut below = Vec::new();
    let mut bec_n = Vec::new();
    for k in 4..=100u32 {
        let mut per_m = Vec::new();
        for &m in &[1usize, 2, 3, 4] {
            match st_rlfc_sdo(k, 0.5, m, 1e-3) {
                Ok(s) => per_m.push(s.objective),
                Err(e) => return (false, format!("fountain program failed at k = {k}, m = {m}: {e}")),
            }
        }
        let pb = polyanskiy_bound(k, 1e-3, &bec_stats).unwrap_or(f64::NAN);
        if per_m[1] >= pb {
            below.push(k);
        }
        bec_n.push((k, per_m));
    }
    let b = below.is_empty();
    ok &= b;
    notes.push(if b {
        "(b) m = 2 beats the Polyanskiy rate for every k".into()
    } else {
        format!(
            "(b) m = 2 does not beat the Polyanskiy rate for k ∈ {{{}}}",
            below.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
        )
    });

    // (c) N* nonincreasing in m on both grids.
    let mut violations = 0;
    for w in biawgn.windows(2) {
        if w[1] > w[0] + 1e-6 {
            violations += 1;
        }
    }
    for (_, per_m) in &bec_n {
        for w in per_m.windows(2) {
            if w[1] > w[0] + 1e-6 {
                violations += 1;
            }
        }
    }
    ok &= violations == 0;
    notes.push(format!("(c) {violations} monotonicity violations"));
    (ok, notes.join("; "))
}

fn corrected_series(_: &CheckConfig) -> (bool, String) {
    let p = 0.5;
    let tm = match make_tail_model_with(&Channel::Bec { p }, 10.5, &TailConfig::default()) {
        Ok(t) => t,
        Err(e) => return (false, e.to_string()),
    };
    let worst = (21..=100u64).map(|n| (tm.prob(n as f64) - tail_exact_bec(n, 10.5, p)).abs()).fold(0.0, f64::max);
    (worst < 1e-3, format!("max error {worst:.3e}"))
}
