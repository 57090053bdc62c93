//! Integer decoding times by depth-first search.
//!
//! The last time is pinned at the smallest feasible `n`. Earlier times are
//! enumerated in ascending order and a branch survives only if
//!
//! * no integer `j` between the previous time and `n_i` has
//!   `F(j) > F(n_i)` and `F(j) ≥ F(n_{i−1})` (moving `n_i` back to such a
//!   `j` would lower `N`),
//! * each time is a best response to its two neighbours (moving it to any
//!   integer strictly between them does not lower `N`), and
//! * the best completion of the prefix, read from a backward table over
//!   (time, times left), does not exceed the optimum.
//!
//! The best-response test is the pair of bounds
//! `n_i + max(1, g₋) ≤ n_{i+1} ≤ n_i + g₊`, with the alternatives limited to
//! times that keep the sequence ordered.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{objective_from_values, SdoProblem, SdoSolution};
use crate::channels::{invert_discrete, DiscreteTail};
use crate::error::{Error, Result};

const SLACK: f64 = 1e-9;

fn tie_tol(n: f64) -> f64 {
    1e-12 * n.abs().max(1.0)
}

/// `N` for integer times using a tail table indexed by `n`.
fn objective(times: &[u64], f: &[f64]) -> f64 {
    let t: Vec<f64> = times.iter().map(|&v| v as f64).collect();
    let v: Vec<f64> = times.iter().map(|&n| f[n as usize]).collect();
    objective_from_values(&t, &v)
}

/// Bounds on the next time implied by best-response optimality of `n_i`.
#[derive(Debug, Clone, Copy)]
struct NextBounds {
    lo: f64,
    hi: f64,
}

impl NextBounds {
    /// Adds the alternative `n` for the coordinate `n_i` between `prev` and
    /// the next time `c`. The comparison is linear in `c`:
    /// `c·(F_i − F_n) + K ≥ −slack`.
    fn add(&mut self, prev: u64, ni: u64, n: u64, f: &[f64]) {
        let fp = f[prev as usize];
        let fi = f[ni as usize];
        let fnn = f[n as usize];
        let a = fi - fnn;
        let k = (ni as f64 - prev as f64) * fp - ni as f64 * fi - (n as f64 - prev as f64) * fp + n as f64 * fnn;
        if a > 0.0 {
            self.lo = self.lo.max((-SLACK - k) / a);
        } else if a < 0.0 {
            self.hi = self.hi.min((-SLACK - k) / a);
        } else if k < -SLACK {
            self.hi = f64::NEG_INFINITY;
        }
    }

    fn admits(&self, c: u64) -> bool {
        let c = c as f64;
        c >= self.lo && c <= self.hi
    }
}

struct Search<'a> {
    f: &'a [f64],
    cands: &'a [u64],
    /// `completion[r][c]`: largest `Σ (n_{j+1} − n_j) F(n_j)` over the terms
    /// from `c` on, with `r` more free times placed after `c`.
    completion: Vec<Vec<f64>>,
    n_last: u64,
    free: usize,
    times: Vec<u64>,
    best: Vec<u64>,
    best_n: f64,
    nodes: u64,
}

impl<'a> Search<'a> {
    fn bounds_below(&self, prev: u64, ni: u64) -> NextBounds {
        let mut b = NextBounds { lo: ni as f64 + 1.0, hi: f64::INFINITY };
        for n in prev + 1..ni {
            b.add(prev, ni, n, self.f);
        }
        b
    }

    fn offer(&mut self, s_fixed: f64) {
        let n = self.n_last as f64 - s_fixed;
        let better = if self.best.is_empty() {
            n <= self.best_n + SLACK
        } else {
            n < self.best_n - tie_tol(n)
                || ((n - self.best_n).abs() <= tie_tol(n) && self.times.as_slice() < &self.best[..self.free])
        };
        if better {
            self.best_n = n;
            self.best.clear();
            self.best.extend_from_slice(&self.times);
            self.best.push(self.n_last);
        }
    }

    /// `times` holds `n_1..n_{i+1}`; `s_fixed` is `Σ_{j≤i} (n_{j+1} − n_j) F(n_j)`
    /// for the pairs already closed.
    fn dfs(&mut self, s_fixed: f64, start: usize) {
        self.nodes += 1;
        let depth = self.times.len();
        let ni = *self.times.last().unwrap();
        let prev = if depth >= 2 { self.times[depth - 2] } else { 0 };
        let fi = self.f[ni as usize];
        let mut bounds = self.bounds_below(prev, ni);
        if depth == self.free {
            for n in ni + 1..self.n_last {
                bounds.add(prev, ni, n, self.f);
            }
            if bounds.admits(self.n_last) {
                self.offer(s_fixed + (self.n_last - ni) as f64 * fi);
            }
            return;
        }
        let remaining = self.free - depth;
        let mut alt = ni + 1;
        let mut run_max = f64::NEG_INFINITY;
        let mut j = ni + 1;
        for idx in start..self.cands.len() {
            let c = self.cands[idx];
            if self.cands.len() - idx < remaining {
                break;
            }
            while alt < c {
                bounds.add(prev, ni, alt, self.f);
                alt += 1;
            }
            if (c as f64) > bounds.hi {
                break;
            }
            while j < c {
                run_max = run_max.max(self.f[j as usize]);
                j += 1;
            }
            let fc = self.f[c as usize];
            if (run_max - fc > tie_tol(self.best_n) && run_max >= fi) || !bounds.admits(c) {
                continue;
            }
            let s = s_fixed + (c - ni) as f64 * fi;
            let optimistic = self.n_last as f64 - s - self.completion[remaining - 1][c as usize];
            if optimistic > self.best_n + SLACK {
                continue;
            }
            self.times.push(c);
            self.dfs(s, idx + 1);
            self.times.pop();
        }
    }
}

/// Backward table of best completions over the candidate set. Entries for
/// non-candidates or impossible placements are `−∞`.
fn completion_table(cands: &[u64], free: usize, n_last: u64, f: &[f64]) -> Vec<Vec<f64>> {
    let len = n_last as usize + 1;
    let mut table = vec![vec![f64::NEG_INFINITY; len]; free];
    for &c in cands {
        table[0][c as usize] = (n_last - c) as f64 * f[c as usize];
    }
    for r in 1..free {
        for (a, &c) in cands.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for &t in &cands[a + 1..] {
                let v = (t - c) as f64 * f[c as usize] + table[r - 1][t as usize];
                if v > best {
                    best = v;
                }
            }
            table[r][c as usize] = best;
        }
    }
    table
}

/// Integer decoding times on `tail`, searching every integer below the last
/// time. Restricting a BSC search to the tail's local maximizers can miss
/// the optimum when `m` exceeds the number of useful maximizers.
pub fn discrete_sdo<T: DiscreteTail + ?Sized>(prob: &SdoProblem, tail: &T) -> Result<SdoSolution> {
    discrete_sdo_with(prob, tail, None)
}

/// Integer decoding times with an explicit candidate set for `n_1..n_{m−1}`.
pub fn discrete_sdo_with<T: DiscreteTail + ?Sized>(
    prob: &SdoProblem,
    tail: &T,
    candidates: Option<&[u64]>,
) -> Result<SdoSolution> {
    let n_last = invert_discrete(tail, prob.target, 1)?;
    let mut f: Vec<f64> = Vec::with_capacity(n_last as usize + 1);
    f.push(0.0);
    f.extend((1..=n_last).map(|n| tail.prob_at(n)));
    let solution = |times: Vec<u64>, n: f64| SdoSolution {
        tail_values: times.iter().map(|&t| f[t as usize]).collect(),
        times: times.iter().map(|&t| t as f64).collect(),
        multipliers: vec![],
        slopes: vec![],
        nu: None,
        objective: n,
        gamma: prob.gamma,
        delta: prob.delta,
        integer: true,
        warnings: vec![],
    };
    if prob.m == 1 {
        return Ok(solution(vec![n_last], n_last as f64));
    }
    let free = prob.m - 1;
    let mut cands: Vec<u64> = match candidates {
        Some(c) => c.to_vec(),
        None => (1..n_last).collect(),
    };
    cands.sort_unstable();
    cands.dedup();
    cands.retain(|&c| c >= 1 && c < n_last);
    if cands.len() < free {
        return Err(Error::Infeasible(format!(
            "{} candidate times below n = {n_last} cannot host {free} early decoding times",
            cands.len()
        )));
    }
    let completion = completion_table(&cands, free, n_last, &f);
    let top = cands.iter().map(|&c| completion[free - 1][c as usize]).fold(f64::NEG_INFINITY, f64::max);
    let mut search = Search {
        f: &f,
        cands: &cands,
        completion,
        n_last,
        free,
        times: Vec::with_capacity(free),
        best: vec![],
        best_n: n_last as f64 - top,
        nodes: 0,
    };
    let mut run_max: f64 = 0.0;
    let mut j = 1u64;
    for idx in 0..cands.len() {
        if cands.len() - idx < free {
            break;
        }
        let c = cands[idx];
        while j < c {
            run_max = run_max.max(f[j as usize]);
            j += 1;
        }
        if run_max - f[c as usize] > tie_tol(search.best_n) {
            continue;
        }
        let optimistic = n_last as f64 - search.completion[free - 1][c as usize];
        if optimistic > search.best_n + SLACK {
            continue;
        }
        search.times.push(c);
        search.dfs(0.0, idx + 1);
        search.times.pop();
    }
    log::debug!("discrete search visited {} nodes", search.nodes);
    if search.best.is_empty() {
        return Err(Error::Numeric { what: "integer search found no finalist".into(), residual: search.best_n });
    }
    let best = search.best;
    let n = objective(&best, &f);
    Ok(solution(best, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Table(Vec<f64>);
    impl DiscreteTail for Table {
        fn prob_at(&self, n: u64) -> f64 {
            *self.0.get(n as usize).unwrap_or(&1.0)
        }
    }

    #[test]
    fn single_time_is_smallest_feasible() {
        let t = Table(vec![0.0, 0.1, 0.5, 0.4, 0.95, 0.99]);
        let p = SdoProblem::with_target(1, 0.9).unwrap();
        let s = discrete_sdo(&p, &t).unwrap();
        assert_eq!(s.times, vec![4.0]);
    }

    #[test]
    fn two_times_small_table() {
        let t = Table(vec![0.0, 0.1, 0.5, 0.4, 0.6, 0.95]);
        let p = SdoProblem::with_target(2, 0.9).unwrap();
        let s = discrete_sdo(&p, &t).unwrap();
        // n1 = 2 gives 5 − 3·0.5 = 3.5, the minimum over n1 ∈ 1..4
        assert_eq!(s.times, vec![2.0, 5.0]);
        assert!((s.objective - 3.5).abs() < 1e-15);
    }

    #[test]
    fn too_many_times_is_infeasible() {
        let t = Table(vec![0.0, 0.1, 0.95]);
        let p = SdoProblem::with_target(3, 0.9).unwrap();
        assert!(matches!(discrete_sdo(&p, &t), Err(Error::Infeasible(_))));
    }
}
