use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::exp;

use super::{objective_from_values, SdoOptions, SdoProblem, SdoSolution};
use crate::channels::{invert_continuous, ContinuousTail, TailEval};
use crate::error::{Error, Result};

/// Nonnegative quantity stored as `mantissa·e^{ln_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub ln_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, ln_scale: 0.0 };

    pub fn value(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * exp(self.ln_scale)
        }
    }
}

/// One step of the forward recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// `n_{i+1} − n_i`; infinite when the slope vanishes and the numerator
    /// is positive.
    pub gap: f64,
    pub lam: Scaled,
}

/// `a·e^{s}/d` with `0·∞` read as 0.
fn rescaled(a: f64, s: f64, d: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / d * exp(s)
    }
}

/// Recursion step in ratio form: every term is divided by `f(n_i)` before
/// leaving the shared scale, so tiny tails never underflow.
pub fn ratio_step(prev: &TailEval, lam_prev: Scaled, cur: &TailEval, constrained: bool) -> Step {
    let d = cur.slope;
    if d > 0.0 && d.is_finite() {
        let a = cur.value / d;
        let b = rescaled(prev.value, prev.ln_scale - cur.ln_scale, d);
        let c = if constrained { rescaled(lam_prev.mantissa, lam_prev.ln_scale - cur.ln_scale, d) } else { 0.0 };
        let u = a - b - c;
        if !constrained {
            return Step { gap: u, lam: Scaled::ZERO };
        }
        let lam_r = (1.0 - u).max(0.0);
        Step { gap: u.max(1.0), lam: Scaled { mantissa: lam_r * d, ln_scale: cur.ln_scale } }
    } else {
        let num = cur.prob() - prev.prob() - if constrained { lam_prev.value() } else { 0.0 };
        if num > 0.0 {
            Step { gap: f64::INFINITY, lam: Scaled::ZERO }
        } else if constrained {
            Step { gap: 1.0, lam: Scaled { mantissa: -num, ln_scale: 0.0 } }
        } else {
            Step { gap: 0.0, lam: Scaled::ZERO }
        }
    }
}

/// Recursion step in direct form on plain probabilities, returning
/// `(gap, λ_i)`.
pub fn direct_step(f_prev: f64, f_cur: f64, slope: f64, lam_prev: f64, constrained: bool) -> (f64, f64) {
    if !constrained {
        return ((f_cur - f_prev) / slope, 0.0);
    }
    let gap = ((f_cur - f_prev - lam_prev) / slope).max(1.0);
    let lam = (lam_prev + slope - f_cur + f_prev).max(0.0);
    (gap, lam)
}

#[derive(Debug, Clone)]
struct Run {
    times: Vec<f64>,
    evals: Vec<TailEval>,
    lams: Vec<Scaled>,
}

impl Run {
    fn land(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Slope override at one index: the time is snapped to the kink and the
/// slope blended between the one-sided derivatives.
#[derive(Debug, Clone, Copy)]
struct KinkBlend {
    index: usize,
    at: f64,
    theta: f64,
}

struct Solver<'a, T: ContinuousTail + ?Sized> {
    tail: &'a T,
    m: usize,
    constrained: bool,
}

impl<'a, T: ContinuousTail + ?Sized> Solver<'a, T> {
    fn eval_at(&self, i: usize, n: f64, blend: Option<KinkBlend>) -> (f64, TailEval) {
        match blend {
            Some(b) if b.index == i => {
                let left = self.tail.eval_side(b.at, false);
                let right = self.tail.eval_side(b.at, true);
                let f = b.theta * right.density() + (1.0 - b.theta) * left.density();
                (b.at, right.with_density(f))
            }
            _ => (n, self.tail.eval(n)),
        }
    }

    /// Forward recursion from `n1`, optionally reusing the first `index`
    /// times of `prefix`.
    fn run(&self, n1: f64, blend: Option<KinkBlend>, prefix: Option<&Run>) -> Run {
        let mut times = Vec::with_capacity(self.m);
        let mut evals = Vec::with_capacity(self.m);
        let mut lams = Vec::with_capacity(self.m);
        let mut prev = TailEval::plain(0.0, 0.0);
        let mut lam = Scaled::ZERO;
        let mut n = n1;
        if let (Some(b), Some(p)) = (blend, prefix) {
            if b.index > 0 {
                times.extend_from_slice(&p.times[..b.index]);
                evals.extend_from_slice(&p.evals[..b.index]);
                lams.extend_from_slice(&p.lams[..b.index]);
                prev = p.evals[b.index - 1];
                lam = p.lams[b.index - 1];
                n = b.at;
            }
        }
        let mut i = times.len();
        loop {
            let (t, e) = self.eval_at(i, n, blend);
            times.push(t);
            evals.push(e);
            if i + 1 == self.m {
                lams.push(lam);
                break;
            }
            let step = ratio_step(&prev, lam, &e, self.constrained);
            lam = step.lam;
            lams.push(lam);
            prev = e;
            n = t + step.gap;
            i += 1;
            if !n.is_finite() {
                while times.len() < self.m {
                    times.push(f64::INFINITY);
                    evals.push(TailEval::plain(1.0, 0.0));
                    lams.push(Scaled::ZERO);
                }
                break;
            }
        }
        Run { times, evals, lams }
    }

    /// Root of `land(n1) = target` on `[a, b]`, where `land(a) < target ≤
    /// land(b)` or the reverse.
    fn root(&self, mut a: f64, mut b: f64, target: f64) -> Result<(Run, Vec<alloc::string::String>)> {
        let mut ra = self.run(a, None, None);
        let mut rb = self.run(b, None, None);
        let increasing = ra.land() < target;
        for _ in 0..400 {
            let mid = 0.5 * (a + b);
            if mid <= a.min(b) || mid >= a.max(b) {
                break;
            }
            let rm = self.run(mid, None, None);
            let hm = rm.land() - target;
            if hm.abs() <= 1e-11 * target {
                return Ok((rm, vec![]));
            }
            if (hm < 0.0) == increasing {
                a = mid;
                ra = rm;
            } else {
                b = mid;
                rb = rm;
            }
        }
        let tol = 1e-9 * target.max(1.0);
        if (rb.land() - target).abs() <= tol {
            return Ok((rb, vec![]));
        }
        if (ra.land() - target).abs() <= tol {
            return Ok((ra, vec![]));
        }
        if let Some(r) = self.resolve_kink(&ra, &rb, target) {
            return Ok((r, vec![]));
        }
        // Landing jumps without a kink to absorb it: stretch the last gap of
        // the run that lands short.
        let short = if ra.land() < target { ra } else { rb };
        if short.land() < target && short.times.iter().all(|t| t.is_finite()) {
            let w = format!(
                "landing map is discontinuous near n1 = {:.6}; last gap stretched by {:.3e}",
                short.times[0],
                target - short.land()
            );
            log::warn!("{w}");
            return Ok((short, vec![w]));
        }
        Err(Error::Numeric { what: "decoding-time bisection".into(), residual: (short.land() - target).abs() })
    }

    /// Handles a jump of the landing map caused by a derivative kink: the
    /// time crossing the kink is pinned there and its slope is chosen from
    /// the one-sided interval so that the recursion lands on `target`.
    fn resolve_kink(&self, ra: &Run, rb: &Run, target: f64) -> Option<Run> {
        let kink = self.tail.kink()?;
        let index = (0..self.m).find(|&i| (ra.times[i] < kink) != (rb.times[i] < kink))?;
        let prefix = if ra.times[index] < kink { ra } else { rb };
        let at = |theta: f64| {
            let blend = KinkBlend { index, at: kink, theta };
            self.run(prefix.times[0], Some(blend), Some(prefix))
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let r0 = at(lo);
        let r1 = at(hi);
        let (h0, h1) = (r0.land() - target, r1.land() - target);
        if h0.abs() <= 1e-9 * target {
            return Some(r0);
        }
        if h1.abs() <= 1e-9 * target {
            return Some(r1);
        }
        if (h0 < 0.0) == (h1 < 0.0) {
            return None;
        }
        let mut best = if h0.abs() < h1.abs() { r0 } else { r1 };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let rm = at(mid);
            let hm = rm.land() - target;
            if hm.abs() < (best.land() - target).abs() {
                best = rm.clone();
            }
            if hm.abs() <= 1e-11 * target || hi - lo < 1e-16 {
                break;
            }
            if (hm < 0.0) == (h0 < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ((best.land() - target).abs() <= 1e-9 * target).then_some(best)
    }
}

/// Checks `Σ_{i=1}^{m−1} f(x − i) < 1` for `x ≥ n̄` on a grid of step 1/4
/// covering the region where the sum can peak.
fn slope_sum_violation<T: ContinuousTail + ?Sized>(tail: &T, nbar: f64, m: usize) -> Option<(f64, f64)> {
    if m < 2 {
        return None;
    }
    let h = 0.25;
    // peak of f on (0, 2n̄]
    let mut x_peak = nbar;
    let mut f_peak = -1.0;
    let mut k = 1;
    while k as f64 * h <= 2.0 * nbar {
        let f = tail.eval(k as f64 * h).density();
        if f > f_peak {
            f_peak = f;
            x_peak = k as f64 * h;
        }
        k += 1;
    }
    let x_end = nbar.max(x_peak) + m as f64;
    let lo_idx = -(4 * (m as i64 - 1));
    let hi_idx = libm::ceil((x_end - nbar) / h) as i64;
    let grid: Vec<f64> = (lo_idx..=hi_idx)
        .map(|j| {
            let x = nbar + j as f64 * h;
            if x > 0.0 {
                tail.eval(x).density()
            } else {
                0.0
            }
        })
        .collect();
    let at = |j: i64| grid[(j - lo_idx) as usize];
    let mut worst: Option<(f64, f64)> = None;
    for j in 0..=hi_idx {
        let s: f64 = (1..m as i64).map(|i| at(j - 4 * i)).sum();
        if s >= 1.0 && worst.is_none_or(|w| s > w.1) {
            worst = Some((nbar + j as f64 * h, s));
        }
    }
    worst
}

fn solve<T: ContinuousTail + ?Sized>(
    prob: &SdoProblem,
    tail: &T,
    constrained: bool,
    opts: &SdoOptions,
) -> Result<SdoSolution> {
    let nbar = invert_continuous(tail, prob.target, 1.0)?;
    let m = prob.m;
    let mut warnings = Vec::new();
    let finish = |run: Run, warnings: Vec<alloc::string::String>| {
        let mut times = run.times;
        let mut evals = run.evals;
        times[m - 1] = nbar;
        evals[m - 1] = tail.eval(nbar);
        let tail_values: Vec<f64> = evals.iter().map(|e| e.prob()).collect();
        let slopes: Vec<f64> = evals.iter().map(|e| e.density()).collect();
        let multipliers: Vec<f64> = run.lams[..m - 1].iter().map(|l| l.value()).collect();
        let lam_last = multipliers.last().copied().unwrap_or(0.0);
        let f_prev = if m >= 2 { tail_values[m - 2] } else { 0.0 };
        let nu = (1.0 - f_prev - lam_last) / slopes[m - 1];
        SdoSolution {
            objective: objective_from_values(&times, &tail_values),
            times,
            multipliers,
            slopes,
            tail_values,
            nu: Some(nu),
            gamma: prob.gamma,
            delta: prob.delta,
            integer: false,
            warnings,
        }
    };
    if m == 1 {
        let e = tail.eval(nbar);
        return Ok(finish(Run { times: vec![nbar], evals: vec![e], lams: vec![Scaled::ZERO] }, warnings));
    }
    if constrained && nbar <= (m - 1) as f64 {
        return Err(Error::Hypothesis(format!("n̄ = {nbar:.6} does not exceed m − 1 = {}", m - 1)));
    }
    if constrained {
        if let Some((x, s)) = slope_sum_violation(tail, nbar, m) {
            let msg = format!("slope sum Σ f(x − i) = {s:.6} ≥ 1 at x = {x:.4}");
            if opts.strict {
                return Err(Error::Hypothesis(msg));
            }
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let solver = Solver { tail, m, constrained };
    let hi = if constrained { nbar - (m - 1) as f64 } else { nbar };
    let lo = (hi * 1e-6).min(1e-3);
    let h_lo = solver.run(lo, None, None).land() - nbar;
    let h_hi = solver.run(hi, None, None).land() - nbar;
    if h_hi.abs() <= 1e-11 * nbar {
        return Ok(finish(solver.run(hi, None, None), warnings));
    }
    if h_lo < 0.0 && h_hi > 0.0 {
        let (run, w) = solver.root(lo, hi, nbar)?;
        warnings.extend(w);
        return Ok(finish(run, warnings));
    }
    // Endpoints do not bracket: scan for sign changes and keep the best root.
    let msg = "landing map not bracketed by the n1 endpoints; scanning".into();
    log::warn!("{msg}");
    warnings.push(msg);
    let grid: Vec<f64> = (0..=64).map(|i| lo + (hi - lo) * i as f64 / 64.0).collect();
    let hs: Vec<f64> = grid.iter().map(|&x| solver.run(x, None, None).land() - nbar).collect();
    let mut best: Option<SdoSolution> = None;
    for w in 0..64 {
        if (hs[w] < 0.0) != (hs[w + 1] < 0.0) {
            if let Ok((run, extra)) = solver.root(grid[w], grid[w + 1], nbar) {
                let mut ws = warnings.clone();
                ws.extend(extra);
                let sol = finish(run, ws);
                if best.as_ref().is_none_or(|b| sol.objective < b.objective) {
                    best = Some(sol);
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no first decoding time makes the recursion land on n̄".into()))
}

/// Real-valued decoding times with gaps of at least one.
pub fn gap_constrained_sdo<T: ContinuousTail + ?Sized>(
    prob: &SdoProblem,
    tail: &T,
    opts: &SdoOptions,
) -> Result<SdoSolution> {
    solve(prob, tail, true, opts)
}

/// Real-valued decoding times without the gap constraint.
pub fn unconstrained_sdo<T: ContinuousTail + ?Sized>(prob: &SdoProblem, tail: &T) -> Result<SdoSolution> {
    solve(prob, tail, false, &SdoOptions::default())
}

/// Residuals of the optimality conditions of a gap-constrained solution.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `F(n_i) − F(n_{i−1}) − (n_{i+1} − n_i) f_i + λ_i − λ_{i−1}`.
    pub stationarity: Vec<f64>,
    /// `λ_i (n_{i+1} − n_i − 1)`.
    pub complementarity: Vec<f64>,
    pub min_multiplier: f64,
    pub min_gap: f64,
    pub nu: f64,
    /// Largest distance between a recorded slope and the admissible slope
    /// interval at its time.
    pub slope_mismatch: f64,
}

impl KktReport {
    pub fn max_stationarity(&self) -> f64 {
        self.stationarity.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn max_complementarity(&self) -> f64 {
        self.complementarity.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_stationarity() <= tol
            && self.max_complementarity() <= tol
            && self.min_multiplier >= -1e-9
            && self.min_gap >= 1.0 - 1e-9
            && self.nu >= -1e-9
            && self.slope_mismatch <= tol
    }
}

/// Evaluates the stationarity and complementary-slackness conditions of
/// `sol` against `tail`. At a derivative kink any slope between the two
/// one-sided derivatives is admissible.
pub fn kkt_report<T: ContinuousTail + ?Sized>(sol: &SdoSolution, tail: &T) -> KktReport {
    let m = sol.m();
    let f: Vec<f64> = sol.times.iter().map(|&t| tail.prob(t)).collect();
    let mut mismatch: f64 = 0.0;
    for (i, &t) in sol.times.iter().enumerate() {
        let l = tail.eval_side(t, false).density();
        let r = tail.eval_side(t, true).density();
        let (a, b) = if l <= r { (l, r) } else { (r, l) };
        let s = sol.slopes[i];
        let tol = 1e-9 * b.abs().max(1e-300);
        let d = if s < a - tol {
            a - s
        } else if s > b + tol {
            s - b
        } else {
            0.0
        };
        mismatch = mismatch.max(d);
    }
    let mut stationarity = Vec::with_capacity(m.saturating_sub(1));
    let mut complementarity = Vec::with_capacity(m.saturating_sub(1));
    for i in 0..m.saturating_sub(1) {
        let f_prev = if i == 0 { 0.0 } else { f[i - 1] };
        let lam_prev = if i == 0 { 0.0 } else { sol.multipliers[i - 1] };
        let gap = sol.times[i + 1] - sol.times[i];
        let lam = sol.multipliers[i];
        stationarity.push(f[i] - f_prev - gap * sol.slopes[i] + lam - lam_prev);
        complementarity.push(lam * (gap - 1.0));
    }
    KktReport {
        stationarity,
        complementarity,
        min_multiplier: sol.multipliers.iter().copied().fold(f64::INFINITY, f64::min),
        min_gap: sol.min_gap(),
        nu: sol.nu.unwrap_or(0.0),
        slope_mismatch: mismatch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Expo(f64);
    impl ContinuousTail for Expo {
        fn eval(&self, n: f64) -> TailEval {
            if n <= 0.0 {
                return TailEval::plain(0.0, 0.0);
            }
            TailEval::plain(1.0 - exp(-self.0 * n), self.0 * exp(-self.0 * n))
        }
    }

    #[test]
    fn ratio_and_direct_agree() {
        let prev = TailEval { value: 2.0, slope: 3.0, ln_scale: -5.0 };
        let cur = TailEval { value: 1.5, slope: 0.4, ln_scale: -3.0 };
        let lam = Scaled { mantissa: 0.7, ln_scale: -6.0 };
        for constrained in [true, false] {
            let s = ratio_step(&prev, lam, &cur, constrained);
            let (g, l) = direct_step(prev.prob(), cur.prob(), cur.density(), lam.value(), constrained);
            assert!((s.gap - g).abs() < 1e-12 * g.abs().max(1.0));
            assert!((s.lam.value() - l).abs() < 1e-14);
        }
    }

    #[test]
    fn single_time_is_inverse() {
        let p = SdoProblem::with_target(1, 0.99).unwrap();
        let s = gap_constrained_sdo(&p, &Expo(0.1), &SdoOptions::default()).unwrap();
        assert!((s.times[0] - libm::log(100.0) / 0.1).abs() < 1e-8);
        assert_eq!(s.objective, s.times[0]);
    }

    #[test]
    fn exponential_two_times_stationary_point() {
        // N(n1) = n̄ − (n̄ − n1)(1 − e^{−c n1}); dN/dn1 = 0 solved by bisection
        let c = 0.1;
        let p = SdoProblem::with_target(2, 0.99).unwrap();
        let nbar = libm::log(100.0) / c;
        let d = |x: f64| (1.0 - exp(-c * x)) - (nbar - x) * c * exp(-c * x);
        let (mut a, mut b) = (1e-9, nbar);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if d(mid) < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let s = unconstrained_sdo(&p, &Expo(c)).unwrap();
        assert!((s.times[0] - a).abs() < 1e-6, "{} vs {a}", s.times[0]);
        let g = gap_constrained_sdo(&p, &Expo(c), &SdoOptions::default()).unwrap();
        assert!((g.times[0] - a).abs() < 1e-6);
        assert!(kkt_report(&g, &Expo(c)).passes(1e-6));
    }
}
