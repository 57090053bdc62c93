//! Decoding-time optimizers.
//!
//! * [`gap_constrained_sdo`] and [`unconstrained_sdo`] solve the real-valued
//!   relaxation for a differentiable tail.
//! * [`discrete_sdo`] solves the integer program by depth-first search.
//! * [`two_step_minimize`] adds the outer search over the threshold.

use alloc::string::String;
use alloc::vec::Vec;

use crate::channels::{gamma_from_delta, reliability_target, ContinuousTail, DiscreteTail};
use crate::error::{arg_err, Result};

mod continuous;
mod discrete;
mod two_step;

pub use continuous::{
    direct_step, gap_constrained_sdo, kkt_report, ratio_step, unconstrained_sdo, KktReport, Scaled, Step,
};
pub use discrete::{discrete_sdo, discrete_sdo_with};
pub use two_step::{solve_at_delta, two_step_minimize, two_step_minimize_with, two_step_refine, TwoStepOptions};

/// Solver switches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SdoOptions {
    /// Turn a failed sufficient-condition check into an error.
    pub strict: bool,
}

/// One instance of the decoding-time program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdoProblem {
    pub m: usize,
    /// Required value of the tail at the last decoding time.
    pub target: f64,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
}

impl SdoProblem {
    /// `M = 2^k` messages, error `ε`, and split `δ`: `γ = log₂((M−1)/(δε))`
    /// and target `1 − ε + (M−1)2^{−γ} = 1 − ε + δε`.
    pub fn from_delta(m: usize, k: u32, eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(arg_err!("ε must lie in (0, 1), got {eps}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(arg_err!("δ must lie in (0, 1), got {delta}"));
        }
        let gamma = gamma_from_delta(k, eps, delta);
        let mut p = Self::with_target(m, reliability_target(k, eps, gamma))?;
        p.gamma = Some(gamma);
        p.delta = Some(delta);
        Ok(p)
    }

    /// A program with an explicit target and no threshold.
    pub fn with_target(m: usize, target: f64) -> Result<Self> {
        if m == 0 {
            return Err(arg_err!("need at least one decoding time"));
        }
        if !(target > 0.0 && target < 1.0) {
            return Err(arg_err!("target must lie in (0, 1), got {target}"));
        }
        Ok(SdoProblem { m, target, gamma: None, delta: None })
    }
}

/// Optimized decoding times and their certificate data.
#[derive(Debug, Clone, PartialEq)]
pub struct SdoSolution {
    pub times: Vec<f64>,
    /// Gap multipliers `λ_1..λ_{m−1}` (continuous solvers only).
    pub multipliers: Vec<f64>,
    /// Slopes `f(n_i)` used by the recursion, one per time.
    pub slopes: Vec<f64>,
    /// Tail values `F(n_i)`.
    pub tail_values: Vec<f64>,
    /// Multiplier of the reliability constraint (continuous solvers only).
    pub nu: Option<f64>,
    pub objective: f64,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub integer: bool,
    pub warnings: Vec<String>,
}

impl SdoSolution {
    pub fn m(&self) -> usize {
        self.times.len()
    }

    pub fn min_gap(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// `N` recomputed from the stored times and tail values.
    pub fn recompute_objective(&self) -> f64 {
        objective_from_values(&self.times, &self.tail_values)
    }

    /// Integer times (for solutions of the integer program).
    pub fn integer_times(&self) -> Vec<u64> {
        self.times.iter().map(|&t| t as u64).collect()
    }
}

/// `N = n_m + Σ_{i<m} (n_i − n_{i+1}) F(n_i)` from precomputed `F(n_i)`.
pub fn objective_from_values(times: &[f64], tails: &[f64]) -> f64 {
    let m = times.len();
    let mut acc = times[m - 1];
    for i in 0..m - 1 {
        acc += (times[i] - times[i + 1]) * tails[i];
    }
    acc
}

/// `N(γ, n₁ᵐ)` for real times on a continuous tail.
pub fn objective_n<T: ContinuousTail + ?Sized>(times: &[f64], tail: &T) -> Result<f64> {
    check_ascending(times)?;
    let f: Vec<f64> = times.iter().map(|&t| tail.prob(t)).collect();
    Ok(objective_from_values(times, &f))
}

/// `N(γ, n₁ᵐ)` for integer times on a discrete tail.
pub fn objective_n_discrete<T: DiscreteTail + ?Sized>(times: &[u64], tail: &T) -> Result<f64> {
    let t: Vec<f64> = times.iter().map(|&v| v as f64).collect();
    check_ascending(&t)?;
    let f: Vec<f64> = times.iter().map(|&v| tail.prob_at(v)).collect();
    Ok(objective_from_values(&t, &f))
}

fn check_ascending(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(arg_err!("need at least one decoding time"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(arg_err!("decoding times must be strictly ascending"));
    }
    Ok(())
}
