//! Outer minimization over the threshold split `δ`.
//!
//! `γ(δ) = log₂((M−1)/(δε))`. Each `δ` gives one inner program; the outer
//! search evaluates a grid uniform in `logit δ`, keeps the best point and
//! refines it by golden section between its grid neighbours.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use libm::{exp, log};

use super::{discrete_sdo, gap_constrained_sdo, SdoOptions, SdoProblem, SdoSolution};
use crate::channels::{
    channel_stats, gamma_from_delta, make_tail_model_with_stats, Channel, ChannelStats, TailConfig, TailMode,
};
use crate::error::{Error, Result};

/// Outer search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepOptions {
    /// Number of grid points on `(δ_min, 1 − δ_min)`.
    pub grid_points: usize,
    pub delta_min: f64,
    /// Extra `δ` values always evaluated.
    pub hints: Vec<f64>,
    /// Relative tolerance of the golden-section refinement.
    pub rel_tol: f64,
    pub strict: bool,
    pub tail: TailConfig,
}

impl Default for TwoStepOptions {
    fn default() -> Self {
        TwoStepOptions {
            grid_points: 64,
            delta_min: 1e-6,
            hints: alloc::vec![0.1, 0.5, 0.9],
            rel_tol: 1e-4,
            strict: false,
            tail: TailConfig::default(),
        }
    }
}

fn logit(d: f64) -> f64 {
    log(d / (1.0 - d))
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

impl TwoStepOptions {
    /// Sorted, deduplicated `δ` values of the coarse pass.
    pub fn delta_grid(&self) -> Vec<f64> {
        let (a, b) = (logit(self.delta_min), logit(1.0 - self.delta_min));
        let n = self.grid_points.max(2);
        let mut g: Vec<f64> = (0..n).map(|i| expit(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
        g.extend(self.hints.iter().copied().filter(|d| *d > 0.0 && *d < 1.0));
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

/// Inner solve at one `δ`.
pub fn solve_at_delta(
    ch: &Channel,
    stats: &ChannelStats,
    m: usize,
    k: u32,
    eps: f64,
    delta: f64,
    opts: &TwoStepOptions,
) -> Result<SdoSolution> {
    let prob = SdoProblem::from_delta(m, k, eps, delta)?;
    let tm = make_tail_model_with_stats(ch, stats, gamma_from_delta(k, eps, delta), &opts.tail)?;
    match tm.mode() {
        TailMode::Continuous => gap_constrained_sdo(&prob, &tm, &SdoOptions { strict: opts.strict }),
        TailMode::Discrete => discrete_sdo(&prob, &tm),
    }
}

/// Golden-section refinement around the best of the coarse evaluations.
///
/// `evaluated` pairs each grid `δ` with its inner result; it may come from a
/// parallel pass and is sorted here.
pub fn two_step_refine(
    ch: &Channel,
    stats: &ChannelStats,
    m: usize,
    k: u32,
    eps: f64,
    mut evaluated: Vec<(f64, Result<SdoSolution>)>,
    opts: &TwoStepOptions,
) -> Result<(SdoSolution, f64)> {
    evaluated.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut skipped: Vec<String> = Vec::new();
    let mut best: Option<(usize, SdoSolution)> = None;
    for (i, (d, r)) in evaluated.iter().enumerate() {
        match r {
            Ok(s) => {
                if best.as_ref().is_none_or(|(_, b)| s.objective < b.objective) {
                    best = Some((i, s.clone()));
                }
            }
            Err(e @ Error::Hypothesis(_)) if opts.strict => return Err(e.clone()),
            Err(e) => skipped.push(format!("δ = {d:.3e}: {e}")),
        }
    }
    let Some((i, mut incumbent)) = best else {
        return Err(Error::Infeasible(format!("no δ in the search grid gives a feasible program for m = {m}")));
    };
    let mut delta_best = evaluated[i].0;
    let lo = if i > 0 { evaluated[i - 1].0 } else { evaluated[i].0 };
    let hi = if i + 1 < evaluated.len() { evaluated[i + 1].0 } else { evaluated[i].0 };
    let mut a = logit(lo);
    let mut b = logit(hi);
    let objective = |x: f64| solve_at_delta(ch, stats, m, k, eps, expit(x), opts);
    let mut consider = |x: f64, r: Result<SdoSolution>| -> f64 {
        match r {
            Ok(s) => {
                let n = s.objective;
                if n < incumbent.objective {
                    incumbent = s;
                    delta_best = expit(x);
                }
                n
            }
            Err(_) => f64::INFINITY,
        }
    };
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if b > a {
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = consider(c, objective(c));
        let mut fd = consider(d, objective(d));
        for _ in 0..100 {
            let (da, db) = (expit(a), expit(b));
            if (db - da).abs() <= opts.rel_tol * da.max(db)
                && (db - da).abs() <= opts.rel_tol * (1.0 - da).max(1.0 - db)
            {
                break;
            }
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = consider(c, objective(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = consider(d, objective(d));
            }
        }
    }
    if !skipped.is_empty() {
        log::debug!("two-step search skipped {} infeasible δ values", skipped.len());
    }
    Ok((incumbent, delta_best))
}

/// Minimizes the bound over `δ` with default options.
pub fn two_step_minimize(ch: &Channel, m: usize, k: u32, eps: f64) -> Result<(SdoSolution, f64)> {
    two_step_minimize_with(ch, m, k, eps, &TwoStepOptions::default())
}

/// Minimizes the bound over `δ`; returns the best solution and `δ*`.
pub fn two_step_minimize_with(
    ch: &Channel,
    m: usize,
    k: u32,
    eps: f64,
    opts: &TwoStepOptions,
) -> Result<(SdoSolution, f64)> {
    let stats = channel_stats(ch)?;
    let evaluated: Vec<(f64, Result<SdoSolution>)> =
        opts.delta_grid().into_iter().map(|d| (d, solve_at_delta(ch, &stats, m, k, eps, d, opts))).collect();
    two_step_refine(ch, &stats, m, k, eps, evaluated, opts)
}
