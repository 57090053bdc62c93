//! Row producers behind the `tail`, `sdo`, `curve` and `bec-rlfc`
//! subcommands.

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use vlsf_core::bounds::{
    backoff_bounds, devassy_bound, polyanskiy_bound, st_rlfc_sdo, st_rlfc_zero_error_bound,
    st_rlfc_zero_error_bound_markov, RateCurvePoint, EXACT_POW2_K,
};
use vlsf_core::channels::{
    channel_stats, gamma_from_delta, make_tail_model, make_tail_model_with_stats, tail_exact_bec, tail_exact_bsc,
    ContinuousTail, TailConfig, TailMode,
};
use vlsf_core::mc_oracle::{SimConfig, TailEstimate};
use vlsf_core::sdo::{discrete_sdo, gap_constrained_sdo, SdoOptions, SdoProblem, SdoSolution, TwoStepOptions};
use vlsf_core::{Channel, Result as CoreResult};

use crate::parallel;

/// How the error event is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Mode {
    /// Information-density threshold decoding.
    #[default]
    Infodens,
    /// Systematic transmission plus random linear fountain coding (BEC).
    Strlfc,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TailRow {
    pub n: u64,
    pub model_tail: f64,
    pub exact_tail: Option<f64>,
    pub petrov_tail: Option<f64>,
    pub edgeworth_tail: Option<f64>,
    pub gaussian_tail: f64,
    pub mc_tail: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub switch_point: Option<f64>,
}

/// Tail table of `P[Σι ≥ γ]` on an integer grid, with optional simulation.
pub fn tail_rows(ch: &Channel, gamma: f64, ns: &[u64], sim: Option<&SimConfig>) -> anyhow::Result<Vec<TailRow>> {
    let tm = make_tail_model(ch, gamma)?;
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let counts = match sim {
        Some(cfg) if n_max > 0 => Some(parallel::info_density_counts(ch, gamma, n_max, cfg)),
        _ => None,
    };
    let rows = ns
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let x = n as f64;
            let mc = counts.as_ref().zip(sim).map(|(c, cfg)| TailEstimate::from_counts(c[n as usize - 1], cfg.trials));
            TailRow {
                n,
                model_tail: match tm.mode() {
                    TailMode::Continuous => tm.prob(x),
                    TailMode::Discrete => tm.prob_at(n),
                },
                exact_tail: match *ch {
                    Channel::Bsc { p } => Some(tail_exact_bsc(n, gamma, p)),
                    Channel::Bec { p } => Some(tail_exact_bec(n, gamma, p)),
                    Channel::BiAwgn { .. } => None,
                },
                petrov_tail: tm.petrov_branch(x),
                edgeworth_tail: tm.edgeworth_branch(x),
                gaussian_tail: tm.gaussian_tail(x),
                mc_tail: mc.map(|e| e.p_hat),
                mc_stderr: mc.map(|e| e.stderr),
                switch_point: tm.switch_point(),
            }
        })
        .collect();
    Ok(rows)
}

/// One row of a rate curve; the CSV header is part of the output contract.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CurveRow {
    pub source: String,
    pub channel: String,
    pub param: f64,
    pub k: u32,
    pub m: Option<usize>,
    pub eps: f64,
    pub delta_star: Option<f64>,
    pub gamma_star: Option<f64>,
    pub n_times: String,
    #[serde(rename = "N_star")]
    pub n_star: Option<f64>,
    pub rate: Option<f64>,
}

impl CurveRow {
    fn base(source: &str, ch: &Channel, k: u32, m: Option<usize>, eps: f64) -> Self {
        CurveRow {
            source: source.into(),
            channel: ch.kind().into(),
            param: ch.param(),
            k,
            m,
            eps,
            delta_star: None,
            gamma_star: None,
            n_times: String::new(),
            n_star: None,
            rate: None,
        }
    }

    fn from_point(pt: &RateCurvePoint, ch: &Channel, m: Option<usize>) -> Self {
        CurveRow {
            delta_star: pt.delta_star,
            gamma_star: pt.gamma_star,
            n_star: Some(pt.avg_blocklength_bound),
            rate: Some(pt.rate),
            ..Self::base(&pt.source, ch, pt.k, m, pt.eps)
        }
    }

    fn from_solution(source: &str, ch: &Channel, k: u32, eps: f64, r: CoreResult<(SdoSolution, Option<f64>)>) -> Self {
        match r {
            Ok((sol, delta)) => {
                let mut pt = RateCurvePoint::new(source, k, sol.m(), eps, sol.objective);
                pt.delta_star = delta;
                pt.gamma_star = sol.gamma;
                CurveRow { n_times: join_times(&sol), ..Self::from_point(&pt, ch, Some(sol.m())) }
            }
            Err(e) => {
                log::warn!("{source} k={k}: {e}");
                CurveRow { n_times: "infeasible".into(), ..Self::base(source, ch, k, None, eps) }
            }
        }
    }
}

/// Curve row for one solved `(k, m)` point; failures become `infeasible` rows.
pub fn solution_row(
    source: &str,
    ch: &Channel,
    k: u32,
    m: usize,
    eps: f64,
    r: CoreResult<(SdoSolution, Option<f64>)>,
) -> CurveRow {
    let mut row = CurveRow::from_solution(source, ch, k, eps, r);
    row.m = Some(m);
    row
}

fn join_times(sol: &SdoSolution) -> String {
    sol.times
        .iter()
        .map(|t| if sol.integer { format!("{}", *t as u64) } else { format!("{t:.6}") })
        .collect::<Vec<_>>()
        .join(";")
}

/// Decoding times for one `(k, m)` point. A fixed `δ` or `γ` skips the outer
/// search; otherwise `δ` is optimized.
#[allow(clippy::too_many_arguments)]
pub fn sdo_point(
    ch: &Channel,
    mode: Mode,
    k: u32,
    m: usize,
    eps: f64,
    delta: Option<f64>,
    gamma: Option<f64>,
    opts: &TwoStepOptions,
) -> CoreResult<(SdoSolution, Option<f64>)> {
    match mode {
        Mode::Strlfc => {
            let Channel::Bec { p } = *ch else {
                return Err(vlsf_core::Error::Argument("the fountain-code mode needs a BEC".into()));
            };
            st_rlfc_sdo(k, p, m, eps).map(|s| (s, None))
        }
        Mode::Infodens => {
            let fixed = match (delta, gamma) {
                (Some(d), _) => Some((d, gamma_from_delta(k, eps, d))),
                (None, Some(g)) => {
                    let d = (vlsf_core::channels::log2_m_minus_1(k) - g).exp2() / eps;
                    Some((d, g))
                }
                (None, None) => None,
            };
            match fixed {
                None => parallel::two_step(ch, m, k, eps, opts).map(|(s, d)| (s, Some(d))),
                Some((d, g)) => {
                    let stats = channel_stats(ch)?;
                    let tm = make_tail_model_with_stats(ch, &stats, g, &opts.tail)?;
                    let mut prob = SdoProblem::from_delta(m, k, eps, d)?;
                    prob.gamma = Some(g);
                    let sol = match tm.mode() {
                        TailMode::Continuous => gap_constrained_sdo(&prob, &tm, &SdoOptions { strict: opts.strict }),
                        TailMode::Discrete => discrete_sdo(&prob, &tm),
                    }?;
                    Ok((sol, Some(d)))
                }
            }
        }
    }
}

/// Rate curve over `ks × ms` plus baselines, sorted by `(source, k, m)`.
pub fn curve_rows(
    ch: &Channel,
    mode: Mode,
    ks: &[u64],
    ms: &[usize],
    eps: f64,
    opts: &TwoStepOptions,
) -> anyhow::Result<Vec<CurveRow>> {
    let ks: Vec<u32> = ks.iter().map(|&k| u32::try_from(k).context("k too large")).collect::<anyhow::Result<_>>()?;
    if mode == Mode::Strlfc && !matches!(ch, Channel::Bec { .. }) {
        bail!("the fountain-code mode needs a BEC");
    }
    let source = match mode {
        Mode::Infodens => "sdo",
        Mode::Strlfc => "st_rlfc_sdo",
    };
    let grid: Vec<(u32, usize)> = ks.iter().flat_map(|&k| ms.iter().map(move |&m| (k, m))).collect();
    let mut rows: Vec<CurveRow> = grid
        .par_iter()
        .map(|&(k, m)| solution_row(source, ch, k, m, eps, sdo_point(ch, mode, k, m, eps, None, None, opts)))
        .collect();
    let stats = channel_stats(ch)?;
    for &k in &ks {
        let pt = RateCurvePoint::new("polyanskiy", k, 0, eps, polyanskiy_bound(k, eps, &stats)?);
        rows.push(CurveRow::from_point(&pt, ch, None));
        if let Channel::Bec { p } = *ch {
            let pt = RateCurvePoint::new("devassy", k, 0, 0.0, devassy_bound(k, p)?);
            rows.push(CurveRow::from_point(&pt, ch, None));
            let l = st_rlfc_zero_error_bound(k, p)?;
            let pt = RateCurvePoint::new("st_rlfc_zero_error", k, 0, 0.0, l);
            rows.push(CurveRow::from_point(&pt, ch, None));
        }
    }
    rows.sort_by(|a, b| (a.source.as_str(), a.k, a.m).cmp(&(b.source.as_str(), b.k, b.m)));
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BecRow {
    pub k: u32,
    pub p: f64,
    pub devassy: f64,
    pub st_rlfc_zero_error: f64,
    pub st_rlfc_markov: f64,
    pub backoff_old: Option<f64>,
    pub backoff_new: Option<f64>,
    pub mc_mean_tau: Option<f64>,
    pub mc_stderr: Option<f64>,
}

/// Zero-error fountain bounds, backoff fractions and simulated mean
/// stopping times (simulation for `k ≤ 64`).
pub fn bec_rlfc_rows(p: f64, ks: &[u64], sim: Option<&SimConfig>) -> anyhow::Result<Vec<BecRow>> {
    ks.iter()
        .map(|&k| {
            let k = u32::try_from(k).context("k too large")?;
            let backoff = if p > 0.0 { Some(backoff_bounds(k, p)?) } else { None };
            let mc = match sim {
                Some(cfg) if k <= EXACT_POW2_K => {
                    let t = parallel::rank_tally(k, p, 0, cfg);
                    Some((t.mean_tau(), t.tau_stderr()))
                }
                _ => None,
            };
            Ok(BecRow {
                k,
                p,
                devassy: devassy_bound(k, p)?,
                st_rlfc_zero_error: st_rlfc_zero_error_bound(k, p)?,
                st_rlfc_markov: st_rlfc_zero_error_bound_markov(k, p)?,
                backoff_old: backoff.map(|b| b.0),
                backoff_new: backoff.map(|b| b.1),
                mc_mean_tau: mc.map(|m| m.0),
                mc_stderr: mc.map(|m| m.1),
            })
        })
        .collect()
}

/// Default outer-search options with the tail configuration exposed.
pub fn two_step_options(strict: bool) -> TwoStepOptions {
    TwoStepOptions { strict, tail: TailConfig::default(), ..TwoStepOptions::default() }
}
