//! Channel models, information-density statistics and tail evaluators
//! `F_γ(n) ≈ P[Σ_{t≤n} ι_t ≥ γ]`.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, exp, floor, log1p, log2, sqrt};

use crate::cumulants::{cumulants_from_moments, CumulantVector, EdgeworthKernel, MomentVector};
use crate::error::{arg_err, Error, Result};
use crate::expansions::{self, CramerSeries3, EDGEWORTH_ORDER};
use crate::quadrature;
use crate::special::{binomial_cdf, normal_pdf, Dual, Scalar, LN_2};

/// Number of information-density cumulants kept per channel.
pub const CUMULANT_ORDER: usize = 7;

/// Erasure probability at and above which the BEC tail switches from the
/// exact binomial sum to the continuity-corrected series.
pub const BEC_SERIES_THRESHOLD: f64 = 0.2;

/// Search horizon for inverting tail models.
pub const MAX_HORIZON: u64 = 1_000_000;

/// Binary-input memoryless channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// BI-AWGN channel with linear SNR `P` (unit noise variance).
    BiAwgn { snr: f64 },
    /// Binary symmetric channel with crossover `p ∈ (0, 1/2)`.
    Bsc { p: f64 },
    /// Binary erasure channel with erasure probability `p ∈ [0, 1)`.
    Bec { p: f64 },
}

impl Channel {
    pub fn biawgn_db(snr_db: f64) -> Self {
        Channel::BiAwgn { snr: libm::pow(10.0, snr_db / 10.0) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Channel::BiAwgn { snr } if !(snr > 0.0 && snr.is_finite()) => {
                Err(arg_err!("BI-AWGN SNR must be positive, got {snr}"))
            }
            Channel::Bsc { p } if !(p > 0.0 && p < 0.5) => Err(arg_err!("BSC crossover must lie in (0, 1/2), got {p}")),
            Channel::Bec { p } if !(0.0..1.0).contains(&p) => {
                Err(arg_err!("BEC erasure probability must lie in [0, 1), got {p}"))
            }
            _ => Ok(()),
        }
    }

    /// Short identifier: `biawgn`, `bsc` or `bec`.
    pub fn kind(&self) -> &'static str {
        match self {
            Channel::BiAwgn { .. } => "biawgn",
            Channel::Bsc { .. } => "bsc",
            Channel::Bec { .. } => "bec",
        }
    }

    /// The channel parameter: SNR in dB for BI-AWGN, `p` otherwise.
    pub fn param(&self) -> f64 {
        match *self {
            Channel::BiAwgn { snr } => 10.0 * libm::log10(snr),
            Channel::Bsc { p } | Channel::Bec { p } => p,
        }
    }
}

/// Capacity, dispersion, maximal information density and cumulants of the
/// per-symbol information density (bits) under uniform input.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub capacity: f64,
    pub dispersion: f64,
    pub a0: f64,
    pub cumulants: CumulantVector,
}

/// `ι(y) = 1 − log₂(1 + e^{−2√P·y})` given `X = +√P`.
pub(crate) fn biawgn_info_density(a: f64, y: f64) -> f64 {
    let t = -2.0 * a * y;
    let sp = if t > 0.0 { t + log1p(exp(-t)) } else { log1p(exp(t)) };
    1.0 - sp / LN_2
}

fn two_point_cumulants(hi: f64, lo: f64, p_lo: f64) -> CumulantVector {
    let m = (1..=CUMULANT_ORDER).map(|j| (1.0 - p_lo) * hi.powi(j as i32) + p_lo * lo.powi(j as i32)).collect();
    cumulants_from_moments(&MomentVector::new(m).expect("valid two-point moments"))
}

pub fn channel_stats(ch: &Channel) -> Result<ChannelStats> {
    ch.validate()?;
    match *ch {
        Channel::BiAwgn { snr } => {
            let a = sqrt(snr);
            let (lo, hi) = (a - 40.0, a + 40.0);
            let integ = |g: &dyn Fn(f64) -> f64| {
                quadrature::integrate(|y| g(y) * normal_pdf(y - a), lo, hi, 1e-13, 1e-12, 4000)
            };
            let cap = integ(&|y| biawgn_info_density(a, y))?.value;
            let mut moments = Vec::with_capacity(CUMULANT_ORDER);
            for j in 1..=CUMULANT_ORDER {
                let q = integ(&|y| (biawgn_info_density(a, y) - cap).powi(j as i32))?;
                if q.error > 1e-10 * q.value.abs().max(1.0) {
                    return Err(Error::Numeric { what: "BI-AWGN moment quadrature".into(), residual: q.error });
                }
                moments.push(q.value);
            }
            let mut k = cumulants_from_moments(&MomentVector::new(moments)?).as_slice().to_vec();
            k[0] = cap;
            let cumulants = CumulantVector::new(k)?;
            Ok(ChannelStats { capacity: cap, dispersion: cumulants.get(2), a0: 1.0, cumulants })
        }
        Channel::Bsc { p } => {
            let hi = log2(2.0 - 2.0 * p);
            let lo = log2(2.0 * p);
            let cumulants = two_point_cumulants(hi, lo, p);
            Ok(ChannelStats { capacity: cumulants.get(1), dispersion: cumulants.get(2), a0: hi, cumulants })
        }
        Channel::Bec { p } => {
            let cumulants = two_point_cumulants(1.0, 0.0, p);
            Ok(ChannelStats { capacity: 1.0 - p, dispersion: p * (1.0 - p), a0: 1.0, cumulants })
        }
    }
}

/// Floors `v`, treating values within `1e-9` below an integer as that integer.
fn robust_floor(v: f64) -> f64 {
    floor(v + 1e-9 * (1.0 + v.abs()))
}

/// Exact BSC tail: at most `⌊(n·log₂(2−2p) − γ)/log₂((1−p)/p)⌋` flips.
pub fn tail_exact_bsc(n: u64, gamma: f64, p: f64) -> f64 {
    let c = robust_floor((n as f64 * log2(2.0 - 2.0 * p) - gamma) / log2((1.0 - p) / p));
    if c < 0.0 {
        return 0.0;
    }
    binomial_cdf(c as i64, n, p)
}

/// Exact BEC tail `P[Binomial(n, p) ≤ n − γ]`.
pub fn tail_exact_bec(n: u64, gamma: f64, p: f64) -> f64 {
    let c = robust_floor(n as f64 - gamma);
    if c < 0.0 {
        return 0.0;
    }
    binomial_cdf(c as i64, n, p)
}

/// The times `α_i = ⌈(γ + i·log₂((1−p)/p))/log₂(2−2p)⌉ ≤ n_max` at which
/// the exact BSC tail has its local maxima.
pub fn bsc_local_maximizers(gamma: f64, p: f64, n_max: u64) -> Vec<u64> {
    let a0 = log2(2.0 - 2.0 * p);
    let step = log2((1.0 - p) / p);
    let mut out = Vec::new();
    for i in 0u64.. {
        let v = (gamma + i as f64 * step) / a0;
        let alpha = ceil(v - 1e-9 * (1.0 + v.abs())).max(0.0) as u64;
        if alpha > n_max {
            break;
        }
        out.push(alpha);
    }
    out
}

/// `F(n) = value·e^{ln_scale}` and `f(n) = slope·e^{ln_scale}`.
///
/// The shared scale keeps tiny tails and their derivatives representable,
/// and lets ratios `F/f` be formed without underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEval {
    pub value: f64,
    pub slope: f64,
    pub ln_scale: f64,
}

impl TailEval {
    pub fn plain(value: f64, slope: f64) -> Self {
        TailEval { value, slope, ln_scale: 0.0 }
    }

    pub fn prob(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value * exp(self.ln_scale)
        }
    }

    pub fn density(&self) -> f64 {
        if self.slope == 0.0 {
            0.0
        } else {
            self.slope * exp(self.ln_scale)
        }
    }

    /// Same point with the slope replaced (used at kinks).
    pub fn with_density(self, f: f64) -> Self {
        TailEval { slope: f * exp(-self.ln_scale), ..self }
    }
}

/// A tail defined for real `n > 0` with a derivative.
pub trait ContinuousTail {
    fn eval(&self, n: f64) -> TailEval;

    /// A point where the derivative jumps, if any.
    fn kink(&self) -> Option<f64> {
        None
    }

    /// Left (`right = false`) or right derivative at `n`.
    fn eval_side(&self, n: f64, _right: bool) -> TailEval {
        self.eval(n)
    }

    fn prob(&self, n: f64) -> f64 {
        self.eval(n).prob()
    }
}

/// A tail defined on the nonnegative integers.
pub trait DiscreteTail {
    fn prob_at(&self, n: u64) -> f64;
}

/// Evaluation mode of a [`TailModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    Continuous,
    Discrete,
}

/// Construction options for [`make_tail_model_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConfig {
    pub bec_series_threshold: f64,
    pub edgeworth_order: usize,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig { bec_series_threshold: BEC_SERIES_THRESHOLD, edgeworth_order: EDGEWORTH_ORDER }
    }
}

#[derive(Debug, Clone)]
enum ModelKind {
    BiAwgn { kernel: EdgeworthKernel, kbar: Vec<f64>, cramer: CramerSeries3, split: f64 },
    BecSeries { kernel: EdgeworthKernel, kbar: Vec<f64>, eps: Vec<f64>, shifted: f64 },
    BscExact { p: f64 },
    BecExact { p: f64 },
}

/// Channel- and threshold-specific evaluator of `F_γ(n)`.
#[derive(Debug, Clone)]
pub struct TailModel {
    channel: Channel,
    gamma: f64,
    stats: ChannelStats,
    kind: ModelKind,
    switch_point: Option<f64>,
}

pub fn make_tail_model(ch: &Channel, gamma: f64) -> Result<TailModel> {
    make_tail_model_with(ch, gamma, &TailConfig::default())
}

/// Builds the tail model for `(ch, γ)` reusing precomputed statistics.
pub fn make_tail_model_with_stats(
    ch: &Channel,
    stats: &ChannelStats,
    gamma: f64,
    cfg: &TailConfig,
) -> Result<TailModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(arg_err!("threshold γ must be positive, got {gamma}"));
    }
    let sigma = sqrt(stats.dispersion);
    let kbar = || stats.cumulants.normalized(sigma).as_slice().to_vec();
    let (kind, switch_point) = match *ch {
        Channel::BiAwgn { .. } => {
            let kernel = EdgeworthKernel::new(cfg.edgeworth_order)?;
            let cramer = CramerSeries3::from_cumulants(&stats.cumulants)?;
            let mut model = TailModel {
                channel: *ch,
                gamma,
                stats: stats.clone(),
                kind: ModelKind::BiAwgn { kernel, kbar: kbar(), cramer, split: 0.0 },
                switch_point: None,
            };
            let found = model.find_switch_point();
            let split = match found {
                Some(s) => s,
                None => {
                    log::warn!("no Edgeworth/Petrov crossing below γ/C at γ = {gamma}; splitting at γ/C");
                    gamma / stats.capacity
                }
            };
            if let ModelKind::BiAwgn { split: s, .. } = &mut model.kind {
                *s = split;
            }
            model.switch_point = found;
            return Ok(model);
        }
        Channel::Bsc { p } => (ModelKind::BscExact { p }, None),
        Channel::Bec { p } if p >= cfg.bec_series_threshold => {
            let kernel = EdgeworthKernel::new(cfg.edgeworth_order)?;
            let eps = expansions::sheppard_eps(CUMULANT_ORDER, 1.0, sigma);
            (ModelKind::BecSeries { kernel, kbar: kbar(), eps, shifted: ceil(gamma) - 0.5 }, None)
        }
        Channel::Bec { p } => (ModelKind::BecExact { p }, None),
    };
    Ok(TailModel { channel: *ch, gamma, stats: stats.clone(), kind, switch_point })
}

pub fn make_tail_model_with(ch: &Channel, gamma: f64, cfg: &TailConfig) -> Result<TailModel> {
    let stats = channel_stats(ch)?;
    make_tail_model_with_stats(ch, &stats, gamma, cfg)
}

impl TailModel {
    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn stats(&self) -> &ChannelStats {
        &self.stats
    }

    pub fn mode(&self) -> TailMode {
        match self.kind {
            ModelKind::BiAwgn { .. } | ModelKind::BecSeries { .. } => TailMode::Continuous,
            ModelKind::BscExact { .. } | ModelKind::BecExact { .. } => TailMode::Discrete,
        }
    }

    /// Crossing of the Petrov and Edgeworth branches (BI-AWGN only).
    pub fn switch_point(&self) -> Option<f64> {
        self.switch_point
    }

    fn standardized(&self, n: Dual, level: f64) -> Dual {
        let c = self.stats.capacity;
        let v = self.stats.dispersion;
        (Dual::cst(level) - n * Dual::cst(c)) / (n * Dual::cst(v)).sqrt()
    }

    /// Petrov branch as `(ln F, d ln F/dn)`.
    fn petrov_ln(&self, n: f64) -> Dual {
        let ModelKind::BiAwgn { cramer, .. } = &self.kind else { unreachable!() };
        let nd = Dual::var(n);
        let x = self.standardized(nd, self.gamma);
        if x.v >= 0.0 {
            cramer.ln_upper_tail(nd, x)
        } else {
            // 1 − G_n(−|x|)
            let g = cramer.ln_lower_cdf(nd, -x).exp();
            (Dual::cst(1.0) - g).ln()
        }
    }

    fn edgeworth(&self, n: f64) -> Dual {
        let ModelKind::BiAwgn { kernel, kbar, .. } = &self.kind else { unreachable!() };
        let nd = Dual::var(n);
        let x = self.standardized(nd, self.gamma);
        expansions::edgeworth_tail_raw(kernel, kbar, nd, x)
    }

    /// Petrov-branch tail probability (BI-AWGN only).
    pub fn petrov_branch(&self, n: f64) -> Option<f64> {
        matches!(self.kind, ModelKind::BiAwgn { .. }).then(|| exp(self.petrov_ln(n).v))
    }

    /// Edgeworth-branch tail probability (BI-AWGN only), unclamped.
    pub fn edgeworth_branch(&self, n: f64) -> Option<f64> {
        matches!(self.kind, ModelKind::BiAwgn { .. }).then(|| self.edgeworth(n).v)
    }

    /// Gaussian approximation `Q((γ − nC)/√(nV))`.
    pub fn gaussian_tail(&self, n: f64) -> f64 {
        let x = (self.gamma - n * self.stats.capacity) / sqrt(n * self.stats.dispersion);
        crate::special::normal_sf(x)
    }

    fn find_switch_point(&self) -> Option<f64> {
        let diff = |n: f64| self.edgeworth(n).v - exp(self.petrov_ln(n).v);
        let top = self.gamma / self.stats.capacity;
        let mut hi = top;
        let mut d_hi = diff(hi);
        let mut n = floor(top);
        if n >= top {
            n -= 1.0;
        }
        while n >= 1.0 {
            let d = diff(n);
            if d == 0.0 {
                if exp(self.petrov_ln(n).v) < 0.5 {
                    return Some(n);
                }
            } else if d.signum() != d_hi.signum() && d_hi != 0.0 {
                let (mut a, mut b, mut da) = (n, hi, d);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    let dm = diff(mid);
                    if dm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if dm.signum() == da.signum() {
                        a = mid;
                        da = dm;
                    } else {
                        b = mid;
                    }
                }
                let root = 0.5 * (a + b);
                if exp(self.petrov_ln(root).v) < 0.5 {
                    return Some(root);
                }
            }
            hi = n;
            d_hi = d;
            n -= 1.0;
        }
        None
    }

    fn continuous_eval(&self, n: f64, right_at_split: bool) -> TailEval {
        if !(n > 0.0) {
            return TailEval::plain(0.0, 0.0);
        }
        match &self.kind {
            ModelKind::BiAwgn { split, .. } => {
                if n < *split || (n == *split && !right_at_split) {
                    let l = self.petrov_ln(n);
                    TailEval { value: 1.0, slope: l.d, ln_scale: l.v }
                } else {
                    let e = self.edgeworth(n);
                    TailEval::plain(e.v, e.d)
                }
            }
            ModelKind::BecSeries { kernel, kbar, eps, shifted } => {
                let nd = Dual::var(n);
                let z = self.standardized(nd, *shifted);
                match expansions::corrected_cdf_raw(kernel, kbar, eps, nd, z) {
                    Some(cdf) => TailEval::plain(1.0 - cdf.v, -cdf.d),
                    None => TailEval::plain(0.0, 0.0),
                }
            }
            ModelKind::BscExact { .. } | ModelKind::BecExact { .. } => {
                TailEval::plain(self.prob_at(floor(n) as u64), 0.0)
            }
        }
    }

    /// `F_γ(n)` at an integer; continuous models are sampled.
    pub fn prob_at(&self, n: u64) -> f64 {
        match self.kind {
            ModelKind::BscExact { p } => tail_exact_bsc(n, self.gamma, p),
            ModelKind::BecExact { p } => tail_exact_bec(n, self.gamma, p),
            _ => self.continuous_eval(n as f64, true).prob(),
        }
    }
}

impl ContinuousTail for TailModel {
    fn eval(&self, n: f64) -> TailEval {
        self.continuous_eval(n, true)
    }

    fn kink(&self) -> Option<f64> {
        match self.kind {
            ModelKind::BiAwgn { split, .. } => Some(split),
            _ => None,
        }
    }

    fn eval_side(&self, n: f64, right: bool) -> TailEval {
        self.continuous_eval(n, right)
    }
}

impl DiscreteTail for TailModel {
    fn prob_at(&self, n: u64) -> f64 {
        TailModel::prob_at(self, n)
    }
}

/// Continuous inverse: `n` with `|F(n) − target| ≤ 1e-9`, or the crossing
/// bracketed to machine precision.
pub fn invert_continuous<T: ContinuousTail + ?Sized>(tail: &T, target: f64, start: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(arg_err!("target probability must lie in (0, 1), got {target}"));
    }
    let mut lo = 0.0;
    let mut hi = start.max(1.0);
    while tail.prob(hi) < target {
        lo = hi;
        hi *= 2.0;
        if hi > MAX_HORIZON as f64 {
            return Err(Error::Infeasible(alloc::format!("tail never reaches {target} below n = {MAX_HORIZON}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail.prob(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = (tail.prob(hi) - target).abs();
    if r > 1e-9 && hi - lo > 1e-9 * hi {
        return Err(Error::Numeric { what: "tail inversion".into(), residual: r });
    }
    Ok(hi)
}

/// Discrete inverse: smallest integer `n ≥ start` with `F(n) ≥ target`.
pub fn invert_discrete<T: DiscreteTail + ?Sized>(tail: &T, target: f64, start: u64) -> Result<u64> {
    (start..=MAX_HORIZON)
        .find(|&n| tail.prob_at(n) >= target)
        .ok_or_else(|| Error::Infeasible(alloc::format!("tail never reaches {target} below n = {MAX_HORIZON}")))
}

/// `F_γ^{-1}(target)`: a real time in continuous mode, the smallest
/// integer time in discrete mode.
pub fn tail_model_inverse(tm: &TailModel, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(arg_err!("target probability must lie in (0, 1), got {target}"));
    }
    let start = tm.gamma / tm.stats.capacity;
    match tm.mode() {
        TailMode::Continuous => invert_continuous(tm, target, start),
        TailMode::Discrete => {
            let first = floor(tm.gamma / tm.stats.a0).max(0.0) as u64;
            invert_discrete(tm, target, first).map(|n| n as f64)
        }
    }
}

/// Integer grid `⌈lo⌉..=⌊hi⌋`.
pub fn integer_grid(lo: f64, hi: f64) -> Vec<u64> {
    let a = ceil(lo).max(0.0) as u64;
    let b = floor(hi).max(0.0) as u64;
    if a > b {
        return vec![];
    }
    (a..=b).collect()
}

/// `log₂(M − 1)` for `M = 2^k` without forming `M`.
pub fn log2_m_minus_1(k: u32) -> f64 {
    k as f64 + log1p(-libm::exp2(-(k as f64))) / LN_2
}

/// Threshold `γ = log₂((M−1)/(δε))`.
pub fn gamma_from_delta(k: u32, eps: f64, delta: f64) -> f64 {
    log2_m_minus_1(k) - log2(delta * eps)
}

/// Reliability target `1 − ε + (M−1)2^{−γ}`.
pub fn reliability_target(k: u32, eps: f64, gamma: f64) -> f64 {
    1.0 - eps + libm::exp2(log2_m_minus_1(k) - gamma)
}
