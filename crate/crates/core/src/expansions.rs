//! Edgeworth, Petrov and continuity-corrected Edgeworth approximations for
//! the distribution of a standardized sum of `n` i.i.d. summands.
//!
//! All functions take the cumulants of a single summand. The standardized
//! variable is `x = (s − n·κ₁)/(σ√n)`.

use alloc::vec::Vec;

use crate::cumulants::{CumulantVector, EdgeworthKernel};
use crate::error::{arg_err, Result};
use crate::special::Scalar;

/// Default order of the Edgeworth series.
pub const EDGEWORTH_ORDER: usize = 5;

/// Lattice support `a + uΔ` of a single summand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub offset: f64,
    pub span: f64,
}

/// Inputs shared by the Edgeworth-type series.
#[derive(Debug, Clone)]
pub struct ExpansionSpec {
    order: usize,
    cumulants: CumulantVector,
    sigma: f64,
    lattice: Option<Lattice>,
    kernel: EdgeworthKernel,
}

impl ExpansionSpec {
    pub fn new(order: usize, cumulants: CumulantVector, lattice: Option<Lattice>) -> Result<Self> {
        if order > EDGEWORTH_ORDER {
            return Err(arg_err!("expansion order {order} exceeds {EDGEWORTH_ORDER}"));
        }
        if cumulants.order() < order + 2 {
            return Err(arg_err!("order-{order} expansion needs {} cumulants, got {}", order + 2, cumulants.order()));
        }
        let var = cumulants.variance();
        if !(var > 0.0) {
            return Err(arg_err!("summand variance must be positive, got {var}"));
        }
        if let Some(l) = lattice {
            if !(l.span > 0.0) {
                return Err(arg_err!("lattice span must be positive, got {}", l.span));
            }
        }
        Ok(ExpansionSpec { order, sigma: libm::sqrt(var), kernel: EdgeworthKernel::new(order)?, cumulants, lattice })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cumulants(&self) -> &CumulantVector {
        &self.cumulants
    }

    pub fn lattice(&self) -> Option<Lattice> {
        self.lattice
    }

    pub(crate) fn kernel(&self) -> &EdgeworthKernel {
        &self.kernel
    }

    /// Normalized cumulants `κ_j/σ^j` (index `j−1`).
    pub fn normalized(&self) -> Vec<f64> {
        self.cumulants.normalized(self.sigma).as_slice().to_vec()
    }
}

/// `Φ(x) + φ(x) Σ_{j≤s} n^{-j/2} p_j(x)`, unclamped.
pub fn edgeworth_cdf(spec: &ExpansionSpec, n: f64, x: f64) -> Result<f64> {
    if spec.lattice.is_some() {
        return Err(arg_err!("lattice summands need corrected_edgeworth_cdf"));
    }
    if !(n > 0.0) {
        return Err(arg_err!("n must be positive, got {n}"));
    }
    let kbar = spec.normalized();
    Ok(edgeworth_cdf_raw(spec.kernel(), &kbar, n, x))
}

pub(crate) fn edgeworth_cdf_raw<T: Scalar>(kernel: &EdgeworthKernel, kbar: &[f64], n: T, x: T) -> T {
    let kb: Vec<T> = kbar.iter().map(|&v| T::cst(v)).collect();
    x.normal_cdf() + x.normal_pdf() * kernel.correction(&kb, x, T::cst(1.0) / n.sqrt())
}

/// Upper tail `Q(x) − φ(x) Σ n^{-j/2} p_j(x)`, unclamped.
pub(crate) fn edgeworth_tail_raw<T: Scalar>(kernel: &EdgeworthKernel, kbar: &[f64], n: T, x: T) -> T {
    let kb: Vec<T> = kbar.iter().map(|&v| T::cst(v)).collect();
    x.normal_sf() - x.normal_pdf() * kernel.correction(&kb, x, T::cst(1.0) / n.sqrt())
}

/// Coefficients of the order-3 Cramér series `Λ(t) = a₀ + a₁t + a₂t²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CramerSeries3 {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl CramerSeries3 {
    pub fn from_cumulants(c: &CumulantVector) -> Result<Self> {
        if c.order() < 5 {
            return Err(arg_err!("Cramér series needs five cumulants, got {}", c.order()));
        }
        let (k2, k3, k4, k5) = (c.get(2), c.get(3), c.get(4), c.get(5));
        if !(k2 > 0.0) {
            return Err(arg_err!("κ₂ must be positive, got {k2}"));
        }
        let s = libm::sqrt(k2);
        Ok(CramerSeries3 {
            a0: k3 / (6.0 * k2 * s),
            a1: (k4 * k2 - 3.0 * k3 * k3) / (24.0 * k2 * k2 * k2),
            a2: (k5 * k2 * k2 - 10.0 * k4 * k3 * k2 + 15.0 * k3 * k3 * k3) / (120.0 * k2 * k2 * k2 * k2 * s),
        })
    }

    pub fn eval<T: Scalar>(&self, t: T) -> T {
        T::cst(self.a0) + t * (T::cst(self.a1) + t * T::cst(self.a2))
    }

    /// `ln[Q(x) exp{x³/√n Λ(x/√n)}]`.
    pub(crate) fn ln_upper_tail<T: Scalar>(&self, n: T, x: T) -> T {
        let rn = n.sqrt();
        x.ln_normal_sf() + x * x * x / rn * self.eval(x / rn)
    }

    /// `ln[Q(x) exp{−x³/√n Λ(−x/√n)}] = ln G_n(−x)`.
    pub(crate) fn ln_lower_cdf<T: Scalar>(&self, n: T, x: T) -> T {
        let rn = n.sqrt();
        x.ln_normal_sf() - x * x * x / rn * self.eval(-x / rn)
    }
}

/// Petrov upper tail `1 − G_n(x) = Q(x) exp{x³/√n Λ(x/√n)}`, clamped to
/// `[0, 1]`. For `x < 0` the mirrored form `1 − G_n(−|x|)` is used.
pub fn petrov_tail(cumulants: &CumulantVector, n: f64, x: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(arg_err!("n must be positive, got {n}"));
    }
    let cs = CramerSeries3::from_cumulants(cumulants)?;
    let v = if x >= 0.0 { libm::exp(cs.ln_upper_tail(n, x)) } else { 1.0 - libm::exp(cs.ln_lower_cdf(n, -x)) };
    Ok(v.clamp(0.0, 1.0))
}

/// Petrov lower tail `G_n(−x) = Q(x) exp{−x³/√n Λ(−x/√n)}` for `x ≥ 0`,
/// clamped to `[0, 1]`.
pub fn petrov_lower_cdf(cumulants: &CumulantVector, n: f64, x: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(arg_err!("n must be positive, got {n}"));
    }
    if x < 0.0 {
        return Err(arg_err!("lower-tail form needs x ≥ 0, got {x}"));
    }
    let cs = CramerSeries3::from_cumulants(cumulants)?;
    Ok(libm::exp(cs.ln_lower_cdf(n, x)).clamp(0.0, 1.0))
}

/// Bernoulli number `B_j` with `B_1 = −1/2`.
pub fn bernoulli_number(j: usize) -> Result<f64> {
    const B: [f64; 13] = [
        1.0,
        -0.5,
        1.0 / 6.0,
        0.0,
        -1.0 / 30.0,
        0.0,
        1.0 / 42.0,
        0.0,
        -1.0 / 30.0,
        0.0,
        5.0 / 66.0,
        0.0,
        -691.0 / 2730.0,
    ];
    B.get(j).copied().ok_or_else(|| arg_err!("Bernoulli number index {j} exceeds 12"))
}

/// Per-order Sheppard corrections `ε_j = (Δ/σ)^j B_j / j` (index `j−1`).
pub(crate) fn sheppard_eps(order: usize, span: f64, sigma: f64) -> Vec<f64> {
    let h = span / sigma;
    (1..=order)
        .map(|j| {
            let b = bernoulli_number(j).unwrap_or(0.0);
            h.powi(j as i32) * b / j as f64
        })
        .collect()
}

/// Sheppard-adjusted normalized cumulants `λ_j = κ̄_j − ε_j/n`, with
/// `λ_1 = 0`.
pub fn sheppard_adjust(normalized: &CumulantVector, span: f64, sigma: f64, n: u64) -> Result<CumulantVector> {
    if !(span > 0.0) || !(sigma > 0.0) || n == 0 {
        return Err(arg_err!("need span > 0, σ > 0, n ≥ 1"));
    }
    let eps = sheppard_eps(normalized.order(), span, sigma);
    let mut lam: Vec<f64> = normalized.as_slice().iter().zip(&eps).map(|(k, e)| k - e / n as f64).collect();
    lam[0] = 0.0;
    CumulantVector::new(lam)
}

/// Continuity-corrected series at lattice point `z`: the Edgeworth series
/// with Sheppard-adjusted cumulants, evaluated at `z + (Δ/2)/(σ√n)`.
///
/// The adjusted cumulants are standardized by their own variance
/// `λ₂ = 1 − ε₂/n` before the series is applied.
pub fn corrected_edgeworth_cdf(spec: &ExpansionSpec, n: u64, z: f64) -> Result<f64> {
    let lattice = spec.lattice.ok_or_else(|| arg_err!("corrected series needs a lattice"))?;
    if n == 0 {
        return Err(arg_err!("n must be positive"));
    }
    let nf = n as f64;
    let zplus = z + 0.5 * lattice.span / (spec.sigma * libm::sqrt(nf));
    let kbar = spec.normalized();
    let eps = sheppard_eps(kbar.len(), lattice.span, spec.sigma);
    corrected_cdf_raw(spec.kernel(), &kbar, &eps, nf, zplus)
        .ok_or_else(|| arg_err!("Sheppard-adjusted variance is not positive at n = {n}"))
}

/// Series at an already shifted point; `None` when `λ₂ ≤ 0`.
pub(crate) fn corrected_cdf_raw<T: Scalar>(
    kernel: &EdgeworthKernel,
    kbar: &[f64],
    eps: &[f64],
    n: T,
    zplus: T,
) -> Option<T> {
    let one = T::cst(1.0);
    let lam2 = one - T::cst(eps[1]) / n;
    if !(lam2.value() > 0.0) {
        return None;
    }
    let s2 = lam2.sqrt();
    let mut lb = Vec::with_capacity(kbar.len());
    let mut scale = one;
    for (j, (&k, &e)) in kbar.iter().zip(eps).enumerate() {
        scale = scale * s2;
        lb.push(if j == 0 { T::cst(0.0) } else { (T::cst(k) - T::cst(e) / n) / scale });
    }
    let zz = zplus / s2;
    Some(zz.normal_cdf() + zz.normal_pdf() * kernel.correction(&lb, zz, one / n.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulants::cumulants_from_moments;
    use crate::cumulants::MomentVector;
    use crate::special::{binomial_cdf, normal_cdf, normal_sf};
    use alloc::vec;

    fn centered_bernoulli(p: f64) -> CumulantVector {
        cumulants_from_moments(&MomentVector::new(vec![p; 7]).unwrap()).centered()
    }

    #[test]
    fn gaussian_inputs_reduce_to_phi() {
        let spec = ExpansionSpec::new(5, CumulantVector::gaussian(7), None).unwrap();
        for &x in &[-2.5, 0.0, 0.7, 3.0] {
            assert_eq!(edgeworth_cdf(&spec, 10.0, x).unwrap(), normal_cdf(x));
            assert!((petrov_tail(&CumulantVector::gaussian(7), 10.0, x).unwrap() - normal_sf(x)).abs() < 1e-15);
        }
        let spec0 = ExpansionSpec::new(0, centered_bernoulli(0.3), None).unwrap();
        assert_eq!(edgeworth_cdf(&spec0, 7.0, 0.4).unwrap(), normal_cdf(0.4));
    }

    #[test]
    fn petrov_at_zero_is_half() {
        let c = centered_bernoulli(0.2);
        assert!((petrov_tail(&c, 3.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn edgeworth_tracks_binomial() {
        // non-lattice series at the half-way point between lattice values
        // nearest x = 1
        let spec = ExpansionSpec::new(2, centered_bernoulli(0.5), None).unwrap();
        let n = 200u64;
        let sd = libm::sqrt(50.0);
        let t = libm::floor(100.0 + sd);
        let x = (t + 0.5 - 100.0) / sd;
        let exact = binomial_cdf(t as i64, n, 0.5);
        let approx = edgeworth_cdf(&spec, n as f64, x).unwrap();
        assert!((approx - exact).abs() < 1e-3, "{approx} vs {exact}");
    }

    #[test]
    fn bernoulli_numbers() {
        assert_eq!(bernoulli_number(2).unwrap(), 1.0 / 6.0);
        assert_eq!(bernoulli_number(5).unwrap(), 0.0);
        assert!(bernoulli_number(13).is_err());
        // Σ_{j<12} C(12, j) B_j = 0
        let mut c = 1.0;
        let mut s = 0.0;
        for j in 0..12 {
            s += c * bernoulli_number(j).unwrap();
            c = c * (12 - j) as f64 / (j + 1) as f64;
        }
        assert!(s.abs() < 1e-12, "{s}");
    }

    #[test]
    fn sheppard_values() {
        let k = CumulantVector::new(vec![0.3, 1.0, 0.5, 0.2]).unwrap();
        let lam = sheppard_adjust(&k, 1.0, 1.0, 1).unwrap();
        assert_eq!(lam.get(1), 0.0);
        assert!((lam.get(2) - (1.0 - 1.0 / 12.0)).abs() < 1e-15);
        assert_eq!(lam.get(3), 0.5);
        let tiny = sheppard_adjust(&k, 1e-9, 1.0, 5).unwrap();
        assert!((tiny.get(4) - 0.2).abs() < 1e-30 + 1e-12);
    }

    #[test]
    fn corrected_series_matches_binomial() {
        let c = centered_bernoulli(0.5);
        let lat = Lattice { offset: -0.5, span: 1.0 };
        let spec = ExpansionSpec::new(5, c, Some(lat)).unwrap();
        let n = 400u64;
        let mut worst: f64 = 0.0;
        for t in 170..=230i64 {
            let z = (t as f64 - 0.5 * n as f64) / (0.5 * libm::sqrt(n as f64));
            let approx = corrected_edgeworth_cdf(&spec, n, z).unwrap();
            worst = worst.max((approx - binomial_cdf(t, n, 0.5)).abs());
        }
        assert!(worst < 1e-4, "{worst}");
        let s0 = ExpansionSpec::new(0, centered_bernoulli(0.5), Some(lat)).unwrap();
        assert!(corrected_edgeworth_cdf(&s0, 4, 0.0).unwrap() > 0.5);
        let nl = ExpansionSpec::new(5, centered_bernoulli(0.5), None).unwrap();
        assert!(corrected_edgeworth_cdf(&nl, 4, 0.0).is_err());
    }
}
