//! Normal distribution helpers, log-domain binomial sums and a small
//! forward-mode dual number used to differentiate tail models in `n`.

use core::ops::{Add, Div, Mul, Neg, Sub};

use libm::{erfc, exp, lgamma, log, log1p, sqrt};

pub const LN_2: f64 = core::f64::consts::LN_2;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * x * x)
}

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / core::f64::consts::SQRT_2)
}

/// Standard normal upper tail `Q(x) = 1 − Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / core::f64::consts::SQRT_2)
}

/// `ln Q(x)`, finite for all finite `x`.
pub fn ln_normal_sf(x: f64) -> f64 {
    if x < 25.0 {
        return log(normal_sf(x));
    }
    // asymptotic series Q(x) = φ(x)/x · (1 − 1/x² + 3/x⁴ − 15/x⁶ + …)
    let inv2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..10 {
        term *= -((2 * k - 1) as f64) * inv2;
        sum += term;
    }
    -0.5 * x * x - LN_SQRT_2PI - log(x) + log(sum)
}

/// Inverse Mills ratio `φ(x)/Q(x)`.
pub fn inverse_mills(x: f64) -> f64 {
    exp(-0.5 * x * x - LN_SQRT_2PI - ln_normal_sf(x))
}

/// `ln C(n, c)`.
pub fn ln_choose(n: u64, c: u64) -> f64 {
    debug_assert!(c <= n);
    if c == 0 || c == n {
        return 0.0;
    }
    lgamma(n as f64 + 1.0) - lgamma(c as f64 + 1.0) - lgamma((n - c) as f64 + 1.0)
}

/// `P[Binomial(n, q) ≤ t]`, accumulated in the log domain.
///
/// Returns 0 for `t < 0`.
pub fn binomial_cdf(t: i64, n: u64, q: f64) -> f64 {
    if t < 0 {
        return 0.0;
    }
    let t = t as u64;
    if t >= n {
        return 1.0;
    }
    if q <= 0.0 {
        return 1.0;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let lq = log(q);
    let lp = log1p(-q);
    // sum the shorter side
    let lower = t < n - t;
    let (lo, hi) = if lower { (0, t) } else { (t + 1, n) };
    let mut max = f64::NEG_INFINITY;
    let mut terms = alloc::vec::Vec::with_capacity((hi - lo + 1) as usize);
    for c in lo..=hi {
        let l = ln_choose(n, c) + c as f64 * lq + (n - c) as f64 * lp;
        if l > max {
            max = l;
        }
        terms.push(l);
    }
    let s: f64 = terms.iter().map(|l| exp(l - max)).sum();
    let side = exp(max + log(s));
    if lower {
        side.min(1.0)
    } else {
        (1.0 - side).max(0.0)
    }
}

/// Binomial probability mass `C(n,c) q^c (1−q)^(n−c)`.
pub fn binomial_pmf(c: u64, n: u64, q: f64) -> f64 {
    if c > n {
        return 0.0;
    }
    if q <= 0.0 {
        return if c == 0 { 1.0 } else { 0.0 };
    }
    if q >= 1.0 {
        return if c == n { 1.0 } else { 0.0 };
    }
    exp(ln_choose(n, c) + c as f64 * log(q) + (n - c) as f64 * log1p(-q))
}

/// Arithmetic shared by `f64` and [`Dual`] so expansion code can be
/// evaluated with or without a derivative.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn normal_pdf(self) -> Self;
    fn normal_cdf(self) -> Self;
    fn normal_sf(self) -> Self;
    fn ln_normal_sf(self) -> Self;
    fn powi(self, k: i32) -> Self {
        let mut acc = Self::cst(1.0);
        let (mut base, mut e) = if k < 0 { (Self::cst(1.0) / self, -k) } else { (self, k) };
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        sqrt(self)
    }
    fn exp(self) -> Self {
        exp(self)
    }
    fn ln(self) -> Self {
        log(self)
    }
    fn normal_pdf(self) -> Self {
        normal_pdf(self)
    }
    fn normal_cdf(self) -> Self {
        normal_cdf(self)
    }
    fn normal_sf(self) -> Self {
        normal_sf(self)
    }
    fn ln_normal_sf(self) -> Self {
        ln_normal_sf(self)
    }
}

/// Value and first derivative with respect to a single parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }

    /// The independent variable itself.
    pub fn var(v: f64) -> Self {
        Dual { v, d: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Scalar for Dual {
    fn cst(v: f64) -> Self {
        Dual::new(v, 0.0)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let r = sqrt(self.v);
        Dual::new(r, 0.5 * self.d / r)
    }

    fn exp(self) -> Self {
        let e = exp(self.v);
        Dual::new(e, e * self.d)
    }

    fn normal_pdf(self) -> Self {
        let p = normal_pdf(self.v);
        Dual::new(p, -self.v * p * self.d)
    }

    fn normal_cdf(self) -> Self {
        Dual::new(normal_cdf(self.v), normal_pdf(self.v) * self.d)
    }

    fn normal_sf(self) -> Self {
        Dual::new(normal_sf(self.v), -normal_pdf(self.v) * self.d)
    }

    fn ln_normal_sf(self) -> Self {
        Dual::new(ln_normal_sf(self.v), -inverse_mills(self.v) * self.d)
    }
    fn ln(self) -> Self {
        Dual::new(log(self.v), self.d / self.v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_sf_matches_direct_and_asymptotic() {
        for &x in &[-3.0, 0.0, 1.0, 5.0, 20.0, 24.9] {
            assert!((ln_normal_sf(x) - log(normal_sf(x))).abs() < 1e-12);
        }
        // continuity across the switch to the asymptotic series
        let a = log(normal_sf(24.999_999));
        let b = ln_normal_sf(25.000_001);
        assert!((a - b).abs() < 1e-3);
        assert!(ln_normal_sf(100.0).is_finite());
    }

    #[test]
    fn binomial_cdf_small_cases() {
        assert_eq!(binomial_cdf(-1, 5, 0.3), 0.0);
        assert_eq!(binomial_cdf(5, 5, 0.3), 1.0);
        let direct: f64 = (0..=2).map(|c| binomial_pmf(c, 6, 0.4)).sum();
        assert!((binomial_cdf(2, 6, 0.4) - direct).abs() < 1e-14);
        let direct: f64 = (0..=4).map(|c| binomial_pmf(c, 6, 0.4)).sum();
        assert!((binomial_cdf(4, 6, 0.4) - direct).abs() < 1e-14);
    }

    #[test]
    fn dual_chain_rule() {
        let x = Dual::var(0.7);
        let y = (x * x + Dual::cst(1.0)).sqrt().exp();
        let f = |t: f64| exp(sqrt(t * t + 1.0));
        let h = 1e-6;
        let fd = (f(0.7 + h) - f(0.7 - h)) / (2.0 * h);
        assert!((y.d - fd).abs() < 1e-8);
        assert!((x.powi(-3).d + 3.0 / 0.7f64.powi(4)).abs() < 1e-10);
    }
}
