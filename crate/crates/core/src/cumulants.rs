//! Moments, cumulants, integer partitions and Hermite polynomials.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{arg_err, Result};
use crate::special::Scalar;

/// Largest cumulant order handled anywhere in the crate.
pub const MAX_ORDER: usize = 16;

/// `FACTORIALS[i] = i!` as floats, exact up to 22!.
pub const FACTORIALS: [f64; 33] = {
    let mut t = [1.0f64; 33];
    let mut i = 1;
    while i < 33 {
        t[i] = t[i - 1] * i as f64;
        i += 1;
    }
    t
};

/// Noncentral moments `E[W^j]`, `j = 1..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector(Vec<f64>);

impl MomentVector {
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() || moments.len() > MAX_ORDER {
            return Err(arg_err!("moment order {} outside 1..={MAX_ORDER}", moments.len()));
        }
        if moments.len() >= 2 && moments[1] < moments[0] * moments[0] * (1.0 - 1e-12) - 1e-300 {
            return Err(arg_err!("second moment below squared mean"));
        }
        Ok(MomentVector(moments))
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// `E[W^j]`, 1-based.
    pub fn get(&self, j: usize) -> f64 {
        self.0[j - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Cumulants `κ_1..κ_J` of a scalar random variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantVector(Vec<f64>);

impl CumulantVector {
    pub fn new(cumulants: Vec<f64>) -> Result<Self> {
        if cumulants.is_empty() || cumulants.len() > MAX_ORDER {
            return Err(arg_err!("cumulant order {} outside 1..={MAX_ORDER}", cumulants.len()));
        }
        Ok(CumulantVector(cumulants))
    }

    /// Cumulants of a standard normal variable up to order `order`.
    pub fn gaussian(order: usize) -> Self {
        let mut v = vec![0.0; order.max(2)];
        v[1] = 1.0;
        CumulantVector(v)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// `κ_j`, 1-based.
    pub fn get(&self, j: usize) -> f64 {
        self.0[j - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0[0]
    }

    pub fn variance(&self) -> f64 {
        self.0.get(1).copied().unwrap_or(0.0)
    }

    /// Cumulants of the centred variable (`κ_1` replaced by zero).
    pub fn centered(&self) -> Self {
        let mut v = self.0.clone();
        v[0] = 0.0;
        CumulantVector(v)
    }

    /// `κ_j / σ^j`, the cumulants of `W/σ`.
    pub fn normalized(&self, sigma: f64) -> Self {
        CumulantVector(self.0.iter().enumerate().map(|(i, k)| k / sigma.powi(i as i32 + 1)).collect())
    }
}

/// All nonnegative solutions of `k_1 + 2 k_2 + … + j k_j = j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSolutionSet {
    j: usize,
    solutions: Vec<Vec<u32>>,
}

impl PartitionSolutionSet {
    pub fn j(&self) -> usize {
        self.j
    }

    pub fn solutions(&self) -> &[Vec<u32>] {
        &self.solutions
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// `(tuple, r)` with `r = Σ k_l`.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], u32)> + '_ {
        self.solutions.iter().map(|s| (s.as_slice(), s.iter().sum()))
    }
}

/// Enumerates the partitions of `j` as multiplicity tuples, in descending
/// lexicographic order of `(k_1, k_2, …)`.
pub fn enumerate_partitions(j: usize) -> Result<PartitionSolutionSet> {
    if !(1..=MAX_ORDER).contains(&j) {
        return Err(arg_err!("partition size {j} outside 1..={MAX_ORDER}"));
    }
    fn descend(j: usize, part: usize, rem: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if part > j {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let mut k = rem / part;
        loop {
            cur.push(k as u32);
            descend(j, part + 1, rem - k * part, cur, out);
            cur.pop();
            if k == 0 {
                break;
            }
            k -= 1;
        }
    }
    let mut solutions = Vec::new();
    descend(j, 1, j, &mut Vec::with_capacity(j), &mut solutions);
    Ok(PartitionSolutionSet { j, solutions })
}

/// Cumulants from noncentral moments through the partition formula
/// `κ_j = j! Σ (−1)^{r−1}(r−1)! Π (m_l/l!)^{k_l}/k_l!`.
pub fn cumulants_from_moments(m: &MomentVector) -> CumulantVector {
    let order = m.order();
    let mut out = Vec::with_capacity(order);
    for j in 1..=order {
        let parts = enumerate_partitions(j).expect("order already validated");
        let mut kappa = 0.0;
        for (tuple, r) in parts.iter() {
            let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
            let mut term = sign * FACTORIALS[r as usize - 1];
            for (l0, &kl) in tuple.iter().enumerate() {
                if kl > 0 {
                    let l = l0 + 1;
                    term *= (m.get(l) / FACTORIALS[l]).powi(kl as i32) / FACTORIALS[kl as usize];
                }
            }
            kappa += term;
        }
        out.push(FACTORIALS[j] * kappa);
    }
    CumulantVector(out)
}

/// Inverse map: moments from cumulants (complete Bell polynomials).
pub fn moments_from_cumulants(k: &CumulantVector) -> MomentVector {
    let order = k.order();
    let mut out = Vec::with_capacity(order);
    for j in 1..=order {
        let parts = enumerate_partitions(j).expect("order already validated");
        let mut m = 0.0;
        for (tuple, _) in parts.iter() {
            let mut term = 1.0;
            for (l0, &kl) in tuple.iter().enumerate() {
                if kl > 0 {
                    let l = l0 + 1;
                    term *= (k.get(l) / FACTORIALS[l]).powi(kl as i32) / FACTORIALS[kl as usize];
                }
            }
            m += term;
        }
        out.push(FACTORIALS[j] * m);
    }
    MomentVector(out)
}

/// Probabilists' Hermite polynomial `He_j(x)` from the explicit sum.
///
/// Panics if `j > 32`.
pub fn hermite(j: usize, x: f64) -> f64 {
    assert!(j <= 32, "Hermite degree {j} exceeds 32");
    let mut s = 0.0;
    for k in 0..=j / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * x.powi((j - 2 * k) as i32) / (FACTORIALS[k] * FACTORIALS[j - 2 * k] * (1u64 << k) as f64);
    }
    FACTORIALS[j] * s
}

/// `He_0(x)..=He_deg(x)` by the three-term recurrence.
pub(crate) fn hermite_table<T: Scalar>(deg: usize, x: T, out: &mut Vec<T>) {
    out.clear();
    out.push(T::cst(1.0));
    if deg >= 1 {
        out.push(x);
    }
    for j in 1..deg {
        let next = x * out[j] - T::cst(j as f64) * out[j - 1];
        out.push(next);
    }
}

/// Partition tables for `p_1..p_s`, built once and reused.
#[derive(Debug, Clone)]
pub struct EdgeworthKernel {
    partitions: Vec<PartitionSolutionSet>,
}

impl EdgeworthKernel {
    pub fn new(order: usize) -> Result<Self> {
        let partitions = (1..=order).map(enumerate_partitions).collect::<Result<Vec<_>>>()?;
        Ok(EdgeworthKernel { partitions })
    }

    pub fn order(&self) -> usize {
        self.partitions.len()
    }

    /// Highest normalized cumulant index needed: `s + 2`.
    pub fn required_cumulants(&self) -> usize {
        self.order() + 2
    }

    /// `p_j(x)` for normalized cumulants `kbar[i] = κ̄_{i+1}`.
    pub(crate) fn pj<T: Scalar>(&self, j: usize, kbar: &[T], x: T, he: &mut Vec<T>) -> T {
        let parts = &self.partitions[j - 1];
        hermite_table(3 * j - 1, x, he);
        let mut sum = T::cst(0.0);
        for (tuple, r) in parts.iter() {
            let mut prod = T::cst(1.0);
            for (i0, &ki) in tuple.iter().enumerate() {
                if ki > 0 {
                    let i = i0 + 1;
                    let c = kbar[i + 1] * T::cst(1.0 / FACTORIALS[i + 2]);
                    prod = prod * c.powi(ki as i32) * T::cst(1.0 / FACTORIALS[ki as usize]);
                }
            }
            sum = sum + he[j + 2 * r as usize - 1] * prod;
        }
        -sum
    }

    /// `Σ_{j=1..s} n^{-j/2} p_j(x)`.
    pub(crate) fn correction<T: Scalar>(&self, kbar: &[T], x: T, inv_sqrt_n: T) -> T {
        let mut he = Vec::with_capacity(3 * self.order());
        let mut acc = T::cst(0.0);
        let mut scale = T::cst(1.0);
        for j in 1..=self.order() {
            scale = scale * inv_sqrt_n;
            acc = acc + scale * self.pj(j, kbar, x, &mut he);
        }
        acc
    }
}

/// Order-`j` Edgeworth polynomial `p_j(x)` from normalized cumulants
/// (`κ̄_3..κ̄_{j+2}` must be present).
pub fn edgeworth_pj(j: usize, normalized: &CumulantVector, x: f64) -> Result<f64> {
    if j == 0 || j > MAX_ORDER {
        return Err(arg_err!("Edgeworth polynomial index {j} outside 1..={MAX_ORDER}"));
    }
    if normalized.order() < j + 2 {
        return Err(arg_err!("p_{j} needs cumulants through order {}, got {}", j + 2, normalized.order()));
    }
    let parts = enumerate_partitions(j)?;
    let mut sum = 0.0;
    for (tuple, r) in parts.iter() {
        let mut prod = 1.0;
        for (i0, &ki) in tuple.iter().enumerate() {
            if ki > 0 {
                let i = i0 + 1;
                prod *= (normalized.get(i + 2) / FACTORIALS[i + 2]).powi(ki as i32) / FACTORIALS[ki as usize];
            }
        }
        sum += hermite(j + 2 * r as usize - 1, x) * prod;
    }
    Ok(-sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_partitions() {
        assert_eq!(enumerate_partitions(1).unwrap().solutions(), &[vec![1]]);
        assert_eq!(enumerate_partitions(2).unwrap().solutions(), &[vec![2, 0], vec![0, 1]]);
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(17).is_err());
    }

    #[test]
    fn partition_counts_match_brute_force() {
        // brute force: all tuples with k_l ≤ j/l
        fn brute(j: usize) -> usize {
            fn rec(j: usize, l: usize, rem: usize) -> usize {
                if l > j {
                    return (rem == 0) as usize;
                }
                (0..=rem / l).map(|k| rec(j, l + 1, rem - k * l)).sum()
            }
            rec(j, 1, j)
        }
        assert_eq!(brute(6), 11);
        for j in 1..=8 {
            let set = enumerate_partitions(j).unwrap();
            assert_eq!(set.len(), brute(j));
            for (t, _) in set.iter() {
                let s: usize = t.iter().enumerate().map(|(i, &k)| (i + 1) * k as usize).sum();
                assert_eq!(s, j);
            }
        }
        let counts: Vec<usize> = (1..=8).map(|j| enumerate_partitions(j).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22]);
    }

    #[test]
    fn bernoulli_cumulants() {
        let p = 0.3;
        let k = cumulants_from_moments(&MomentVector::new(vec![p; 5]).unwrap());
        assert!((k.get(1) - p).abs() < 1e-15);
        assert!((k.get(2) - p * (1.0 - p)).abs() < 1e-15);
        assert!((k.get(3) - p * (1.0 - p) * (1.0 - 2.0 * p)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_moments_give_gaussian_cumulants() {
        // E[Z^j] = (j−1)!! for even j, 0 for odd j
        let m: Vec<f64> =
            (1..=8).map(|j| if j % 2 == 1 { 0.0 } else { (1..j).step_by(2).map(|v| v as f64).product() }).collect();
        let k = cumulants_from_moments(&MomentVector::new(m).unwrap());
        assert!((k.get(2) - 1.0).abs() < 1e-12);
        for j in [1, 3, 4, 5, 6, 7, 8] {
            assert!(k.get(j).abs() < 1e-10, "κ_{j} = {}", k.get(j));
        }
    }

    #[test]
    fn hermite_values_and_recurrence() {
        assert_eq!(hermite(0, 3.3), 1.0);
        assert_eq!(hermite(1, 3.3), 3.3);
        assert!((hermite(3, 2.0) - 2.0).abs() < 1e-14);
        for &x in &[-1.7, 0.3, 2.9] {
            for j in 1..=10 {
                let lhs = hermite(j + 1, x);
                let rhs = x * hermite(j, x) - j as f64 * hermite(j - 1, x);
                assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
            }
            let mut table = Vec::new();
            hermite_table(14, x, &mut table);
            for (j, h) in table.iter().enumerate() {
                assert!((h - hermite(j, x)).abs() < 1e-9 * (1.0 + h.abs()));
            }
        }
    }

    #[test]
    fn pj_closed_forms() {
        let kb = CumulantVector::new(vec![0.0, 1.0, 0.7, -0.4, 0.2]).unwrap();
        for &x in &[-2.0, 0.5, 1.3] {
            let p1 = edgeworth_pj(1, &kb, x).unwrap();
            assert!((p1 + 0.7 / 6.0 * hermite(2, x)).abs() < 1e-14);
            let p2 = edgeworth_pj(2, &kb, x).unwrap();
            let hand = -(hermite(3, x) * (-0.4) / 24.0 + hermite(5, x) * 0.49 / 72.0);
            assert!((p2 - hand).abs() < 1e-13);
        }
        let gauss = CumulantVector::gaussian(8);
        for j in 1..=5 {
            assert_eq!(edgeworth_pj(j, &gauss, 0.9).unwrap(), 0.0);
        }
        assert!(edgeworth_pj(4, &kb, 0.0).is_err());
    }

    #[test]
    fn kernel_agrees_with_explicit_pj() {
        let kb = CumulantVector::new(vec![0.0, 1.0, 0.3, 0.2, -0.1, 0.05, 0.02]).unwrap();
        let kernel = EdgeworthKernel::new(5).unwrap();
        let mut he = Vec::new();
        for j in 1..=5 {
            let a = kernel.pj(j, kb.as_slice(), 0.8, &mut he);
            let b = edgeworth_pj(j, &kb, 0.8).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }
}
