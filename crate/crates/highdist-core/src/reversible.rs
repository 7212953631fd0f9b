//! Classical reversible gadgets used by the threshold pipeline: prefix
//! equality, distance from the midpoint, comparison and majority.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::state::{c, Operator, C64};

/// Success mass of one amplitude-estimation run, `8/π²`.
pub const QAE_SUCCESS: f64 = 8.0 / (core::f64::consts::PI * core::f64::consts::PI);

/// Copy-count constant `c = 1/(2(8/π² − 1/2)²)` of the majority vote.
pub fn copy_constant() -> f64 {
    1.0 / (2.0 * (QAE_SUCCESS - 0.5).powi(2))
}

/// `-1` iff the leading `m` bits of the `k`-bit values agree.
pub fn eq_m(x: usize, y: usize, k: usize, m: usize) -> Result<i8> {
    if m > k {
        return Err(Error::InvalidParameter(format!("prefix {m} longer than width {k}")));
    }
    if (x | y) >> k != 0 {
        return Err(Error::ValueOutOfRange { value: x.max(y), width: k });
    }
    Ok(if (x >> (k - m)) == (y >> (k - m)) { -1 } else { 1 })
}

/// `|2^{q−1} − y|`.
pub fn hd_q(y: usize, q: usize) -> usize {
    let mid = 1usize << (q - 1);
    y.abs_diff(mid)
}

/// `b ⊕ [y2 ≤ y1]`.
pub fn cmp(y1: usize, y2: usize, b: bool) -> bool {
    b ^ (y2 <= y1)
}

/// `b ⊕ [Σ a_i ≥ K/2]`; ties go to 1.
pub fn cond_maj(a: &[bool], b: bool) -> Result<bool> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("majority of zero bits".into()));
    }
    let ones = a.iter().filter(|&&v| v).count();
    Ok(b ^ (2 * ones >= a.len()))
}

/// Smallest `K` with `exp(−2K(p − 1/2)²) ≤ δ`, i.e. `⌈ln(1/δ)/(2(p−1/2)²)⌉`.
///
/// With `p = 8/π²` and `δ = δ₀²τ²` this is the copy count `⌈c·ln(1/(δ₀²τ²))⌉`.
pub fn majority_copy_count(p_success: f64, delta: f64) -> Result<usize> {
    if !(p_success > 0.5 && p_success <= 1.0) {
        return Err(Error::InvalidParameter(format!("success probability {p_success} ≤ 1/2")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("error {delta} outside (0,1)")));
    }
    let k = ((1.0 / delta).ln() / (2.0 * (p_success - 0.5).powi(2))).ceil();
    Ok((k as usize).max(1))
}

/// Probability that at least half of `k` independent Bernoulli(`p`) bits are 1.
pub fn majority_probability(p: f64, k: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..=k {
        if 2 * j >= k {
            total += binomial(k, j) * p.powi(j as i32) * (1.0 - p).powi((k - j) as i32);
        }
    }
    total.min(1.0)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// A reversible gadget as an operator over its concatenated input registers.
#[derive(Clone, Debug, PartialEq)]
pub struct ReversibleGate {
    pub name: &'static str,
    pub widths: Vec<usize>,
    pub op: Operator,
}

impl ReversibleGate {
    /// Phase gate on `|x⟩|y⟩` (two `k`-bit registers) applying `eq_m`.
    pub fn eq(k: usize, m: usize) -> Result<Self> {
        if m > k || k == 0 {
            return Err(Error::InvalidParameter(format!("prefix {m} with width {k}")));
        }
        let n = 1usize << k;
        let mut d = vec![c(1.0, 0.0); n * n];
        for x in 0..n {
            for y in 0..n {
                if eq_m(x, y, k, m)? < 0 {
                    d[x * n + y] = c(-1.0, 0.0);
                }
            }
        }
        Ok(ReversibleGate { name: "EQ", widths: vec![k, k], op: Operator::diagonal(d)? })
    }

    /// Two-register form `|y⟩|b⟩ ↦ |b ⊕ hd(y)⟩|y⟩`.
    pub fn hd(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("HD on zero qubits".into()));
        }
        let n = 1usize << q;
        let mut map = vec![0; n * n];
        for y in 0..n {
            for b in 0..n {
                map[(y << q) | b] = ((b ^ hd_q(y, q)) << q) | y;
            }
        }
        Ok(ReversibleGate { name: "HD", widths: vec![q, q], op: Operator::permutation(map)? })
    }

    /// `|y1⟩|y2⟩|b⟩ ↦ |y1⟩|y2⟩|b ⊕ [y2 ≤ y1]⟩`.
    pub fn cmp(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("CMP on zero qubits".into()));
        }
        let size = 1usize << (2 * n + 1);
        let mut map = vec![0; size];
        for (i, slot) in map.iter_mut().enumerate() {
            let b = i & 1 == 1;
            let y2 = (i >> 1) & ((1 << n) - 1);
            let y1 = i >> (n + 1);
            *slot = (i & !1) | cmp(y1, y2, b) as usize;
        }
        Ok(ReversibleGate { name: "CMP", widths: vec![n, n, 1], op: Operator::permutation(map)? })
    }

    /// `|a_1…a_K⟩|b⟩ ↦ |a⟩|b ⊕ [Σa ≥ K/2]⟩`.
    pub fn maj(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("MAJ of zero bits".into()));
        }
        let size = 1usize << (k + 1);
        let mut map = vec![0; size];
        for (i, slot) in map.iter_mut().enumerate() {
            let ones = (i >> 1).count_ones() as usize;
            *slot = i ^ ((2 * ones >= k) as usize);
        }
        Ok(ReversibleGate { name: "MAJ", widths: vec![1; k + 1], op: Operator::permutation(map)? })
    }

    /// Image of a basis input together with the phase picked up.
    pub fn act(&self, input: usize, inverse: bool) -> (usize, C64) {
        match &self.op {
            Operator::Permutation(p) => {
                if inverse {
                    (p.iter().position(|&t| t == input).expect("bijection"), c(1.0, 0.0))
                } else {
                    (p[input], c(1.0, 0.0))
                }
            }
            Operator::Diagonal(d) => (input, if inverse { d[input].conj() } else { d[input] }),
            _ => unreachable!("gadgets are permutations or phases"),
        }
    }

    pub fn input_width(&self) -> usize {
        self.widths.iter().sum()
    }
}

/// Per-copy marking rule of the pipeline: `R5 = 1` iff `hd(a) ≤ hd(τ₁)`.
pub fn marks(a: usize, tau1: usize, l: usize) -> bool {
    cmp(hd_q(tau1, l), hd_q(a, l), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eq_examples() {
        assert_eq!(eq_m(0b1010, 0b1011, 4, 3).unwrap(), -1);
        assert_eq!(eq_m(0b1010, 0b0010, 4, 1).unwrap(), 1);
        assert!(eq_m(1, 1, 2, 3).is_err());
    }

    #[test]
    fn hd_examples() {
        assert_eq!(hd_q(0b000, 3), 0b100);
        assert_eq!(hd_q(0b100, 3), 0);
        assert_eq!(hd_q(0b0011, 4), 0b0101);
    }

    #[test]
    fn cmp_examples() {
        assert!(cmp(5, 3, false));
        assert!(!cmp(3, 5, false));
        assert!(!cmp(7, 7, true));
    }

    #[test]
    fn maj_examples() {
        assert!(cond_maj(&[true, true, false], false).unwrap());
        assert!(!cond_maj(&[false, false, false, true], false).unwrap());
        assert!(cond_maj(&[true, false], false).unwrap());
    }

    #[test]
    fn copy_count_examples() {
        assert!((copy_constant() - 5.1838).abs() < 1e-3);
        assert_eq!(majority_copy_count(QAE_SUCCESS, 0.2f64.powi(2) * 0.25).unwrap(), 24);
        assert!(majority_copy_count(0.5, 0.1).is_err());
        let small = majority_copy_count(QAE_SUCCESS, 1e-2).unwrap();
        let tiny = majority_copy_count(QAE_SUCCESS, 1e-4).unwrap();
        assert!(tiny >= 2 * small - 1 && tiny <= 2 * small + 1);
    }

    #[test]
    fn gate_forms_agree_with_integer_maps() {
        let hd = ReversibleGate::hd(3).unwrap();
        for y in 0..8 {
            let (out, _) = hd.act(y << 3, false);
            assert_eq!(out >> 3, hd_q(y, 3));
            assert_eq!(out & 7, y);
        }
        let m = ReversibleGate::maj(3).unwrap();
        assert_eq!(m.act(0b1100, false).0, 0b1101);
    }
}
