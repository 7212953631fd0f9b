//! Brute-force ground truth for every quantity the quantum engines estimate.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::oracle::BooleanFunctionOracle;

/// Classification of an instance against a promise problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromiseClass {
    True,
    False,
    NonPromise,
}

/// Value ↦ count; values that never occur are absent.
pub fn exact_frequency_table(values: &[usize]) -> BTreeMap<usize, usize> {
    let mut t = BTreeMap::new();
    for &v in values {
        *t.entry(v).or_insert(0) += 1;
    }
    t
}

/// Largest frequency `F∞`.
pub fn f_infinity(values: &[usize]) -> usize {
    exact_frequency_table(values).values().copied().max().unwrap_or(0)
}

/// `max p` and every index attaining it (ties within `1e-12`).
pub fn exact_pmax(p: &[f64]) -> (f64, Vec<usize>) {
    let best = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = p.iter().enumerate().filter(|(_, &v)| (best - v).abs() <= 1e-12).map(|(i, _)| i).collect();
    (best, idx)
}

/// `−log₂ max p`.
pub fn min_entropy(p: &[f64]) -> f64 {
    -exact_pmax(p).0.log2()
}

/// HighDist promise classification: TRUE if some `p_x ≥ τ`, FALSE if all `p_x < τ − ε`.
pub fn exact_highdist_answer(p: &[f64], tau: f64, eps: f64) -> PromiseClass {
    let best = exact_pmax(p).0;
    if best >= tau {
        PromiseClass::True
    } else if best < tau - eps {
        PromiseClass::False
    } else {
        PromiseClass::NonPromise
    }
}

/// HighAmp classification on real amplitudes: TRUE if some `α_x ≥ τ + 2ε`, FALSE if all `α_x < τ`.
pub fn exact_highamp_answer(alpha: &[f64], tau: f64, eps: f64) -> PromiseClass {
    let best = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best >= tau + 2.0 * eps {
        PromiseClass::True
    } else if best < tau {
        PromiseClass::False
    } else {
        PromiseClass::NonPromise
    }
}

/// Does some value occur at least `k` times?
pub fn k_distinct(values: &[usize], k: usize) -> bool {
    f_infinity(values) >= k
}

/// Δ-gapped k-distinctness: TRUE if some frequency ≥ k, FALSE if all ≤ k − Δ.
pub fn gapped_k_distinct_answer(values: &[usize], k: usize, gap: usize) -> PromiseClass {
    let f = f_infinity(values);
    if f >= k {
        PromiseClass::True
    } else if f + gap <= k {
        PromiseClass::False
    } else {
        PromiseClass::NonPromise
    }
}

/// `f̂(x) = 2^{-n} Σ_y (−1)^{f(y) + x·y}` by the fast Walsh–Hadamard transform.
pub fn walsh_spectrum(f: &BooleanFunctionOracle) -> Vec<f64> {
    let mut v: Vec<f64> = f.table().iter().map(|&b| if b { -1.0 } else { 1.0 }).collect();
    let n = v.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for j in start..start + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
    v.iter_mut().for_each(|x| *x /= n as f64);
    v
}

/// Direct `O(4^n)` evaluation of the same spectrum.
pub fn walsh_spectrum_naive(f: &BooleanFunctionOracle) -> Vec<f64> {
    let n = f.table().len();
    (0..n)
        .map(|x| {
            let s: f64 = (0..n)
                .map(|y| {
                    let e = f.eval(y) as u32 + (x & y).count_ones();
                    if e & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                })
                .sum();
            s / n as f64
        })
        .collect()
}

/// `max_x |f̂(x)|`.
pub fn walsh_max(f: &BooleanFunctionOracle) -> f64 {
    walsh_spectrum(f).iter().fold(0.0, |m, w| m.max(w.abs()))
}

/// `η(f) = 1/2 − f̂_max/2`.
pub fn nonlinearity(f: &BooleanFunctionOracle) -> f64 {
    0.5 - 0.5 * walsh_max(f)
}
