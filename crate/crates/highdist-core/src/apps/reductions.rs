//! Turing reductions between the problems, parameterized by a solver for each target.
//!
//! Source instances are checked against exact classical answers, so a
//! reduction is validated independently of any quantum error.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::classical::{self, exact_pmax, PromiseClass};
use crate::error::{Error, Result};

/// Solvers for the target problems, each trusted only up to its own contract.
pub trait TargetSolvers {
    /// HighDist on `p`: TRUE if some `p_x ≥ τ`, FALSE if all `p_x < τ − ε`.
    fn highdist(&mut self, p: &[f64], tau: f64, eps: f64) -> Result<bool>;
    /// HighAmp on amplitudes `√p_x`: TRUE if some `√p_x ≥ τ + 2ε`, FALSE if all `< τ`.
    fn highamp(&mut self, p: &[f64], tau: f64, eps: f64) -> Result<bool>;
    /// `p_max` to within `ε`.
    fn pmax(&mut self, p: &[f64], eps: f64) -> Result<f64>;
    /// Largest frequency to within `ε`.
    fn f_infinity(&mut self, values: &[usize], eps: f64) -> Result<f64>;
    fn k_distinct(&mut self, values: &[usize], k: usize) -> Result<bool>;
    /// TRUE if some frequency is `≥ k`, FALSE if all are `≤ k − Δ`.
    fn gapped_k_distinct(&mut self, values: &[usize], k: usize, gap: usize) -> Result<bool>;
}

/// How a classical target resolves the freedom its contract leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bias {
    /// Exact values; gap instances answered by the midpoint.
    Exact,
    /// Estimates pushed down to the edge of their error, gap instances answered FALSE.
    Low,
    /// Estimates pushed up, gap instances answered TRUE.
    High,
}

#[derive(Clone, Copy, Debug)]
pub struct ClassicalTargets {
    pub bias: Bias,
}

impl ClassicalTargets {
    fn gap(&self, class: PromiseClass, mid: bool) -> bool {
        match (class, self.bias) {
            (PromiseClass::True, _) => true,
            (PromiseClass::False, _) => false,
            (PromiseClass::NonPromise, Bias::Exact) => mid,
            (PromiseClass::NonPromise, Bias::Low) => false,
            (PromiseClass::NonPromise, Bias::High) => true,
        }
    }

    fn shift(&self, v: f64, eps: f64) -> f64 {
        let s = eps * (1.0 - 1e-9);
        match self.bias {
            Bias::Exact => v,
            Bias::Low => v - s,
            Bias::High => v + s,
        }
    }
}

impl TargetSolvers for ClassicalTargets {
    fn highdist(&mut self, p: &[f64], tau: f64, eps: f64) -> Result<bool> {
        let mid = exact_pmax(p).0 >= tau - eps / 2.0;
        Ok(self.gap(classical::exact_highdist_answer(p, tau, eps), mid))
    }

    fn highamp(&mut self, p: &[f64], tau: f64, eps: f64) -> Result<bool> {
        let alpha: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
        let mid = exact_pmax(p).0.sqrt() >= tau + eps;
        Ok(self.gap(classical::exact_highamp_answer(&alpha, tau, eps), mid))
    }

    fn pmax(&mut self, p: &[f64], eps: f64) -> Result<f64> {
        Ok(self.shift(exact_pmax(p).0, eps))
    }

    fn f_infinity(&mut self, values: &[usize], eps: f64) -> Result<f64> {
        Ok(self.shift(classical::f_infinity(values) as f64, eps))
    }

    fn k_distinct(&mut self, values: &[usize], k: usize) -> Result<bool> {
        Ok(classical::k_distinct(values, k))
    }

    fn gapped_k_distinct(&mut self, values: &[usize], k: usize, gap: usize) -> Result<bool> {
        let f = classical::f_infinity(values);
        let mid = 2 * f + gap >= 2 * k;
        Ok(self.gap(classical::gapped_k_distinct_answer(values, k, gap), mid))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    HighDist { p: Vec<f64>, tau: f64, eps: f64 },
    Pmax { p: Vec<f64>, eps: f64 },
    GappedKDistinct { values: Vec<usize>, k: usize, gap: usize },
    KDistinct { values: Vec<usize>, k: usize },
    FInfinity { values: Vec<usize>, eps: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Answer {
    Bool(bool),
    /// `p_max` bracket `[lower, upper)`, closed at 1.
    Interval(f64, f64),
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Reduction {
    HighDistToPmax,
    PmaxToHighDist,
    GkdToHighDist,
    GkdToFInfinity,
    GkdToKDistinct,
    KDistinctToGkd,
    FInfinityToPmax,
    FInfinityToKDistinct,
    KDistinctToFInfinity,
    HighDistToHighAmp,
}

impl Reduction {
    pub const ALL: [Reduction; 10] = [
        Reduction::HighDistToPmax,
        Reduction::PmaxToHighDist,
        Reduction::GkdToHighDist,
        Reduction::GkdToFInfinity,
        Reduction::GkdToKDistinct,
        Reduction::KDistinctToGkd,
        Reduction::FInfinityToPmax,
        Reduction::FInfinityToKDistinct,
        Reduction::KDistinctToFInfinity,
        Reduction::HighDistToHighAmp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Reduction::HighDistToPmax => "HighDist<=Pmax",
            Reduction::PmaxToHighDist => "Pmax<=HighDist",
            Reduction::GkdToHighDist => "GKD<=HighDist",
            Reduction::GkdToFInfinity => "GKD<=Finf",
            Reduction::GkdToKDistinct => "GKD<=kDist",
            Reduction::KDistinctToGkd => "kDist<=GKD",
            Reduction::FInfinityToPmax => "Finf<=Pmax",
            Reduction::FInfinityToKDistinct => "Finf<=kDist",
            Reduction::KDistinctToFInfinity => "kDist<=Finf",
            Reduction::HighDistToHighAmp => "HighDist<=HighAmp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }

    pub fn accepts(&self, inst: &Instance) -> bool {
        matches!(
            (self, inst),
            (Reduction::HighDistToPmax | Reduction::HighDistToHighAmp, Instance::HighDist { .. })
                | (Reduction::PmaxToHighDist, Instance::Pmax { .. })
                | (Reduction::GkdToHighDist | Reduction::GkdToFInfinity | Reduction::GkdToKDistinct, Instance::GappedKDistinct { .. })
                | (Reduction::KDistinctToGkd | Reduction::KDistinctToFInfinity, Instance::KDistinct { .. })
                | (Reduction::FInfinityToPmax | Reduction::FInfinityToKDistinct, Instance::FInfinity { .. })
        )
    }
}

/// Sorted arrays of length `n` over `0..m`, one per multiset.
pub fn multisets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, m: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in start..m {
            cur.push(v);
            go(n, m, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, m, 0, &mut Vec::new(), &mut out);
    out
}

/// Every source instance built on one array: all `k` and gaps, several `F∞`
/// accuracies, and HighDist/Pmax grids on its frequency distribution.
pub fn instances_for(values: &[usize]) -> Vec<Instance> {
    let n = values.len();
    let mut out = Vec::new();
    for k in 1..=n {
        out.push(Instance::KDistinct { values: values.to_vec(), k });
        for gap in 1..=k {
            out.push(Instance::GappedKDistinct { values: values.to_vec(), k, gap });
        }
    }
    for eps in [0.99, 0.5, 2.0] {
        out.push(Instance::FInfinity { values: values.to_vec(), eps });
    }
    let p = frequency_distribution(values);
    for (tau, eps) in [(0.5, 0.25), (0.25, 0.125), (0.75, 0.25), (0.375, 0.125)] {
        out.push(Instance::HighDist { p: p.clone(), tau, eps });
    }
    for eps in [0.5, 0.25, 0.125] {
        out.push(Instance::Pmax { p: p.clone(), eps });
    }
    out
}

/// `p_v = freq(v)/n` over the values `0..=max`.
pub fn frequency_distribution(values: &[usize]) -> Vec<f64> {
    let top = values.iter().copied().max().unwrap_or(0);
    let mut p = alloc::vec![0.0; top + 1];
    for &v in values {
        p[v] += 1.0;
    }
    p.iter().map(|c| c / values.len() as f64).collect()
}

/// Largest `t ∈ [0, 2^k]` found by binary search with HighDist(`t/2^k`, `ε/4`),
/// giving `p_max ∈ [t/2^k − ε/4, (t+1)/2^k)`.
fn pmax_by_highdist<S: TargetSolvers>(s: &mut S, p: &[f64], eps: f64) -> Result<(f64, f64)> {
    let k = (1.0 / eps).log2().ceil() as u32 + 1;
    let n = 1u64 << k;
    let (mut lo, mut hi) = (0u64, n + 1);
    while hi - lo > 1 {
        let t = lo + (hi - lo) / 2;
        if s.highdist(p, t as f64 / n as f64, eps / 4.0)? {
            lo = t;
        } else {
            hi = t;
        }
    }
    let lower = if lo == 0 { 0.0 } else { lo as f64 / n as f64 - eps / 4.0 };
    Ok((lower.max(0.0), ((lo + 1) as f64 / n as f64).min(1.0)))
}

pub fn run_reduction<S: TargetSolvers>(r: Reduction, inst: &Instance, s: &mut S) -> Result<Answer> {
    if !r.accepts(inst) {
        return Err(Error::InvalidInput(format!("{} cannot take this instance", r.name())));
    }
    Ok(match (r, inst) {
        (Reduction::HighDistToPmax, Instance::HighDist { p, tau, eps }) => Answer::Bool(s.pmax(p, eps / 3.0)? >= tau - eps / 2.0),
        (Reduction::HighDistToHighAmp, Instance::HighDist { p, tau, eps }) => {
            let t = (tau - eps).max(0.0).sqrt();
            Answer::Bool(s.highamp(p, t, (tau.sqrt() - t) / 2.0)?)
        }
        (Reduction::PmaxToHighDist, Instance::Pmax { p, eps }) => {
            let (lo, hi) = pmax_by_highdist(s, p, *eps)?;
            Answer::Interval(lo, hi)
        }
        (Reduction::GkdToHighDist, Instance::GappedKDistinct { values, k, gap }) => {
            let n = values.len() as f64;
            Answer::Bool(s.highdist(&frequency_distribution(values), *k as f64 / n, (*gap as f64 - 0.5) / n)?)
        }
        (Reduction::GkdToFInfinity, Instance::GappedKDistinct { values, k, gap }) => {
            Answer::Bool(s.f_infinity(values, *gap as f64 / 3.0)? >= *k as f64 - *gap as f64 / 2.0)
        }
        (Reduction::GkdToKDistinct, Instance::GappedKDistinct { values, k, .. }) => Answer::Bool(s.k_distinct(values, *k)?),
        (Reduction::KDistinctToGkd, Instance::KDistinct { values, k }) => Answer::Bool(s.gapped_k_distinct(values, *k, 1)?),
        (Reduction::KDistinctToFInfinity, Instance::KDistinct { values, k }) => {
            Answer::Bool(s.f_infinity(values, 1.0 / 3.0)? >= *k as f64 - 0.5)
        }
        (Reduction::FInfinityToPmax, Instance::FInfinity { values, eps }) => {
            let n = values.len() as f64;
            Answer::Value(n * s.pmax(&frequency_distribution(values), eps / n)?)
        }
        (Reduction::FInfinityToKDistinct, Instance::FInfinity { values, .. }) => {
            let (mut lo, mut hi) = (1usize, values.len() + 1);
            while hi - lo > 1 {
                let k = lo + (hi - lo) / 2;
                if s.k_distinct(values, k)? {
                    lo = k;
                } else {
                    hi = k;
                }
            }
            Answer::Value(lo as f64)
        }
        _ => unreachable!("instance kind checked above"),
    })
}

/// Whether `answer` is a valid solution of `inst` by exact classical computation.
pub fn is_valid(inst: &Instance, answer: &Answer) -> bool {
    match (inst, answer) {
        (Instance::HighDist { p, tau, eps }, Answer::Bool(b)) => match classical::exact_highdist_answer(p, *tau, *eps) {
            PromiseClass::True => *b,
            PromiseClass::False => !*b,
            PromiseClass::NonPromise => true,
        },
        (Instance::Pmax { p, eps }, Answer::Interval(lo, hi)) => {
            let pm = exact_pmax(p).0;
            *lo <= pm && (pm < *hi || (*hi >= 1.0 && pm <= 1.0)) && hi - lo <= *eps + 1e-12
        }
        (Instance::GappedKDistinct { values, k, gap }, Answer::Bool(b)) => match classical::gapped_k_distinct_answer(values, *k, *gap) {
            PromiseClass::True => *b,
            PromiseClass::False => !*b,
            PromiseClass::NonPromise => true,
        },
        (Instance::KDistinct { values, k }, Answer::Bool(b)) => classical::k_distinct(values, *k) == *b,
        (Instance::FInfinity { values, eps }, Answer::Value(v)) => (v - classical::f_infinity(values) as f64).abs() <= *eps + 1e-9,
        _ => false,
    }
}
