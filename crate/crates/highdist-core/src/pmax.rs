//! Binary search for `p_max` over HighDist thresholds, with additive or relative accuracy.
//!
//! Every round's decision probability is exact, so besides the most likely
//! transcript the search also reports the probability, over the whole
//! decision tree, that the returned interval brackets `p_max`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::classical::exact_pmax;
use crate::error::{Error, Result};
use crate::highdist::{highdist_with, EngineConfig, HighDistParams};
use crate::oracle::DistributionOracle;
use crate::state::QueryCounter;

/// Outcome of one threshold query.
#[derive(Clone, Debug)]
pub struct ThresholdDecision {
    /// Probability that the decider answers TRUE.
    pub p_true: f64,
    pub queries: QueryCounter,
}

/// Anything that answers HighDist instances on a fixed distribution.
pub trait ThresholdDecider {
    fn m(&self) -> usize;
    fn decide(&mut self, tau: f64, eps: f64, delta: f64) -> Result<ThresholdDecision>;
}

/// The quantum pipeline on an oracle.
#[derive(Clone, Debug)]
pub struct QuantumDecider<'a> {
    pub oracle: &'a DistributionOracle,
    pub config: EngineConfig,
    pub full_copies: bool,
}

impl<'a> QuantumDecider<'a> {
    pub fn new(oracle: &'a DistributionOracle) -> Self {
        QuantumDecider { oracle, config: EngineConfig::default(), full_copies: false }
    }
}

impl ThresholdDecider for QuantumDecider<'_> {
    fn m(&self) -> usize {
        self.oracle.m()
    }

    fn decide(&mut self, tau: f64, eps: f64, delta: f64) -> Result<ThresholdDecision> {
        let mut params = HighDistParams::derive(self.oracle.m(), self.oracle.a(), tau, eps, delta)?;
        if self.full_copies {
            params = params.full_copies();
        }
        let r = highdist_with(self.oracle, &params, &self.config)?;
        Ok(ThresholdDecision { p_true: r.exact_success_probability, queries: r.queries })
    }
}

/// Error-free stand-in: TRUE exactly when `p_max ≥ τ − ε/2`, which is a valid
/// answer on every promise instance.
#[derive(Clone, Debug)]
pub struct ClassicalDecider {
    pub p: Vec<f64>,
}

impl ThresholdDecider for ClassicalDecider {
    fn m(&self) -> usize {
        self.p.len()
    }

    fn decide(&mut self, tau: f64, eps: f64, _delta: f64) -> Result<ThresholdDecision> {
        let hit = exact_pmax(&self.p).0 >= tau - eps / 2.0;
        Ok(ThresholdDecision { p_true: if hit { 1.0 } else { 0.0 }, queries: QueryCounter::new() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Additive,
    Relative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub p_true: f64,
    pub decision: bool,
    /// Interval after the round.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug)]
pub struct PmaxEstimate {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub mode: SearchMode,
    /// Queries along the reported transcript.
    pub queries: QueryCounter,
    /// The most likely transcript.
    pub transcript: Vec<Round>,
    /// Probability over all transcripts that the result brackets `p_max`.
    pub coverage_probability: f64,
}

impl PmaxEstimate {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && (p < self.upper || (self.upper >= 1.0 && p <= 1.0))
    }
}

#[derive(Clone, Copy, Debug)]
struct Cursor {
    lower: f64,
    upper: f64,
    /// Threshold for additive search, exponent of `1 − ε′` for relative search.
    pos: f64,
    round: usize,
}

trait Plan {
    fn rounds(&self) -> usize;
    /// `(τ, accuracy)` of the next query.
    fn query(&self, cur: &Cursor) -> (f64, f64);
    fn advance(&self, cur: &Cursor, answer: bool) -> Cursor;
}

struct AdditivePlan {
    k: usize,
    gap: f64,
}

impl Plan for AdditivePlan {
    fn rounds(&self) -> usize {
        self.k
    }

    fn query(&self, cur: &Cursor) -> (f64, f64) {
        (cur.pos, self.gap)
    }

    fn advance(&self, cur: &Cursor, answer: bool) -> Cursor {
        let step = 1.0 / (1u64 << (cur.round + 2)) as f64;
        let mut next = *cur;
        if answer {
            next.lower = cur.lower.max(cur.pos - self.gap);
            next.pos += step;
        } else {
            next.upper = cur.pos;
            next.pos -= step;
        }
        next.round += 1;
        next
    }
}

struct RelativePlan {
    ratio: f64,
    eps_prime: f64,
    k: usize,
}

impl Plan for RelativePlan {
    fn rounds(&self) -> usize {
        self.k
    }

    fn query(&self, cur: &Cursor) -> (f64, f64) {
        let tau = self.ratio.powf(cur.pos);
        (tau, self.eps_prime * tau)
    }

    fn advance(&self, cur: &Cursor, answer: bool) -> Cursor {
        let step = (1u64 << self.k) as f64 / (1u64 << (cur.round + 2)) as f64;
        let tau = self.ratio.powf(cur.pos);
        let mut next = *cur;
        if answer {
            next.lower = cur.lower.max(self.ratio * tau);
            next.pos -= step;
        } else {
            next.upper = tau;
            next.pos += step;
        }
        next.round += 1;
        next
    }
}

fn covers(lower: f64, upper: f64, p: f64) -> bool {
    lower <= p && (p < upper || (upper >= 1.0 && p <= 1.0))
}

fn coverage<P: Plan, D: ThresholdDecider>(plan: &P, d: &mut D, cur: Cursor, weight: f64, delta: f64, p_max: f64) -> Result<f64> {
    if weight < 1e-15 {
        return Ok(0.0);
    }
    if cur.round >= plan.rounds() {
        return Ok(if covers(cur.lower, cur.upper, p_max) { weight } else { 0.0 });
    }
    let (tau, eps) = plan.query(&cur);
    let dec = d.decide(tau, eps, delta)?;
    let yes = coverage(plan, d, plan.advance(&cur, true), weight * dec.p_true, delta, p_max)?;
    let no = coverage(plan, d, plan.advance(&cur, false), weight * (1.0 - dec.p_true), delta, p_max)?;
    Ok(yes + no)
}

fn run<P: Plan, D: ThresholdDecider>(
    plan: &P,
    d: &mut D,
    start: Cursor,
    delta: f64,
    p_max: f64,
) -> Result<(Cursor, Vec<Round>, QueryCounter, f64)> {
    let mut cur = start;
    let mut transcript = Vec::new();
    let mut queries = QueryCounter::new();
    while cur.round < plan.rounds() {
        let (tau, eps) = plan.query(&cur);
        let dec = d.decide(tau, eps, delta)?;
        let answer = dec.p_true >= 0.5;
        queries.merge(&dec.queries);
        cur = plan.advance(&cur, answer);
        transcript.push(Round { tau, eps, delta, p_true: dec.p_true, decision: answer, lower: cur.lower, upper: cur.upper });
    }
    let cov = coverage(plan, d, start, 1.0, delta, p_max)?;
    Ok((cur, transcript, queries, cov))
}

fn check_accuracy(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("accuracy {eps} outside (0,1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("error {delta} outside (0,1)")));
    }
    Ok(())
}

/// Rounds of the additive search, `⌈log₂(1/ε)⌉ + 1`.
pub fn additive_rounds(eps: f64) -> usize {
    (1.0 / eps).log2().ceil() as usize + 1
}

/// Additive search against any decider; `p_max` is used only for the coverage figure.
pub fn interval_search_with<D: ThresholdDecider>(d: &mut D, eps: f64, delta: f64, p_max: f64) -> Result<PmaxEstimate> {
    check_accuracy(eps, delta)?;
    let k = additive_rounds(eps);
    let plan = AdditivePlan { k, gap: eps / 4.0 };
    let start = Cursor { lower: 1.0 / d.m() as f64, upper: 1.0, pos: 0.5, round: 0 };
    let (cur, transcript, queries, cov) = run(&plan, d, start, delta / k as f64, p_max)?;
    Ok(PmaxEstimate {
        lower: cur.lower,
        upper: cur.upper,
        estimate: 0.5 * (cur.lower + cur.upper),
        mode: SearchMode::Additive,
        queries,
        transcript,
        coverage_probability: cov,
    })
}

/// Additive `p_max` estimate from the quantum pipeline.
pub fn interval_search(o_d: &DistributionOracle, eps: f64, delta: f64) -> Result<PmaxEstimate> {
    let p_max = exact_pmax(&o_d.probabilities()).0;
    interval_search_with(&mut QuantumDecider::new(o_d), eps, delta, p_max)
}

/// `ε′ = 1 − √(1 − ε)` and the smallest `k` with `(1 − ε′)^{2^k} ≤ 1/m`.
pub fn relative_plan(m: usize, eps: f64) -> (f64, usize) {
    let eps_prime = 1.0 - (1.0 - eps).sqrt();
    let need = (m as f64).ln() / -(1.0 - eps_prime).ln();
    let mut k = 1;
    while ((1u64 << k) as f64) < need - 1e-12 {
        k += 1;
    }
    (eps_prime, k)
}

pub fn interval_search_rel_with<D: ThresholdDecider>(d: &mut D, eps: f64, delta: f64, p_max: f64) -> Result<PmaxEstimate> {
    check_accuracy(eps, delta)?;
    let (eps_prime, k) = relative_plan(d.m(), eps);
    let plan = RelativePlan { ratio: 1.0 - eps_prime, eps_prime, k };
    let start = Cursor { lower: 1.0 / d.m() as f64, upper: 1.0, pos: (1u64 << (k - 1)) as f64, round: 0 };
    let (cur, transcript, queries, cov) = run(&plan, d, start, delta / k as f64, p_max)?;
    Ok(PmaxEstimate {
        lower: cur.lower,
        upper: cur.upper,
        estimate: cur.upper,
        mode: SearchMode::Relative,
        queries,
        transcript,
        coverage_probability: cov,
    })
}

/// Relative `p_max` estimate: `(1 − ε)·p̃ ≤ p_max < p̃` with probability at least `1 − δ`.
pub fn interval_search_rel(o_d: &DistributionOracle, eps: f64, delta: f64) -> Result<PmaxEstimate> {
    let p_max = exact_pmax(&o_d.probabilities()).0;
    interval_search_rel_with(&mut QuantumDecider::new(o_d), eps, delta, p_max)
}

#[derive(Clone, Debug)]
pub struct MinEntropyEstimate {
    pub bits: f64,
    pub search: PmaxEstimate,
}

/// `−log₂ p̃_max` with the relative accuracy `1 − 2^{−bits}` so the bit error stays below `bits`.
pub fn min_entropy_with<D: ThresholdDecider>(d: &mut D, eps_bits: f64, delta: f64, p_max: f64) -> Result<MinEntropyEstimate> {
    if eps_bits.is_nan() || eps_bits <= 0.0 {
        return Err(Error::InvalidParameter(format!("bit accuracy {eps_bits} must be positive")));
    }
    let eps = 1.0 - (-eps_bits).exp2();
    let search = interval_search_rel_with(d, eps, delta, p_max)?;
    Ok(MinEntropyEstimate { bits: -search.estimate.log2(), search })
}

pub fn min_entropy(o_d: &DistributionOracle, eps_bits: f64, delta: f64) -> Result<MinEntropyEstimate> {
    let p_max = exact_pmax(&o_d.probabilities()).0;
    min_entropy_with(&mut QuantumDecider::new(o_d), eps_bits, delta, p_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical;
    use crate::oracle::explicit_distribution_oracle;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_dist(rng: &mut impl Rng, m: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().powi(3)).collect();
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    }

    fn monotone(e: &PmaxEstimate, m: usize) -> bool {
        let (mut lo, mut hi) = (1.0 / m as f64, 1.0);
        for r in &e.transcript {
            if r.lower < lo || r.upper > hi || r.lower >= r.upper {
                return false;
            }
            (lo, hi) = (r.lower, r.upper);
        }
        true
    }

    #[test]
    fn additive_examples() {
        let e = interval_search(&explicit_distribution_oracle(&[1.0, 0.0, 0.0, 0.0], 0).unwrap(), 0.125, 0.2).unwrap();
        assert!(e.contains(1.0));
        assert_eq!(e.upper, 1.0);
        let e = interval_search(&explicit_distribution_oracle(&[0.55, 0.15, 0.15, 0.15], 0).unwrap(), 0.125, 0.2).unwrap();
        assert!(e.upper - e.lower <= 0.125 + 1e-12);
        assert!(e.contains(0.55));
        assert!(e.coverage_probability >= 0.8);
        assert_eq!(e.transcript.len(), additive_rounds(0.125));
        assert!((e.transcript.iter().map(|r| r.delta).sum::<f64>() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn small_pmax_is_bracketed() {
        let mut d = ClassicalDecider { p: vec![0.05; 20].into_iter().chain([0.0; 12]).collect() };
        let e = interval_search_with(&mut d, 0.2, 0.2, 0.05).unwrap();
        assert!(e.contains(0.05) && e.upper <= 0.2);
        assert_eq!(e.transcript.len(), additive_rounds(0.2));
        let mut d = ClassicalDecider { p: [[0.2336; 4].as_slice(), &[0.0656; 4]].concat() };
        let e = interval_search_with(&mut d, 0.125, 0.2, 0.2336).unwrap();
        assert!(e.contains(0.2336));
        assert!(e.transcript.iter().any(|r| r.tau <= 0.125));
    }

    #[test]
    fn relative_examples() {
        let e = interval_search_rel(&explicit_distribution_oracle(&[1.0, 0.0, 0.0, 0.0], 0).unwrap(), 0.5, 0.2).unwrap();
        assert!((1.0 - 0.5) * e.estimate <= 1.0 && e.upper == 1.0);
        let p = [0.5, 0.25, 0.125, 0.125];
        let e = interval_search_rel(&explicit_distribution_oracle(&p, 0).unwrap(), 0.5, 0.2).unwrap();
        let (ep, _) = relative_plan(4, 0.5);
        assert!(e.estimate > 0.5 && e.estimate <= 0.5 / ((1.0 - ep) * (1.0 - ep)) + 1e-12);
        assert!(e.coverage_probability >= 0.8);
        let mut d = ClassicalDecider { p: vec![0.25; 4] };
        let e = interval_search_rel_with(&mut d, 0.5, 0.2, 0.25).unwrap();
        let (ep, k) = relative_plan(4, 0.5);
        assert_eq!(e.lower, 0.25);
        assert!((e.upper - (1.0 - ep).powi((1 << k) - 1)).abs() < 1e-12);
        assert!(e.transcript.iter().all(|r| !r.decision));
    }

    #[test]
    fn min_entropy_examples() {
        let mut one = ClassicalDecider { p: vec![1.0, 0.0] };
        let h = min_entropy_with(&mut one, 0.5, 0.2, 1.0).unwrap();
        assert!(h.bits.abs() < 1e-12);
        for (p, want) in [(vec![0.5, 0.25, 0.25, 0.0], 1.0), (vec![0.125; 8], 3.0)] {
            let o = explicit_distribution_oracle(&p, 0).unwrap();
            let h = min_entropy(&o, 0.5, 0.2).unwrap();
            assert!(h.bits < want + 1e-12 && h.bits >= want - 0.5, "{} vs {want}", h.bits);
            assert!((classical::min_entropy(&p) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn quantum_coverage_on_random_distributions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..4 {
            let p = random_dist(&mut rng, 8);
            let e = interval_search(&explicit_distribution_oracle(&p, 0).unwrap(), 0.125, 0.2).unwrap();
            assert!(e.upper - e.lower <= 0.125 + 1e-12);
            assert!(e.coverage_probability >= 0.8);
        }
    }

    proptest! {
        #[test]
        fn stub_always_brackets(seed in proptest::collection::vec(0.0f64..1.0, 8), e in 0usize..4) {
            let s: f64 = seed.iter().sum::<f64>() + 1e-9;
            let p: Vec<f64> = seed.iter().map(|v| v / s).collect();
            let eps = [0.25, 0.125, 0.0625, 0.1][e];
            let pm = exact_pmax(&p).0;
            let est = interval_search_with(&mut ClassicalDecider { p: p.clone() }, eps, 0.2, pm).unwrap();
            prop_assert!(est.contains(pm));
            prop_assert!(est.upper - est.lower <= eps + 1e-12);
            prop_assert_eq!(est.coverage_probability, 1.0);
            prop_assert!(monotone(&est, 8));
            let rel = interval_search_rel_with(&mut ClassicalDecider { p: p.clone() }, 0.5, 0.2, pm).unwrap();
            prop_assert!(rel.contains(pm));
            prop_assert!(0.5 * rel.upper <= pm + 1e-12);
        }
    }
}
