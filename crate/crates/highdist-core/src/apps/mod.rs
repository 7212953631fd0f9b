//! Problems solved through HighDist, HighAmp and the `p_max` searches:
//! (gapped) k-distinctness, `F∞`, and Boolean non-linearity.

pub mod reductions;

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::classical::{self, PromiseClass};
use crate::error::{Error, Result};
use crate::highdist::{highamp_params, highamp_with, highdist_with, EngineConfig, HighDistParams, HighDistResult};
use crate::oracle::{deutsch_jozsa_oracle, os_to_od, ArrayOracle, BooleanFunctionOracle, DistributionOracle};
use crate::pmax::{interval_search_rel_with, interval_search_with, PmaxEstimate, QuantumDecider, ThresholdDecider, ThresholdDecision};
use crate::state::QueryCounter;

#[derive(Clone, Debug)]
pub struct AppDecision {
    /// The more likely answer.
    pub answer: bool,
    /// Ground truth; `None` outside the promise.
    pub truth: Option<bool>,
    /// Probability of answering TRUE.
    pub p_true: f64,
    pub queries: QueryCounter,
    pub run: HighDistResult,
}

impl AppDecision {
    /// Probability of the correct answer; 1 outside the promise.
    pub fn success_probability(&self) -> f64 {
        match self.truth {
            Some(true) => self.p_true,
            Some(false) => 1.0 - self.p_true,
            None => 1.0,
        }
    }
}

/// HighDist parameters for `Δ`-gapped k-distinctness: `τ = k/n`, `ε = (Δ − ½)/n`.
pub fn gkd_params(array: &ArrayOracle, k: usize, gap: usize, delta: f64) -> Result<HighDistParams> {
    let n = array.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} outside [1, {n}]")));
    }
    if gap == 0 || gap > k {
        return Err(Error::InvalidParameter(format!("gap {gap} outside [1, k = {k}]")));
    }
    let od = os_to_od(array);
    HighDistParams::derive(od.m(), od.a(), k as f64 / n as f64, (gap as f64 - 0.5) / n as f64, delta)
}

pub fn gapped_k_distinctness_with(array: &ArrayOracle, k: usize, gap: usize, delta: f64, config: &EngineConfig) -> Result<AppDecision> {
    let params = gkd_params(array, k, gap, delta)?;
    let od = os_to_od(array);
    let run = highdist_with(&od, &params, config)?;
    let truth = match classical::gapped_k_distinct_answer(array.values(), k, gap) {
        PromiseClass::True => Some(true),
        PromiseClass::False => Some(false),
        PromiseClass::NonPromise => None,
    };
    Ok(AppDecision { answer: run.decision, truth, p_true: run.exact_success_probability, queries: run.queries.clone(), run })
}

/// Does some value occur at least `k` times, given that otherwise all occur at most `k − Δ` times?
pub fn gapped_k_distinctness(array: &ArrayOracle, k: usize, gap: usize, delta: f64) -> Result<AppDecision> {
    gapped_k_distinctness_with(array, k, gap, delta, &EngineConfig::default())
}

/// Does some value occur at least `k` times? The `Δ = 1` case of the gapped problem.
pub fn k_distinctness(array: &ArrayOracle, k: usize, delta: f64) -> Result<AppDecision> {
    gapped_k_distinctness(array, k, 1, delta)
}

#[derive(Clone, Debug)]
pub struct FrequencyEstimate {
    /// `n` times the `p_max` point estimate.
    pub estimate: f64,
    /// Nearest integer, meaningful when the accuracy is below one.
    pub rounded: usize,
    pub truth: usize,
    /// Probability that the underlying interval brackets `F∞/n`.
    pub success_probability: f64,
    pub queries: QueryCounter,
    pub search: PmaxEstimate,
}

/// `F∞` to additive accuracy `ε` (in counts); `ε = 0.99` gives the exact value after rounding.
pub fn f_infinity(array: &ArrayOracle, eps: f64, delta: f64) -> Result<FrequencyEstimate> {
    f_infinity_with(array, eps, delta, &EngineConfig::default())
}

pub fn f_infinity_with(array: &ArrayOracle, eps: f64, delta: f64, config: &EngineConfig) -> Result<FrequencyEstimate> {
    let n = array.n() as f64;
    if !(eps > 0.0 && eps < n) {
        return Err(Error::InvalidParameter(format!("accuracy {eps} outside (0, n)")));
    }
    let od = os_to_od(array);
    let truth = classical::f_infinity(array.values());
    let search =
        interval_search_with(&mut QuantumDecider { oracle: &od, config: *config, full_copies: false }, eps / n, delta, truth as f64 / n)?;
    Ok(frequency(search, n, truth))
}

/// `F∞` to relative accuracy `ε`.
pub fn f_infinity_relative(array: &ArrayOracle, eps: f64, delta: f64) -> Result<FrequencyEstimate> {
    f_infinity_relative_with(array, eps, delta, &EngineConfig::default())
}

pub fn f_infinity_relative_with(array: &ArrayOracle, eps: f64, delta: f64, config: &EngineConfig) -> Result<FrequencyEstimate> {
    let n = array.n() as f64;
    let od = os_to_od(array);
    let truth = classical::f_infinity(array.values());
    let search =
        interval_search_rel_with(&mut QuantumDecider { oracle: &od, config: *config, full_copies: false }, eps, delta, truth as f64 / n)?;
    Ok(frequency(search, n, truth))
}

fn frequency(search: PmaxEstimate, n: f64, truth: usize) -> FrequencyEstimate {
    let estimate = n * search.estimate;
    FrequencyEstimate {
        estimate,
        rounded: estimate.round().max(0.0) as usize,
        truth,
        success_probability: search.coverage_probability,
        queries: search.queries.clone(),
        search,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlinRoute {
    /// Search over amplitude thresholds with HighAmp.
    HighAmp,
    /// Search over `f̂²` with HighDist at accuracy `4λ²`.
    HighDistSquared,
}

/// HighAmp as a threshold decider on `|α|`: TRUE means `max|α| ≥ τ − g`, FALSE means `max|α| < τ`.
#[derive(Clone, Debug)]
pub struct AmplitudeDecider<'a> {
    pub oracle: &'a DistributionOracle,
    pub config: EngineConfig,
}

impl ThresholdDecider for AmplitudeDecider<'_> {
    fn m(&self) -> usize {
        self.oracle.m()
    }

    fn decide(&mut self, tau: f64, gap: f64, delta: f64) -> Result<ThresholdDecision> {
        let params = highamp_params(self.oracle.m(), tau - gap, gap / 2.0, delta / 2.0)?;
        let r = highamp_with(self.oracle, tau - gap, &params, &self.config)?;
        Ok(ThresholdDecision { p_true: r.exact_success_probability, queries: r.queries })
    }
}

#[derive(Clone, Debug)]
pub struct NonlinEstimate {
    pub eta: f64,
    pub fhat_estimate: f64,
    pub truth: f64,
    pub route: NonlinRoute,
    /// Probability that the search interval brackets the true `f̂_max` (or its square).
    pub success_probability: f64,
    pub queries: QueryCounter,
    pub search: PmaxEstimate,
}

pub fn nonlinearity_with(
    f: &BooleanFunctionOracle,
    lambda: f64,
    delta: f64,
    route: NonlinRoute,
    config: &EngineConfig,
) -> Result<NonlinEstimate> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::InvalidParameter(format!("accuracy {lambda} outside (0, ½)")));
    }
    let od = deutsch_jozsa_oracle(f);
    let fmax = classical::walsh_max(f);
    let (search, fhat) = match route {
        NonlinRoute::HighAmp => {
            let mut d = AmplitudeDecider { oracle: &od, config: *config };
            let s = interval_search_with(&mut d, 2.0 * lambda, delta, fmax)?;
            let e = s.estimate;
            (s, e)
        }
        NonlinRoute::HighDistSquared => {
            let mut d = QuantumDecider { oracle: &od, config: *config, full_copies: false };
            let s = interval_search_with(&mut d, 4.0 * lambda * lambda, delta, fmax * fmax)?;
            let e = s.estimate.max(0.0).sqrt();
            (s, e)
        }
    };
    let fhat = fhat.min(1.0);
    Ok(NonlinEstimate {
        eta: 0.5 - 0.5 * fhat,
        fhat_estimate: fhat,
        truth: classical::nonlinearity(f),
        route,
        success_probability: search.coverage_probability,
        queries: search.queries.clone(),
        search,
    })
}

/// `η̃ = ½ − ½·f̂`, with `f̂` within `2λ` of `f̂_max` through HighAmp.
pub fn nonlinearity(f: &BooleanFunctionOracle, lambda: f64, delta: f64) -> Result<NonlinEstimate> {
    nonlinearity_with(f, lambda, delta, NonlinRoute::HighAmp, &EngineConfig::default())
}

#[cfg(test)]
mod tests;
