//! The threshold pipeline: HighDist with additive or relative accuracy, and HighAmp.
//!
//! Two backends compute the same exact output probabilities. The dense one
//! simulates every register; the branch one evaluates each index block as a
//! two-dimensional phase estimation.

pub mod branch;
pub mod highamp;
pub mod params;
pub mod pipeline;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::oracle::DistributionOracle;
use crate::qae::{amp_est_circuit, amplify_prepared, AaSchedule, EqRegisters, GroverIterate};
use crate::reversible::{cond_maj, marks};
use crate::state::{c, Circuit, Control, QuantumState, QueryCounter, C64, DEFAULT_DENSE_CAP};

pub use branch::{BranchAnalysis, IndexBranch};
pub use highamp::{highamp, highamp_params, highamp_with};
pub use params::{HighDistParams, Preset, DESK_COPY_CAP};
pub use pipeline::{pipeline_qubits, PipelineLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Dense,
    Branch,
    /// Dense when the pipeline fits the qubit cap, branch otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub backend: Backend,
    pub dense_cap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { backend: Backend::Auto, dense_cap: DEFAULT_DENSE_CAP }
    }
}

impl EngineConfig {
    pub fn dense() -> Self {
        EngineConfig { backend: Backend::Dense, ..Self::default() }
    }

    pub fn branch() -> Self {
        EngineConfig { backend: Backend::Branch, ..Self::default() }
    }

    fn resolve(&self, qubits: usize) -> Backend {
        match self.backend {
            Backend::Auto if qubits <= self.dense_cap => Backend::Dense,
            Backend::Auto => Backend::Branch,
            b => b,
        }
    }
}

/// Output of one pipeline run. Probabilities are exact, not sampled.
#[derive(Clone, Debug)]
pub struct HighDistResult {
    /// The more likely measurement outcome of `R_f`.
    pub decision: bool,
    /// `Pr[R_f = 1]` after amplification.
    pub exact_success_probability: f64,
    /// `Pr[R_f = 1]` before amplification.
    pub pre_amplification_success: f64,
    /// `Pr[R1 = x | R_f = 1]`; all zero when `R_f = 1` is impossible.
    pub good_index_distribution: Vec<f64>,
    /// `Pr[R_f = 1 | R1 = x]` before amplification.
    pub acceptance_given_index: Vec<f64>,
    pub queries: QueryCounter,
    pub params: HighDistParams,
    /// Calls to the stage 0–4 circuit (or its inverse).
    pub schedule_length: usize,
    pub backend: Backend,
    pub qubits: usize,
}

impl HighDistResult {
    /// Probability of the wrong answer given the true classification.
    pub fn error_probability(&self, truth: bool) -> f64 {
        if truth {
            1.0 - self.exact_success_probability
        } else {
            self.exact_success_probability
        }
    }
}

/// Lower bound on the pre-amplification acceptance when some `p_x ≥ τ`.
pub fn success_lower_bound(tau: f64, delta: f64) -> f64 {
    tau * (1.0 - delta)
}

/// Fixed-point schedule leaving failure at most `δ/2` above the bound.
pub fn schedule_for(tau_lb: f64, delta: f64) -> Result<AaSchedule> {
    AaSchedule::fixed_point(tau_lb, (delta / 2.0).sqrt())
}

/// Oracle tally of a full run: each stage-0–4 call makes `stage1` uncontrolled
/// queries and `2K(2^l − 1)` controlled ones.
pub fn pipeline_tally(label: &str, stage1: u64, copies: usize, l: usize, schedule: &AaSchedule) -> QueryCounter {
    let it = schedule.iterations() as u64;
    let calls = schedule.preparer_calls() as u64;
    let mut qc = QueryCounter::new();
    qc.record_n(label, false, false, stage1 * (it + 1));
    qc.record_n(label, true, false, stage1 * it);
    qc.record_n(label, false, true, calls * 2 * copies as u64 * ((1u64 << l) - 1));
    qc
}

/// Register layout of the dense HighDist pipeline.
pub fn highdist_layout(o_d: &DistributionOracle, params: &HighDistParams) -> Result<PipelineLayout> {
    let lm = o_d.log_m();
    let a = o_d.a();
    PipelineLayout::new(lm, a, &[("R2", lm), ("R2x", a)], params.l, params.k)
}

/// Qubits the dense HighDist pipeline needs.
pub fn highdist_qubits(o_d: &DistributionOracle, params: &HighDistParams) -> usize {
    let lm = o_d.log_m();
    pipeline_qubits(lm, o_d.a(), lm + o_d.a(), params.l, params.k)
}

/// Stages 0–4 of HighDist as one circuit.
pub fn highdist_preparer(o_d: &DistributionOracle, params: &HighDistParams, pl: &PipelineLayout) -> Result<Circuit> {
    let mut prep = pipeline::stage0(pl, params.tau1)?;
    let mut index = vec![pl.r1];
    index.extend(pl.r1x);
    prep.push(o_d.gate(&index));
    prep.push(o_d.gate(&pl.work));
    let regs = EqRegisters { index: pl.r1, value: pl.work[0], ancilla: pl.work.get(1).copied() };
    let it = GroverIterate::eq(o_d, &regs)?;
    for &r4 in &pl.r4 {
        prep.append(&amp_est_circuit(&it, &pl.layout, r4));
    }
    prep.append(&pipeline::stage3(pl)?);
    prep.append(&pipeline::stage4(pl)?);
    Ok(prep)
}

fn check_oracle(o_d: &DistributionOracle, params: &HighDistParams) -> Result<()> {
    if o_d.m() != params.m || o_d.a() != params.a {
        return Err(Error::InvalidParameter(format!(
            "parameters for (m, a) = ({}, {}) used with an oracle over ({}, {})",
            params.m,
            params.a,
            o_d.m(),
            o_d.a()
        )));
    }
    Ok(())
}

pub(crate) struct DenseRun {
    pub state: QuantumState,
    pub pre: f64,
    pub accept_given_index: Vec<f64>,
    pub queries: QueryCounter,
}

pub(crate) fn run_dense(pl: &PipelineLayout, prep: &Circuit, schedule: &AaSchedule, cap: usize) -> Result<DenseRun> {
    let mut st = QuantumState::zero_with_cap(pl.layout.clone(), cap)?;
    let mut qc = QueryCounter::new();
    st.run(prep, &mut qc)?;
    let good = [Control::value(pl.rf, 1)];
    let pre = st.probability_where(&good)?;
    let m = 1usize << pl.layout.width(pl.r1);
    let mut accept_given_index = vec![0.0; m];
    for (x, v) in accept_given_index.iter_mut().enumerate() {
        let px = st.probability_of(pl.r1, x)?;
        if px > 0.0 {
            *v = st.probability_where(&[Control::value(pl.r1, x), good[0]])? / px;
        }
    }
    amplify_prepared(&mut st, prep, &good, schedule, &mut qc)?;
    Ok(DenseRun { state: st, pre, accept_given_index, queries: qc })
}

pub(crate) fn dense_result(run: DenseRun, pl: &PipelineLayout, params: HighDistParams, schedule: &AaSchedule) -> Result<HighDistResult> {
    let success = run.state.probability_of(pl.rf, 1)?;
    let m = run.accept_given_index.len();
    let mut dist = vec![0.0; m];
    if success > 0.0 {
        for (x, v) in dist.iter_mut().enumerate() {
            *v = run.state.probability_where(&[Control::value(pl.r1, x), Control::value(pl.rf, 1)])? / success;
        }
    }
    Ok(HighDistResult {
        decision: success >= 0.5,
        exact_success_probability: success,
        pre_amplification_success: run.pre,
        good_index_distribution: dist,
        acceptance_given_index: run.accept_given_index,
        queries: run.queries,
        params,
        schedule_length: schedule.preparer_calls(),
        backend: Backend::Dense,
        qubits: pl.qubits(),
    })
}

pub(crate) fn branch_result(
    analysis: &BranchAnalysis,
    params: HighDistParams,
    schedule: &AaSchedule,
    queries: QueryCounter,
    qubits: usize,
) -> HighDistResult {
    let pre = analysis.acceptance();
    let success = schedule.success(pre);
    HighDistResult {
        decision: success >= 0.5,
        exact_success_probability: success,
        pre_amplification_success: pre,
        good_index_distribution: analysis.good_index_distribution(),
        acceptance_given_index: analysis.branches.iter().map(|b| b.accept).collect(),
        queries,
        params,
        schedule_length: schedule.preparer_calls(),
        backend: Backend::Branch,
        qubits,
    }
}

/// Final dense pipeline state after amplification, for inspection.
pub fn highdist_dense_state(o_d: &DistributionOracle, params: &HighDistParams, cap: usize) -> Result<QuantumState> {
    check_oracle(o_d, params)?;
    let schedule = schedule_for(success_lower_bound(params.tau, params.delta), params.delta)?;
    let pl = highdist_layout(o_d, params)?;
    let prep = highdist_preparer(o_d, params, &pl)?;
    Ok(run_dense(&pl, &prep, &schedule, cap)?.state)
}

/// Branch analysis of HighDist: index weights and good probabilities are both `p_x`.
pub fn highdist_branches(o_d: &DistributionOracle, params: &HighDistParams) -> Result<BranchAnalysis> {
    let p = o_d.probabilities();
    BranchAnalysis::run(&p, &p, params.l, params.tau1, params.k)
}

/// HighDist with the default engine configuration.
pub fn highdist(o_d: &DistributionOracle, params: &HighDistParams) -> Result<HighDistResult> {
    highdist_with(o_d, params, &EngineConfig::default())
}

pub fn highdist_with(o_d: &DistributionOracle, params: &HighDistParams, config: &EngineConfig) -> Result<HighDistResult> {
    check_oracle(o_d, params)?;
    let schedule = schedule_for(success_lower_bound(params.tau, params.delta), params.delta)?;
    let qubits = highdist_qubits(o_d, params);
    match config.resolve(qubits) {
        Backend::Dense => {
            let pl = highdist_layout(o_d, params)?;
            let prep = highdist_preparer(o_d, params, &pl)?;
            let run = run_dense(&pl, &prep, &schedule, config.dense_cap)?;
            dense_result(run, &pl, *params, &schedule)
        }
        _ => {
            let analysis = highdist_branches(o_d, params)?;
            let qc = pipeline_tally(o_d.label(), 2, params.k, params.l, &schedule);
            Ok(branch_result(&analysis, *params, &schedule, qc, qubits))
        }
    }
}

/// Relative accuracy: HighDist with `ε = ε_r·τ`.
pub fn highdist_relative(o_d: &DistributionOracle, tau: f64, eps_r: f64, delta: f64) -> Result<HighDistResult> {
    if !(eps_r > 0.0 && eps_r < 1.0) {
        return Err(Error::InvalidParameter(format!("relative accuracy {eps_r} outside (0,1)")));
    }
    let params = HighDistParams::derive(o_d.m(), o_d.a(), tau, eps_r * tau, delta)?;
    highdist(o_d, &params)
}

/// Full pipeline state reconstructed from the branch analysis, after amplification.
///
/// `R3 = τ₁`, `H3 = H4 = 0`; the work register of block `x` is
/// `Σ_s c_s ψ_s(bad, good)`, each `R4_k` carries `e_s(a_k)`, and `R5_k`, `R_f`
/// hold the marks and their majority.
pub fn expand_highdist_dense(
    o_d: &DistributionOracle,
    params: &HighDistParams,
    analysis: &BranchAnalysis,
    schedule: &AaSchedule,
    cap: usize,
) -> Result<QuantumState> {
    let pl = highdist_layout(o_d, params)?;
    if pl.qubits() > cap {
        return Err(Error::QubitBudget { required: pl.qubits(), cap });
    }
    let layout = &pl.layout;
    let phi = o_d.prepared_state();
    let (m, a) = (o_d.m(), o_d.a());
    let da = 1usize << a;
    let l = params.l;
    let na = 1usize << l;
    let k = params.k;
    let mut amps = vec![c(0.0, 0.0); 1usize << layout.total_width()];
    let pre = analysis.acceptance();
    let (ag, ab) = schedule.evolve(pre);
    let scale_good = if pre > 0.0 { ag / pre.sqrt() } else { c(0.0, 0.0) };
    let scale_bad = if pre < 1.0 { ab / (1.0 - pre).sqrt() } else { c(0.0, 0.0) };
    for br in &analysis.branches {
        let x = br.index;
        let pb = analysis.phase(br.good);
        let e = [pb.eigen_amplitudes(0), pb.eigen_amplitudes(1)];
        let cs = [pb.initial_overlap(0), pb.initial_overlap(1)];
        let g = br.good;
        for xi in 0..da {
            let ax = phi[x * da + xi];
            if ax.norm_sqr() == 0.0 {
                continue;
            }
            for v in 0..m {
                for xi2 in 0..da {
                    let f = phi[v * da + xi2];
                    let (good_c, bad_c) = if v == x {
                        (if g > 0.0 { f / g.sqrt() } else { c(0.0, 0.0) }, c(0.0, 0.0))
                    } else {
                        (c(0.0, 0.0), if g < 1.0 { f / (1.0 - g).sqrt() } else { c(0.0, 0.0) })
                    };
                    let psi: [C64; 2] = [0, 1].map(|s| {
                        let ev = pb.eigenvectors[s];
                        ev[0] * bad_c + ev[1] * good_c
                    });
                    for combo in 0..na.pow(k as u32) {
                        let mut digits = Vec::with_capacity(k);
                        let mut rest = combo;
                        for _ in 0..k {
                            digits.push(rest % na);
                            rest /= na;
                        }
                        let mut amp = c(0.0, 0.0);
                        for s in 0..2 {
                            let mut t = cs[s] * psi[s];
                            for &ak in &digits {
                                t *= e[s][ak];
                            }
                            amp += t;
                        }
                        if amp.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mk: Vec<bool> = digits.iter().map(|&ak| marks(ak, params.tau1, l)).collect();
                        let rf = cond_maj(&mk, false)?;
                        let mut idx = layout.deposit(pl.r1, x) | layout.deposit(pl.r3, params.tau1);
                        if let Some(r) = pl.r1x {
                            idx |= layout.deposit(r, xi);
                        }
                        idx |= layout.deposit(pl.work[0], v);
                        if let Some(&r) = pl.work.get(1) {
                            idx |= layout.deposit(r, xi2);
                        }
                        for (j, &ak) in digits.iter().enumerate() {
                            idx |= layout.deposit(pl.r4[j], ak) | layout.deposit(pl.r5[j], mk[j] as usize);
                        }
                        idx |= layout.deposit(pl.rf, rf as usize);
                        amps[idx] += ax * amp * if rf { scale_good } else { scale_bad };
                    }
                }
            }
        }
    }
    QuantumState::from_amplitudes(layout.clone(), amps)
}

#[cfg(test)]
mod tests;
