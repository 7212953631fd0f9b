//! HighAmp: is some `|α_x|` at least `τ + 2ε`, or are all below `τ`?
//!
//! Block `x` of the index register runs a Hadamard test between `|x⟩` and
//! `O_D|0⟩` on `W = [R21, R22]`, so `Pr[R21 = 0] = ½(1 + α_x)`. Simultaneous
//! amplitude estimation feeds the same stages 3–5 as HighDist with threshold
//! `½(1+τ) + ε`. The negative side runs the same pipeline with `R21`
//! flipped before the final read, which turns `α_x` into `−α_x`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    branch_result, dense_result, pipeline, run_dense, schedule_for, success_lower_bound, Backend, BranchAnalysis, EngineConfig,
    HighDistParams, HighDistResult, PipelineLayout,
};
use crate::error::{Error, Result};
use crate::oracle::DistributionOracle;
use crate::simulae::{phase_estimation_circuit, IndexedAlgorithmFamily};
use crate::state::{c, Circuit, Control, Gate, Operator, QuantumState, QueryCounter, RegisterLayout};

/// HighDist parameters for the good probability `½(1 + α)` at amplitude threshold `τ`.
pub fn highamp_params(m: usize, tau: f64, eps: f64, delta: f64) -> Result<HighDistParams> {
    if !(tau > 0.0 && eps > 0.0 && tau + 2.0 * eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("need τ, ε > 0 and τ + 2ε ≤ 1, got τ = {tau}, ε = {eps}")));
    }
    HighDistParams::derive(m, 0, 0.5 * (1.0 + tau) + eps, eps, delta)
}

fn circuit_operator(layout: &RegisterLayout, circ: &Circuit) -> Result<Operator> {
    let d = 1usize << layout.total_width();
    let mut data = vec![c(0.0, 0.0); d * d];
    for j in 0..d {
        let mut e = vec![c(0.0, 0.0); d];
        e[j] = c(1.0, 0.0);
        let mut st = QuantumState::from_amplitudes(layout.clone(), e)?;
        st.run(circ, &mut QueryCounter::new())?;
        for (i, z) in st.amplitudes().iter().enumerate() {
            data[i * d + j] = *z;
        }
    }
    Operator::matrix(d, data)
}

fn real_amplitudes(o_d: &DistributionOracle) -> Result<Vec<f64>> {
    if o_d.a() != 0 {
        return Err(Error::Unsupported(format!("HighAmp needs a = 0, oracle has a = {}", o_d.a())));
    }
    let amps = o_d.amplitudes()?;
    if amps.iter().any(|z| z.im.abs() > 1e-12) {
        return Err(Error::InvalidInput("HighAmp needs real branch amplitudes".into()));
    }
    Ok(amps.iter().map(|z| z.re).collect())
}

/// Family on `[R21, R22]`: `A_x` prepares `½[|0⟩(|x⟩ + O_D|0⟩) ± |1⟩(|x⟩ − O_D|0⟩)]`
/// with one controlled call to `O_D`; `negate` swaps the two halves of `R21`.
pub fn highamp_family(o_d: &DistributionOracle, negate: bool) -> Result<IndexedAlgorithmFamily> {
    let r = o_d.log_m();
    let (layout, ids) = RegisterLayout::from_pairs(&[("R21", 1), ("R22", r)])?;
    let (r21, r22) = (ids[0], ids[1]);
    let mut first = Vec::with_capacity(o_d.m());
    for x in 0..o_d.m() {
        let mut circ = Circuit::new();
        circ.push(Gate::new(&[r21], Operator::hadamard()));
        circ.push(Gate::new(&[r22], Operator::xor_constant(r, x)?).with_control(Control::value(r21, 0)));
        first.push(circuit_operator(&layout, &circ)?);
    }
    let mut last = Circuit::new();
    last.push(Gate::new(&[r21], Operator::hadamard()));
    if negate {
        last.push(Gate::new(&[r21], Operator::pauli_x()));
    }
    let last = circuit_operator(&layout, &last)?;
    let mut oracle = Circuit::new();
    oracle.push(Gate::shared(&[r22], o_d.preparer()).with_control(Control::value(r21, 1)));
    let oracle = circuit_operator(&layout, &oracle)?;
    IndexedAlgorithmFamily::new(vec![first, vec![last; o_d.m()]], oracle, o_d.label())
}

/// Qubits of the dense HighAmp pipeline.
pub fn highamp_qubits(o_d: &DistributionOracle, params: &HighDistParams) -> usize {
    let r = o_d.log_m();
    super::pipeline_qubits(r, 0, r + 1, params.l, params.k)
}

/// Stages 0–4 for one sign of the amplitudes.
pub fn highamp_preparer(
    o_d: &DistributionOracle,
    family: &IndexedAlgorithmFamily,
    params: &HighDistParams,
    pl: &PipelineLayout,
) -> Result<Circuit> {
    let w = pl.work[0];
    let ww = pl.layout.width(w);
    let mut prep = pipeline::stage0(pl, params.tau1)?;
    prep.push(o_d.gate(&[pl.r1]));
    let a = family.indexed_circuit(pl.r1, w);
    prep.append(&a);
    for &r4 in &pl.r4 {
        prep.append(&phase_estimation_circuit(&a, r4, params.l, w, ww));
    }
    prep.append(&pipeline::stage3(pl)?);
    prep.append(&pipeline::stage4(pl)?);
    Ok(prep)
}

/// One-sided HighAmp: accepts when some `±α_x ≥ τ + 2ε`, sign chosen by `negate`.
pub fn highamp_signed(
    o_d: &DistributionOracle,
    tau: f64,
    params: &HighDistParams,
    negate: bool,
    config: &EngineConfig,
) -> Result<HighDistResult> {
    let alpha = real_amplitudes(o_d)?;
    if params.m != o_d.m() || params.a != 0 {
        return Err(Error::InvalidParameter("HighAmp parameters do not match the oracle".into()));
    }
    let sign = if negate { -1.0 } else { 1.0 };
    let schedule = schedule_for(success_lower_bound(tau * tau, params.delta), params.delta)?;
    let qubits = highamp_qubits(o_d, params);
    match config.resolve(qubits) {
        Backend::Dense => {
            let r = o_d.log_m();
            let pl = PipelineLayout::new(r, 0, &[("W", r + 1)], params.l, params.k)?;
            let family = highamp_family(o_d, negate)?;
            let prep = highamp_preparer(o_d, &family, params, &pl)?;
            let run = run_dense(&pl, &prep, &schedule, config.dense_cap)?;
            dense_result(run, &pl, *params, &schedule)
        }
        _ => {
            let weights: Vec<f64> = alpha.iter().map(|a| a * a).collect();
            let goods: Vec<f64> = alpha.iter().map(|a| 0.5 * (1.0 + sign * a)).collect();
            let analysis = BranchAnalysis::run(&weights, &goods, params.l, params.tau1, params.k)?;
            let qc = super::pipeline_tally(o_d.label(), 2, params.k, params.l, &schedule);
            Ok(branch_result(&analysis, *params, &schedule, qc, qubits))
        }
    }
}

/// HighAmp on `|α_x|` with the default engine configuration.
pub fn highamp(o_d: &DistributionOracle, tau: f64, eps: f64, delta: f64) -> Result<HighDistResult> {
    let params = highamp_params(o_d.m(), tau, eps, delta / 2.0)?;
    highamp_with(o_d, tau, &params, &EngineConfig::default())
}

/// Runs both signs with `params` (whose `δ` applies to each side) and accepts
/// if either side does: `Pr[accept] = 1 − (1 − p₊)(1 − p₋)`.
pub fn highamp_with(o_d: &DistributionOracle, tau: f64, params: &HighDistParams, config: &EngineConfig) -> Result<HighDistResult> {
    let pos = highamp_signed(o_d, tau, params, false, config)?;
    let neg = highamp_signed(o_d, tau, params, true, config)?;
    let (p1, p2) = (pos.exact_success_probability, neg.exact_success_probability);
    let success = 1.0 - (1.0 - p1) * (1.0 - p2);
    let mut queries = pos.queries.clone();
    queries.merge(&neg.queries);
    let mix = |a: &[f64], b: &[f64], wa: f64, wb: f64| -> Vec<f64> {
        let t = wa + wb;
        a.iter().zip(b).map(|(x, y)| if t > 0.0 { (wa * x + wb * y) / t } else { 0.0 }).collect()
    };
    Ok(HighDistResult {
        decision: success >= 0.5,
        exact_success_probability: success,
        pre_amplification_success: 1.0 - (1.0 - pos.pre_amplification_success) * (1.0 - neg.pre_amplification_success),
        good_index_distribution: mix(&pos.good_index_distribution, &neg.good_index_distribution, p1, p2),
        acceptance_given_index: pos
            .acceptance_given_index
            .iter()
            .zip(&neg.acceptance_given_index)
            .map(|(a, b)| 1.0 - (1.0 - a) * (1.0 - b))
            .collect(),
        queries,
        params: *params,
        schedule_length: pos.schedule_length + neg.schedule_length,
        backend: pos.backend,
        qubits: pos.qubits,
    })
}
