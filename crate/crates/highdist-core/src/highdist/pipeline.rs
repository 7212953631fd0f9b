//! Register layout and stage circuits of the threshold pipeline.
//!
//! Stage 0 writes `τ₁` into `R3`. Stage 1 prepares the index and work
//! registers. Stage 2 estimates the per-index good probability into each
//! precision register `R4_k`. Stage 3 marks `R5_k` when the estimate clears
//! `τ₁` and uncomputes the distance registers. Stage 4 writes the majority of
//! the marks into `R_f`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::reversible::ReversibleGate;
use crate::state::{Circuit, Gate, Operator, RegId, RegisterLayout};

/// Named registers of one pipeline instance.
#[derive(Clone, Debug)]
pub struct PipelineLayout {
    pub layout: RegisterLayout,
    pub r1: RegId,
    pub r1x: Option<RegId>,
    /// Work registers the estimation acts on (`R2`, `R2x` for HighDist; `W` for HighAmp).
    pub work: Vec<RegId>,
    pub r3: RegId,
    pub r4: Vec<RegId>,
    pub r5: Vec<RegId>,
    pub rf: RegId,
    pub h3: RegId,
    pub h4: RegId,
}

impl PipelineLayout {
    /// `work` lists `(name, width)` of the work registers.
    pub fn new(index_width: usize, index_ancilla: usize, work: &[(&str, usize)], l: usize, k: usize) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::InvalidParameter(format!("pipeline with l = {l}, K = {k}")));
        }
        let mut layout = RegisterLayout::new();
        let r1 = layout.push("R1", index_width)?;
        let r1x = if index_ancilla > 0 { Some(layout.push("R1x", index_ancilla)?) } else { None };
        let work = work.iter().filter(|(_, w)| *w > 0).map(|(n, w)| layout.push(n, *w)).collect::<Result<Vec<_>>>()?;
        let r3 = layout.push("R3", l)?;
        let mut r4 = Vec::new();
        let mut r5 = Vec::new();
        for i in 1..=k {
            r4.push(layout.push(&format!("R4_{i}"), l)?);
            r5.push(layout.push(&format!("R5_{i}"), 1)?);
        }
        let rf = layout.push("Rf", 1)?;
        let h3 = layout.push("H3", l)?;
        let h4 = layout.push("H4", l)?;
        Ok(PipelineLayout { layout, r1, r1x, work, r3, r4, r5, rf, h3, h4 })
    }

    pub fn qubits(&self) -> usize {
        self.layout.total_width()
    }

    pub fn copies(&self) -> usize {
        self.r4.len()
    }
}

/// Qubit total of a pipeline: `index + ancilla + work + l + K(l+1) + 1 + 2l`.
pub fn pipeline_qubits(index_width: usize, index_ancilla: usize, work_width: usize, l: usize, k: usize) -> usize {
    index_width + index_ancilla + work_width + l + k * (l + 1) + 1 + 2 * l
}

pub fn stage0(pl: &PipelineLayout, tau1: usize) -> Result<Circuit> {
    let l = pl.layout.width(pl.r3);
    let mut c = Circuit::new();
    c.push(Gate::new(&[pl.r3], Operator::xor_constant(l, tau1)?));
    Ok(c)
}

pub fn stage3(pl: &PipelineLayout) -> Result<Circuit> {
    let l = pl.layout.width(pl.r3);
    let hd = ReversibleGate::hd(l)?.op;
    let cmp = ReversibleGate::cmp(l)?.op;
    let mut c = Circuit::new();
    c.push(Gate::new(&[pl.r3, pl.h3], hd.clone()));
    for (&r4, &r5) in pl.r4.iter().zip(&pl.r5) {
        c.push(Gate::new(&[r4, pl.h4], hd.clone()));
        c.push(Gate::new(&[pl.r3, r4, r5], cmp.clone()));
        c.push(Gate::new(&[r4, pl.h4], hd.clone()).dagger());
    }
    c.push(Gate::new(&[pl.r3, pl.h3], hd).dagger());
    Ok(c)
}

pub fn stage4(pl: &PipelineLayout) -> Result<Circuit> {
    let maj = ReversibleGate::maj(pl.copies())?.op;
    let mut targets = pl.r5.clone();
    targets.push(pl.rf);
    let mut c = Circuit::new();
    c.push(Gate::new(&targets, maj));
    Ok(c)
}
