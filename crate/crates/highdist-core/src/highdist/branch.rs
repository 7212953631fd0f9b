//! Branch-factorized evaluation of the pipeline.
//!
//! Every stage acts block-diagonally on the index register, and inside a
//! block the work register never leaves the plane of its good and bad
//! components. Each block therefore reduces to one two-dimensional phase
//! estimation shared by all `K` copies.

use alloc::collections::{btree_map, BTreeMap};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::qae::PhaseBranch;
use crate::reversible::{majority_probability, marks};

/// One index block: `Pr[R1 = x]`, the good probability the copies estimate,
/// and the resulting pre-amplification acceptance.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexBranch {
    pub index: usize,
    pub weight: f64,
    pub good: f64,
    /// `|c_s|²` for the two eigenvectors.
    pub eigen_weight: [f64; 2],
    /// Probability that one copy marks, given eigenvector `s`.
    pub mark_mass: [f64; 2],
    /// `Pr[R_f = 1 | R1 = x]`.
    pub accept: f64,
}

#[derive(Clone, Debug)]
pub struct BranchAnalysis {
    pub l: usize,
    pub tau1: usize,
    pub copies: usize,
    pub branches: Vec<IndexBranch>,
    pub phases: BTreeMap<u64, PhaseBranch>,
}

impl BranchAnalysis {
    /// Evaluates stages 0–4 for index weights `w_x` and good probabilities `g_x`.
    pub fn run(weights: &[f64], goods: &[f64], l: usize, tau1: usize, copies: usize) -> Result<Self> {
        if weights.len() != goods.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), found: goods.len() });
        }
        if copies == 0 {
            return Err(Error::InvalidParameter("at least one copy is needed".into()));
        }
        let mut phases: BTreeMap<u64, PhaseBranch> = BTreeMap::new();
        let mut branches = Vec::with_capacity(weights.len());
        for (x, (&w, &g)) in weights.iter().zip(goods).enumerate() {
            let g = g.clamp(0.0, 1.0);
            if let btree_map::Entry::Vacant(e) = phases.entry(g.to_bits()) {
                e.insert(PhaseBranch::simulate(g, l)?);
            }
            let pb = &phases[&g.to_bits()];
            let eigen_weight = [pb.weight(0), pb.weight(1)];
            let mark_mass = [0, 1].map(|s| pb.conditional_mass(s, |a| marks(a, tau1, l)));
            let accept = (0..2).map(|s| eigen_weight[s] * majority_probability(mark_mass[s], copies)).sum::<f64>();
            branches.push(IndexBranch { index: x, weight: w, good: g, eigen_weight, mark_mass, accept: accept.clamp(0.0, 1.0) });
        }
        Ok(BranchAnalysis { l, tau1, copies, branches, phases })
    }

    /// `Σ_x w_x·Pr[R_f = 1 | x]`.
    pub fn acceptance(&self) -> f64 {
        self.branches.iter().map(|b| b.weight * b.accept).sum::<f64>().clamp(0.0, 1.0)
    }

    /// Distribution of `R1` given `R_f = 1`.
    pub fn good_index_distribution(&self) -> Vec<f64> {
        let total = self.acceptance();
        if total <= 0.0 {
            return vec![0.0; self.branches.len()];
        }
        self.branches.iter().map(|b| b.weight * b.accept / total).collect()
    }

    pub fn phase(&self, good: f64) -> &PhaseBranch {
        &self.phases[&good.clamp(0.0, 1.0).to_bits()]
    }
}
