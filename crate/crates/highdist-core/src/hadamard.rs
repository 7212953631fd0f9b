//! Hadamard test: one control qubit turns `Re⟨ψ|φ⟩` into an outcome probability.

use alloc::format;
use alloc::rc::Rc;
use alloc::vec;
#[cfg(test)]
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::qae::{amp_est_sans_measurement, decode, GroverIterate};
use crate::reversible::majority_probability;
use crate::state::{Circuit, Control, Gate, Operator, OracleLabel, QuantumState, QueryCounter, RegId, RegisterLayout};

/// A state preparer counted under its own label.
#[derive(Clone, Debug)]
pub struct Preparer {
    pub op: Rc<Operator>,
    pub label: OracleLabel,
}

impl Preparer {
    pub fn new(op: Operator, label: &str) -> Self {
        Preparer { op: Rc::new(op), label: label.into() }
    }

    pub fn width(&self) -> usize {
        self.op.width()
    }
}

fn check_widths(a_psi: &Preparer, a_phi: &Preparer) -> Result<usize> {
    if a_psi.width() != a_phi.width() {
        return Err(Error::DimensionMismatch { expected: a_psi.op.dim(), found: a_phi.op.dim() });
    }
    if a_psi.width() == 0 {
        return Err(Error::InvalidInput("preparers act on no qubits".into()));
    }
    Ok(a_psi.width())
}

/// `H(R1)`, `A_ψ` if `R1 = 0`, `A_φ` if `R1 = 1`, `H(R1)`.
pub fn hadamard_test_circuit(a_psi: &Preparer, a_phi: &Preparer, r1: RegId, r2: RegId) -> Circuit {
    let h = Rc::new(Operator::hadamard());
    let mut circ = Circuit::new();
    circ.push(Gate::shared(&[r1], h.clone()));
    circ.push(Gate::shared(&[r2], a_psi.op.clone()).with_control(Control::value(r1, 0)).counted_as(&a_psi.label));
    circ.push(Gate::shared(&[r2], a_phi.op.clone()).with_control(Control::value(r1, 1)).counted_as(&a_phi.label));
    circ.push(Gate::shared(&[r1], h));
    circ
}

/// `½[|0⟩(|ψ⟩+|φ⟩) + |1⟩(|ψ⟩−|φ⟩)]` on `[R1 (1), R2 (w)]`.
pub fn hadamard_overlap_state(a_psi: &Preparer, a_phi: &Preparer) -> Result<QuantumState> {
    let w = check_widths(a_psi, a_phi)?;
    let (layout, ids) = RegisterLayout::from_pairs(&[("R1", 1), ("R2", w)])?;
    let mut st = QuantumState::zero(layout)?;
    st.run(&hadamard_test_circuit(a_psi, a_phi, ids[0], ids[1]), &mut QueryCounter::new())?;
    Ok(st)
}

/// `Re⟨ψ|φ⟩ = 2·Pr[R1 = 0] − 1`, read from the statevector.
pub fn exact_real_overlap(a_psi: &Preparer, a_phi: &Preparer) -> Result<f64> {
    let st = hadamard_overlap_state(a_psi, a_phi)?;
    Ok(2.0 * st.probability_of(RegId(0), 0)? - 1.0)
}

#[derive(Clone, Debug)]
pub struct OverlapEstimate {
    /// Decoded from the most likely estimation outcome.
    pub estimate: f64,
    pub exact: f64,
    /// Precision qubits `l = ⌈log₂(1/ε)⌉ + 4`.
    pub precision: usize,
    /// Probability that one run decodes to within `ε` of `exact`.
    pub run_success: f64,
    /// Odd number of runs whose median is reported.
    pub repetitions: usize,
    /// Probability that the median is within `ε`.
    pub success_probability: f64,
    pub queries: QueryCounter,
}

/// Estimates `Re⟨ψ|φ⟩` to within `ε` by amplitude estimation of `Pr[R1 = 0]` to `ε/2`.
pub fn estimate_overlap(a_psi: &Preparer, a_phi: &Preparer, eps: f64, delta: f64) -> Result<OverlapEstimate> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("accuracy {eps} outside (0,1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("error {delta} outside (0,1)")));
    }
    let w = check_widths(a_psi, a_phi)?;
    let l = (1.0 / eps).log2().ceil() as usize + 4;
    let (layout, ids) = RegisterLayout::from_pairs(&[("P", l), ("R1", 1), ("R2", w)])?;
    let (p, r1, r2) = (ids[0], ids[1], ids[2]);
    let b = hadamard_test_circuit(a_psi, a_phi, r1, r2);
    let it = GroverIterate::with_good_values(&layout, b.clone(), vec![r1, r2], r1, &[0])?;
    let mut st = QuantumState::zero(layout)?;
    let mut run_queries = QueryCounter::new();
    st.run(&b, &mut run_queries)?;
    amp_est_sans_measurement(&it, &mut st, p, &mut run_queries)?;
    let exact = exact_real_overlap(a_psi, a_phi)?;
    let dist = st.marginal(p)?;
    let decoded = |a: usize| 2.0 * decode(a, l) - 1.0;
    let best = (0..dist.len()).fold(0, |b, a| if dist[a] > dist[b] { a } else { b });
    let run_success: f64 = (0..dist.len()).filter(|&a| (decoded(a) - exact).abs() <= eps).map(|a| dist[a]).sum();
    let mut repetitions = 1;
    while majority_probability(run_success, repetitions) < 1.0 - delta && repetitions < 1001 {
        repetitions += 2;
    }
    let mut queries = QueryCounter::new();
    queries.merge_scaled(&run_queries, repetitions as u64);
    Ok(OverlapEstimate {
        estimate: decoded(best),
        exact,
        precision: l,
        run_success,
        repetitions,
        success_probability: majority_probability(run_success, repetitions),
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{c, C64};
    use proptest::prelude::*;

    fn prep(v: &[C64], label: &str) -> Preparer {
        Preparer::new(Operator::state_preparation(v).unwrap(), label)
    }

    fn plus_pair() -> (Preparer, Preparer) {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        (prep(&[c(1.0, 0.0), c(0.0, 0.0)], "psi"), prep(&[c(h, 0.0), c(h, 0.0)], "phi"))
    }

    #[test]
    fn overlap_state_examples() {
        let (psi, phi) = plus_pair();
        let st = hadamard_overlap_state(&psi, &psi).unwrap();
        assert!((st.probability_of(RegId(0), 0).unwrap() - 1.0).abs() < 1e-12);
        let one = prep(&[c(0.0, 0.0), c(1.0, 0.0)], "one");
        let st = hadamard_overlap_state(&psi, &one).unwrap();
        assert!((st.probability_of(RegId(0), 0).unwrap() - 0.5).abs() < 1e-12);
        let st = hadamard_overlap_state(&psi, &phi).unwrap();
        let want = 0.5 * (1.0 + core::f64::consts::FRAC_1_SQRT_2);
        assert!((st.probability_of(RegId(0), 0).unwrap() - want).abs() < 1e-12);
        let wide = Preparer::new(Operator::fourier(2).unwrap(), "w");
        assert!(hadamard_overlap_state(&psi, &wide).is_err());
    }

    #[test]
    fn estimator_examples() {
        let (psi, phi) = plus_pair();
        let same = estimate_overlap(&psi, &psi, 0.25, 0.2).unwrap();
        assert!((same.estimate - 1.0).abs() <= 0.25);
        let e = estimate_overlap(&psi, &phi, 1.0 / 16.0, 0.2).unwrap();
        assert!((e.estimate - core::f64::consts::FRAC_1_SQRT_2).abs() <= 1.0 / 16.0);
        assert!(e.run_success >= crate::reversible::QAE_SUCCESS);
        assert!(e.success_probability >= 0.8);
        let coarse = estimate_overlap(&psi, &phi, 1.0 / 8.0, 0.2).unwrap();
        assert_eq!(coarse.repetitions, e.repetitions);
        let ratio = e.queries.total("psi") as f64 / coarse.queries.total("psi") as f64;
        assert!((ratio - 2.0).abs() < 0.2);
        assert!(estimate_overlap(&psi, &phi, 0.0, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn probability_identity(v in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let mk = |xs: &[f64]| -> Option<Vec<C64>> {
                let z: Vec<C64> = xs.chunks(2).map(|p| c(p[0], p[1])).collect();
                let n: f64 = z.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
                if n < 1e-3 { None } else { Some(z.iter().map(|q| q / n).collect()) }
            };
            let (Some(a), Some(b)) = (mk(&v[..8]), mk(&v[8..])) else { return Ok(()); };
            let ov: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
            let st = hadamard_overlap_state(&prep(&a, "a"), &prep(&b, "b")).unwrap();
            prop_assert!((st.probability_of(RegId(0), 0).unwrap() - 0.5 * (1.0 + ov.re)).abs() < 1e-12);
        }
    }
}
