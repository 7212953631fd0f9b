//! Simultaneous amplitude estimation over an indexed family `{A_y}` sharing one oracle.

use alloc::format;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::state::{c, Circuit, Control, Gate, Operator, OracleLabel, QuantumState, QueryCounter, RegId, RegisterLayout, Tally};

/// `A_y = U_{(k,y)} O U_{(k−1,y)} ⋯ U_{(1,y)} O U_{(0,y)}` on a `w`-qubit work register.
///
/// The good state of every member is "top work qubit is `|0⟩`", so the
/// estimated quantity is `|β_{0y}|²`.
#[derive(Clone, Debug)]
pub struct IndexedAlgorithmFamily {
    layers: Vec<Vec<Rc<Operator>>>,
    oracle: Rc<Operator>,
    label: OracleLabel,
    work_width: usize,
}

impl IndexedAlgorithmFamily {
    /// `layers[j][y]` is `U_{(j,y)}`; there are `k + 1` layers and `N` members.
    pub fn new(layers: Vec<Vec<Operator>>, oracle: Operator, label: &str) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("family needs at least one layer".into()));
        }
        let n = layers[0].len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!("index count {n} is not a power of two")));
        }
        let w = oracle.width();
        if w == 0 {
            return Err(Error::InvalidInput("oracle acts on no qubits".into()));
        }
        for (j, layer) in layers.iter().enumerate() {
            if layer.len() != n {
                return Err(Error::InvalidInput(format!("layer {j} has {} members, expected {n}", layer.len())));
            }
            if let Some(u) = layer.iter().find(|u| u.width() != w) {
                return Err(Error::DimensionMismatch { expected: 1 << w, found: u.dim() });
            }
        }
        Ok(IndexedAlgorithmFamily {
            layers: layers.into_iter().map(|l| l.into_iter().map(Rc::new).collect()).collect(),
            oracle: Rc::new(oracle),
            label: label.into(),
            work_width: w,
        })
    }

    /// `N`.
    pub fn len(&self) -> usize {
        self.layers[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Oracle calls per member, `k`.
    pub fn calls(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn work_width(&self) -> usize {
        self.work_width
    }

    /// Width of the index register (at least one qubit).
    pub fn index_width(&self) -> usize {
        (self.len().trailing_zeros() as usize).max(1)
    }

    pub fn label(&self) -> &OracleLabel {
        &self.label
    }

    fn oracle_gate(&self, work: RegId) -> Gate {
        Gate::shared(&[work], self.oracle.clone()).counted_as(&self.label)
    }

    /// `A_y` alone on `work`.
    pub fn member_circuit(&self, y: usize, work: RegId) -> Circuit {
        let mut circ = Circuit::new();
        for (j, layer) in self.layers.iter().enumerate() {
            if j > 0 {
                circ.push(self.oracle_gate(work));
            }
            circ.push(Gate::shared(&[work], layer[y].clone()));
        }
        circ
    }

    /// `Σ_y |y⟩⟨y| ⊗ A_y`: each layer is `N` index-controlled gates, the oracle is shared.
    pub fn indexed_circuit(&self, index: RegId, work: RegId) -> Circuit {
        let mut circ = Circuit::new();
        for (j, layer) in self.layers.iter().enumerate() {
            if j > 0 {
                circ.push(self.oracle_gate(work));
            }
            for (y, u) in layer.iter().enumerate() {
                circ.push(Gate::shared(&[work], u.clone()).with_control(Control::value(index, y)));
            }
        }
        circ
    }

    /// `|β_{0y}|²`, the good probability of member `y`, from a one-off simulation.
    pub fn good_probability(&self, y: usize) -> Result<f64> {
        let (layout, ids) = RegisterLayout::from_pairs(&[("W", self.work_width)])?;
        let mut st = QuantumState::zero(layout)?;
        st.run(&self.member_circuit(y, ids[0]), &mut QueryCounter::new())?;
        st.probability_where(&[Control::bit(ids[0], self.work_width - 1, false)])
    }
}

/// `S_χ`, `A†`, `S_0`, `A`, `−1` for a given `A` circuit; good means top work qubit `|0⟩`.
pub fn family_grover(a: &Circuit, work: RegId, w: usize) -> Circuit {
    let mut chi = vec![c(1.0, 0.0); 1 << w];
    for (v, z) in chi.iter_mut().enumerate() {
        if v >> (w - 1) == 0 {
            *z = c(-1.0, 0.0);
        }
    }
    let mut g = Circuit::new();
    g.push(Gate::new(&[work], Operator::Diagonal(chi)));
    g.append(&a.inverse());
    g.push(Gate::new(&[work], Operator::zero_phase(w, PI)));
    g.append(a);
    g.push(Gate::new(&[], Operator::global_phase(PI)));
    g
}

/// `F`, bit `i` of `precision` controlling `G^{2^i}`, `F†`.
pub fn phase_estimation_circuit(a: &Circuit, precision: RegId, m: usize, work: RegId, w: usize) -> Circuit {
    let f = Rc::new(Operator::Fourier { width: m });
    let mut out = Circuit::new();
    out.push(Gate::shared(&[precision], f.clone()));
    let g = family_grover(a, work, w);
    for i in 0..m {
        let cg = g.controlled(Control::bit(precision, i, true));
        for _ in 0..1usize << i {
            out.append(&cg);
        }
    }
    out.push(Gate::shared(&[precision], f).dagger());
    out
}

fn phase_estimate(
    a: &Circuit,
    state: &mut QuantumState,
    precision: RegId,
    work: RegId,
    w: usize,
    counter: &mut QueryCounter,
) -> Result<()> {
    let m = state.layout().width(precision);
    state.run(&phase_estimation_circuit(a, precision, m, work, w), counter)
}

/// Output of a simultaneous or serial estimation run, laid out as `[Y, P, W]`.
#[derive(Clone, Debug)]
pub struct SimulOutcome {
    pub state: QuantumState,
    pub queries: QueryCounter,
}

impl SimulOutcome {
    pub fn index(&self) -> RegId {
        RegId(0)
    }

    pub fn precision(&self) -> RegId {
        RegId(1)
    }

    pub fn work(&self) -> RegId {
        RegId(2)
    }
}

fn layout_for(family: &IndexedAlgorithmFamily, m: usize) -> Result<RegisterLayout> {
    if m == 0 {
        return Err(Error::InvalidParameter("precision width must be at least 1".into()));
    }
    Ok(RegisterLayout::from_pairs(&[("Y", family.index_width()), ("P", m), ("W", family.work_width())])?.0)
}

fn check_initial(family: &IndexedAlgorithmFamily, a_initial: &Operator) -> Result<()> {
    if a_initial.width() != family.index_width() {
        return Err(Error::DimensionMismatch { expected: 1 << family.index_width(), found: a_initial.dim() });
    }
    Ok(())
}

/// `Σ_y α_y |y⟩ ⊗ AmpEst_y`, with every oracle call shared across the index superposition.
///
/// The oracle counter ends at `k` forward and `2k(2^m − 1)` controlled calls, whatever `N` is.
pub fn simul_amp_est(family: &IndexedAlgorithmFamily, a_initial: &Operator, m: usize) -> Result<SimulOutcome> {
    check_initial(family, a_initial)?;
    let layout = layout_for(family, m)?;
    let (y, p, w) = (RegId(0), RegId(1), RegId(2));
    let mut st = QuantumState::zero(layout)?;
    let mut qc = QueryCounter::new();
    st.apply_unitary(&[y], a_initial, &[])?;
    let a = family.indexed_circuit(y, w);
    st.run(&a, &mut qc)?;
    phase_estimate(&a, &mut st, p, w, family.work_width(), &mut qc)?;
    Ok(SimulOutcome { state: st, queries: qc })
}

/// Same output as [`simul_amp_est`], built from `N` independent runs of `AmpEst_y`.
pub fn naive_serial_baseline(family: &IndexedAlgorithmFamily, a_initial: &Operator, m: usize) -> Result<SimulOutcome> {
    check_initial(family, a_initial)?;
    let layout = layout_for(family, m)?;
    let (sub, ids) = RegisterLayout::from_pairs(&[("P", m), ("W", family.work_width())])?;
    let mut alpha = vec![c(0.0, 0.0); 1 << family.index_width()];
    alpha[0] = c(1.0, 0.0);
    let mut scratch = vec![c(0.0, 0.0); alpha.len()];
    a_initial.apply_block(false, &mut alpha, &mut scratch);
    let mut qc = QueryCounter::new();
    let sub_dim = 1usize << sub.total_width();
    let mut amps = vec![c(0.0, 0.0); 1 << layout.total_width()];
    for y in 0..family.len() {
        let mut st = QuantumState::zero(sub.clone())?;
        let a = family.member_circuit(y, ids[1]);
        st.run(&a, &mut qc)?;
        phase_estimate(&a, &mut st, ids[0], ids[1], family.work_width(), &mut qc)?;
        for (i, z) in st.amplitudes().iter().enumerate() {
            amps[y * sub_dim + i] = alpha[y] * z;
        }
    }
    Ok(SimulOutcome { state: QuantumState::from_amplitudes(layout, amps)?, queries: qc })
}

/// Oracle tally of [`simul_amp_est`] as a function of `(k, m)` only.
pub fn simul_query_count(k: usize, m: usize) -> Tally {
    let k = k as u64;
    Tally { forward: k, inverse: 0, controlled: 2 * k * ((1u64 << m) - 1) }
}

/// `Σ_{i=1}^{m} 2k·2^i = 2k(2^{m+1} − 2)`, the controlled-call total when the iterate powers run `2^1 … 2^m`.
pub fn closed_form_controlled_count(k: usize, m: usize) -> u64 {
    2 * k as u64 * ((1u64 << (m + 1)) - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::factorize_by_branch;

    fn rotation(theta: f64) -> Operator {
        Operator::ry(theta)
    }

    fn family(n: usize, k: usize) -> IndexedAlgorithmFamily {
        let layers = (0..=k).map(|j| (0..n).map(|y| rotation(0.3 + 0.7 * y as f64 + 0.2 * j as f64)).collect()).collect();
        IndexedAlgorithmFamily::new(layers, Operator::ry(0.9), "O").unwrap()
    }

    fn uniform(n: usize) -> Operator {
        let w = (n.trailing_zeros() as usize).max(1);
        let mut v = vec![c(0.0, 0.0); 1 << w];
        for z in v.iter_mut().take(n) {
            *z = c(1.0 / (n as f64).sqrt(), 0.0);
        }
        Operator::state_preparation(&v).unwrap()
    }

    #[test]
    fn counts_do_not_depend_on_n() {
        for n in [1, 2, 4, 8] {
            let f = family(n, 1);
            let out = simul_amp_est(&f, &uniform(n), 4).unwrap();
            assert_eq!(out.queries.get("O"), simul_query_count(1, 4));
            let naive = naive_serial_baseline(&f, &uniform(n), 4).unwrap();
            assert_eq!(naive.queries.total("O"), n as u64 * out.queries.total("O"));
        }
        assert_eq!(closed_form_controlled_count(1, 4), 60);
    }

    #[test]
    fn simultaneous_equals_serial() {
        for (n, k, m) in [(2, 1, 3), (4, 2, 4), (8, 1, 3)] {
            let f = family(n, k);
            let a = simul_amp_est(&f, &uniform(n), m).unwrap();
            let b = naive_serial_baseline(&f, &uniform(n), m).unwrap();
            assert!(a.state.fidelity(&b.state).unwrap() >= 1.0 - 1e-10);
            for (x, y) in factorize_by_branch(&a.state, RegId(0)).unwrap().iter().zip(factorize_by_branch(&b.state, RegId(0)).unwrap()) {
                assert_eq!(x.index, y.index);
                assert!(x.sub_state.fidelity(&y.sub_state).unwrap() >= 1.0 - 1e-10);
            }
        }
    }

    #[test]
    fn single_member_matches_plain_estimation() {
        let f = family(1, 1);
        let p = f.good_probability(0).unwrap();
        let out = simul_amp_est(&f, &uniform(1), 5).unwrap();
        let d = out.state.marginal(out.precision()).unwrap();
        assert!(crate::qae::mass_within(&d, p, 5, 0.25) >= crate::reversible::QAE_SUCCESS);
    }

    #[test]
    fn malformed_family_is_rejected() {
        assert!(IndexedAlgorithmFamily::new(vec![vec![rotation(0.1); 3]], Operator::ry(0.1), "O").is_err());
        assert!(IndexedAlgorithmFamily::new(vec![vec![rotation(0.1); 2], vec![rotation(0.1)]], Operator::ry(0.1), "O").is_err());
        let f = family(2, 1);
        assert!(simul_amp_est(&f, &Operator::hadamard(), 0).is_err());
    }
}
