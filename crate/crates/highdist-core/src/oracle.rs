//! Oracles consumed by the engines: array lookups, distribution preparers
//! and the Deutsch–Jozsa amplitude oracle of a Boolean function.

use alloc::format;
use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::state::{c, log2_exact, Gate, Operator, OracleLabel, QuantumState, QueryCounter, RegId, C64};

/// `O_S|v⟩|i⟩ = |v ⊕ A_i⟩|i⟩` over an `n`-entry array with values in `[0, m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrayOracle {
    values: Vec<usize>,
    m: usize,
}

impl ArrayOracle {
    pub fn new(values: Vec<usize>, m: usize) -> Result<Self> {
        if values.len() < 2 || !values.len().is_power_of_two() {
            return Err(Error::InvalidInput(format!("array length {} is not a power of two ≥ 2", values.len())));
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidInput(format!("universe size {m} is not a power of two ≥ 2")));
        }
        if let Some(v) = values.iter().find(|&&v| v >= m) {
            return Err(Error::InvalidInput(format!("value {v} outside [0, {m})")));
        }
        Ok(ArrayOracle { values, m })
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The lookup as a permutation on `(value, index)` registers.
    pub fn lookup_operator(&self) -> Operator {
        let ln = log2_exact(self.n()).expect("checked");
        let map = (0..self.m * self.n())
            .map(|k| {
                let (v, i) = (k >> ln, k & (self.n() - 1));
                ((v ^ self.values[i]) << ln) | i
            })
            .collect();
        Operator::Permutation(map)
    }
}

/// Truth table of `f: {0,1}^n → {0,1}`; bit `j` of the input index is variable `x_{j+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanFunctionOracle {
    n: usize,
    table: Vec<bool>,
}

impl BooleanFunctionOracle {
    pub fn new(table: Vec<bool>) -> Result<Self> {
        let n = log2_exact(table.len())
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::InvalidInput(format!("truth table length {} is not 2^n, n ≥ 1", table.len())))?;
        Ok(BooleanFunctionOracle { n, table })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        Self::new((0..1usize << n).map(f).collect())
    }

    /// `x₁ ∧ x₂`.
    pub fn and2() -> Self {
        Self::from_fn(2, |x| x == 3).expect("valid")
    }

    /// `x₁ ⊕ x₂`.
    pub fn xor2() -> Self {
        Self::from_fn(2, |x| (x.count_ones() & 1) == 1).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval(&self, x: usize) -> bool {
        self.table[x]
    }

    /// `¬f`; its Walsh spectrum is the negation of `f`'s.
    pub fn complement(&self) -> Self {
        BooleanFunctionOracle { n: self.n, table: self.table.iter().map(|b| !b).collect() }
    }
}

#[derive(Clone, Debug)]
enum Source {
    Explicit(Vec<f64>),
    Array(ArrayOracle),
    Walsh(BooleanFunctionOracle),
}

/// `O_D|0⟩ = Σ_x α_x |x⟩|ξ_x⟩` on `log m + a` qubits, distribution register first.
///
/// Every application is charged as one query under [`DistributionOracle::label`].
#[derive(Clone, Debug)]
pub struct DistributionOracle {
    m: usize,
    a: usize,
    label: OracleLabel,
    source: Source,
    state: Vec<C64>,
    preparer: OnceCell<Rc<Operator>>,
}

impl DistributionOracle {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn log_m(&self) -> usize {
        log2_exact(self.m).expect("checked")
    }

    /// Total width `r = log m + a`.
    pub fn width(&self) -> usize {
        self.log_m() + self.a
    }

    /// Name of the underlying oracle charged per call.
    pub fn label(&self) -> &OracleLabel {
        &self.label
    }

    /// `O_D|0⟩`, indexed by `x · 2^a + ξ`.
    pub fn prepared_state(&self) -> &[C64] {
        &self.state
    }

    /// `p_x = ‖ξ-block of x‖²`.
    pub fn probabilities(&self) -> Vec<f64> {
        let s = 1usize << self.a;
        (0..self.m).map(|x| self.state[x * s..(x + 1) * s].iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    /// Branch amplitudes `α_x`; only defined for `a = 0`.
    pub fn amplitudes(&self) -> Result<Vec<C64>> {
        if self.a != 0 {
            return Err(Error::Unsupported("branch amplitudes need a = 0".into()));
        }
        Ok(self.state.clone())
    }

    /// The preparer as a dense unitary (built on first use).
    pub fn preparer(&self) -> Rc<Operator> {
        self.preparer.get_or_init(|| Rc::new(self.build_preparer())).clone()
    }

    /// Counted gate applying `O_D` to `targets` (distribution register, then ancilla).
    pub fn gate(&self, targets: &[RegId]) -> Gate {
        Gate::shared(targets, self.preparer()).counted_as(&self.label)
    }

    /// Applies `O_D` once to `targets` of `state`.
    pub fn apply(&self, state: &mut QuantumState, targets: &[RegId], counter: &mut QueryCounter) -> Result<()> {
        state.apply(&self.gate(targets), counter)
    }

    fn build_preparer(&self) -> Operator {
        match &self.source {
            Source::Explicit(p) => {
                let lm = self.log_m();
                let tree = rotation_tree(p, lm);
                let (dm, da) = (self.m, 1usize << self.a);
                let d = dm * da;
                let mut data = vec![c(0.0, 0.0); d * d];
                for r in 0..dm {
                    for col in 0..dm {
                        for e in 0..da {
                            data[(r * da + e) * d + col * da + e] = tree[r * dm + col];
                        }
                    }
                }
                Operator::matrix(d, data).expect("rotation tree is unitary")
            }
            Source::Array(arr) => {
                let n = arr.n();
                let d = arr.m() * n;
                let ln = log2_exact(n).expect("checked");
                let h = 1.0 / (n as f64).sqrt();
                let mut data = vec![c(0.0, 0.0); d * d];
                for v in 0..arr.m() {
                    for i in 0..n {
                        for i2 in 0..n {
                            let sign = if (i & i2).count_ones() & 1 == 1 { -h } else { h };
                            let row = ((v ^ arr.values()[i2]) << ln) | i2;
                            data[row * d + ((v << ln) | i)] = c(sign, 0.0);
                        }
                    }
                }
                Operator::matrix(d, data).expect("lifted lookup is unitary")
            }
            Source::Walsh(f) => {
                let d = 1usize << f.n();
                let scale = 1.0 / d as f64;
                let mut data = vec![c(0.0, 0.0); d * d];
                for x in 0..d {
                    for x2 in 0..d {
                        let mut acc = 0.0;
                        for y in 0..d {
                            let e = (x & y).count_ones() + (y & x2).count_ones() + f.eval(y) as u32;
                            acc += if e & 1 == 1 { -1.0 } else { 1.0 };
                        }
                        data[x * d + x2] = c(acc * scale, 0.0);
                    }
                }
                Operator::matrix(d, data).expect("Deutsch–Jozsa circuit is unitary")
            }
        }
    }
}

/// Row-major unitary whose first column is `Σ √p_x |x⟩`, built from a tree of
/// multiplexed `R_y` rotations (most significant qubit first).
fn rotation_tree(p: &[f64], bits: usize) -> Vec<C64> {
    let d = 1usize << bits;
    let mut u = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        u[i * d + i] = c(1.0, 0.0);
    }
    for level in 0..bits {
        let span = d >> level;
        let half = span / 2;
        let mut g = vec![c(0.0, 0.0); d * d];
        for block in 0..(1usize << level) {
            let lo: f64 = p[block * span..block * span + half].iter().sum();
            let hi: f64 = p[block * span + half..(block + 1) * span].iter().sum();
            let tot = lo + hi;
            let theta = if tot > 0.0 { 2.0 * (hi / tot).sqrt().min(1.0).asin() } else { 0.0 };
            let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
            for off in 0..half {
                let i0 = block * span + off;
                let i1 = i0 + half;
                g[i0 * d + i0] = c(co, 0.0);
                g[i0 * d + i1] = c(-s, 0.0);
                g[i1 * d + i0] = c(s, 0.0);
                g[i1 * d + i1] = c(co, 0.0);
            }
        }
        let mut next = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let gik = g[i * d + k];
                if gik.re == 0.0 && gik.im == 0.0 {
                    continue;
                }
                for j in 0..d {
                    next[i * d + j] += gik * u[k * d + j];
                }
            }
        }
        u = next;
    }
    u
}

/// Synthetic oracle preparing `Σ √p_x |x⟩|0^a⟩`.
pub fn explicit_distribution_oracle(p: &[f64], a: usize) -> Result<DistributionOracle> {
    let m = p.len();
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidInput(format!("distribution length {m} is not a power of two ≥ 2")));
    }
    if p.iter().any(|&x| x.is_nan() || x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidInput("negative or non-finite probability".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("probabilities sum to {sum}")));
    }
    let s = 1usize << a;
    let mut state = vec![c(0.0, 0.0); m * s];
    for (x, &px) in p.iter().enumerate() {
        state[x * s] = c(px.sqrt(), 0.0);
    }
    Ok(DistributionOracle { m, a, label: "O_D".into(), source: Source::Explicit(p.to_vec()), state, preparer: OnceCell::new() })
}

/// Lifts `O_S` to `O_D = O_S · (I ⊗ H^{⊗ log n})`; `p_v = freq(v)/n`, ancilla = index register.
pub fn os_to_od(array: &ArrayOracle) -> DistributionOracle {
    let n = array.n();
    let a = log2_exact(n).expect("checked");
    let h = 1.0 / (n as f64).sqrt();
    let mut state = vec![c(0.0, 0.0); array.m() * n];
    for (i, &v) in array.values().iter().enumerate() {
        state[(v << a) | i] = c(h, 0.0);
    }
    DistributionOracle { m: array.m(), a, label: "O_S".into(), source: Source::Array(array.clone()), state, preparer: OnceCell::new() }
}

/// `H^{⊗n} U_f H^{⊗n}|0⟩ = Σ_x f̂(x)|x⟩`; one call is one query to `f`.
pub fn deutsch_jozsa_oracle(f: &BooleanFunctionOracle) -> DistributionOracle {
    let state = crate::classical::walsh_spectrum(f).into_iter().map(|w| c(w, 0.0)).collect();
    DistributionOracle { m: f.table().len(), a: 0, label: "f".into(), source: Source::Walsh(f.clone()), state, preparer: OnceCell::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::RegisterLayout;

    fn run_preparer(o: &DistributionOracle) -> QuantumState {
        let (l, ids) = RegisterLayout::from_pairs(&[("x", o.width())]).unwrap();
        let mut s = QuantumState::zero(l).unwrap();
        o.apply(&mut s, &ids, &mut QueryCounter::new()).unwrap();
        s
    }

    fn branch_probs(o: &DistributionOracle) -> Vec<f64> {
        let s = run_preparer(o);
        let blk = 1usize << o.a();
        let m = s.marginal(RegId(0)).unwrap();
        (0..o.m()).map(|x| m[x * blk..(x + 1) * blk].iter().sum()).collect()
    }

    #[test]
    fn lifted_array_probabilities() {
        let o = os_to_od(&ArrayOracle::new(vec![0, 0, 1, 1], 2).unwrap());
        let p = branch_probs(&o);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        let o = os_to_od(&ArrayOracle::new(vec![2, 2, 2, 5], 8).unwrap());
        let p = branch_probs(&o);
        assert!((p[2] - 0.75).abs() < 1e-12 && (p[5] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn explicit_preparer_matches_target() {
        let o = explicit_distribution_oracle(&[0.5, 0.25, 0.125, 0.125], 1).unwrap();
        let p = branch_probs(&o);
        for (a, b) in p.iter().zip([0.5, 0.25, 0.125, 0.125]) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = run_preparer(&o);
        for (z, w) in s.amplitudes().iter().zip(o.prepared_state()) {
            assert!((z - w).norm() < 1e-12);
        }
    }

    #[test]
    fn point_mass_prepares_zero() {
        let o = explicit_distribution_oracle(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        let s = run_preparer(&o);
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(explicit_distribution_oracle(&[0.5, 0.25, 0.25], 0).is_err());
        assert!(explicit_distribution_oracle(&[0.5, 0.6], 0).is_err());
        assert!(ArrayOracle::new(vec![0, 1, 2], 4).is_err());
        assert!(ArrayOracle::new(vec![0, 1, 2, 4], 4).is_err());
        assert!(ArrayOracle::new(vec![0, 1], 3).is_err());
    }

    #[test]
    fn dj_examples() {
        let zero = BooleanFunctionOracle::from_fn(2, |_| false).unwrap();
        let s = run_preparer(&deutsch_jozsa_oracle(&zero));
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
        let s = run_preparer(&deutsch_jozsa_oracle(&BooleanFunctionOracle::xor2()));
        assert!((s.amplitudes()[3].norm() - 1.0).abs() < 1e-12);
        let o = deutsch_jozsa_oracle(&BooleanFunctionOracle::and2());
        let s = run_preparer(&o);
        for z in s.amplitudes() {
            assert!((z.norm() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn lifted_calls_charge_the_array() {
        let o = os_to_od(&ArrayOracle::new(vec![1, 3, 3, 0], 4).unwrap());
        let (l, ids) = RegisterLayout::from_pairs(&[("v", 2), ("i", 2)]).unwrap();
        let mut s = QuantumState::zero(l).unwrap();
        let mut qc = QueryCounter::new();
        for _ in 0..5 {
            o.apply(&mut s, &ids, &mut qc).unwrap();
        }
        assert_eq!(qc.total("O_S"), 5);
    }
}
