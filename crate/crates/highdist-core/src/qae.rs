//! Amplitude estimation without measurement and amplitude amplification.
//!
//! The Grover iterate is `G = −A S_0 A† S_χ`; its restriction to the plane of
//! the good and bad components of `A|0⟩` is a rotation by `2θ` with
//! `sin²θ = p`. Phase estimation on `G` with an `l`-qubit precision register
//! leaves estimates `a` with `sin²(πa/2^l) ≈ p`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::oracle::DistributionOracle;
use crate::reversible::ReversibleGate;
use crate::state::{c, Circuit, Control, Gate, Operator, QuantumState, QueryCounter, RegId, RegisterLayout, C64};

/// `F_w`, the quantum Fourier transform on `w` qubits.
pub fn qft(width: usize) -> Result<Operator> {
    Operator::fourier(width)
}

/// `sin²(πa/2^l)`.
pub fn decode(a: usize, l: usize) -> f64 {
    let s = (PI * a as f64 / (1u64 << l) as f64).sin();
    s * s
}

/// The estimates `a_{x,+}` and `a_{x,−} = 2^l − a_{x,+}` nearest to the exact eigenphase of `p`.
pub fn good_estimates(p: f64, l: usize) -> [usize; 2] {
    let n = 1usize << l;
    let a = ((n as f64) * p.clamp(0.0, 1.0).sqrt().asin() / PI).round() as usize;
    [a % n, (n - a) % n]
}

/// Total probability of the estimates decoding to within `tol` of `p`.
pub fn mass_within(distribution: &[f64], p: f64, l: usize, tol: f64) -> f64 {
    distribution.iter().enumerate().filter(|(a, _)| (decode(*a, l) - p).abs() <= tol).map(|(_, w)| w).sum()
}

/// A Grover iterate over a set of work registers.
#[derive(Clone, Debug)]
pub struct GroverIterate {
    preparer: Circuit,
    work: Vec<RegId>,
    reflect_good: Circuit,
}

impl GroverIterate {
    /// `preparer` acts on `work`; `reflect_good` implements `S_χ`.
    pub fn new(preparer: Circuit, work: Vec<RegId>, reflect_good: Circuit) -> Self {
        GroverIterate { preparer, work, reflect_good }
    }

    /// Good states are those where `reg` holds one of `values`.
    pub fn with_good_values(layout: &RegisterLayout, preparer: Circuit, work: Vec<RegId>, reg: RegId, values: &[usize]) -> Result<Self> {
        layout.check(reg)?;
        let mut d = vec![c(1.0, 0.0); 1usize << layout.width(reg)];
        for &v in values {
            if v >= d.len() {
                return Err(Error::ValueOutOfRange { value: v, width: layout.width(reg) });
            }
            d[v] = c(-1.0, 0.0);
        }
        let mut chi = Circuit::new();
        chi.push(Gate::new(&[reg], Operator::diagonal(d)?));
        Ok(Self::new(preparer, work, chi))
    }

    /// The iterate used by `EQAmpEst`: `A = O_D` on `regs.sample`, good iff the
    /// leading `log m` qubits of the sample equal the index register.
    pub fn eq(o_d: &DistributionOracle, regs: &EqRegisters) -> Result<Self> {
        let lm = o_d.log_m();
        let work = regs.sample_registers();
        let mut prep = Circuit::new();
        prep.push(o_d.gate(&work));
        let mut chi = Circuit::new();
        let eq = ReversibleGate::eq(lm, lm)?;
        chi.push(Gate::new(&[regs.index, regs.value], eq.op));
        Ok(Self::new(prep, work, chi))
    }

    pub fn preparer(&self) -> &Circuit {
        &self.preparer
    }

    pub fn work(&self) -> &[RegId] {
        &self.work
    }

    /// One application of `G`, in time order `S_χ, A†, S_0, A, −1`.
    pub fn circuit(&self, layout: &RegisterLayout) -> Circuit {
        let width: usize = self.work.iter().map(|&r| layout.width(r)).sum();
        let mut g = Circuit::new();
        g.append(&self.reflect_good);
        g.append(&self.preparer.inverse());
        g.push(Gate::new(&self.work, Operator::zero_phase(width, PI)));
        g.append(&self.preparer);
        g.push(Gate::new(&[], Operator::global_phase(PI)));
        g
    }
}

/// Registers touched by `EQAmpEst`: index `R1` (`log m` qubits), the sampled
/// value `R2` and its optional ancilla `R2x`.
#[derive(Clone, Copy, Debug)]
pub struct EqRegisters {
    pub index: RegId,
    pub value: RegId,
    pub ancilla: Option<RegId>,
}

impl EqRegisters {
    pub fn sample_registers(&self) -> Vec<RegId> {
        let mut v = vec![self.value];
        v.extend(self.ancilla);
        v
    }
}

/// `(F_l⁻¹ ⊗ I)·Λ_l(G)·(F_l ⊗ I)` with bit `i` of the precision register controlling `G^{2^i}`.
pub fn amp_est_circuit(iterate: &GroverIterate, layout: &RegisterLayout, precision: RegId) -> Circuit {
    let g = iterate.circuit(layout);
    let l = layout.width(precision);
    let f = alloc::rc::Rc::new(Operator::Fourier { width: l });
    let mut out = Circuit::new();
    out.push(Gate::shared(&[precision], f.clone()));
    for i in 0..l {
        let cg = g.controlled(Control::bit(precision, i, true));
        for _ in 0..1usize << i {
            out.append(&cg);
        }
    }
    out.push(Gate::shared(&[precision], f).dagger());
    out
}

fn require_zeroed(state: &QuantumState, reg: RegId) -> Result<()> {
    if (state.probability_of(reg, 0)? - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("precision register {} is not in |0⟩", state.layout().name(reg))));
    }
    Ok(())
}

/// Runs `AmpEst` on `state`, whose work registers already hold `A|0⟩`.
///
/// Adds exactly `2(2^l − 1)` controlled preparer calls to `counter`.
pub fn amp_est_sans_measurement(
    iterate: &GroverIterate,
    state: &mut QuantumState,
    precision: RegId,
    counter: &mut QueryCounter,
) -> Result<()> {
    if iterate.work().contains(&precision) {
        return Err(Error::RegisterCollision("precision register is a work register".into()));
    }
    require_zeroed(state, precision)?;
    let circ = amp_est_circuit(iterate, state.layout(), precision);
    state.run(&circ, counter)
}

/// `EQAmpEst`: amplitude estimation of `Pr[R2 = x]` controlled by `R1 = x`.
pub fn eq_amp_est(
    o_d: &DistributionOracle,
    regs: &EqRegisters,
    state: &mut QuantumState,
    precision: RegId,
    counter: &mut QueryCounter,
) -> Result<()> {
    if regs.index == precision || regs.sample_registers().contains(&precision) || regs.index == regs.value {
        return Err(Error::RegisterCollision("EQAmpEst registers overlap".into()));
    }
    let it = GroverIterate::eq(o_d, regs)?;
    amp_est_sans_measurement(&it, state, precision, counter)
}

/// Dense `AmpEst` on a one-qubit preparer `|0⟩ ↦ √(1−p)|0⟩ + √p|1⟩` with good state `|1⟩`.
///
/// Layout is `[P (l), W (1)]`. Returns the final state and the query tally under label `A`.
pub fn amp_est_single_qubit(p: f64, l: usize) -> Result<(QuantumState, QueryCounter)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0,1]")));
    }
    let (layout, ids) = RegisterLayout::from_pairs(&[("P", l), ("W", 1)])?;
    let (pr, w) = (ids[0], ids[1]);
    let label: crate::state::OracleLabel = "A".into();
    let mut prep = Circuit::new();
    prep.push(Gate::new(&[w], Operator::ry(2.0 * p.sqrt().asin())).counted_as(&label));
    let it = GroverIterate::with_good_values(&layout, prep.clone(), vec![w], w, &[1])?;
    let mut st = QuantumState::zero(layout)?;
    let mut qc = QueryCounter::new();
    st.run(&prep, &mut qc)?;
    amp_est_sans_measurement(&it, &mut st, pr, &mut qc)?;
    Ok((st, qc))
}

/// Exact phase-estimation output for one branch with good probability `p`,
/// split along the two eigenvectors `ψ±` of the restricted iterate.
///
/// `components[s][a] = c_s·e_s(a)`, so that the precision register and the
/// two-dimensional work space end in `Σ_s c_s |ψ_s⟩ ⊗ Σ_a e_s(a)|a⟩`.
#[derive(Clone, Debug)]
pub struct PhaseBranch {
    pub p: f64,
    pub l: usize,
    pub components: [Vec<C64>; 2],
    pub eigenvectors: [[C64; 2]; 2],
}

impl PhaseBranch {
    /// Simulates phase estimation on `[W (1), P (l)]`, starting from `(cos θ, sin θ)`,
    /// with `G^{2^i}` obtained by repeated squaring of the 2×2 iterate.
    pub fn simulate(p: f64, l: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || l == 0 {
            return Err(Error::InvalidParameter(format!("branch p = {p}, l = {l}")));
        }
        let th = p.sqrt().asin();
        let a = Operator::ry(2.0 * th).to_matrix(false);
        let s0 = [c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let s_chi = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
        let mut g = mat_mul(&mat_mul(&a, &s0), &mat_mul(&adjoint(&a), &s_chi));
        g.iter_mut().for_each(|z| *z = -*z);
        let (layout, ids) = RegisterLayout::from_pairs(&[("W", 1), ("P", l)])?;
        let (w, pr) = (ids[0], ids[1]);
        let mut st = QuantumState::zero(layout)?;
        let mut scratch = QueryCounter::new();
        st.apply_unitary(&[w], &Operator::ry(2.0 * th), &[])?;
        let f = alloc::rc::Rc::new(Operator::Fourier { width: l });
        st.apply(&Gate::shared(&[pr], f.clone()), &mut scratch)?;
        let mut power = g;
        for i in 0..l {
            let op = Operator::matrix(2, power.clone())?;
            st.apply_unitary(&[w], &op, &[Control::bit(pr, i, true)])?;
            power = mat_mul(&power, &power);
        }
        st.apply(&Gate::shared(&[pr], f).dagger(), &mut scratch)?;
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let eigenvectors = [[c(h, 0.0), c(0.0, -h)], [c(h, 0.0), c(0.0, h)]];
        let n = 1usize << l;
        let amps = st.amplitudes();
        let mut components = [vec![c(0.0, 0.0); n], vec![c(0.0, 0.0); n]];
        for (s, comp) in components.iter_mut().enumerate() {
            let v = eigenvectors[s];
            for (a, z) in comp.iter_mut().enumerate() {
                *z = v[0].conj() * amps[a] + v[1].conj() * amps[n | a];
            }
        }
        Ok(PhaseBranch { p, l, components, eigenvectors })
    }

    /// `|c_s|²`.
    pub fn weight(&self, s: usize) -> f64 {
        self.components[s].iter().map(|z| z.norm_sqr()).sum()
    }

    /// Outcome distribution of the precision register.
    pub fn distribution(&self) -> Vec<f64> {
        (0..1usize << self.l).map(|a| self.components[0][a].norm_sqr() + self.components[1][a].norm_sqr()).collect()
    }

    /// `Σ_a |e_s(a)|²·[pred(a)]`, the probability that one copy driven by `ψ_s` satisfies `pred`.
    pub fn conditional_mass(&self, s: usize, pred: impl Fn(usize) -> bool) -> f64 {
        let w = self.weight(s);
        if w == 0.0 {
            return 0.0;
        }
        let hit: f64 = self.components[s].iter().enumerate().filter(|(a, _)| pred(*a)).map(|(_, z)| z.norm_sqr()).sum();
        (hit / w).clamp(0.0, 1.0)
    }

    /// `c_s = ⟨ψ_s|(cos θ, sin θ)⟩`.
    pub fn initial_overlap(&self, s: usize) -> C64 {
        let th = self.p.sqrt().asin();
        let v = self.eigenvectors[s];
        v[0].conj() * th.cos() + v[1].conj() * th.sin()
    }

    /// `e_s(a) = components[s][a] / c_s`; zero when `c_s` vanishes.
    pub fn eigen_amplitudes(&self, s: usize) -> Vec<C64> {
        let cs = self.initial_overlap(s);
        if cs.norm() < 1e-300 {
            return vec![c(0.0, 0.0); 1usize << self.l];
        }
        self.components[s].iter().map(|z| z / cs).collect()
    }
}

fn mat_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); 4];
    for i in 0..2 {
        for j in 0..2 {
            out[i * 2 + j] = a[i * 2] * b[j] + a[i * 2 + 1] * b[2 + j];
        }
    }
    out
}

fn adjoint(a: &[C64]) -> Vec<C64> {
    vec![a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()]
}

/// `T_n(x)` for real `n ≥ 0`, extended by `cosh` outside `[−1, 1]`.
pub fn chebyshev(n: f64, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (n * x.acos()).cos()
    } else if x > 1.0 {
        (n * x.acosh()).cosh()
    } else {
        let v = (n * (-x).acosh()).cosh();
        if (n.round() - n).abs() < 1e-12 && (n.round() as i64) % 2 != 0 {
            -v
        } else {
            v
        }
    }
}

/// Phase schedule `G(α_l, β_l)⋯G(α_1, β_1)` applied after one call to `A`,
/// with `G(α, β) = −S_s(α) S_t(β)`, `S_s(α) = I − (1 − e^{−iα})|s⟩⟨s|` and
/// `S_t(β) = I − (1 − e^{iβ})Π_good`.
#[derive(Clone, Debug, PartialEq)]
pub struct AaSchedule {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `δ_c` of the fixed-point construction; `None` for plain Grover.
    pub delta_c: Option<f64>,
}

impl AaSchedule {
    /// `j` standard Grover iterations (`α = β = π`).
    pub fn grover(j: usize) -> Self {
        AaSchedule { alphas: vec![PI; j], betas: vec![PI; j], delta_c: None }
    }

    /// Fixed-point schedule of length `L = 2l + 1` for success lower bound `w`
    /// and final failure at most `δ_c²`: `L` is the smallest odd length with
    /// `1 − 1/T_{1/L}(1/δ_c)² ≤ w`.
    pub fn fixed_point(w: f64, delta_c: f64) -> Result<Self> {
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::InvalidParameter(format!("success lower bound {w} outside (0,1]")));
        }
        if !(delta_c > 0.0 && delta_c < 1.0) {
            return Err(Error::InvalidParameter(format!("fixed-point error {delta_c} outside (0,1)")));
        }
        let mut len = 1usize;
        loop {
            let t = chebyshev(1.0 / len as f64, 1.0 / delta_c);
            if 1.0 - 1.0 / (t * t) <= w {
                break;
            }
            len += 2;
        }
        Ok(Self::with_length(len, delta_c))
    }

    /// Fixed-point phases for a given odd length.
    pub fn with_length(len: usize, delta_c: f64) -> Self {
        let l = (len - 1) / 2;
        let gamma = 1.0 / chebyshev(1.0 / len as f64, 1.0 / delta_c);
        let root = (1.0 - gamma * gamma).max(0.0).sqrt();
        let alphas: Vec<f64> = (1..=l).map(|j| 2.0 * f64::atan2(1.0, (2.0 * PI * j as f64 / len as f64).tan() * root)).collect();
        let betas = (1..=l).map(|j| -alphas[l - j]).collect();
        AaSchedule { alphas, betas, delta_c: Some(delta_c) }
    }

    pub fn iterations(&self) -> usize {
        self.alphas.len()
    }

    /// Calls to `A` or `A†`, counting the initial preparation.
    pub fn preparer_calls(&self) -> usize {
        2 * self.iterations() + 1
    }

    /// Coefficients `(g, b)` of the final state `g|G⟩ + b|B⟩`, where
    /// `A|0⟩ = √λ|G⟩ + √(1−λ)|B⟩`.
    pub fn evolve(&self, lambda: f64) -> (C64, C64) {
        let lambda = lambda.clamp(0.0, 1.0);
        let s = [lambda.sqrt(), (1.0 - lambda).sqrt()];
        let mut v = [c(s[0], 0.0), c(s[1], 0.0)];
        for (&al, &be) in self.alphas.iter().zip(&self.betas) {
            v[0] *= crate::state::cis(be);
            let ov = v[0] * s[0] + v[1] * s[1];
            let k = (c(1.0, 0.0) - crate::state::cis(-al)) * ov;
            v[0] -= k * s[0];
            v[1] -= k * s[1];
            v[0] = -v[0];
            v[1] = -v[1];
        }
        (v[0], v[1])
    }

    /// Final good probability for initial good probability `λ`.
    pub fn success(&self, lambda: f64) -> f64 {
        self.evolve(lambda).0.norm_sqr()
    }

    /// Closed form `1 − δ_c² T_L(T_{1/L}(1/δ_c)·√(1−λ))²` of the fixed-point schedule.
    pub fn predicted_success(&self, lambda: f64) -> Option<f64> {
        let d = self.delta_c?;
        let len = self.preparer_calls() as f64;
        let t = chebyshev(len, chebyshev(1.0 / len, 1.0 / d) * (1.0 - lambda).max(0.0).sqrt());
        Some(1.0 - d * d * t * t)
    }
}

/// Result of amplifying a preparer whose good probability is `initial_success`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplificationOutcome {
    pub schedule: AaSchedule,
    pub initial_success: f64,
    pub final_success: f64,
    pub iterations: usize,
    pub preparer_calls: usize,
}

/// Amplitude amplification knowing only `success ≥ τ_lb`; the final failure
/// probability is at most `δ/2` whenever the bound holds.
pub fn amplitude_amplify(initial_success: f64, tau_lb: f64, delta: f64) -> Result<AmplificationOutcome> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("error {delta} outside (0,1)")));
    }
    let schedule = AaSchedule::fixed_point(tau_lb, (delta / 2.0).sqrt())?;
    let final_success = schedule.success(initial_success);
    Ok(AmplificationOutcome {
        iterations: schedule.iterations(),
        preparer_calls: schedule.preparer_calls(),
        schedule,
        initial_success,
        final_success,
    })
}

/// Runs `A` followed by `schedule` on a dense state in `|0…0⟩`; good states satisfy `good`.
pub fn amplify_dense(
    state: &mut QuantumState,
    preparer: &Circuit,
    good: &[Control],
    schedule: &AaSchedule,
    counter: &mut QueryCounter,
) -> Result<()> {
    state.run(preparer, counter)?;
    amplify_prepared(state, preparer, good, schedule, counter)
}

/// The iterations of [`amplify_dense`] on a state that already holds `A|0⟩`.
pub fn amplify_prepared(
    state: &mut QuantumState,
    preparer: &Circuit,
    good: &[Control],
    schedule: &AaSchedule,
    counter: &mut QueryCounter,
) -> Result<()> {
    let zero: Vec<Control> = state.layout().ids().map(|r| Control::value(r, 0)).collect();
    let inv = preparer.inverse();
    for (&al, &be) in schedule.alphas.iter().zip(&schedule.betas) {
        state.apply(&Gate::new(&[], Operator::global_phase(be)).with_controls(good), counter)?;
        state.run(&inv, counter)?;
        state.apply(&Gate::new(&[], Operator::global_phase(-al)).with_controls(&zero), counter)?;
        state.run(preparer, counter)?;
        state.apply(&Gate::new(&[], Operator::global_phase(PI)), counter)?;
    }
    Ok(())
}
