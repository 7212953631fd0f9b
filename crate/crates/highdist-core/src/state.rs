//! Dense statevector simulation over named qubit registers.
//!
//! Registers are concatenated most-significant first: in a layout `[A, B]`
//! the basis index is `a << width(B) | b`. Gates act on an ordered list of
//! target registers (the first target holds the most significant bits of the
//! operator's input) and may be conditioned on arbitrary bit patterns of
//! other registers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Largest register total the dense backend accepts unless told otherwise.
pub const DEFAULT_DENSE_CAP: usize = 24;

/// Tolerance for the unitarity check performed when an operator is built.
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub(crate) fn cis(theta: f64) -> C64 {
    Complex::new(theta.cos(), theta.sin())
}

pub(crate) fn log2_exact(n: usize) -> Option<usize> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros() as usize)
    } else {
        None
    }
}

/// Handle to a register inside a [`RegisterLayout`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegId(pub usize);

/// Ordered list of named registers.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RegisterLayout {
    names: Vec<String>,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl RegisterLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a layout from `(name, width)` pairs and returns the ids in order.
    pub fn from_pairs(pairs: &[(&str, usize)]) -> Result<(Self, Vec<RegId>)> {
        let mut layout = Self::new();
        let ids = pairs.iter().map(|(n, w)| layout.push(n, *w)).collect::<Result<Vec<_>>>()?;
        Ok((layout, ids))
    }

    /// Appends a register as the new least significant block.
    pub fn push(&mut self, name: &str, width: usize) -> Result<RegId> {
        if width == 0 {
            return Err(Error::InvalidRegister(format!("{name} has width 0")));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(Error::InvalidRegister(format!("{name} declared twice")));
        }
        for off in self.offsets.iter_mut() {
            *off += width;
        }
        self.names.push(name.to_string());
        self.widths.push(width);
        self.offsets.push(0);
        self.total += width;
        Ok(RegId(self.names.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn total_width(&self) -> usize {
        self.total
    }

    pub fn ids(&self) -> impl Iterator<Item = RegId> {
        (0..self.names.len()).map(RegId)
    }

    pub fn id(&self, name: &str) -> Result<RegId> {
        self.names.iter().position(|n| n == name).map(RegId).ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn check(&self, r: RegId) -> Result<()> {
        if r.0 < self.names.len() {
            Ok(())
        } else {
            Err(Error::UnknownRegister(format!("#{}", r.0)))
        }
    }

    pub fn name(&self, r: RegId) -> &str {
        &self.names[r.0]
    }

    pub fn width(&self, r: RegId) -> usize {
        self.widths[r.0]
    }

    /// Position of the register's least significant bit in the basis index.
    pub fn offset(&self, r: RegId) -> usize {
        self.offsets[r.0]
    }

    /// Bit mask of the register inside the global basis index.
    pub fn mask(&self, r: RegId) -> usize {
        ((1usize << self.widths[r.0]) - 1) << self.offsets[r.0]
    }

    pub fn extract(&self, index: usize, r: RegId) -> usize {
        (index >> self.offsets[r.0]) & ((1usize << self.widths[r.0]) - 1)
    }

    pub fn deposit(&self, r: RegId, value: usize) -> usize {
        value << self.offsets[r.0]
    }

    /// Layout with register `r` removed and a map from old to new ids.
    pub fn without(&self, r: RegId) -> (RegisterLayout, impl Fn(RegId) -> Option<RegId>) {
        let mut out = RegisterLayout::new();
        for id in self.ids() {
            if id != r {
                out.push(self.name(id), self.width(id)).expect("names already unique");
            }
        }
        let removed = r.0;
        let map = move |id: RegId| match id.0.cmp(&removed) {
            core::cmp::Ordering::Less => Some(id),
            core::cmp::Ordering::Equal => None,
            core::cmp::Ordering::Greater => Some(RegId(id.0 - 1)),
        };
        (out, map)
    }
}

/// A unitary acting on `2^w` basis states.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    /// Row-major dense matrix.
    Matrix { dim: usize, data: Vec<C64> },
    /// Basis permutation `|i⟩ ↦ |map[i]⟩`.
    Permutation(Vec<usize>),
    /// Diagonal phase map.
    Diagonal(Vec<C64>),
    /// `F|x⟩ = 2^{-w/2} Σ_y e^{2πixy/2^w} |y⟩`.
    Fourier { width: usize },
}

impl Operator {
    pub fn matrix(dim: usize, data: Vec<C64>) -> Result<Self> {
        if !dim.is_power_of_two() || data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = c(0.0, 0.0);
                for k in 0..dim {
                    acc += data[i * dim + k] * data[j * dim + k].conj();
                }
                let want = if i == j { 1.0 } else { 0.0 };
                if (acc - c(want, 0.0)).norm() > UNITARY_TOL {
                    return Err(Error::NotUnitary(format!("U U† deviates at ({i},{j})")));
                }
            }
        }
        Ok(Operator::Matrix { dim, data })
    }

    pub fn permutation(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if !n.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: n.next_power_of_two(), found: n });
        }
        let mut seen = vec![false; n];
        for &t in &map {
            if t >= n || seen[t] {
                return Err(Error::NotUnitary("map is not a bijection".into()));
            }
            seen[t] = true;
        }
        Ok(Operator::Permutation(map))
    }

    pub fn diagonal(phases: Vec<C64>) -> Result<Self> {
        if !phases.len().is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: phases.len().next_power_of_two(), found: phases.len() });
        }
        if phases.iter().any(|z| (z.norm() - 1.0).abs() > UNITARY_TOL) {
            return Err(Error::NotUnitary("diagonal entry off the unit circle".into()));
        }
        Ok(Operator::Diagonal(phases))
    }

    pub fn fourier(width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidParameter("Fourier width must be at least 1".into()));
        }
        Ok(Operator::Fourier { width })
    }

    /// Zero-qubit operator multiplying by `e^{iθ}`; with controls it is a conditional phase.
    pub fn global_phase(theta: f64) -> Self {
        Operator::Diagonal(vec![cis(theta)])
    }

    pub fn hadamard() -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        Operator::Matrix { dim: 2, data: vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)] }
    }

    pub fn pauli_x() -> Self {
        Operator::Permutation(vec![1, 0])
    }

    /// Real rotation `|0⟩ ↦ cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
    pub fn ry(theta: f64) -> Self {
        let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
        Operator::Matrix { dim: 2, data: vec![c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)] }
    }

    /// `|x⟩ ↦ |x ⊕ k⟩` on a `width`-qubit register.
    pub fn xor_constant(width: usize, k: usize) -> Result<Self> {
        if k >> width != 0 {
            return Err(Error::ValueOutOfRange { value: k, width });
        }
        Ok(Operator::Permutation((0..1usize << width).map(|x| x ^ k).collect()))
    }

    /// Phase `e^{iθ}` on `|0…0⟩`, identity elsewhere.
    pub fn zero_phase(width: usize, theta: f64) -> Self {
        let mut d = vec![c(1.0, 0.0); 1usize << width];
        d[0] = cis(theta);
        Operator::Diagonal(d)
    }

    /// Unitary whose leading columns are the Gram–Schmidt orthonormalisation of
    /// `columns`, completed with standard basis vectors.
    pub fn orthonormalize(dim: usize, columns: &[Vec<C64>]) -> Result<Self> {
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim);
        let candidates = columns.iter().cloned().chain((0..dim).map(|k| {
            let mut e = vec![c(0.0, 0.0); dim];
            e[k] = c(1.0, 0.0);
            e
        }));
        for (i, mut v) in candidates.enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            for _ in 0..2 {
                for u in &basis {
                    let ov: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    v.iter_mut().zip(u).for_each(|(z, w)| *z -= ov * w);
                }
            }
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n < 1e-9 {
                if i < columns.len() {
                    return Err(Error::InvalidInput(format!("column {i} is linearly dependent")));
                }
                continue;
            }
            v.iter_mut().for_each(|z| *z /= n);
            basis.push(v);
            if basis.len() == dim {
                break;
            }
        }
        let mut data = vec![c(0.0, 0.0); dim * dim];
        for (j, col) in basis.iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                data[i * dim + j] = *z;
            }
        }
        Operator::matrix(dim, data)
    }

    /// Unitary mapping `|0⟩` to the normalised `state`.
    pub fn state_preparation(state: &[C64]) -> Result<Self> {
        let n: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("state norm² is {n}, expected 1")));
        }
        Self::orthonormalize(state.len(), &[state.to_vec()])
    }

    pub fn dim(&self) -> usize {
        match self {
            Operator::Matrix { dim, .. } => *dim,
            Operator::Permutation(p) => p.len(),
            Operator::Diagonal(d) => d.len(),
            Operator::Fourier { width } => 1usize << width,
        }
    }

    pub fn width(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Dense matrix of the operator (or its adjoint), row-major.
    pub fn to_matrix(&self, adjoint: bool) -> Vec<C64> {
        let d = self.dim();
        let mut out = vec![c(0.0, 0.0); d * d];
        let mut col = vec![c(0.0, 0.0); d];
        let mut scratch = vec![c(0.0, 0.0); d];
        for j in 0..d {
            col.iter_mut().for_each(|z| *z = c(0.0, 0.0));
            col[j] = c(1.0, 0.0);
            self.apply_block(adjoint, &mut col, &mut scratch);
            for i in 0..d {
                out[i * d + j] = col[i];
            }
        }
        out
    }

    /// Applies the operator to one gathered block in place.
    pub(crate) fn apply_block(&self, adjoint: bool, v: &mut [C64], scratch: &mut [C64]) {
        match self {
            Operator::Matrix { dim, data } => {
                let d = *dim;
                for i in 0..d {
                    let mut acc = c(0.0, 0.0);
                    if adjoint {
                        for k in 0..d {
                            acc += data[k * d + i].conj() * v[k];
                        }
                    } else {
                        let row = &data[i * d..(i + 1) * d];
                        for k in 0..d {
                            acc += row[k] * v[k];
                        }
                    }
                    scratch[i] = acc;
                }
                v.copy_from_slice(&scratch[..d]);
            }
            Operator::Permutation(p) => {
                if adjoint {
                    for (i, &t) in p.iter().enumerate() {
                        scratch[i] = v[t];
                    }
                } else {
                    for (i, &t) in p.iter().enumerate() {
                        scratch[t] = v[i];
                    }
                }
                v.copy_from_slice(&scratch[..p.len()]);
            }
            Operator::Diagonal(d) => {
                for (z, ph) in v.iter_mut().zip(d) {
                    *z *= if adjoint { ph.conj() } else { *ph };
                }
            }
            Operator::Fourier { width } => {
                let sign = if adjoint { -1.0 } else { 1.0 };
                fft_in_place(v, sign);
                let norm = 1.0 / ((1usize << width) as f64).sqrt();
                v.iter_mut().for_each(|z| *z *= norm);
            }
        }
    }
}

/// Unnormalised radix-2 transform `v[k] ← Σ_j e^{sign·2πi jk/N} v[j]`.
pub(crate) fn fft_in_place(v: &mut [C64], sign: f64) {
    let n = v.len();
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            v.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * core::f64::consts::PI / len as f64;
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = cis(ang * k as f64);
                let a = v[start + k];
                let b = v[start + k + half] * w;
                v[start + k] = a + b;
                v[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Condition on a bit pattern of one register: `(value(reg) & mask) == value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Control {
    pub reg: RegId,
    pub mask: usize,
    pub value: usize,
}

impl Control {
    /// Whole register equals `value`.
    pub fn value(reg: RegId, value: usize) -> Self {
        Control { reg, mask: usize::MAX, value }
    }

    /// Bit `bit` of the register equals `on`.
    pub fn bit(reg: RegId, bit: usize, on: bool) -> Self {
        Control { reg, mask: 1 << bit, value: (on as usize) << bit }
    }

    fn matches(&self, v: usize) -> bool {
        v & self.mask == self.value
    }
}

/// Label under which an oracle gate is counted.
pub type OracleLabel = Rc<str>;

#[derive(Clone, Debug)]
pub struct Gate {
    pub targets: Vec<RegId>,
    pub op: Rc<Operator>,
    pub controls: Vec<Control>,
    pub adjoint: bool,
    pub query: Option<OracleLabel>,
}

impl Gate {
    pub fn new(targets: &[RegId], op: Operator) -> Self {
        Self::shared(targets, Rc::new(op))
    }

    pub fn shared(targets: &[RegId], op: Rc<Operator>) -> Self {
        Gate { targets: targets.to_vec(), op, controls: Vec::new(), adjoint: false, query: None }
    }

    pub fn with_control(mut self, c: Control) -> Self {
        self.controls.push(c);
        self
    }

    pub fn with_controls(mut self, cs: &[Control]) -> Self {
        self.controls.extend_from_slice(cs);
        self
    }

    pub fn dagger(mut self) -> Self {
        self.adjoint = !self.adjoint;
        self
    }

    pub fn counted_as(mut self, label: &OracleLabel) -> Self {
        self.query = Some(label.clone());
        self
    }
}

/// Ordered gate list.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn append(&mut self, other: &Circuit) {
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { gates: self.gates.iter().rev().cloned().map(Gate::dagger).collect() }
    }

    /// Adds `ctrl` to every gate, turning the circuit into its controlled version.
    pub fn controlled(&self, ctrl: Control) -> Circuit {
        Circuit { gates: self.gates.iter().cloned().map(|g| g.with_control(ctrl)).collect() }
    }

    /// Query tally the circuit will record when executed once.
    pub fn query_tally(&self) -> QueryCounter {
        let mut qc = QueryCounter::new();
        for g in &self.gates {
            if let Some(l) = &g.query {
                qc.record(l, g.adjoint, !g.controls.is_empty());
            }
        }
        qc
    }
}

/// Oracle invocations split by kind. Each kind counts as one query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub forward: u64,
    pub inverse: u64,
    pub controlled: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.forward + self.inverse + self.controlled
    }
}

/// Per-oracle query counts; controlled calls are counted as controlled whatever their direction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryCounter {
    tallies: BTreeMap<String, Tally>,
}

impl QueryCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, label: &str, inverse: bool, controlled: bool) {
        self.record_n(label, inverse, controlled, 1);
    }

    pub fn record_n(&mut self, label: &str, inverse: bool, controlled: bool, n: u64) {
        let t = self.tallies.entry(label.to_string()).or_default();
        if controlled {
            t.controlled += n;
        } else if inverse {
            t.inverse += n;
        } else {
            t.forward += n;
        }
    }

    pub fn get(&self, label: &str) -> Tally {
        self.tallies.get(label).copied().unwrap_or_default()
    }

    pub fn total(&self, label: &str) -> u64 {
        self.get(label).total()
    }

    pub fn grand_total(&self) -> u64 {
        self.tallies.values().map(Tally::total).sum()
    }

    pub fn merge(&mut self, other: &QueryCounter) {
        for (k, t) in &other.tallies {
            let e = self.tallies.entry(k.clone()).or_default();
            e.forward += t.forward;
            e.inverse += t.inverse;
            e.controlled += t.controlled;
        }
    }

    /// Adds `times` copies of `other`.
    pub fn merge_scaled(&mut self, other: &QueryCounter, times: u64) {
        for (k, t) in &other.tallies {
            let e = self.tallies.entry(k.clone()).or_default();
            e.forward += t.forward * times;
            e.inverse += t.inverse * times;
            e.controlled += t.controlled * times;
        }
    }

    pub fn reset(&mut self) {
        self.tallies.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tally)> {
        self.tallies.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Precomputed addressing for one gate application.
struct Plan {
    scatter: Vec<usize>,
    free_mask: usize,
    fixed: usize,
}

fn plan(layout: &RegisterLayout, targets: &[RegId], controls: &[Control]) -> Result<Plan> {
    let mut tbits = Vec::new();
    let mut tmask = 0usize;
    for (i, &t) in targets.iter().enumerate() {
        layout.check(t)?;
        if targets[..i].contains(&t) {
            return Err(Error::RegisterCollision(format!("{} targeted twice", layout.name(t))));
        }
        let off = layout.offset(t);
        for b in (0..layout.width(t)).rev() {
            tbits.push(off + b);
        }
        tmask |= layout.mask(t);
    }
    let w = tbits.len();
    let scatter = (0..1usize << w)
        .map(|x| {
            let mut idx = 0;
            for (j, &pos) in tbits.iter().enumerate() {
                if (x >> (w - 1 - j)) & 1 == 1 {
                    idx |= 1 << pos;
                }
            }
            idx
        })
        .collect();
    let mut cmask = 0usize;
    let mut cval = 0usize;
    for ctl in controls {
        layout.check(ctl.reg)?;
        let width = layout.width(ctl.reg);
        let rmask = (1usize << width) - 1;
        let m = ctl.mask & rmask;
        if ctl.value & !m != 0 {
            return Err(Error::ValueOutOfRange { value: ctl.value, width });
        }
        let gm = m << layout.offset(ctl.reg);
        let gv = ctl.value << layout.offset(ctl.reg);
        if gm & tmask != 0 {
            return Err(Error::RegisterCollision(format!("{} is both control and target", layout.name(ctl.reg))));
        }
        if (cmask & gm) & (cval ^ gv) != 0 {
            // Contradictory controls: the gate acts on nothing.
            return Ok(Plan { scatter, free_mask: 0, fixed: usize::MAX });
        }
        cmask |= gm;
        cval |= gv;
    }
    let full = if layout.total_width() == usize::BITS as usize { usize::MAX } else { (1usize << layout.total_width()) - 1 };
    Ok(Plan { scatter, free_mask: full & !tmask & !cmask, fixed: cval })
}

/// Dense amplitude vector over a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    amps: Vec<C64>,
}

impl QuantumState {
    /// `|0…0⟩` with the default qubit cap.
    pub fn zero(layout: RegisterLayout) -> Result<Self> {
        Self::zero_with_cap(layout, DEFAULT_DENSE_CAP)
    }

    pub fn zero_with_cap(layout: RegisterLayout, cap: usize) -> Result<Self> {
        let n = layout.total_width();
        if n > cap {
            return Err(Error::QubitBudget { required: n, cap });
        }
        let mut amps = vec![c(0.0, 0.0); 1usize << n];
        amps[0] = c(1.0, 0.0);
        Ok(QuantumState { layout, amps })
    }

    /// Wraps an amplitude vector; it must have the right length and unit norm.
    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << layout.total_width() {
            return Err(Error::DimensionMismatch { expected: 1usize << layout.total_width(), found: amps.len() });
        }
        let n: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("state norm² is {n}, expected 1")));
        }
        Ok(QuantumState { layout, amps })
    }

    /// Basis state with the listed register values; unlisted registers are zero.
    pub fn basis(layout: RegisterLayout, values: &[(RegId, usize)]) -> Result<Self> {
        let mut idx = 0;
        for &(r, v) in values {
            layout.check(r)?;
            if v >> layout.width(r) != 0 {
                return Err(Error::ValueOutOfRange { value: v, width: layout.width(r) });
            }
            idx |= layout.deposit(r, v);
        }
        let mut s = Self::zero(layout)?;
        s.amps[0] = c(0.0, 0.0);
        s.amps[idx] = c(1.0, 0.0);
        Ok(s)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Applies an operator without query accounting.
    pub fn apply_unitary(&mut self, targets: &[RegId], op: &Operator, controls: &[Control]) -> Result<()> {
        self.apply_raw(targets, op, controls, false)
    }

    fn apply_raw(&mut self, targets: &[RegId], op: &Operator, controls: &[Control], adjoint: bool) -> Result<()> {
        let w: usize = targets.iter().map(|&t| self.layout.width(t)).sum();
        for &t in targets {
            self.layout.check(t)?;
        }
        if op.dim() != 1usize << w {
            return Err(Error::DimensionMismatch { expected: 1usize << w, found: op.dim() });
        }
        let p = plan(&self.layout, targets, controls)?;
        if p.fixed == usize::MAX {
            return Ok(());
        }
        let d = op.dim();
        let mut buf = vec![c(0.0, 0.0); d];
        let mut scratch = vec![c(0.0, 0.0); d];
        let m = p.free_mask;
        let mut sub = 0usize;
        loop {
            let base = p.fixed | sub;
            for (t, &s) in p.scatter.iter().enumerate() {
                buf[t] = self.amps[base | s];
            }
            op.apply_block(adjoint, &mut buf, &mut scratch);
            for (t, &s) in p.scatter.iter().enumerate() {
                self.amps[base | s] = buf[t];
            }
            if sub == m {
                break;
            }
            sub = (sub | !m).wrapping_add(1) & m;
        }
        Ok(())
    }

    /// Applies a gate, recording a query if it is an oracle gate.
    pub fn apply(&mut self, g: &Gate, counter: &mut QueryCounter) -> Result<()> {
        self.apply_raw(&g.targets, &g.op, &g.controls, g.adjoint)?;
        if let Some(l) = &g.query {
            counter.record(l, g.adjoint, !g.controls.is_empty());
        }
        Ok(())
    }

    pub fn run(&mut self, circuit: &Circuit, counter: &mut QueryCounter) -> Result<()> {
        for g in circuit.gates() {
            self.apply(g, counter)?;
        }
        Ok(())
    }

    /// Probability that measuring `reg` yields `value`.
    pub fn probability_of(&self, reg: RegId, value: usize) -> Result<f64> {
        self.layout.check(reg)?;
        if value >> self.layout.width(reg) != 0 {
            return Err(Error::ValueOutOfRange { value, width: self.layout.width(reg) });
        }
        let mask = self.layout.mask(reg);
        let want = self.layout.deposit(reg, value);
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & mask == want).map(|(_, z)| z.norm_sqr()).sum())
    }

    /// Full outcome distribution of one register.
    pub fn marginal(&self, reg: RegId) -> Result<Vec<f64>> {
        self.layout.check(reg)?;
        let mut out = vec![0.0; 1usize << self.layout.width(reg)];
        for (i, z) in self.amps.iter().enumerate() {
            out[self.layout.extract(i, reg)] += z.norm_sqr();
        }
        Ok(out)
    }

    /// Probability that every listed control condition holds.
    pub fn probability_where(&self, conds: &[Control]) -> Result<f64> {
        for ctl in conds {
            self.layout.check(ctl.reg)?;
        }
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| conds.iter().all(|ctl| ctl.matches(self.layout.extract(*i, ctl.reg))))
            .map(|(_, z)| z.norm_sqr())
            .sum())
    }

    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::InvalidInput("layouts differ".into()));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// One block of a state, conditioned on a basis value of the index register.
#[derive(Clone, Debug)]
pub struct BranchState {
    pub index: usize,
    /// Norm of the block; phases live in `sub_state`.
    pub amplitude: C64,
    pub sub_state: QuantumState,
}

/// Splits `state` into blocks `Σ_x α_x |x⟩ ⊗ |χ_x⟩` over the index register.
pub fn factorize_by_branch(state: &QuantumState, index: RegId) -> Result<Vec<BranchState>> {
    let layout = state.layout();
    layout.check(index)?;
    let (sub_layout, _) = layout.without(index);
    let nsub = 1usize << sub_layout.total_width();
    let nidx = 1usize << layout.width(index);
    let mut blocks = vec![vec![c(0.0, 0.0); nsub]; nidx];
    let off = layout.offset(index);
    let w = layout.width(index);
    let low = (1usize << off) - 1;
    for (i, z) in state.amplitudes().iter().enumerate() {
        let x = layout.extract(i, index);
        let rest = ((i >> (off + w)) << off) | (i & low);
        blocks[x][rest] = *z;
    }
    let mut out = Vec::new();
    for (x, mut v) in blocks.into_iter().enumerate() {
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= n);
        out.push(BranchState { index: x, amplitude: c(n, 0.0), sub_state: QuantumState { layout: sub_layout.clone(), amps: v } });
    }
    Ok(out)
}

/// Inverse of [`factorize_by_branch`].
pub fn recombine(layout: &RegisterLayout, index: RegId, branches: &[BranchState]) -> Result<QuantumState> {
    layout.check(index)?;
    let off = layout.offset(index);
    let w = layout.width(index);
    let low = (1usize << off) - 1;
    let mut amps = vec![c(0.0, 0.0); 1usize << layout.total_width()];
    for b in branches {
        if b.index >> w != 0 {
            return Err(Error::ValueOutOfRange { value: b.index, width: w });
        }
        for (rest, z) in b.sub_state.amplitudes().iter().enumerate() {
            let i = ((rest >> off) << (off + w)) | (b.index << off) | (rest & low);
            amps[i] = b.amplitude * z;
        }
    }
    QuantumState::from_amplitudes(layout.clone(), amps)
}

/// Slice of a diagonal gate with the index register fixed to `x`.
fn restrict_diagonal(layout: &RegisterLayout, index: RegId, g: &Gate, x: usize) -> Operator {
    let Operator::Diagonal(d) = &*g.op else { unreachable!("checked by the caller") };
    let widths: Vec<usize> = g.targets.iter().map(|&t| layout.width(t)).collect();
    let total: usize = widths.iter().sum();
    let pos = g.targets.iter().position(|&t| t == index).expect("index is a target");
    let below: usize = widths[pos + 1..].iter().sum();
    let wi = widths[pos];
    let low = (1usize << below) - 1;
    let sub = (0..1usize << (total - wi)).map(|s| d[((s >> below) << (below + wi)) | (x << below) | (s & low)]).collect();
    Operator::Diagonal(sub)
}

/// A state kept as independent branches while only branch-diagonal gates are applied.
#[derive(Clone, Debug)]
pub struct BranchedState {
    layout: RegisterLayout,
    index: RegId,
    branches: Vec<BranchState>,
}

impl BranchedState {
    pub fn new(state: &QuantumState, index: RegId) -> Result<Self> {
        Ok(BranchedState { layout: state.layout().clone(), index, branches: factorize_by_branch(state, index)? })
    }

    pub fn branches(&self) -> &[BranchState] {
        &self.branches
    }

    /// Applies a gate branch by branch. Gates that target the index register are refused.
    pub fn apply(&mut self, g: &Gate, counter: &mut QueryCounter) -> Result<()> {
        let on_target = g.targets.contains(&self.index);
        if on_target && !matches!(*g.op, Operator::Diagonal(_)) {
            return Err(Error::NotBranchDiagonal(format!("gate targets the index register {}", self.layout.name(self.index))));
        }
        let (_, map) = self.layout.without(self.index);
        let targets: Vec<RegId> = g.targets.iter().filter_map(|&t| map(t)).collect();
        let mut local = Vec::new();
        let mut on_index = Vec::new();
        for ctl in &g.controls {
            match map(ctl.reg) {
                Some(r) => local.push(Control { reg: r, ..*ctl }),
                None => on_index.push(*ctl),
            }
        }
        for b in &mut self.branches {
            if on_index.iter().all(|ctl| ctl.matches(b.index)) {
                if on_target {
                    let op = restrict_diagonal(&self.layout, self.index, g, b.index);
                    b.sub_state.apply_raw(&targets, &op, &local, g.adjoint)?;
                } else {
                    b.sub_state.apply_raw(&targets, &g.op, &local, g.adjoint)?;
                }
            }
        }
        if let Some(l) = &g.query {
            counter.record(l, g.adjoint, !g.controls.is_empty());
        }
        Ok(())
    }

    /// Slice of a diagonal gate with the index register fixed to `x`.
    pub fn run(&mut self, circuit: &Circuit, counter: &mut QueryCounter) -> Result<()> {
        for g in circuit.gates() {
            self.apply(g, counter)?;
        }
        Ok(())
    }

    pub fn recombine(&self) -> Result<QuantumState> {
        recombine(&self.layout, self.index, &self.branches)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(name: &str, w: usize) -> (RegisterLayout, RegId) {
        let (l, ids) = RegisterLayout::from_pairs(&[(name, w)]).unwrap();
        (l, ids[0])
    }

    #[test]
    fn x_flips_zero() {
        let (l, r) = one("q", 1);
        let mut s = QuantumState::zero(l).unwrap();
        s.apply_unitary(&[r], &Operator::pauli_x(), &[]).unwrap();
        assert_eq!(s.probability_of(r, 1).unwrap(), 1.0);
    }

    #[test]
    fn hadamard_twice_is_identity() {
        let (l, r) = one("q", 1);
        let mut s = QuantumState::zero(l).unwrap();
        for _ in 0..2 {
            s.apply_unitary(&[r], &Operator::hadamard(), &[]).unwrap();
        }
        assert!((s.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(s.amplitudes()[1].norm() < 1e-12);
    }

    #[test]
    fn unsatisfied_control_leaves_state() {
        let (l, ids) = RegisterLayout::from_pairs(&[("a", 1), ("b", 1)]).unwrap();
        let mut s = QuantumState::basis(l, &[(ids[1], 1)]).unwrap();
        let before = s.clone();
        s.apply_unitary(&[ids[1]], &Operator::pauli_x(), &[Control::value(ids[0], 1)]).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn register_order_is_most_significant_first() {
        let (l, ids) = RegisterLayout::from_pairs(&[("a", 1), ("b", 2)]).unwrap();
        let s = QuantumState::basis(l, &[(ids[0], 1), (ids[1], 2)]).unwrap();
        assert_eq!(s.amplitudes()[0b110], c(1.0, 0.0));
    }

    #[test]
    fn probability_examples() {
        let (l, ids) = RegisterLayout::from_pairs(&[("a", 1), ("b", 1)]).unwrap();
        let mut s = QuantumState::zero(l.clone()).unwrap();
        s.apply_unitary(&[ids[0]], &Operator::hadamard(), &[]).unwrap();
        s.apply_unitary(&[ids[1]], &Operator::hadamard(), &[]).unwrap();
        let (l2, both) = one("ab", 2);
        let s2 = QuantumState::from_amplitudes(l2, s.amplitudes().to_vec()).unwrap();
        assert!((s2.probability_of(both, 3).unwrap() - 0.25).abs() < 1e-12);

        let t = QuantumState::basis(l.clone(), &[(ids[0], 1)]).unwrap();
        assert_eq!(t.probability_of(ids[0], 1).unwrap(), 1.0);

        let (a, b) = (0.3f64.sqrt(), 0.7f64.sqrt());
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![c(a * h, 0.0), c(a * h, 0.0), c(0.0, b), c(0.0, 0.0)];
        let u = QuantumState::from_amplitudes(l, amps).unwrap();
        assert!((u.probability_of(ids[0], 0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn multi_register_targets_follow_listed_order() {
        let (l, ids) = RegisterLayout::from_pairs(&[("a", 1), ("b", 1)]).unwrap();
        // Permutation on (b, a): input index = b*2 + a; map 01 -> 10 means a=1,b=0 -> b=1,a=0.
        let op = Operator::permutation(vec![0, 2, 1, 3]).unwrap();
        let mut s = QuantumState::basis(l, &[(ids[0], 1)]).unwrap();
        s.apply_unitary(&[ids[1], ids[0]], &op, &[]).unwrap();
        assert_eq!(s.probability_of(ids[1], 1).unwrap(), 1.0);
        assert_eq!(s.probability_of(ids[0], 0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_operators() {
        assert!(Operator::matrix(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(Operator::permutation(vec![0, 0]).is_err());
        assert!(Operator::diagonal(vec![c(2.0, 0.0), c(1.0, 0.0)]).is_err());
        let (l, r) = one("q", 2);
        let mut s = QuantumState::zero(l).unwrap();
        assert!(matches!(s.apply_unitary(&[r], &Operator::hadamard(), &[]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            s.apply_unitary(&[r], &Operator::zero_phase(2, 1.0), &[Control::bit(r, 0, true)]),
            Err(Error::RegisterCollision(_))
        ));
    }

    #[test]
    fn qubit_cap_is_enforced() {
        let (l, _) = one("big", 30);
        assert_eq!(QuantumState::zero(l).unwrap_err(), Error::QubitBudget { required: 30, cap: DEFAULT_DENSE_CAP });
    }

    #[test]
    fn fourier_matches_definition() {
        let op = Operator::fourier(3).unwrap();
        let m = op.to_matrix(false);
        let n = 8.0f64;
        for y in 0..8 {
            for x in 0..8 {
                let want = cis(2.0 * core::f64::consts::PI * (x * y) as f64 / n) / n.sqrt();
                assert!((m[y * 8 + x] - want).norm() < 1e-12);
            }
        }
        let h = Operator::fourier(1).unwrap().to_matrix(false);
        let hh = Operator::hadamard().to_matrix(false);
        for (a, b) in h.iter().zip(&hh) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn factorize_product_state_gives_one_branch() {
        let (l, ids) = RegisterLayout::from_pairs(&[("x", 2), ("y", 1)]).unwrap();
        let mut s = QuantumState::basis(l, &[(ids[0], 2)]).unwrap();
        s.apply_unitary(&[ids[1]], &Operator::hadamard(), &[]).unwrap();
        let br = factorize_by_branch(&s, ids[0]).unwrap();
        assert_eq!(br.len(), 1);
        assert_eq!(br[0].index, 2);
        assert!((br[0].amplitude.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branched_state_slices_diagonals_on_the_index() {
        let (l, ids) = RegisterLayout::from_pairs(&[("a", 1), ("x", 2), ("y", 1)]).unwrap();
        let mut dense = QuantumState::zero(l).unwrap();
        let h = Operator::hadamard();
        dense.apply_unitary(&[ids[0]], &h, &[]).unwrap();
        dense.apply_unitary(&[ids[2]], &h, &[]).unwrap();
        dense.apply_unitary(&[ids[1]], &Operator::fourier(2).unwrap(), &[]).unwrap();
        let mut branched = BranchedState::new(&dense, ids[1]).unwrap();
        let phases: Vec<C64> = (0..16).map(|i| cis(0.37 * i as f64)).collect();
        let g = Gate::new(&[ids[0], ids[1], ids[2]], Operator::diagonal(phases).unwrap());
        let mut qc = QueryCounter::new();
        dense.apply(&g, &mut qc).unwrap();
        branched.apply(&g, &mut qc).unwrap();
        let g2 = Gate::new(&[ids[1]], Operator::diagonal((0..4).map(|i| cis(1.1 * i as f64)).collect()).unwrap());
        dense.apply(&g2, &mut qc).unwrap();
        branched.apply(&g2, &mut qc).unwrap();
        assert!(dense.fidelity(&branched.recombine().unwrap()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn branched_state_refuses_index_targets() {
        let (l, ids) = RegisterLayout::from_pairs(&[("x", 1), ("y", 1)]).unwrap();
        let s = QuantumState::zero(l).unwrap();
        let mut b = BranchedState::new(&s, ids[0]).unwrap();
        let g = Gate::new(&[ids[0]], Operator::pauli_x());
        assert!(matches!(b.apply(&g, &mut QueryCounter::new()), Err(Error::NotBranchDiagonal(_))));
    }

    #[test]
    fn counter_classifies_calls() {
        let (l, ids) = RegisterLayout::from_pairs(&[("x", 1), ("y", 1)]).unwrap();
        let mut s = QuantumState::zero(l).unwrap();
        let lab: OracleLabel = "O".into();
        let g = Gate::new(&[ids[1]], Operator::hadamard()).counted_as(&lab);
        let mut qc = QueryCounter::new();
        s.apply(&g, &mut qc).unwrap();
        s.apply(&g.clone().dagger(), &mut qc).unwrap();
        s.apply(&g.clone().with_control(Control::value(ids[0], 1)), &mut qc).unwrap();
        assert_eq!(qc.get("O"), Tally { forward: 1, inverse: 1, controlled: 1 });
        assert_eq!(qc.total("O"), 3);
    }
}
