use alloc::format;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::reversible::{majority_copy_count, QAE_SUCCESS};

/// Largest copy count of the desk preset.
pub const DESK_COPY_CAP: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `K` capped at [`DESK_COPY_CAP`].
    Desk,
    /// `K = ⌈c·ln(1/(δ²τ²))⌉`.
    Full,
    /// `K` set explicitly.
    Custom,
}

/// Parameters of the threshold pipeline and every derived constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighDistParams {
    pub m: usize,
    pub a: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    /// `τ′ = τ − ε/8`.
    pub tau_prime: f64,
    /// `q = ⌈log₂(1/ε)⌉ + 4`.
    pub q: usize,
    /// Precision width `l = q + 3`.
    pub l: usize,
    /// `τ₁ = ⌊(2^l/π)·asin√τ′⌋`.
    pub tau1: usize,
    /// Copy count from the majority bound.
    pub k_full: usize,
    /// Copy count actually used.
    pub k: usize,
    /// `r = log m + a`.
    pub r: usize,
    pub preset: Preset,
}

impl HighDistParams {
    /// Desk-preset parameters for an oracle over `m` values with `a` ancilla qubits.
    pub fn derive(m: usize, a: usize, tau: f64, eps: f64, delta: f64) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("m = {m} is not a power of two ≥ 2")));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::InvalidParameter(format!("threshold {tau} outside (0,1]")));
        }
        if !(eps > 0.0 && eps < tau) {
            return Err(Error::InvalidParameter(format!("accuracy {eps} must lie in (0, τ = {tau})")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("error {delta} outside (0,1)")));
        }
        let q = (1.0 / eps).log2().ceil() as usize + 4;
        let k_full = majority_copy_count(QAE_SUCCESS, delta * delta * tau * tau)?;
        let mut p = HighDistParams {
            m,
            a,
            tau,
            eps,
            delta,
            tau_prime: tau - eps / 8.0,
            q,
            l: q + 3,
            tau1: 0,
            k_full,
            k: k_full.min(DESK_COPY_CAP),
            r: m.trailing_zeros() as usize + a,
            preset: Preset::Desk,
        };
        p.tau1 = tau1_for(p.tau_prime, p.l);
        p.check()?;
        Ok(p)
    }

    pub fn full_copies(mut self) -> Self {
        self.k = self.k_full;
        self.preset = Preset::Full;
        self
    }

    pub fn with_copies(mut self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("at least one copy is needed".into()));
        }
        self.k = k;
        self.preset = Preset::Custom;
        Ok(self)
    }

    /// Overrides `l` (and with it `q` and `τ₁`); the invariant is re-checked.
    pub fn with_precision(mut self, l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidParameter(format!("precision {l} below 2")));
        }
        self.l = l;
        self.q = l.saturating_sub(3);
        self.tau1 = tau1_for(self.tau_prime, l);
        self.check()?;
        Ok(self)
    }

    /// `0 ≤ τ′ − 2π/2^l ≤ sin²(πτ₁/2^l)`.
    pub fn invariant_holds(&self) -> bool {
        let n = (1u64 << self.l) as f64;
        let lhs = self.tau_prime - 2.0 * PI / n;
        let s = (PI * self.tau1 as f64 / n).sin();
        lhs >= 0.0 && lhs <= s * s
    }

    fn check(&self) -> Result<()> {
        if self.invariant_holds() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "τ′ = {} and τ₁ = {} violate 0 ≤ τ′ − 2π/2^{} ≤ sin²(πτ₁/2^l)",
                self.tau_prime, self.tau1, self.l
            )))
        }
    }

    /// `sin²(πτ₁/2^l)`, the threshold actually compared against.
    pub fn effective_threshold(&self) -> f64 {
        crate::qae::decode(self.tau1, self.l)
    }
}

fn tau1_for(tau_prime: f64, l: usize) -> usize {
    ((1u64 << l) as f64 / PI * tau_prime.max(0.0).sqrt().asin()).floor() as usize
}
