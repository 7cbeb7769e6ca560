//! Closed-form Werner-state arithmetic.
//!
//! A Werner state is a depolarized Bell pair described by one parameter
//! `w`; its fidelity with `|Φ+⟩` is `(3w + 1) / 4`. Entanglement swapping
//! multiplies Werner parameters, so chain fidelities are products.

use crate::error::{Error, Result};

/// Fidelity below (or at) which the hashing yield is taken to be zero.
pub const HASHING_THRESHOLD: f64 = 0.8107;

/// Werner parameter `w ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct WernerParam(f64);

impl WernerParam {
    pub fn new(w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange {
                what: "Werner parameter",
                value: w,
                range: "[0, 1]",
            });
        }
        Ok(Self(w))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fidelity of a two-qubit state with `|Φ+⟩`, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fidelity(f64);

impl Fidelity {
    pub const ONE: Fidelity = Fidelity(1.0);
    /// Fidelity of the maximally mixed two-qubit state.
    pub const MIXED: Fidelity = Fidelity(0.25);

    pub fn new(f: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::OutOfRange {
                what: "fidelity",
                value: f,
                range: "[0, 1]",
            });
        }
        Ok(Self(f))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Werner parameter of the Werner state with this fidelity.
    pub fn werner(self) -> Result<WernerParam> {
        werner_from_fidelity(self)
    }

    fn require_werner_range(self) -> Result<f64> {
        if self.0 < 0.25 {
            return Err(Error::OutOfRange {
                what: "Werner fidelity",
                value: self.0,
                range: "[1/4, 1]",
            });
        }
        Ok(self.0)
    }
}

impl std::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn fidelity_from_werner(w: WernerParam) -> Fidelity {
    Fidelity((3.0 * w.0 + 1.0) / 4.0)
}

pub fn werner_from_fidelity(f: Fidelity) -> Result<WernerParam> {
    let f = f.require_werner_range()?;
    Ok(WernerParam(((4.0 * f - 1.0) / 3.0).min(1.0)))
}

/// Fidelity after a Bell-state measurement joins two Werner links.
pub fn bsm_combine(f1: Fidelity, f2: Fidelity) -> Result<Fidelity> {
    let w1 = werner_from_fidelity(f1)?.0;
    let w2 = werner_from_fidelity(f2)?.0;
    Ok(Fidelity(0.25 + 0.75 * (w1 * w2)))
}

/// Fidelity of the end-to-end link obtained by swapping along a chain of links.
pub fn chain_fidelity(fs: &[Fidelity]) -> Result<Fidelity> {
    if fs.is_empty() {
        return Err(Error::Empty("chain of link fidelities"));
    }
    let mut w = 1.0;
    for &f in fs {
        w *= werner_from_fidelity(f)?.0;
    }
    Ok(Fidelity(0.25 + 0.75 * w))
}

/// Chain fidelity of `hops` identical links.
pub fn uniform_chain_fidelity(f: Fidelity, hops: usize) -> Result<Fidelity> {
    if hops == 0 {
        return Err(Error::Empty("chain of link fidelities"));
    }
    let w = werner_from_fidelity(f)?.0;
    Ok(Fidelity(0.25 + 0.75 * w.powi(hops as i32)))
}

/// Hashing-bound distillable entanglement of a Werner state, in ebits per pair.
pub fn distillable_entanglement(f: Fidelity) -> f64 {
    let f = f.0;
    if f <= HASHING_THRESHOLD {
        return 0.0;
    }
    let xlog2x = |x: f64| if x > 0.0 { x * x.log2() } else { 0.0 };
    let q = 1.0 - f;
    // (1-f) log2((1-f)/3) = q log2 q - q log2 3
    // the bound crosses zero at 0.81071, slightly above the rounded cutoff
    (1.0 + xlog2x(f) + xlog2x(q) - q * 3f64.log2()).max(0.0)
}
