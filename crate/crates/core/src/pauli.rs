//! GF(4) symbols and Pauli strings.
//!
//! Convention used everywhere in this crate: `0 ↔ I`, `1 ↔ X`, `ω ↔ Z`,
//! `ω̄ ↔ Y`. A symbol is stored as two bits `(x, z)`, so GF(4) addition is
//! XOR and coincides with Pauli multiplication up to phase. Phases are
//! never tracked.

use std::fmt;
use std::ops::{Add, Mul};

use rand::Rng;

use crate::error::{Error, Result};
use crate::werner::Fidelity;

/// Element of GF(4) = {0, 1, ω, ω̄}, with `ω̄ = ω² = ω + 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Gf4(u8);

impl Gf4 {
    pub const ZERO: Gf4 = Gf4(0);
    pub const ONE: Gf4 = Gf4(1);
    pub const OMEGA: Gf4 = Gf4(2);
    pub const OMEGA_BAR: Gf4 = Gf4(3);

    pub const I: Gf4 = Self::ZERO;
    pub const X: Gf4 = Self::ONE;
    pub const Z: Gf4 = Self::OMEGA;
    pub const Y: Gf4 = Self::OMEGA_BAR;

    pub const ALL: [Gf4; 4] = [Gf4(0), Gf4(1), Gf4(2), Gf4(3)];

    pub const fn from_bits(bits: u8) -> Gf4 {
        Gf4(bits & 3)
    }

    pub const fn from_xz(x: bool, z: bool) -> Gf4 {
        Gf4((x as u8) | ((z as u8) << 1))
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    pub const fn x(self) -> bool {
        self.0 & 1 == 1
    }

    pub const fn z(self) -> bool {
        self.0 & 2 == 2
    }

    pub const fn is_identity(self) -> bool {
        self.0 == 0
    }

    /// Frobenius conjugate `a ↦ a²`, swapping ω and ω̄.
    pub const fn conj(self) -> Gf4 {
        match self.0 {
            2 => Gf4(3),
            3 => Gf4(2),
            v => Gf4(v),
        }
    }

    /// Absolute trace `a + a²` into GF(2).
    pub const fn trace(self) -> bool {
        // Tr(0) = Tr(1) = 0, Tr(ω) = Tr(ω̄) = 1
        self.z()
    }

    pub fn letter(self) -> char {
        ['I', 'X', 'Z', 'Y'][self.0 as usize]
    }

    pub fn from_letter(c: char) -> Option<Gf4> {
        match c {
            'I' | '_' | '.' => Some(Gf4::I),
            'X' => Some(Gf4::X),
            'Z' => Some(Gf4::Z),
            'Y' => Some(Gf4::Y),
            _ => None,
        }
    }

    /// Whether the two single-qubit Paulis anticommute.
    pub const fn anticommutes(self, other: Gf4) -> bool {
        let a = self.0;
        let b = other.0;
        ((a & 1) & (b >> 1)) ^ ((a >> 1) & (b & 1)) == 1
    }
}

impl Add for Gf4 {
    type Output = Gf4;
    fn add(self, rhs: Gf4) -> Gf4 {
        Gf4(self.0 ^ rhs.0)
    }
}

impl Mul for Gf4 {
    type Output = Gf4;
    fn mul(self, rhs: Gf4) -> Gf4 {
        // log/antilog over the cyclic group {1, ω, ω̄}
        const LOG: [u8; 4] = [0, 0, 1, 2];
        const EXP: [u8; 3] = [1, 2, 3];
        if self.0 == 0 || rhs.0 == 0 {
            return Gf4::ZERO;
        }
        Gf4(EXP[((LOG[self.0 as usize] + LOG[rhs.0 as usize]) % 3) as usize])
    }
}

impl fmt::Debug for Gf4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["0", "1", "ω", "ω̄"][self.0 as usize])
    }
}

impl fmt::Display for Gf4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// An n-qubit Pauli operator modulo phase.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    symbols: Vec<Gf4>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            symbols: vec![Gf4::I; n],
        }
    }

    pub fn from_symbols(symbols: Vec<Gf4>) -> Self {
        Self { symbols }
    }

    /// Builds an operator acting as `p` on each listed qubit.
    pub fn single_type(n: usize, qubits: &[usize], p: Gf4) -> Self {
        let mut s = Self::identity(n);
        for &q in qubits {
            s.symbols[q] = s.symbols[q] + p;
        }
        s
    }

    pub fn from_xz_bits(x: &[bool], z: &[bool]) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: z.len(),
            });
        }
        Ok(Self {
            symbols: x.iter().zip(z).map(|(&x, &z)| Gf4::from_xz(x, z)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Gf4] {
        &self.symbols
    }

    pub fn symbols_mut(&mut self) -> &mut [Gf4] {
        &mut self.symbols
    }

    pub fn get(&self, q: usize) -> Gf4 {
        self.symbols[q]
    }

    pub fn set(&mut self, q: usize, p: Gf4) {
        self.symbols[q] = p;
    }

    pub fn weight(&self) -> usize {
        self.symbols.iter().filter(|s| !s.is_identity()).count()
    }

    pub fn is_identity(&self) -> bool {
        self.symbols.iter().all(|s| s.is_identity())
    }

    pub fn x_bits(&self) -> Vec<bool> {
        self.symbols.iter().map(|s| s.x()).collect()
    }

    pub fn z_bits(&self) -> Vec<bool> {
        self.symbols.iter().map(|s| s.z()).collect()
    }

    /// Packed symplectic vector `(x | z)` of length `2n` bits.
    pub fn to_symplectic(&self) -> Vec<u64> {
        let n = self.len();
        let mut v = vec![0u64; (2 * n).div_ceil(64)];
        for (q, s) in self.symbols.iter().enumerate() {
            if s.x() {
                v[q / 64] |= 1 << (q % 64);
            }
            if s.z() {
                let b = n + q;
                v[b / 64] |= 1 << (b % 64);
            }
        }
        v
    }

    /// Multiplies `other` into `self` in place (phase dropped).
    pub fn mul_assign(&mut self, other: &PauliString) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, &b) in self.symbols.iter_mut().zip(&other.symbols) {
            *a = *a + b;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{}", s.letter())?;
        }
        Ok(())
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| Gf4::from_letter(c).ok_or_else(|| Error::InvalidParameter(format!("not a Pauli letter: {c:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(PauliString::from_symbols)
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Commutation bit of two Pauli strings: `true` iff they anticommute.
///
/// Evaluated as the symplectic form on the `(x, z)` bit vectors, which is
/// the trace-Hermitian form `Tr(Σ uᵢ·v̄ᵢ)` over GF(4).
pub fn trace_inner_product(u: &PauliString, v: &PauliString) -> Result<bool> {
    check_len(u.len(), v.len())?;
    Ok(symplectic_product(u.symbols(), v.symbols()))
}

/// Unchecked symplectic product over the common prefix of two symbol slices.
pub fn symplectic_product(u: &[Gf4], v: &[Gf4]) -> bool {
    u.iter().zip(v).fold(false, |acc, (&a, &b)| acc ^ a.anticommutes(b))
}

/// Product of two Pauli strings with the global phase discarded.
pub fn pauli_mul(u: &PauliString, v: &PauliString) -> Result<PauliString> {
    let mut out = u.clone();
    out.mul_assign(v)?;
    Ok(out)
}

/// Draws the Pauli frame of `n` Werner pairs of fidelity `f`: identity with
/// probability `f`, each of X, Y, Z with probability `(1 - f) / 3`.
pub fn sample_werner_error<R: Rng + ?Sized>(f: Fidelity, n: usize, rng: &mut R) -> PauliString {
    let mut e = PauliString::identity(n);
    fill_werner_error(f, e.symbols_mut(), rng);
    e
}

/// In-place variant of [`sample_werner_error`] for hot loops.
pub fn fill_werner_error<R: Rng + ?Sized>(f: Fidelity, out: &mut [Gf4], rng: &mut R) {
    let f = f.value();
    let spread = 1.0 - f;
    for s in out.iter_mut() {
        let u: f64 = rng.gen();
        *s = if u < f {
            Gf4::I
        } else {
            let k = (((u - f) / spread) * 3.0) as u8;
            Gf4::from_bits(1 + k.min(2))
        };
    }
}

/// Result of symplectic Gram–Schmidt: anticommuting pairs plus the leftover
/// vectors that commute with everything (isotropic part).
#[derive(Debug, Clone, Default)]
pub struct SymplecticBasis {
    pub pairs: Vec<(PauliString, PauliString)>,
    pub isotropic: Vec<PauliString>,
}

/// Symplectic Gram–Schmidt over GF(2), processing `vectors` in order.
///
/// Each returned pair anticommutes internally and commutes with every other
/// pair and with every isotropic vector. Vectors reduced to identity are dropped.
pub fn symplectic_gram_schmidt(vectors: &[PauliString]) -> Result<SymplecticBasis> {
    let mut pool: Vec<PauliString> = vectors.to_vec();
    if let Some(first) = pool.first() {
        let n = first.len();
        for v in &pool {
            check_len(n, v.len())?;
        }
    }
    let mut basis = SymplecticBasis::default();
    while !pool.is_empty() {
        let v = pool.remove(0);
        if v.is_identity() {
            continue;
        }
        let partner = pool.iter().position(|w| symplectic_product(v.symbols(), w.symbols()));
        let Some(pos) = partner else {
            basis.isotropic.push(v);
            continue;
        };
        let w = pool.remove(pos);
        for u in pool.iter_mut() {
            let with_w = symplectic_product(u.symbols(), w.symbols());
            let with_v = symplectic_product(u.symbols(), v.symbols());
            if with_w {
                u.mul_assign(&v)?;
            }
            if with_v {
                u.mul_assign(&w)?;
            }
        }
        basis.pairs.push((v, w));
    }
    Ok(basis)
}
