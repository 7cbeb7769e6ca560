//! The `[[2d², 2, d]]` toric code and its MWPM decoder.
//!
//! Lattice layout on a `d × d` torus, with vertex `(r, c)` at row `r`,
//! column `c` (indices mod `d`):
//!
//! * horizontal edge `h(r, c)` joins `(r, c)`–`(r, c+1)`, qubit `r·d + c`;
//! * vertical edge `v(r, c)` joins `(r, c)`–`(r+1, c)`, qubit `d² + r·d + c`;
//! * face `(r, c)` is bounded by `h(r, c)`, `h(r+1, c)`, `v(r, c)`, `v(r, c+1)`.
//!
//! Vertex checks are X-type and flag the Z part of an error; face
//! (plaquette) checks are Z-type and flag the X part.

use crate::error::{Error, Result};
use crate::gf2::Gf2Span;
use crate::matching::min_weight_perfect_matching;
use crate::pauli::{symplectic_product, Gf4, PauliString};

/// Syndrome of a toric-code error: sorted defect positions (`r·d + c`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ToricSyndrome {
    /// Violated vertex checks (from Z and Y components).
    pub vertex_defects: Vec<usize>,
    /// Violated plaquette checks (from X and Y components).
    pub plaquette_defects: Vec<usize>,
}

impl ToricSyndrome {
    pub fn is_trivial(&self) -> bool {
        self.vertex_defects.is_empty() && self.plaquette_defects.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ToricCode {
    d: usize,
    vertex_checks: Vec<[usize; 4]>,
    plaquette_checks: Vec<[usize; 4]>,
    /// X-type logical representatives, one per encoded pair.
    logical_x: [Vec<usize>; 2],
    /// Z-type logical representatives; `logical_z[i]` anticommutes with `logical_x[i]`.
    logical_z: [Vec<usize>; 2],
}

impl ToricCode {
    /// Builds the distance-`d` toric code and checks its stabilizer structure.
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!(
                "toric lattice size must be at least 2, got {d}"
            )));
        }
        let mut code = ToricCode {
            d,
            vertex_checks: Vec::with_capacity(d * d),
            plaquette_checks: Vec::with_capacity(d * d),
            logical_x: [Vec::new(), Vec::new()],
            logical_z: [Vec::new(), Vec::new()],
        };
        for r in 0..d {
            for c in 0..d {
                code.vertex_checks
                    .push([code.h(r, c), code.h(r, c + d - 1), code.v(r, c), code.v(r + d - 1, c)]);
                code.plaquette_checks
                    .push([code.h(r, c), code.h(r + 1, c), code.v(r, c), code.v(r, c + 1)]);
            }
        }
        // Z loops along a row / column of the primal lattice, X loops on the dual.
        code.logical_z = [
            (0..d).map(|c| code.h(0, c)).collect(),
            (0..d).map(|r| code.v(r, 0)).collect(),
        ];
        code.logical_x = [
            (0..d).map(|r| code.h(r, 0)).collect(),
            (0..d).map(|c| code.v(0, c)).collect(),
        ];
        code.verify()?;
        Ok(code)
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.d * self.d
    }

    pub fn num_logical(&self) -> usize {
        2
    }

    pub fn vertex_checks(&self) -> &[[usize; 4]] {
        &self.vertex_checks
    }

    pub fn plaquette_checks(&self) -> &[[usize; 4]] {
        &self.plaquette_checks
    }

    /// X-type check operators as Pauli strings.
    pub fn vertex_stabilizers(&self) -> Vec<PauliString> {
        let n = self.num_qubits();
        self.vertex_checks
            .iter()
            .map(|q| PauliString::single_type(n, q, Gf4::X))
            .collect()
    }

    /// Z-type check operators as Pauli strings.
    pub fn plaquette_stabilizers(&self) -> Vec<PauliString> {
        let n = self.num_qubits();
        self.plaquette_checks
            .iter()
            .map(|q| PauliString::single_type(n, q, Gf4::Z))
            .collect()
    }

    /// Logical `(X̄ᵢ, Z̄ᵢ)` representatives for encoded pair `i`.
    pub fn logical_pair(&self, i: usize) -> (PauliString, PauliString) {
        let n = self.num_qubits();
        (
            PauliString::single_type(n, &self.logical_x[i], Gf4::X),
            PauliString::single_type(n, &self.logical_z[i], Gf4::Z),
        )
    }

    fn h(&self, r: usize, c: usize) -> usize {
        (r % self.d) * self.d + c % self.d
    }

    fn v(&self, r: usize, c: usize) -> usize {
        self.d * self.d + (r % self.d) * self.d + c % self.d
    }

    fn verify(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Consistency(format!("toric d={}: {msg}", self.d)));
        let vs = self.vertex_stabilizers();
        let ps = self.plaquette_stabilizers();
        for a in vs.iter().chain(&ps) {
            for b in vs.iter().chain(&ps) {
                if symplectic_product(a.symbols(), b.symbols()) {
                    return fail("checks do not commute");
                }
            }
        }
        let n = self.num_qubits();
        let mut span = Gf2Span::new(2 * n);
        let rank_v = vs.iter().filter(|s| span.insert(&s.to_symplectic())).count();
        let rank_p = ps.iter().filter(|s| span.insert(&s.to_symplectic())).count();
        if rank_v != self.d * self.d - 1 || rank_p != self.d * self.d - 1 {
            return fail("unexpected check rank");
        }
        let logicals: Vec<(PauliString, PauliString)> = (0..2).map(|i| self.logical_pair(i)).collect();
        for (i, (xi, zi)) in logicals.iter().enumerate() {
            for op in [xi, zi] {
                if vs
                    .iter()
                    .chain(&ps)
                    .any(|s| symplectic_product(s.symbols(), op.symbols()))
                {
                    return fail("logical operator does not commute with checks");
                }
                if op.weight() != self.d || span.contains(&op.to_symplectic()) {
                    return fail("logical representative is not a weight-d nontrivial cycle");
                }
            }
            for (j, (xj, zj)) in logicals.iter().enumerate() {
                let expect = i == j;
                if symplectic_product(xi.symbols(), zj.symbols()) != expect
                    || symplectic_product(zi.symbols(), xj.symbols()) != expect
                    || symplectic_product(xi.symbols(), xj.symbols())
                    || symplectic_product(zi.symbols(), zj.symbols())
                {
                    return fail("logical representatives are not symplectic partners");
                }
            }
        }
        Ok(())
    }

    /// Measures every check against `e`.
    pub fn syndrome(&self, e: &PauliString) -> Result<ToricSyndrome> {
        let n = self.num_qubits();
        if e.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: e.len(),
            });
        }
        let d = self.d;
        let dd = d * d;
        let mut vertex = vec![false; dd];
        let mut face = vec![false; dd];
        for (q, s) in e.symbols().iter().enumerate() {
            if s.is_identity() {
                continue;
            }
            let horizontal = q < dd;
            let r = (q % dd) / d;
            let c = q % d;
            // endpoints and the two faces sharing the edge
            let (v1, v2, f1, f2) = if horizontal {
                (r * d + c, r * d + (c + 1) % d, ((r + d - 1) % d) * d + c, r * d + c)
            } else {
                (r * d + c, ((r + 1) % d) * d + c, r * d + (c + d - 1) % d, r * d + c)
            };
            if s.z() {
                vertex[v1] ^= true;
                vertex[v2] ^= true;
            }
            if s.x() {
                face[f1] ^= true;
                face[f2] ^= true;
            }
        }
        let collect = |flags: Vec<bool>| flags.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        Ok(ToricSyndrome {
            vertex_defects: collect(vertex),
            plaquette_defects: collect(face),
        })
    }

    fn torus_delta(&self, a: usize, b: usize) -> usize {
        let d = self.d;
        let k = (b + d - a) % d;
        k.min(d - k)
    }

    /// Toroidal Manhattan distance between two lattice sites `r·d + c`.
    pub fn distance_between(&self, a: usize, b: usize) -> usize {
        let d = self.d;
        self.torus_delta(a / d, b / d) + self.torus_delta(a % d, b % d)
    }

    /// MWPM correction whose syndrome equals `syn`.
    ///
    /// Vertex and plaquette sectors are matched independently; each matched
    /// pair is joined by a shortest path that moves horizontally first.
    pub fn decode(&self, syn: &ToricSyndrome) -> Result<PauliString> {
        let mut correction = PauliString::identity(self.num_qubits());
        self.decode_sector(&syn.vertex_defects, Sector::Vertex, &mut correction)?;
        self.decode_sector(&syn.plaquette_defects, Sector::Plaquette, &mut correction)?;
        Ok(correction)
    }

    fn decode_sector(&self, defects: &[usize], sector: Sector, out: &mut PauliString) -> Result<()> {
        let matching = min_weight_perfect_matching(defects.len(), |i, j| {
            self.distance_between(defects[i], defects[j]) as u32
        })?;
        for &(i, j) in &matching.pairs {
            self.apply_path(defects[i], defects[j], sector, out);
        }
        Ok(())
    }

    /// Steps along a shortest torus path from `a` to `b`, toggling the edges
    /// it uses (primal lattice for vertices, dual lattice for faces).
    fn apply_path(&self, a: usize, b: usize, sector: Sector, out: &mut PauliString) {
        let d = self.d;
        let (mut r, mut c) = (a / d, a % d);
        let (rb, cb) = (b / d, b % d);
        let toggle = |q: usize, out: &mut PauliString| {
            let p = match sector {
                Sector::Vertex => Gf4::Z,
                Sector::Plaquette => Gf4::X,
            };
            out.set(q, out.get(q) + p);
        };
        let fwd_c = (cb + d - c) % d;
        let (steps_c, plus_c) = if fwd_c <= d - fwd_c {
            (fwd_c, true)
        } else {
            (d - fwd_c, false)
        };
        for _ in 0..steps_c {
            let q = match (sector, plus_c) {
                (Sector::Vertex, true) => self.h(r, c),
                (Sector::Vertex, false) => self.h(r, c + d - 1),
                (Sector::Plaquette, true) => self.v(r, c + 1),
                (Sector::Plaquette, false) => self.v(r, c),
            };
            toggle(q, out);
            c = if plus_c { (c + 1) % d } else { (c + d - 1) % d };
        }
        let fwd_r = (rb + d - r) % d;
        let (steps_r, plus_r) = if fwd_r <= d - fwd_r {
            (fwd_r, true)
        } else {
            (d - fwd_r, false)
        };
        for _ in 0..steps_r {
            let q = match (sector, plus_r) {
                (Sector::Vertex, true) => self.v(r, c),
                (Sector::Vertex, false) => self.v(r + d - 1, c),
                (Sector::Plaquette, true) => self.h(r + 1, c),
                (Sector::Plaquette, false) => self.h(r, c),
            };
            toggle(q, out);
            r = if plus_r { (r + 1) % d } else { (r + d - 1) % d };
        }
    }

    /// Logical action of a zero-syndrome residual on the two encoded pairs.
    ///
    /// The X part is read from its winding parity across the Z̄ cuts and the
    /// Z part across the X̄ cuts.
    pub fn logical_class(&self, residual: &PauliString) -> Result<[Gf4; 2]> {
        if !self.syndrome(residual)?.is_trivial() {
            return Err(Error::NonzeroSyndrome);
        }
        Ok(self.logical_class_unchecked(residual))
    }

    pub(crate) fn logical_class_unchecked(&self, residual: &PauliString) -> [Gf4; 2] {
        let s = residual.symbols();
        let parity = |qs: &[usize], pick: fn(Gf4) -> bool| qs.iter().fold(false, |acc, &q| acc ^ pick(s[q]));
        [0, 1].map(|i| Gf4::from_xz(parity(&self.logical_z[i], Gf4::x), parity(&self.logical_x[i], Gf4::z)))
    }

    /// Decodes `error` and returns the logical class of the residual.
    pub fn decode_to_class(&self, error: &PauliString) -> Result<[Gf4; 2]> {
        let syn = self.syndrome(error)?;
        let mut residual = self.decode(&syn)?;
        residual.mul_assign(error)?;
        debug_assert!(self.syndrome(&residual).map(|s| s.is_trivial()).unwrap_or(false));
        Ok(self.logical_class_unchecked(&residual))
    }
}

#[derive(Debug, Clone, Copy)]
enum Sector {
    Vertex,
    Plaquette,
}
