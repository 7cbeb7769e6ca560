//! The `[[3,1,3]]` quantum convolutional code and its syndrome Viterbi decoder.
//!
//! The stabilizer is generated by `s₁ = [1 1 1 | 1 ω ω̄]` over GF(4) and its
//! shifts by whole 3-qubit blocks. As an additive code each shift contributes
//! two binary generators, `s₁` and `ω·s₁`, hence two syndrome bits per block.
//!
//! A stream of `B` blocks is measured by every generator pair that touches
//! it, i.e. those starting at blocks `-1..B`, giving `B + 1` syndrome pairs.
//! Pair `j` checks the generator starting at block `j - 1`; the two pairs
//! overhanging the stream are evaluated against identity padding.
//!
//! Writing `head(b)` and `tail(b)` for the 2-bit images of a block under the
//! first and second halves of the generator pair, pair `j` is
//! `head(e_{j-1}) ⊕ tail(e_j)` with padding blocks contributing zero.
//! The decoder therefore only needs `head` of the previous block as trellis
//! state, which collapses the 64-state block trellis to 4 states without
//! changing which error sequences are minimal.

use crate::error::{Error, Result};
use crate::gf2::Gf2Span;
use crate::pauli::{symplectic_gram_schmidt, symplectic_product, Gf4, PauliString};

pub const BLOCK: usize = 3;
/// Code memory in blocks.
pub const MEMORY: usize = 1;

type Block = [Gf4; BLOCK];

fn pattern_symbols(p: usize) -> Block {
    [
        Gf4::from_bits((p >> 4) as u8),
        Gf4::from_bits((p >> 2) as u8),
        Gf4::from_bits(p as u8),
    ]
}

fn pattern_index(b: &[Gf4]) -> usize {
    ((b[0].bits() as usize) << 4) | ((b[1].bits() as usize) << 2) | b[2].bits() as usize
}

fn scale(c: Gf4, b: &Block) -> Block {
    b.map(|s| c * s)
}

/// Minimal-state syndrome trellis for the `[[3,1,3]]` code.
#[derive(Debug, Clone)]
pub struct Trellis {
    head: [u8; 64],
    tail: [u8; 64],
    /// `best[h][t]`: lightest block pattern with `head = h`, `tail = t`
    /// (lowest pattern index among ties), as `(weight, pattern)`.
    best: [[(u8, u8); 4]; 4],
}

impl Trellis {
    fn new(generators: &[[Block; 2]; 2]) -> Result<Self> {
        let mut head = [0u8; 64];
        let mut tail = [0u8; 64];
        let mut best = [[(u8::MAX, 0u8); 4]; 4];
        for p in 0..64 {
            let b = pattern_symbols(p);
            let bits = |part: usize| {
                (symplectic_product(&b, &generators[0][part]) as u8)
                    | ((symplectic_product(&b, &generators[1][part]) as u8) << 1)
            };
            head[p] = bits(0);
            tail[p] = bits(1);
            let w = b.iter().filter(|s| !s.is_identity()).count() as u8;
            let slot = &mut best[head[p] as usize][tail[p] as usize];
            if w < slot.0 {
                *slot = (w, p as u8);
            }
        }
        if best.iter().flatten().any(|&(w, _)| w == u8::MAX) {
            return Err(Error::Consistency(
                "block syndrome map is not onto; trellis would be disconnected".into(),
            ));
        }
        Ok(Self { head, tail, best })
    }

    pub fn num_states(&self) -> usize {
        4
    }

    /// Syndrome contribution of a block to the generator pair starting at it.
    pub fn head(&self, block: &[Gf4]) -> u8 {
        self.head[pattern_index(block)]
    }

    /// Syndrome contribution of a block to the generator pair starting one block earlier.
    pub fn tail(&self, block: &[Gf4]) -> u8 {
        self.tail[pattern_index(block)]
    }
}

/// Options for [`ConvCode313::viterbi_decode_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ViterbiOptions {
    /// Fixed decision lag in blocks; `None` decodes the full sequence.
    pub traceback_depth: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ConvCode313 {
    /// `[s₁, ω·s₁]`, each split as `[block 0 part, block 1 part]`.
    generators: [[Block; 2]; 2],
    logical_x: Block,
    logical_z: Block,
    trellis: Trellis,
}

impl ConvCode313 {
    pub const N: usize = 3;
    pub const K: usize = 1;
    pub const D: usize = 3;

    pub fn new() -> Result<Self> {
        let one = Gf4::ONE;
        let (w, wb) = (Gf4::OMEGA, Gf4::OMEGA_BAR);
        let s1: [Block; 2] = [[one, one, one], [one, w, wb]];
        let generators = [s1, [scale(w, &s1[0]), scale(w, &s1[1])]];
        let trellis = Trellis::new(&generators)?;
        let mut code = Self {
            generators,
            logical_x: [Gf4::I; 3],
            logical_z: [Gf4::I; 3],
            trellis,
        };
        code.check_self_orthogonal()?;
        let (lx, lz) = code.derive_block_logicals()?;
        code.logical_x = lx;
        code.logical_z = lz;
        Ok(code)
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    /// Block-local logical representatives `(X̄, Z̄)`.
    pub fn block_logicals(&self) -> (PauliString, PauliString) {
        (
            PauliString::from_symbols(self.logical_x.to_vec()),
            PauliString::from_symbols(self.logical_z.to_vec()),
        )
    }

    /// The `2B` binary generators of the shifts starting at blocks `0..B`, in
    /// order; the last pair is truncated at the stream end.
    pub fn stream_stabilizers(&self, blocks: usize) -> Vec<PauliString> {
        self.placed_generators(blocks, 0..blocks as isize)
    }

    /// The `2(B + 1)` checks measured on a `B`-block stream, in syndrome-bit
    /// order: shifts starting at blocks `-1..B`, truncated at both ends.
    pub fn stream_checks(&self, blocks: usize) -> Vec<PauliString> {
        self.placed_generators(blocks, -1..blocks as isize)
    }

    fn placed_generators(&self, blocks: usize, starts: std::ops::Range<isize>) -> Vec<PauliString> {
        let n = BLOCK * blocks;
        let mut out = Vec::with_capacity(2 * starts.len());
        for t in starts {
            for g in &self.generators {
                let mut s = PauliString::identity(n);
                for (part, sym) in g.iter().enumerate() {
                    let b = t + part as isize;
                    if (0..blocks as isize).contains(&b) {
                        for (i, &x) in sym.iter().enumerate() {
                            s.set(BLOCK * b as usize + i, x);
                        }
                    }
                }
                out.push(s);
            }
        }
        out
    }

    fn check_self_orthogonal(&self) -> Result<()> {
        // every pair of shifts overlapping in at least one block, inside a 4-block window
        let gens = self.stream_stabilizers(4);
        let full = &gens[..6];
        for a in &full[..4] {
            for b in full {
                if symplectic_product(a.symbols(), b.symbols()) {
                    return Err(Error::Consistency("generator shifts do not commute".into()));
                }
            }
        }
        Ok(())
    }

    /// Completes the stabilizer shifts on a three-block window to a
    /// symplectic basis and keeps the logical pair supported on the middle block.
    fn derive_block_logicals(&self) -> Result<(Block, Block)> {
        let window = 3;
        let n = BLOCK * window;
        // shifts starting at blocks 0 and 1 are every check touching block 1
        let checks: Vec<PauliString> = self.stream_stabilizers(window)[..4].to_vec();
        let mut span = Gf2Span::new(2 * n);
        for c in &checks {
            span.insert(&c.to_symplectic());
        }
        let candidates: Vec<PauliString> = (1..64)
            .map(|p| {
                let mut s = PauliString::identity(n);
                for (i, x) in pattern_symbols(p).into_iter().enumerate() {
                    s.set(BLOCK + i, x);
                }
                s
            })
            .filter(|s| checks.iter().all(|c| !symplectic_product(c.symbols(), s.symbols())))
            .filter(|s| !span.contains(&s.to_symplectic()))
            .collect();
        let basis = symplectic_gram_schmidt(&candidates)?;
        if basis.pairs.len() != Self::K || !basis.isotropic.is_empty() {
            return Err(Error::Consistency(format!(
                "expected one block-local logical pair, found {} pairs and {} isotropic",
                basis.pairs.len(),
                basis.isotropic.len()
            )));
        }
        let (x, z) = &basis.pairs[0];
        let middle = |s: &PauliString| -> Block { [s.get(BLOCK), s.get(BLOCK + 1), s.get(BLOCK + 2)] };
        Ok((middle(x), middle(z)))
    }

    fn blocks_of(len: usize) -> Result<usize> {
        if !len.is_multiple_of(BLOCK) || len == 0 {
            return Err(Error::InvalidParameter(format!(
                "stream length {len} is not a positive multiple of {BLOCK}"
            )));
        }
        Ok(len / BLOCK)
    }

    /// Syndrome of a stream error, `2(B + 1)` bits; see the module docs for the layout.
    pub fn syndrome(&self, e: &PauliString) -> Result<Vec<bool>> {
        let blocks = Self::blocks_of(e.len())?;
        let pairs = self.syndrome_pairs(e.symbols(), blocks);
        Ok(pairs.into_iter().flat_map(|s| [s & 1 == 1, s & 2 == 2]).collect())
    }

    fn syndrome_pairs(&self, e: &[Gf4], blocks: usize) -> Vec<u8> {
        let block = |t: usize| &e[BLOCK * t..BLOCK * t + BLOCK];
        (0..=blocks)
            .map(|j| {
                let head = if j > 0 { self.trellis.head(block(j - 1)) } else { 0 };
                let tail = if j < blocks { self.trellis.tail(block(j)) } else { 0 };
                head ^ tail
            })
            .collect()
    }

    /// Minimum-weight error consistent with `syndrome` (full-sequence Viterbi).
    pub fn viterbi_decode(&self, syndrome: &[bool]) -> Result<PauliString> {
        self.viterbi_decode_with(syndrome, ViterbiOptions::default())
    }

    pub fn viterbi_decode_with(&self, syndrome: &[bool], opts: ViterbiOptions) -> Result<PauliString> {
        if syndrome.len() < 4 || !syndrome.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "syndrome length {} is not 2(B + 1) for a stream of B >= 1 blocks",
                syndrome.len()
            )));
        }
        let pairs: Vec<u8> = syndrome.chunks(2).map(|c| c[0] as u8 | ((c[1] as u8) << 1)).collect();
        Ok(self.viterbi_pairs(&pairs, opts))
    }

    /// Trellis state after block `t` is `head(e_t)`; the branch into block `t`
    /// must emit `tail(e_t) = π_t ⊕ head(e_{t-1})` with `head(e_{-1}) = 0`.
    fn viterbi_pairs(&self, pi: &[u8], opts: ViterbiOptions) -> PauliString {
        const INF: u32 = u32::MAX;
        const NONE: u8 = u8::MAX;
        let blocks = pi.len() - 1;
        let tr = &self.trellis;
        // survivors[t][state] = (previous state, block pattern)
        let mut survivors: Vec<[(u8, u8); 4]> = Vec::with_capacity(blocks);
        let mut metric = [INF; 4];
        let mut first = [(NONE, 0u8); 4];
        for h in 0..4 {
            let (w, p) = tr.best[h][pi[0] as usize];
            metric[h] = w as u32;
            first[h] = (NONE, p);
        }
        survivors.push(first);
        for t in 1..blocks {
            let mut next = [INF; 4];
            let mut back = [(NONE, 0u8); 4];
            for h in 0..4 {
                for prev in 0..4 {
                    if metric[prev] == INF {
                        continue;
                    }
                    let (w, p) = tr.best[h][(pi[t] ^ prev as u8) as usize];
                    let cand = metric[prev] + w as u32;
                    if cand < next[h] || (cand == next[h] && p < back[h].1) {
                        next[h] = cand;
                        back[h] = (prev as u8, p);
                    }
                }
            }
            metric = next;
            survivors.push(back);
            if let Some(depth) = opts.traceback_depth {
                let depth = depth.max(1);
                if t >= depth && t + 1 < blocks {
                    self.commit_and_prune(&survivors, &mut metric, t, depth);
                }
            }
        }
        // the trailing padding block has zero tail, so the final head is π_B
        let mut state = pi[blocks] as usize;
        let mut symbols = vec![Gf4::I; BLOCK * blocks];
        for t in (0..blocks).rev() {
            let (prev, p) = survivors[t][state];
            symbols[BLOCK * t..BLOCK * t + BLOCK].copy_from_slice(&pattern_symbols(p as usize));
            state = prev as usize;
        }
        PauliString::from_symbols(symbols)
    }

    /// Fixes the decision `depth` blocks back along the current best path and
    /// drops survivors that disagree with it.
    fn commit_and_prune(&self, survivors: &[[(u8, u8); 4]], metric: &mut [u32; 4], t: usize, depth: usize) {
        let ancestor = |mut s: usize| {
            for k in 0..depth {
                s = survivors[t - k][s].0 as usize;
            }
            s
        };
        let best = (0..4).min_by_key(|&s| (metric[s], s)).expect("four states");
        let keep = ancestor(best);
        for s in 0..4 {
            if metric[s] != u32::MAX && ancestor(s) != keep {
                metric[s] = u32::MAX;
            }
        }
    }

    /// Per-block logical action of a zero-syndrome residual.
    pub fn logical_class(&self, residual: &PauliString) -> Result<Vec<Gf4>> {
        if self.syndrome(residual)?.iter().any(|&b| b) {
            return Err(Error::NonzeroSyndrome);
        }
        Ok(self.classes_unchecked(residual.symbols()))
    }

    fn classes_unchecked(&self, r: &[Gf4]) -> Vec<Gf4> {
        r.chunks(BLOCK)
            .map(|b| {
                Gf4::from_xz(
                    symplectic_product(b, &self.logical_z),
                    symplectic_product(b, &self.logical_x),
                )
            })
            .collect()
    }

    /// Decodes `error` and returns the per-block logical class of the residual.
    pub fn decode_to_classes(&self, error: &PauliString) -> Result<Vec<Gf4>> {
        let blocks = Self::blocks_of(error.len())?;
        let sigma = self.syndrome_pairs(error.symbols(), blocks);
        let mut residual = self.viterbi_pairs(&sigma, ViterbiOptions::default());
        residual.mul_assign(error)?;
        debug_assert!(self.syndrome_pairs(residual.symbols(), blocks).iter().all(|&s| s == 0));
        Ok(self.classes_unchecked(residual.symbols()))
    }
}
