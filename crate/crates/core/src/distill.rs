//! Monte-Carlo fidelity maps `F_in → F_out` for code-based distillation.
//!
//! One trial places a Werner Pauli error on one half of each of the `n`
//! physical pairs, decodes it and records how many logical pairs come out
//! with identity logical action. The per-pair identity probability is the
//! output Werner fidelity.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conv::ConvCode313;
use crate::error::{Error, Result};
use crate::format::fmt_sig10;
use crate::pauli::{fill_werner_error, Gf4, PauliString};
use crate::rng;
use crate::toric::ToricCode;
use crate::werner::Fidelity;

/// Default number of blocks in one convolutional stream (M = 450 pairs).
pub const DEFAULT_STREAM_BLOCKS: usize = 150;
/// Trials per independent generator stream.
pub const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeId {
    /// `[[3,1,3]]` convolutional code run as a terminated stream.
    Conv313 { stream_blocks: usize },
    /// `[[2d², 2, d]]` toric code.
    Toric { d: usize },
}

impl CodeId {
    pub fn family(&self) -> &'static str {
        match self {
            CodeId::Conv313 { .. } => "conv",
            CodeId::Toric { .. } => "toric",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            CodeId::Conv313 { .. } => ConvCode313::N,
            CodeId::Toric { d } => 2 * d * d,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            CodeId::Conv313 { .. } => ConvCode313::K,
            CodeId::Toric { .. } => 2,
        }
    }

    pub fn d(&self) -> usize {
        match *self {
            CodeId::Conv313 { .. } => ConvCode313::D,
            CodeId::Toric { d } => d,
        }
    }

    /// Same family and parameters, ignoring simulation settings.
    pub fn same_code(&self, other: &CodeId) -> bool {
        self.family() == other.family() && (self.n(), self.k(), self.d()) == (other.n(), other.k(), other.d())
    }
}

impl fmt::Display for CodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}-{}", self.family(), self.n(), self.k(), self.d())
    }
}

impl FromStr for CodeId {
    type Err = Error;

    /// Accepts `conv-3-1-3`, `toric-18-2-3`, `toric-50-2-5` and the short
    /// forms `conv`, `toric-3`, `toric-5`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown code `{s}`"));
        let parts: Vec<&str> = s.trim().split('-').collect();
        let nums: Vec<usize> = parts[1..]
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let id = match (parts[0], nums.as_slice()) {
            ("conv", []) | ("conv", [3, 1, 3]) => CodeId::Conv313 {
                stream_blocks: DEFAULT_STREAM_BLOCKS,
            },
            ("toric", [d]) => CodeId::Toric { d: *d },
            ("toric", [n, 2, d]) if *n == 2 * d * d => CodeId::Toric { d: *d },
            _ => return Err(bad()),
        };
        if let CodeId::Toric { d } = id {
            if d < 2 {
                return Err(bad());
            }
        }
        Ok(id)
    }
}

/// A code that can run distillation trials.
pub trait DistillationCode: Sync {
    fn id(&self) -> CodeId;

    /// Logical pairs counted per trial.
    fn pairs_per_trial(&self) -> usize;

    /// Runs one trial at input fidelity `f` and returns the number of
    /// counted logical pairs with identity logical action.
    fn trial(&self, f: Fidelity, rng: &mut ChaCha8Rng, scratch: &mut PauliString) -> usize;

    /// Physical pairs sampled per trial.
    fn physical_pairs(&self) -> usize;
}

pub struct ToricDistiller {
    code: ToricCode,
}

impl ToricDistiller {
    pub fn new(d: usize) -> Result<Self> {
        Ok(Self {
            code: ToricCode::new(d)?,
        })
    }

    pub fn code(&self) -> &ToricCode {
        &self.code
    }
}

impl DistillationCode for ToricDistiller {
    fn id(&self) -> CodeId {
        CodeId::Toric {
            d: self.code.distance(),
        }
    }

    fn pairs_per_trial(&self) -> usize {
        2
    }

    fn physical_pairs(&self) -> usize {
        self.code.num_qubits()
    }

    fn trial(&self, f: Fidelity, rng: &mut ChaCha8Rng, scratch: &mut PauliString) -> usize {
        fill_werner_error(f, scratch.symbols_mut(), rng);
        let classes = self
            .code
            .decode_to_class(scratch)
            .expect("toric syndromes always have even defect counts");
        classes.iter().filter(|c| c.is_identity()).count()
    }
}

pub struct ConvDistiller {
    code: ConvCode313,
    blocks: usize,
}

impl ConvDistiller {
    /// A terminated stream of `blocks` blocks; the first and last are not counted.
    pub fn new(blocks: usize) -> Result<Self> {
        if blocks < 3 {
            return Err(Error::InvalidParameter(format!(
                "a stream needs at least 3 blocks, got {blocks}"
            )));
        }
        Ok(Self {
            code: ConvCode313::new()?,
            blocks,
        })
    }
}

impl DistillationCode for ConvDistiller {
    fn id(&self) -> CodeId {
        CodeId::Conv313 {
            stream_blocks: self.blocks,
        }
    }

    fn pairs_per_trial(&self) -> usize {
        self.blocks - 2
    }

    fn physical_pairs(&self) -> usize {
        ConvCode313::N * self.blocks
    }

    fn trial(&self, f: Fidelity, rng: &mut ChaCha8Rng, scratch: &mut PauliString) -> usize {
        fill_werner_error(f, scratch.symbols_mut(), rng);
        let classes = self
            .code
            .decode_to_classes(scratch)
            .expect("stream length is a multiple of the block size");
        classes[1..self.blocks - 1].iter().filter(|c| c.is_identity()).count()
    }
}

pub fn distiller(id: CodeId) -> Result<Box<dyn DistillationCode>> {
    Ok(match id {
        CodeId::Conv313 { stream_blocks } => Box::new(ConvDistiller::new(stream_blocks)?),
        CodeId::Toric { d } => Box::new(ToricDistiller::new(d)?),
    })
}

/// Output fidelity estimate at one input fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub f_out: f64,
    /// Standard error from the spread of per-trial identity fractions.
    pub stderr: f64,
    pub trials: u64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    trials: u64,
    sum: u64,
    sum_sq: u128,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }
}

fn run_chunk(code: &dyn DistillationCode, f: Fidelity, trials: u64, seed: u64, chunk: u64) -> Tally {
    let mut rng = rng::stream(seed, "trial-chunk", chunk);
    let mut scratch = PauliString::identity(code.physical_pairs());
    let mut t = Tally::default();
    for _ in 0..trials {
        let ok = code.trial(f, &mut rng, &mut scratch) as u64;
        t.trials += 1;
        t.sum += ok;
        t.sum_sq += (ok * ok) as u128;
    }
    t
}

/// Estimates the output fidelity from `trials` seeded trials.
///
/// Trials are split into chunks of [`CHUNK`], each with its own generator
/// stream, so the result does not depend on how chunks are scheduled.
pub fn estimate_output_fidelity(
    code: &dyn DistillationCode,
    f_in: Fidelity,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    f_in.werner()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trial count must be at least 1".into()));
    }
    if f_in == Fidelity::ONE {
        // no error is ever sampled at unit fidelity
        return Ok(Estimate {
            f_out: 1.0,
            stderr: 0.0,
            trials,
        });
    }
    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(code, f_in, CHUNK.min(trials - c * CHUNK), seed, c))
        .collect();
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
    Ok(summarize(t, code.pairs_per_trial()))
}

fn summarize(t: Tally, pairs: usize) -> Estimate {
    let n = t.trials as f64;
    let m = pairs as f64;
    let mean = t.sum as f64 / n;
    let stderr = if t.trials > 1 {
        let var = (t.sum_sq as f64 - t.sum as f64 * mean) / (n - 1.0);
        (var.max(0.0) / n).sqrt() / m
    } else {
        0.0
    };
    Estimate {
        f_out: mean / m,
        stderr,
        trials: t.trials,
    }
}

/// Trial counts per grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPolicy {
    pub base: u64,
    /// Used for input fidelities at or above `high_from`.
    pub high: u64,
    pub high_from: f64,
}

impl Default for TrialPolicy {
    fn default() -> Self {
        Self {
            base: 100_000,
            high: 1_000_000,
            high_from: 0.985,
        }
    }
}

impl TrialPolicy {
    /// `base` trials below the high-fidelity cutoff and ten times as many above.
    pub fn scaled(base: u64) -> Self {
        Self {
            base,
            high: base.saturating_mul(10),
            ..Self::default()
        }
    }

    pub fn trials_at(&self, f_in: f64) -> u64 {
        if f_in >= self.high_from - 1e-12 {
            self.high
        } else {
            self.base
        }
    }
}

/// `0.75, 0.755, …, 0.995` and `1.0`.
pub fn default_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..50).map(|i| round12(0.75 + 0.005 * i as f64)).collect();
    g.push(1.0);
    g
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub f_in: f64,
    pub f_out: f64,
    pub trials: u64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityMap {
    code: CodeId,
    points: Vec<GridPoint>,
    smoothed: Vec<f64>,
}

impl FidelityMap {
    /// Builds a map from raw grid points, sorting them and adding the anchor `(1, 1)`.
    pub fn from_points(code: CodeId, mut points: Vec<GridPoint>) -> Result<Self> {
        for p in &points {
            for (what, v) in [("grid input fidelity", p.f_in), ("grid output fidelity", p.f_out)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange {
                        what,
                        value: v,
                        range: "[0, 1]",
                    });
                }
            }
        }
        points.sort_by(|a, b| a.f_in.total_cmp(&b.f_in));
        if points.windows(2).any(|w| w[0].f_in == w[1].f_in) {
            return Err(Error::InvalidParameter("duplicate grid input fidelity".into()));
        }
        match points.last() {
            Some(p) if p.f_in == 1.0 => {
                if p.f_out != 1.0 {
                    return Err(Error::Consistency(format!("F_out(1) = {} instead of 1", p.f_out)));
                }
            }
            _ => points.push(GridPoint {
                f_in: 1.0,
                f_out: 1.0,
                trials: 0,
                stderr: 0.0,
            }),
        }
        let smoothed = pava(&points);
        Ok(Self { code, points, smoothed })
    }

    pub fn code(&self) -> CodeId {
        self.code
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    /// Grid output fidelities after monotone smoothing.
    pub fn smoothed(&self) -> &[f64] {
        &self.smoothed
    }

    /// Piecewise-linear interpolation of the smoothed grid.
    pub fn query(&self, f_in: Fidelity) -> Result<Fidelity> {
        let f = f_in.value();
        let lo = self.points[0].f_in;
        if f < lo - 1e-12 || f > 1.0 {
            return Err(Error::OutsideHull(f));
        }
        let f = f.max(lo);
        let i = self.points.partition_point(|p| p.f_in < f);
        if i < self.points.len() && self.points[i].f_in == f {
            return Fidelity::new(self.smoothed[i]);
        }
        let (a, b) = (&self.points[i - 1], &self.points[i]);
        let t = (f - a.f_in) / (b.f_in - a.f_in);
        let (ya, yb) = (self.smoothed[i - 1], self.smoothed[i]);
        Fidelity::new((ya + t * (yb - ya)).clamp(ya.min(yb), ya.max(yb)))
    }

    /// Largest input fidelity at which the map crosses the diagonal,
    /// located by bisection to `1e-4`; above it the map improves fidelity.
    pub fn break_even(&self) -> Result<Fidelity> {
        let gain = |f: f64| -> f64 {
            Fidelity::new(f)
                .and_then(|x| self.query(x))
                .map(|q| q.value())
                .unwrap_or(f)
                - f
        };
        let below_one: Vec<f64> = self.points.iter().map(|p| p.f_in).filter(|&f| f < 1.0).collect();
        let Some(&top) = below_one.last() else {
            return Err(Error::NoBreakEven);
        };
        if gain(top) <= 0.0 {
            return Err(Error::NoBreakEven);
        }
        let mut hi = top;
        let mut lo = None;
        for &f in below_one.iter().rev().skip(1) {
            if gain(f) <= 0.0 {
                lo = Some(f);
                break;
            }
            hi = f;
        }
        let Some(mut lo) = lo else {
            return Err(Error::InvalidParameter(format!(
                "map improves fidelity at every grid point down to {}; break-even lies below the grid",
                below_one[0]
            )));
        };
        while hi - lo > 1e-4 {
            let mid = 0.5 * (lo + hi);
            if gain(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Fidelity::new(hi)
    }

    pub const CSV_HEADER: &'static str = "code_family,n,k,d,f_in,f_out,trials,stderr";

    pub fn to_csv(&self) -> String {
        let c = &self.code;
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.family(),
                c.n(),
                c.k(),
                c.d(),
                fmt_sig10(p.f_in),
                fmt_sig10(p.f_out),
                p.trials,
                fmt_sig10(p.stderr)
            ));
        }
        s
    }

    /// Parses the cache format. A convolutional map gets the given stream length.
    pub fn from_csv(text: &str, stream_blocks: usize) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::MalformedCache(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == Self::CSV_HEADER => {}
            _ => return Err(bad(1, "missing or wrong header")),
        }
        let mut code: Option<CodeId> = None;
        let mut points = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 8 {
                return Err(bad(i + 1, "expected 8 columns"));
            }
            let num = |j: usize| cols[j].parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            let int = |j: usize| cols[j].parse::<u64>().map_err(|_| bad(i + 1, "bad integer"));
            let id = match cols[0] {
                "conv" => CodeId::Conv313 { stream_blocks },
                "toric" => CodeId::Toric { d: int(3)? as usize },
                _ => return Err(bad(i + 1, "unknown code family")),
            };
            if (id.n() as u64, id.k() as u64, id.d() as u64) != (int(1)?, int(2)?, int(3)?) {
                return Err(bad(i + 1, "code parameters do not match family"));
            }
            match code {
                None => code = Some(id),
                Some(c) if c == id => {}
                Some(_) => return Err(bad(i + 1, "mixed codes in one map")),
            }
            points.push(GridPoint {
                f_in: num(4)?,
                f_out: num(5)?,
                trials: int(6)?,
                stderr: num(7)?,
            });
        }
        let code = code.ok_or_else(|| bad(1, "no rows"))?;
        Self::from_points(code, points)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read(path: &Path, stream_blocks: usize) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?, stream_blocks)
    }
}

/// Pool-adjacent-violators fit (nondecreasing), weighted by trial count.
fn pava(points: &[GridPoint]) -> Vec<f64> {
    // blocks of (weighted mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(points.len());
    for p in points {
        blocks.push((p.f_out, (p.trials as f64).max(1.0), 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().expect("nonempty") = ((m1 * w1 + m2 * w2) / w, w, l1 + l2);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, l)| std::iter::repeat_n(m, l))
        .collect()
}

/// Rounds to the cache's 10-significant-digit rendering so in-memory and
/// reloaded maps agree exactly.
fn cache_round(x: f64) -> f64 {
    fmt_sig10(x).parse().expect("rendered decimal parses")
}

/// Estimates every grid point. Each point's generator streams are keyed by
/// its input fidelity, so adding grid points leaves existing rows unchanged.
pub fn build_fidelity_map(
    code: &dyn DistillationCode,
    grid: &[f64],
    policy: TrialPolicy,
    seed: u64,
) -> Result<FidelityMap> {
    let mut points = Vec::with_capacity(grid.len() + 1);
    for &f in grid {
        if !(0.25..=1.0).contains(&f) {
            return Err(Error::OutOfRange {
                what: "grid input fidelity",
                value: f,
                range: "[1/4, 1]",
            });
        }
        let trials = policy.trials_at(f);
        let point_seed = rng::derive_seed(seed, "map-point", f.to_bits());
        let est = estimate_output_fidelity(code, Fidelity::new(f)?, trials, point_seed)?;
        points.push(GridPoint {
            f_in: cache_round(f),
            f_out: cache_round(est.f_out),
            trials: est.trials,
            stderr: cache_round(est.stderr),
        });
    }
    FidelityMap::from_points(code.id(), points)
}

/// Cache file for a map built with these settings.
pub fn cache_path(dir: &Path, code: CodeId, policy: TrialPolicy, seed: u64) -> PathBuf {
    let stream = match code {
        CodeId::Conv313 { stream_blocks } => format!("-b{stream_blocks}"),
        CodeId::Toric { .. } => String::new(),
    };
    dir.join(format!("{code}{stream}-t{}-{}-s{seed}.csv", policy.base, policy.high))
}

/// Loads a cached map when one exists for exactly this grid, otherwise builds and stores it.
pub fn load_or_build(dir: &Path, code: CodeId, grid: &[f64], policy: TrialPolicy, seed: u64) -> Result<FidelityMap> {
    let path = cache_path(dir, code, policy, seed);
    let stream_blocks = match code {
        CodeId::Conv313 { stream_blocks } => stream_blocks,
        CodeId::Toric { .. } => DEFAULT_STREAM_BLOCKS,
    };
    if path.exists() {
        if let Ok(map) = FidelityMap::read(&path, stream_blocks) {
            let mut want: Vec<f64> = grid.iter().map(|&f| cache_round(f)).collect();
            if !want.contains(&1.0) {
                want.push(1.0);
            }
            want.sort_by(f64::total_cmp);
            let have: Vec<f64> = map.points().iter().map(|p| p.f_in).collect();
            if have == want && map.code() == code {
                return Ok(map);
            }
        }
    }
    let map = build_fidelity_map(distiller(code)?.as_ref(), grid, policy, seed)?;
    map.write(&path)?;
    Ok(map)
}

/// Classes of each logical pair in one toric trial; used for per-pair statistics.
pub fn toric_trial_classes(code: &ToricCode, f: Fidelity, rng: &mut impl Rng) -> Result<[Gf4; 2]> {
    let mut e = PauliString::identity(code.num_qubits());
    fill_werner_error(f, e.symbols_mut(), rng);
    code.decode_to_class(&e)
}
