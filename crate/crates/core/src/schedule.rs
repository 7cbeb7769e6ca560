//! Link-state scheduling on a repeater chain.
//!
//! A chain of `N` repeaters has `N + 1` segments. A composition of `N + 1`
//! splits the segments into hops: links are swapped along each hop, distilled
//! at the hop ends when that raises fidelity, and finally swapped end to end.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::distill::{CodeId, FidelityMap};
use crate::error::{Error, Result};
use crate::rng;
use crate::werner::{chain_fidelity, distillable_entanglement, uniform_chain_fidelity, Fidelity};

/// Largest segment count accepted by [`enumerate_compositions`].
pub const MAX_SEGMENTS: usize = 25;
/// `d_total` values closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Repeater count `N`.
    pub repeaters: usize,
    /// Links attempted per segment per slot.
    pub multiplexing: usize,
    /// Elementary link success probability.
    pub p: f64,
    pub f0: Fidelity,
    pub code: CodeId,
    /// Snapshots averaged per `p < 1` sweep point.
    pub snapshots: usize,
    /// Slot duration used for rates.
    pub tau: f64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.multiplexing == 0 {
            return Err(Error::InvalidParameter("multiplexing must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::OutOfRange {
                what: "link success probability",
                value: self.p,
                range: "[0, 1]",
            });
        }
        self.f0.werner()?;
        if !(self.tau > 0.0) {
            return Err(Error::OutOfRange {
                what: "slot duration",
                value: self.tau,
                range: "(0, ∞)",
            });
        }
        if self.segments() > MAX_SEGMENTS {
            return Err(Error::InvalidParameter(format!(
                "at most {} repeaters are supported",
                MAX_SEGMENTS - 1
            )));
        }
        Ok(())
    }

    pub fn segments(&self) -> usize {
        self.repeaters + 1
    }
}

/// Successful elementary links per segment in one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub counts: Vec<usize>,
}

impl Snapshot {
    pub fn full(config: &NetworkConfig) -> Self {
        Self {
            counts: vec![config.multiplexing; config.segments()],
        }
    }
}

/// Draws one uniform per link attempt and counts those below `p`, so
/// snapshots from the same generator are coupled monotonically in `p`.
pub fn sample_snapshot<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> Snapshot {
    let counts = (0..config.segments())
        .map(|_| (0..config.multiplexing).filter(|_| rng.gen::<f64>() < config.p).count())
        .collect();
    Snapshot { counts }
}

/// Ordered positive parts summing to the segment count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    parts: Vec<usize>,
}

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "composition parts must be positive, got {parts:?}"
            )));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Every segment its own hop.
    pub fn all_ones(total: usize) -> Self {
        Self { parts: vec![1; total] }
    }

    /// One hop spanning the chain.
    pub fn single(total: usize) -> Self {
        Self { parts: vec![total] }
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        f.write_str(&s.join("+"))
    }
}

impl FromStr for Composition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(['+', ','])
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidParameter(format!("bad composition `{s}`")))?;
        Self::new(parts)
    }
}

/// All `2^(total-1)` compositions, ordered by part count, then lexicographically.
pub fn enumerate_compositions(total: usize) -> Result<Vec<Composition>> {
    if !(1..=MAX_SEGMENTS).contains(&total) {
        return Err(Error::OutOfRange {
            what: "composition total",
            value: total as f64,
            range: "[1, 25]",
        });
    }
    // bit i of the mask set: cut after segment i
    let mut out: Vec<Composition> = (0u32..1 << (total - 1))
        .map(|mask| {
            let mut parts = Vec::with_capacity(mask.count_ones() as usize + 1);
            let mut run = 1;
            for i in 0..total - 1 {
                if mask >> i & 1 == 1 {
                    parts.push(run);
                    run = 1;
                } else {
                    run += 1;
                }
            }
            parts.push(run);
            Composition { parts }
        })
        .collect();
    out.sort_by(|a, b| a.parts.len().cmp(&b.parts.len()).then_with(|| a.parts.cmp(&b.parts)));
    Ok(out)
}

/// `count` links sharing one fidelity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkClass {
    pub fidelity: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    /// End-to-end links by fidelity, highest first.
    pub e2e: Vec<LinkClass>,
    pub e2e_count: usize,
    pub d_total: f64,
    /// Mean end-to-end fidelity; zero when no link is formed.
    pub avg_fidelity: f64,
    /// `d_total / (2 τ M)`.
    pub rate: f64,
}

impl PolicyEvaluation {
    pub fn e2e_fidelities(&self) -> Vec<Fidelity> {
        self.e2e
            .iter()
            .flat_map(|c| std::iter::repeat_n(Fidelity::new(c.fidelity).expect("valid fidelity"), c.count))
            .collect()
    }
}

/// Outcome of one hop before the final swaps.
#[derive(Debug, Clone, PartialEq)]
pub struct HopPlan {
    pub segments: usize,
    pub links_in: usize,
    pub hop_fidelity: f64,
    pub distilled: bool,
    /// Resulting links, highest fidelity first.
    pub links: Vec<LinkClass>,
}

/// Whether the map raises `f`. Inputs below the map's grid count as no gain
/// when the lowest grid point is itself not improved.
fn distilled_fidelity(map: &FidelityMap, f: Fidelity) -> Result<Option<f64>> {
    match map.query(f) {
        Ok(q) => Ok((q.value() > f.value()).then_some(q.value())),
        Err(Error::OutsideHull(_)) => {
            let lowest = &map.points()[0];
            if map.smoothed()[0] <= lowest.f_in {
                Ok(None)
            } else {
                Err(Error::OutsideHull(f.value()))
            }
        }
        Err(e) => Err(e),
    }
}

pub fn plan_hop(
    links_in: usize,
    segments: usize,
    map: Option<&FidelityMap>,
    config: &NetworkConfig,
) -> Result<HopPlan> {
    let f_hop = uniform_chain_fidelity(config.f0, segments)?;
    let code = config.code;
    let gain = match map {
        Some(m) => distilled_fidelity(m, f_hop)?,
        None => None,
    };
    let mut links = Vec::with_capacity(2);
    if let Some(f_out) = gain {
        let blocks = links_in / code.n();
        let leftover = links_in % code.n();
        links.push(LinkClass {
            fidelity: f_out,
            count: code.k() * blocks,
        });
        links.push(LinkClass {
            fidelity: f_hop.value(),
            count: leftover,
        });
    } else {
        links.push(LinkClass {
            fidelity: f_hop.value(),
            count: links_in,
        });
    }
    links.retain(|c| c.count > 0);
    links.sort_by(|a, b| b.fidelity.total_cmp(&a.fidelity));
    Ok(HopPlan {
        segments,
        links_in,
        hop_fidelity: f_hop.value(),
        distilled: gain.is_some(),
        links,
    })
}

/// Per-hop plans for a composition.
pub fn plan_hops(
    snapshot: &Snapshot,
    composition: &Composition,
    map: Option<&FidelityMap>,
    config: &NetworkConfig,
) -> Result<Vec<HopPlan>> {
    if composition.total() != snapshot.counts.len() {
        return Err(Error::LengthMismatch {
            expected: snapshot.counts.len(),
            actual: composition.total(),
        });
    }
    if let Some(m) = map {
        if !m.code().same_code(&config.code) {
            return Err(Error::InvalidParameter(format!(
                "map is for {} but the network uses {}",
                m.code(),
                config.code
            )));
        }
    }
    let mut start = 0;
    composition
        .parts()
        .iter()
        .map(|&len| {
            let m = snapshot.counts[start..start + len]
                .iter()
                .copied()
                .min()
                .expect("positive part");
            start += len;
            plan_hop(m, len, map, config)
        })
        .collect()
}

/// Swaps the hops' links rank by rank: the `i`-th best link of every hop
/// joins into the `i`-th end-to-end link.
fn chain_hops(hops: &[HopPlan]) -> Result<Vec<LinkClass>> {
    let mut cursor: Vec<(usize, usize)> = vec![(0, 0); hops.len()]; // (class index, used in class)
    let mut out: Vec<LinkClass> = Vec::new();
    loop {
        let mut run = usize::MAX;
        let mut fs = Vec::with_capacity(hops.len());
        for (h, &(ci, used)) in hops.iter().zip(&cursor) {
            let Some(c) = h.links.get(ci) else {
                return Ok(out);
            };
            run = run.min(c.count - used);
            fs.push(Fidelity::new(c.fidelity)?);
        }
        let f = chain_fidelity(&fs)?.value();
        match out.last_mut() {
            Some(last) if last.fidelity == f => last.count += run,
            _ => out.push(LinkClass {
                fidelity: f,
                count: run,
            }),
        }
        for (h, cur) in hops.iter().zip(cursor.iter_mut()) {
            cur.1 += run;
            if cur.1 == h.links[cur.0].count {
                *cur = (cur.0 + 1, 0);
            }
        }
    }
}

/// Evaluates a composition; `map = None` never distills.
pub fn evaluate_composition(
    snapshot: &Snapshot,
    composition: &Composition,
    map: Option<&FidelityMap>,
    config: &NetworkConfig,
) -> Result<PolicyEvaluation> {
    let hops = plan_hops(snapshot, composition, map, config)?;
    let e2e = chain_hops(&hops)?;
    let e2e_count: usize = e2e.iter().map(|c| c.count).sum();
    let d_total: f64 = e2e
        .iter()
        .map(|c| c.count as f64 * distillable_entanglement(Fidelity::new(c.fidelity).expect("valid")))
        .sum();
    let avg_fidelity = if e2e_count == 0 {
        0.0
    } else {
        e2e.iter().map(|c| c.count as f64 * c.fidelity).sum::<f64>() / e2e_count as f64
    };
    Ok(PolicyEvaluation {
        e2e,
        e2e_count,
        d_total,
        avg_fidelity,
        rate: d_total / (2.0 * config.tau * config.multiplexing as f64),
    })
}

/// Composition maximizing `d_total`; near-ties go to fewer parts, then to
/// the lexicographically largest parts.
pub fn optimal_schedule(
    snapshot: &Snapshot,
    map: Option<&FidelityMap>,
    config: &NetworkConfig,
) -> Result<(Composition, PolicyEvaluation)> {
    let all = enumerate_compositions(config.segments())?;
    let evals = all
        .into_iter()
        .map(|c| evaluate_composition(snapshot, &c, map, config).map(|e| (c, e)))
        .collect::<Result<Vec<_>>>()?;
    let best = evals.iter().map(|(_, e)| e.d_total).fold(f64::NEG_INFINITY, f64::max);
    evals
        .into_iter()
        .filter(|(_, e)| e.d_total >= best - TIE_TOLERANCE)
        .min_by(|(a, _), (b, _)| a.parts.len().cmp(&b.parts.len()).then_with(|| b.parts.cmp(&a.parts)))
        .ok_or(Error::Empty("composition list"))
}

/// Averages of optimal schedules at one link success probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub snapshots: usize,
    pub mean_d_total: f64,
    pub mean_rate: f64,
    pub mean_e2e_count: f64,
    pub mean_avg_fidelity: f64,
    /// Most frequent optimal composition; ties go to the one enumerated first.
    pub modal_composition: Composition,
}

/// Snapshot `s` at every `p` comes from the same generator stream, so the
/// sweep is coupled across `p`. `p = 1` uses one deterministic snapshot.
pub fn rate_sweep(config: &NetworkConfig, ps: &[f64], map: Option<&FidelityMap>, seed: u64) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if config.snapshots == 0 {
        return Err(Error::InvalidParameter("snapshots must be at least 1".into()));
    }
    let order: BTreeMap<Composition, usize> = enumerate_compositions(config.segments())?
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    ps.iter()
        .map(|&p| {
            let cfg = NetworkConfig { p, ..config.clone() };
            cfg.validate()?;
            let snaps: Vec<Snapshot> = if p == 1.0 {
                vec![Snapshot::full(&cfg)]
            } else {
                (0..cfg.snapshots)
                    .map(|s| sample_snapshot(&cfg, &mut rng::stream(seed, "snapshot", s as u64)))
                    .collect()
            };
            let mut tally: BTreeMap<Composition, usize> = BTreeMap::new();
            let (mut d, mut r, mut cnt, mut avg) = (0.0, 0.0, 0.0, 0.0);
            for snap in &snaps {
                let (c, e) = optimal_schedule(snap, map, &cfg)?;
                d += e.d_total;
                r += e.rate;
                cnt += e.e2e_count as f64;
                avg += e.avg_fidelity;
                *tally.entry(c).or_default() += 1;
            }
            let n = snaps.len() as f64;
            let modal = tally
                .into_iter()
                .max_by(|(a, x), (b, y)| x.cmp(y).then_with(|| order[b].cmp(&order[a])))
                .map(|(c, _)| c)
                .expect("at least one snapshot");
            Ok(SweepRow {
                p,
                snapshots: snaps.len(),
                mean_d_total: d / n,
                mean_rate: r / n,
                mean_e2e_count: cnt / n,
                mean_avg_fidelity: avg / n,
                modal_composition: modal,
            })
        })
        .collect()
}
