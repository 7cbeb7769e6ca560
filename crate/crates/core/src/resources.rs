//! Protocol latency and repeater memory occupancy.
//!
//! Memory is counted in single-qubit memories. Each slot a repeater
//! allocates `2M` memories as one batch. A BSM repeater frees a batch once
//! its swaps complete at `t₁ = τ_l + τ_p + τ_BSM`. A distillation repeater
//! frees the `(n−k)/n` share consumed by decoding at
//! `t₂ = τ_l + τ_p + τ_BSM + τ_Dec` and the rest after the final swaps at
//! `t₃ = t₂ + τ_BSM`.
//!
//! Within a tick the simulator allocates, applies partial (`t₂`) frees,
//! samples, applies full (`t₁`, `t₃`) frees and samples again. Under the
//! lagged convention every free lands one tick after its completion time.

use std::fmt;

use crate::error::{Error, Result};
use crate::format::fmt_sig10;

/// Derived communication latencies, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latencies {
    /// Travel time over half a segment.
    pub tau_l: f64,
    /// Heralding and processing time.
    pub tau_p: f64,
    /// Transmission of distillation corrections across the chain.
    pub tau_dist: f64,
    /// Classical communication from the repeater farthest from Bob.
    pub tau_cc: f64,
}

/// Latencies for a chain of length `l` (m) with `n` repeaters and signal speed `c` (m/s).
pub fn latencies(l: f64, n: usize, c: f64) -> Result<Latencies> {
    for (what, v) in [("chain length", l), ("signal speed", c)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::OutOfRange {
                what,
                value: v,
                range: "(0, ∞)",
            });
        }
    }
    let segs = (n + 1) as f64;
    Ok(Latencies {
        tau_l: l / (2.0 * segs * c),
        tau_p: (2 * n + 1) as f64 * l / (2.0 * segs * c),
        tau_dist: l / c,
        tau_cc: n as f64 * l / (segs * c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalLatency {
    pub total: f64,
    /// Whether `τ_BSM < τ_Dist < τ_BSM + τ_CC`, under which the total is derived.
    pub ordering_holds: bool,
}

pub fn total_latency(lat: &Latencies, tau_bsm: f64, tau_dec: f64) -> TotalLatency {
    TotalLatency {
        total: lat.tau_l + lat.tau_p + 2.0 * tau_bsm + tau_dec + lat.tau_cc,
        ordering_holds: tau_bsm < lat.tau_dist && lat.tau_dist < tau_bsm + lat.tau_cc,
    }
}

/// Durations in seconds for the memory model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConfig {
    pub tau: f64,
    pub tau_l: f64,
    pub tau_p: f64,
    pub tau_bsm: f64,
    pub tau_dec: f64,
}

impl TimingConfig {
    pub fn from_chain(tau: f64, l: f64, n: usize, c: f64, tau_bsm: f64, tau_dec: f64) -> Result<Self> {
        let lat = latencies(l, n, c)?;
        Ok(Self {
            tau,
            tau_l: lat.tau_l,
            tau_p: lat.tau_p,
            tau_bsm,
            tau_dec,
        })
    }

    /// Durations as whole slots; each must be a multiple of `τ`.
    pub fn ticks(&self) -> Result<Ticks> {
        if !(self.tau > 0.0) {
            return Err(Error::OutOfRange {
                what: "slot duration",
                value: self.tau,
                range: "(0, ∞)",
            });
        }
        let whole = |what: &'static str, v: f64| -> Result<u64> {
            let r = v / self.tau;
            if v < 0.0 || (r - r.round()).abs() > 1e-9 * r.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{what} = {v} is not a nonnegative multiple of the slot duration {}",
                    self.tau
                )));
            }
            Ok(r.round() as u64)
        };
        Ok(Ticks {
            l: whole("tau_l", self.tau_l)?,
            p: whole("tau_p", self.tau_p)?,
            bsm: whole("tau_bsm", self.tau_bsm)?,
            dec: whole("tau_dec", self.tau_dec)?,
        })
    }
}

/// Durations in slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ticks {
    pub l: u64,
    pub p: u64,
    pub bsm: u64,
    pub dec: u64,
}

impl Ticks {
    /// `τ_l = τ`, `τ_p = 20τ`, `τ_BSM = 4τ`, `τ_Dec = 10τ`.
    pub const REFERENCE: Ticks = Ticks {
        l: 1,
        p: 20,
        bsm: 4,
        dec: 10,
    };

    pub fn t1(&self) -> u64 {
        self.l + self.p + self.bsm
    }

    pub fn t2(&self) -> u64 {
        self.t1() + self.dec
    }

    pub fn t3(&self) -> u64 {
        self.t2() + self.bsm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Bsm,
    Distillation,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Bsm => "bsm",
            Role::Distillation => "distillation",
        })
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bsm" => Ok(Role::Bsm),
            "distillation" | "dist" => Ok(Role::Distillation),
            _ => Err(Error::InvalidParameter(format!("unknown role `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReleaseConvention {
    /// Frees land in the tick they complete.
    Immediate,
    /// Frees land one tick after they complete.
    Lagged,
}

impl std::str::FromStr for ReleaseConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "immediate" => Ok(ReleaseConvention::Immediate),
            "lagged" => Ok(ReleaseConvention::Lagged),
            _ => Err(Error::InvalidParameter(format!("unknown release convention `{s}`"))),
        }
    }
}

/// Block parameters `(n, k)` of the distillation code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockShape {
    pub n: u64,
    pub k: u64,
}

impl BlockShape {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if n == 0 || k > n {
            return Err(Error::InvalidParameter(format!("invalid block shape n = {n}, k = {k}")));
        }
        Ok(Self { n, k })
    }
}

/// Peak occupancy predicted by the closed forms.
pub fn q_max_closed_form(role: Role, t: &Ticks, m: u64, code: BlockShape) -> f64 {
    let two_m = 2 * m;
    match role {
        Role::Bsm => (two_m * (t.t1() + 2)) as f64,
        Role::Distillation => {
            let BlockShape { n, k } = code;
            let whole = (t.t3() + 1) * n;
            let freed = (1 + t.bsm) * (n - k);
            (two_m * (whole - freed)) as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSample {
    pub tick: u64,
    pub post_alloc: u64,
    pub post_release: u64,
    pub allocated_total: u64,
    pub released_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryTrace {
    pub role: Role,
    pub samples: Vec<TraceSample>,
    pub max_occupancy: u64,
}

impl MemoryTrace {
    pub const CSV_HEADER: &'static str = "tick,time_over_tau,role,occupancy_post_alloc,occupancy_post_release";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for x in &self.samples {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                x.tick,
                fmt_sig10(x.tick as f64),
                self.role,
                x.post_alloc,
                x.post_release
            ));
        }
        s
    }
}

/// Simulates `horizon` slots of one repeater's memory.
pub fn memory_trace(
    role: Role,
    t: &Ticks,
    m: u64,
    code: BlockShape,
    horizon: u64,
    convention: ReleaseConvention,
) -> Result<MemoryTrace> {
    let lag = match convention {
        ReleaseConvention::Immediate => 0,
        ReleaseConvention::Lagged => 1,
    };
    let last = match role {
        Role::Bsm => t.t1(),
        Role::Distillation => t.t3(),
    } + lag;
    if horizon < last + 3 {
        return Err(Error::InvalidParameter(format!(
            "horizon of {horizon} ticks is shorter than the {} needed to fill the pipeline",
            last + 3
        )));
    }
    let batch = 2 * m;
    // memories a batch gives up when decoding discards n−k of every n links
    let partial = 2 * (m / code.n) * (code.n - code.k);
    let mut occupancy = 0u64;
    let (mut allocated, mut released) = (0u64, 0u64);
    let mut samples = Vec::with_capacity(horizon as usize);
    // a batch allocated at tick s frees at s + offset (+ lag)
    let due = |tick: u64, offset: u64| tick >= offset + lag;
    for tick in 0..horizon {
        occupancy += batch;
        allocated += batch;
        let mut free = |amount: u64, occ: &mut u64| {
            *occ -= amount;
            released += amount;
        };
        if role == Role::Distillation && due(tick, t.t2()) {
            free(partial, &mut occupancy);
        }
        let post_alloc = occupancy;
        match role {
            Role::Bsm if due(tick, t.t1()) => free(batch, &mut occupancy),
            Role::Distillation if due(tick, t.t3()) => free(batch - partial, &mut occupancy),
            _ => {}
        }
        samples.push(TraceSample {
            tick,
            post_alloc,
            post_release: occupancy,
            allocated_total: allocated,
            released_total: released,
        });
    }
    let max_occupancy = samples.iter().map(|s| s.post_alloc).max().unwrap_or(0);
    Ok(MemoryTrace {
        role,
        samples,
        max_occupancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TOR5: BlockShape = BlockShape { n: 50, k: 2 };

    #[test]
    fn latency_example() {
        let lat = latencies(100e3, 9, 2e8).unwrap();
        assert_relative_eq!(lat.tau_l, 25e-6, max_relative = 1e-12);
        assert_relative_eq!(lat.tau_p, 475e-6, max_relative = 1e-12);
        assert_relative_eq!(lat.tau_dist, 500e-6, max_relative = 1e-12);
        assert_relative_eq!(lat.tau_cc, 450e-6, max_relative = 1e-12);
        let total = total_latency(&lat, 10e-6, 50e-6);
        assert_relative_eq!(total.total, 1020e-6, max_relative = 1e-12);
        // τ_Dist = 500 µs is not below τ_BSM + τ_CC = 460 µs
        assert!(!total.ordering_holds);
        assert!(latencies(0.0, 1, 2e8).is_err());
        assert!(latencies(1.0, 1, -2e8).is_err());
    }

    #[test]
    fn latency_edge_cases() {
        let lat = latencies(1000.0, 0, 1e3).unwrap();
        assert_eq!((lat.tau_l, lat.tau_p, lat.tau_cc), (0.5, 0.5, 0.0));
        let t = total_latency(&lat, 0.0, 0.0);
        assert_eq!(t.total, lat.tau_l + lat.tau_p + lat.tau_cc);
        let flagged = total_latency(&lat, 2.0, 0.0);
        assert!(!flagged.ordering_holds);
    }

    #[test]
    fn closed_forms() {
        let t = Ticks::REFERENCE;
        assert_eq!(q_max_closed_form(Role::Bsm, &t, 1, TOR5), 54.0);
        assert_relative_eq!(
            q_max_closed_form(Role::Distillation, &t, 1, TOR5),
            70.4,
            max_relative = 1e-15
        );
        assert_eq!(q_max_closed_form(Role::Distillation, &t, 450, TOR5), 31_680.0);
        let k_eq_n = BlockShape::new(7, 7).unwrap();
        assert_eq!(
            q_max_closed_form(Role::Distillation, &t, 3, k_eq_n),
            (6 * (t.t3() + 1)) as f64
        );
    }

    #[test]
    fn simulated_maxima_match_closed_forms() {
        let t = Ticks::REFERENCE;
        let bsm = memory_trace(Role::Bsm, &t, 450, TOR5, 100, ReleaseConvention::Lagged).unwrap();
        assert_eq!(bsm.max_occupancy as f64, q_max_closed_form(Role::Bsm, &t, 450, TOR5));
        assert_eq!(bsm.max_occupancy, 54 * 450);
        let dist = memory_trace(Role::Distillation, &t, 450, TOR5, 100, ReleaseConvention::Immediate).unwrap();
        assert_eq!(dist.max_occupancy, 31_680);
    }

    #[test]
    fn occupancy_grows_linearly_before_first_release() {
        let t = Ticks::REFERENCE;
        let tr = memory_trace(Role::Distillation, &t, 10, TOR5, 60, ReleaseConvention::Immediate).unwrap();
        for s in &tr.samples[..t.t2() as usize] {
            assert_eq!(s.post_alloc, 20 * (s.tick + 1));
        }
        assert!(memory_trace(Role::Bsm, &t, 10, TOR5, t.t1() + 2, ReleaseConvention::Immediate).is_err());
    }

    #[test]
    fn trace_is_periodic_once_filled() {
        let t = Ticks::REFERENCE;
        for role in [Role::Bsm, Role::Distillation] {
            let tr = memory_trace(role, &t, 450, TOR5, 120, ReleaseConvention::Lagged).unwrap();
            let tail = &tr.samples[60..];
            assert!(tail
                .windows(2)
                .all(|w| w[0].post_release == w[1].post_release && w[0].post_alloc == w[1].post_alloc));
            assert!(tail[0].post_alloc - tail[0].post_release > 0);
        }
    }

    #[test]
    fn trace_csv_shape() {
        let tr = memory_trace(Role::Bsm, &Ticks::REFERENCE, 1, TOR5, 30, ReleaseConvention::Lagged).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), MemoryTrace::CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "0,0.000000000,bsm,2,2");
        assert_eq!(csv.lines().count(), 31);
    }

    #[test]
    fn tick_conversion_checks_multiples() {
        let ok = TimingConfig {
            tau: 1e-6,
            tau_l: 1e-6,
            tau_p: 20e-6,
            tau_bsm: 4e-6,
            tau_dec: 10e-6,
        };
        assert_eq!(ok.ticks().unwrap(), Ticks::REFERENCE);
        assert!(TimingConfig { tau_dec: 10.5e-6, ..ok }.ticks().is_err());
        let chain = TimingConfig::from_chain(25e-6, 100e3, 9, 2e8, 0.0, 50e-6).unwrap();
        assert_eq!(
            chain.ticks().unwrap(),
            Ticks {
                l: 1,
                p: 19,
                bsm: 0,
                dec: 2
            }
        );
    }

    /// Sign of `Q_Dist − Q_BSM` from the closed forms against the threshold
    /// `τ_Dec ≥ (1 + τ_BSM/τ)(n−k)/n·τ − τ_BSM + τ`, in slots.
    #[test]
    fn distillation_peak_exceeds_bsm_peak_above_decoding_threshold() {
        for (n, k) in [(50, 2), (18, 2), (3, 1), (5, 5)] {
            let code = BlockShape::new(n, k).unwrap();
            for l in 0..3 {
                for p in [0, 5, 20] {
                    for bsm in 0..6 {
                        for dec in 0..12 {
                            let t = Ticks { l, p, bsm, dec };
                            let diff = q_max_closed_form(Role::Distillation, &t, 1, code)
                                - q_max_closed_form(Role::Bsm, &t, 1, code);
                            let threshold = (1 + bsm) as f64 * (n - k) as f64 / n as f64 - bsm as f64 + 1.0;
                            assert_eq!(diff >= -1e-12, dec as f64 >= threshold - 1e-12, "{t:?} {n} {k}");
                        }
                    }
                }
            }
        }
        // with τ_Dec = 0 the reference parameters give 50.4M against 54M
        let t = Ticks {
            dec: 0,
            ..Ticks::REFERENCE
        };
        assert_relative_eq!(
            q_max_closed_form(Role::Distillation, &t, 1, TOR5),
            50.4,
            max_relative = 1e-15
        );
    }

    proptest! {
        #[test]
        fn conservation_and_closed_form_agreement(l in 0u64..4, p in 0u64..25, bsm in 0u64..6, dec in 0u64..12, blocks in 1u64..10, kk in 1u64..5) {
            let code = BlockShape::new(5, kk.min(5)).unwrap();
            let m = 5 * blocks;
            let t = Ticks { l, p, bsm, dec };
            for role in [Role::Bsm, Role::Distillation] {
                for conv in [ReleaseConvention::Immediate, ReleaseConvention::Lagged] {
                    let tr = memory_trace(role, &t, m, code, t.t3() + 8, conv).unwrap();
                    for s in &tr.samples {
                        prop_assert_eq!(s.allocated_total, s.post_release + s.released_total);
                        prop_assert!(s.post_release <= s.post_alloc);
                    }
                }
            }
            let bsm_trace = memory_trace(Role::Bsm, &t, m, code, t.t3() + 8, ReleaseConvention::Lagged).unwrap();
            prop_assert_eq!(bsm_trace.max_occupancy as f64, q_max_closed_form(Role::Bsm, &t, m, code));
            let dist_trace = memory_trace(Role::Distillation, &t, m, code, t.t3() + 8, ReleaseConvention::Immediate).unwrap();
            prop_assert!((dist_trace.max_occupancy as f64 - q_max_closed_form(Role::Distillation, &t, m, code)).abs() < 1e-9);
        }
    }
}
