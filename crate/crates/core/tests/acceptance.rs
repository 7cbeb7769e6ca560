//! Acceptance suite. Runs as a plain binary so every verdict line is printed.
//!
//! Deterministic checks are enforced and fail the run. Checks that compare
//! Monte-Carlo results against the published numbers are reported with their
//! measured values but not enforced.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use qchain_core::conv::ConvCode313;
use qchain_core::distill::{
    self, build_fidelity_map, distiller, estimate_output_fidelity, CodeId, FidelityMap, TrialPolicy,
    DEFAULT_STREAM_BLOCKS,
};
use qchain_core::pauli::{Gf4, PauliString};
use qchain_core::resources::{memory_trace, q_max_closed_form, BlockShape, ReleaseConvention, Role, Ticks};
use qchain_core::schedule::{
    enumerate_compositions, optimal_schedule, rate_sweep, Composition, NetworkConfig, Snapshot,
};
use qchain_core::toric::ToricCode;
use qchain_core::werner::{
    bsm_combine, chain_fidelity, distillable_entanglement, fidelity_from_werner, uniform_chain_fidelity,
    werner_from_fidelity, Fidelity, HASHING_THRESHOLD,
};

const SEED: u64 = 2024;
const M: usize = 450;

const CONV: CodeId = CodeId::Conv313 {
    stream_blocks: DEFAULT_STREAM_BLOCKS,
};
const TORIC18: CodeId = CodeId::Toric { d: 3 };
const TORIC50: CodeId = CodeId::Toric { d: 5 };

struct Check {
    what: String,
    pass: bool,
    enforced: bool,
}

#[derive(Default)]
struct Report {
    checks: Vec<Check>,
}

impl Report {
    fn enforce(&mut self, pass: bool, what: impl Into<String>) {
        self.checks.push(Check {
            what: what.into(),
            pass,
            enforced: true,
        });
    }

    fn compare(&mut self, pass: bool, what: impl Into<String>) {
        self.checks.push(Check {
            what: what.into(),
            pass,
            enforced: false,
        });
    }
}

struct Maps {
    dir: PathBuf,
    built: HashMap<String, FidelityMap>,
}

impl Maps {
    fn get(&mut self, code: CodeId) -> &FidelityMap {
        let dir = self.dir.clone();
        self.built.entry(code.to_string()).or_insert_with(|| {
            distill::load_or_build(&dir, code, &distill::default_grid(), TrialPolicy::default(), SEED)
                .expect("fidelity map")
        })
    }
}

fn f(x: f64) -> Fidelity {
    Fidelity::new(x).unwrap()
}

fn network(code: CodeId, repeaters: usize, f0: f64, p: f64) -> NetworkConfig {
    NetworkConfig {
        repeaters,
        multiplexing: M,
        p,
        f0: f(f0),
        code,
        snapshots: 200,
        tau: 1.0,
    }
}

/// Closed-form chain fidelity: Werner parameters multiply over `segments` links.
fn chain_oracle(f0: f64, segments: usize) -> f64 {
    let w = (4.0 * f0 - 1.0) / 3.0;
    (3.0 * w.powi(segments as i32) + 1.0) / 4.0
}

fn criterion_1(_: &mut Maps, r: &mut Report) {
    for (n, f0, reference) in [(8, 0.99, 0.91), (9, 0.99, 0.90), (8, 0.97, 0.77), (9, 0.97, 0.75)] {
        let cfg = network(CONV, n, f0, 1.0);
        let (comp, eval) = optimal_schedule(&Snapshot::full(&cfg), None, &cfg).unwrap();
        let want = chain_oracle(f0, n + 1);
        r.enforce(
            eval.e2e_count == M && (eval.avg_fidelity - want).abs() < 1e-4 && comp == Composition::single(n + 1),
            format!(
                "{{3,{n}}} F0={f0}: {} links at {:.4} via {comp} (closed form {want:.4}, reference {reference})",
                eval.e2e_count, eval.avg_fidelity
            ),
        );
        r.enforce(
            (eval.avg_fidelity - reference).abs() < 0.01,
            format!("{{3,{n}}} F0={f0}: two-decimal reference value {reference} within 0.01"),
        );
    }
}

fn criterion_2(maps: &mut Maps, r: &mut Report) {
    let rows = [
        (TORIC50, 8, 0.99, 18, 0.99, 0.005),
        (TORIC50, 8, 0.97, 18, 0.98, 0.005),
        (TORIC50, 9, 0.97, 18, 0.98, 0.005),
        (TORIC18, 8, 0.97, 50, 0.89, 0.01),
        (TORIC18, 9, 0.97, 50, 0.88, 0.01),
    ];
    for (code, n, f0, count, reference, tol) in rows {
        let cfg = network(code, n, f0, 1.0);
        let map = maps.get(code);
        let (comp, eval) = optimal_schedule(&Snapshot::full(&cfg), Some(map), &cfg).unwrap();
        let name = format!("{{{},{n}}} F0={f0}", code.n());
        r.enforce(
            eval.e2e_count == count,
            format!(
                "{name}: {} end-to-end links via {comp} (expected {count})",
                eval.e2e_count
            ),
        );
        r.compare(
            (eval.avg_fidelity - reference).abs() <= tol,
            format!(
                "{name}: avg fidelity {:.4} vs expected {reference} ± {tol}",
                eval.avg_fidelity
            ),
        );
    }
}

fn criterion_3(maps: &mut Maps, r: &mut Report) {
    for (code, n) in [(TORIC18, 8), (TORIC18, 9), (TORIC50, 8), (TORIC50, 9)] {
        let cfg = network(code, n, 0.97, 1.0);
        let (comp, _) = optimal_schedule(&Snapshot::full(&cfg), Some(maps.get(code)), &cfg).unwrap();
        r.compare(
            comp == Composition::all_ones(n + 1),
            format!("{{{},{n}}} F0=0.97 selects {comp} (expected: all ones)", code.n()),
        );
    }
    for (code, n) in [(CONV, 8), (TORIC18, 8), (TORIC50, 9)] {
        let cfg = network(code, n, 0.99, 1.0);
        let (comp, _) = optimal_schedule(&Snapshot::full(&cfg), Some(maps.get(code)), &cfg).unwrap();
        r.compare(
            comp == Composition::single(n + 1),
            format!("{{{},{n}}} F0=0.99 selects {comp} (expected: {})", code.n(), n + 1),
        );
    }
    for n in [8, 9] {
        let cfg = network(CONV, n, 0.97, 1.0);
        let (comp, eval) = optimal_schedule(&Snapshot::full(&cfg), Some(maps.get(CONV)), &cfg).unwrap();
        r.compare(
            eval.d_total == 0.0,
            format!(
                "{{3,{n}}} F0=0.97: d_total {:.3} via {comp} (expected: 0)",
                eval.d_total
            ),
        );
    }
}

fn criterion_4(maps: &mut Maps, r: &mut Report) {
    let cfg = network(TORIC50, 8, 0.99, 1.0);
    let rows = rate_sweep(&cfg, &[0.9, 1.0], Some(maps.get(TORIC50)), SEED).unwrap();
    r.enforce(
        rows[0].snapshots >= 200,
        format!("{} snapshots at p=0.9", rows[0].snapshots),
    );
    r.compare(
        rows[0].mean_d_total > rows[1].mean_d_total,
        format!(
            "{{50,8}} F0=0.99: mean d_total {:.3} at p=0.9 vs {:.3} at p=1",
            rows[0].mean_d_total, rows[1].mean_d_total
        ),
    );
}

fn criterion_5(_: &mut Maps, r: &mut Report) {
    let t = Ticks::REFERENCE;
    let shape = BlockShape::new(50, 2).unwrap();
    let m = M as u64;
    let horizon = 4 * t.t3();
    for (role, conv, want) in [
        (Role::Bsm, ReleaseConvention::Lagged, 54 * m),
        (Role::Distillation, ReleaseConvention::Immediate, 704 * m / 10),
    ] {
        let trace = memory_trace(role, &t, m, shape, horizon, conv).unwrap();
        let closed = q_max_closed_form(role, &t, m, shape);
        r.enforce(
            trace.max_occupancy == want && closed == want as f64,
            format!(
                "{role}: simulated max {} closed form {closed} expected {want}",
                trace.max_occupancy
            ),
        );
    }
}

fn toric_corrects(code: &ToricCode, e: &PauliString) -> bool {
    code.decode_to_class(e).unwrap().iter().all(|c| c.is_identity())
}

fn criterion_6(_: &mut Maps, r: &mut Report) {
    let paulis = [Gf4::X, Gf4::Y, Gf4::Z];

    let d3 = ToricCode::new(3).unwrap();
    let mut fails = 0;
    let mut cases = 0;
    for q in 0..d3.num_qubits() {
        for &p in &paulis {
            cases += 1;
            fails += usize::from(!toric_corrects(
                &d3,
                &PauliString::single_type(d3.num_qubits(), &[q], p),
            ));
        }
    }
    r.enforce(
        cases == 54 && fails == 0,
        format!("toric d=3: {} of {cases} weight-1 errors corrected", cases - fails),
    );

    let d5 = ToricCode::new(5).unwrap();
    let n = d5.num_qubits();
    let (mut fails, mut cases) = (0, 0);
    for a in 0..n {
        for &pa in &paulis {
            let mut e = PauliString::identity(n);
            e.set(a, pa);
            cases += 1;
            fails += usize::from(!toric_corrects(&d5, &e));
            for b in a + 1..n {
                for &pb in &paulis {
                    e.set(b, pb);
                    cases += 1;
                    fails += usize::from(!toric_corrects(&d5, &e));
                }
                e.set(b, Gf4::I);
            }
        }
    }
    r.enforce(
        cases == 11_175 && fails == 0,
        format!("toric d=5: {} of {cases} weight-≤2 errors corrected", cases - fails),
    );

    let conv = ConvCode313::new().unwrap();
    let blocks = 10;
    let (mut fails, mut cases) = (0, 0);
    for q in 0..3 * blocks {
        for &p in &paulis {
            let e = PauliString::single_type(3 * blocks, &[q], p);
            cases += 1;
            fails += usize::from(!conv.decode_to_classes(&e).unwrap().iter().all(|c| c.is_identity()));
        }
    }
    r.enforce(
        fails == 0,
        format!(
            "[[3,1,3]] stream of {blocks} blocks: {} of {cases} single errors corrected",
            cases - fails
        ),
    );

    for blocks in 1..=3 {
        let n = 3 * blocks;
        let mut min_weight: HashMap<Vec<bool>, usize> = HashMap::new();
        for code in 0u64..(1 << (2 * n)) {
            let e = PauliString::from_symbols((0..n).map(|q| Gf4::from_bits(((code >> (2 * q)) & 3) as u8)).collect());
            let w = e.weight();
            min_weight
                .entry(conv.syndrome(&e).unwrap())
                .and_modify(|m| *m = (*m).min(w))
                .or_insert(w);
        }
        let mismatches = min_weight
            .iter()
            .filter(|(syn, &w)| {
                let dec = conv.viterbi_decode(syn).unwrap();
                conv.syndrome(&dec).unwrap() != **syn || dec.weight() != w
            })
            .count();
        r.enforce(
            mismatches == 0,
            format!(
                "[[3,1,3]] B={blocks}: Viterbi matches brute force on {} syndromes",
                min_weight.len() - mismatches
            ),
        );
    }
}

fn criterion_7(maps: &mut Maps, r: &mut Report) {
    for (code, below) in [(CONV, false), (TORIC18, true), (TORIC50, true)] {
        let map = maps.get(code);
        let th = map.break_even().map(|f| f.value());
        let at = map.points().iter().find(|p| (p.f_in - 0.97).abs() < 1e-12).unwrap();
        let margin = at.f_out - 0.97;
        let guarded = margin.abs() > 3.0 * at.stderr;
        let side = if below { "< 0.97" } else { "> 0.97" };
        let ok = match th {
            Ok(t) => (t < 0.97) == below && guarded && (margin > 0.0) == below,
            Err(_) => false,
        };
        r.compare(
            ok,
            format!(
                "{code}: break-even {} (expected {side}); F_out(0.97) = {:.5} ± {:.5}",
                th.map_or("none".into(), |t| format!("{t:.4}")),
                at.f_out,
                at.stderr
            ),
        );
    }
}

fn criterion_8(maps: &mut Maps, r: &mut Report) {
    let grid: Vec<f64> = (0..=75).map(|i| 0.25 + 0.01 * i as f64).collect();
    let mut algebra = true;
    for &a in &grid {
        let (fa, wa) = (f(a), werner_from_fidelity(f(a)).unwrap());
        algebra &= (fidelity_from_werner(wa).value() - a).abs() < 1e-12;
        algebra &= (bsm_combine(fa, Fidelity::ONE).unwrap().value() - a).abs() < 1e-12;
        algebra &= (bsm_combine(fa, Fidelity::MIXED).unwrap().value() - 0.25).abs() < 1e-12;
        algebra &= (uniform_chain_fidelity(fa, 4).unwrap().value() - chain_oracle(a, 4)).abs() < 1e-12;
        algebra &= (a <= HASHING_THRESHOLD) == (distillable_entanglement(fa) == 0.0);
        for &b in grid.iter().step_by(7) {
            let ab = bsm_combine(fa, f(b)).unwrap().value();
            algebra &= (ab - bsm_combine(f(b), fa).unwrap().value()).abs() < 1e-12;
            algebra &= ab <= a.min(b) + 1e-12;
            let triple = chain_fidelity(&[fa, f(b), f(0.9)]).unwrap().value();
            algebra &= (triple - bsm_combine(f(ab), f(0.9)).unwrap().value()).abs() < 1e-12;
        }
    }
    algebra &= distillable_entanglement(Fidelity::ONE) == 1.0;
    r.enforce(
        algebra,
        "Werner algebra: round trip, identity, absorption, symmetry, chaining, hashing cutoff",
    );

    for code in [CONV, TORIC18, TORIC50] {
        let d = distiller(code).unwrap();
        let one = estimate_output_fidelity(d.as_ref(), Fidelity::ONE, 10_000, SEED).unwrap();
        let mixed = estimate_output_fidelity(d.as_ref(), Fidelity::MIXED, 20_000, SEED).unwrap();
        let top = maps.get(code).query(Fidelity::ONE).unwrap().value();
        r.enforce(
            one.f_out == 1.0 && top == 1.0 && (mixed.f_out - 0.25).abs() <= 3.0 * mixed.stderr,
            format!(
                "{code}: F_out(1) = {}, F_out(0.25) = {:.4} ± {:.4}",
                one.f_out, mixed.f_out, mixed.stderr
            ),
        );
    }

    let counts: Vec<usize> = (1..=13).map(|s| enumerate_compositions(s).unwrap().len()).collect();
    r.enforce(
        counts.iter().enumerate().all(|(i, &c)| c == 1 << i),
        format!("compositions of N+1 segments for N = 0..12: {counts:?}"),
    );

    let shape = BlockShape::new(50, 2).unwrap();
    let mut conserved = true;
    for role in [Role::Bsm, Role::Distillation] {
        for conv in [ReleaseConvention::Immediate, ReleaseConvention::Lagged] {
            let trace = memory_trace(role, &Ticks::REFERENCE, 450, shape, 200, conv).unwrap();
            conserved &= trace
                .samples
                .iter()
                .all(|s| s.allocated_total == s.post_release + s.released_total);
        }
    }
    r.enforce(
        conserved,
        "memory traces: allocated = occupied + released at every tick",
    );

    let small = TrialPolicy::scaled(2_000);
    let build =
        || build_fidelity_map(distiller(TORIC18).unwrap().as_ref(), &distill::default_grid(), small, 7).unwrap();
    let (a, b) = (build().to_csv(), build().to_csv());
    let reread = FidelityMap::from_csv(&a, DEFAULT_STREAM_BLOCKS).unwrap().to_csv();
    let cfg = NetworkConfig {
        snapshots: 50,
        ..network(TORIC50, 8, 0.99, 1.0)
    };
    let map50 = maps.get(TORIC50);
    let sweep = || rate_sweep(&cfg, &[0.5, 0.9], Some(map50), 7).unwrap();
    r.enforce(
        a == b && a == reread && sweep() == sweep(),
        "fixed seeds: map files and rate sweeps reproduce exactly",
    );
}

fn main() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-maps");
    std::fs::create_dir_all(&dir).unwrap();
    let mut maps = Maps {
        dir,
        built: HashMap::new(),
    };
    type Criterion = fn(&mut Maps, &mut Report);
    let criteria: [(&str, Criterion); 8] = [
        ("BSM-only table rows", criterion_1),
        ("distillation table rows", criterion_2),
        ("optimal compositions", criterion_3),
        ("non-monotone rate in p", criterion_4),
        ("memory maxima", criterion_5),
        ("decoder correctness", criterion_6),
        ("break-even ordering", criterion_7),
        ("algebra and determinism", criterion_8),
    ];
    let mut enforced_failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut report = Report::default();
        run(&mut maps, &mut report);
        for c in &report.checks {
            let mark = match (c.pass, c.enforced) {
                (true, _) => "ok  ",
                (false, true) => "FAIL",
                (false, false) => "diff",
            };
            println!("    [{mark}] {}", c.what);
        }
        enforced_failures += report.checks.iter().filter(|c| c.enforced && !c.pass).count();
        let pass = report.checks.iter().all(|c| c.pass);
        println!(
            "criterion {} ({name}): {} in {:.1}s",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if enforced_failures > 0 {
        eprintln!("{enforced_failures} enforced check(s) failed");
        std::process::exit(1);
    }
}
