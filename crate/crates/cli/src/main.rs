//! `qchain`: runs the repeater-chain experiments and writes CSV artifacts.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::{Common, Params};
use qchain_core::distill::{self, CodeId, FidelityMap, TrialPolicy, DEFAULT_STREAM_BLOCKS};
use qchain_core::fmt_sig10;
use qchain_core::resources::{
    latencies, memory_trace, q_max_closed_form, total_latency, BlockShape, MemoryTrace, ReleaseConvention, Role, Ticks,
};
use qchain_core::rng;
use qchain_core::schedule::{self, NetworkConfig, Snapshot};
use qchain_core::werner::Fidelity;

#[derive(Parser)]
#[command(
    name = "qchain",
    version,
    about = "Repeater-chain scheduling and distillation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Builds a code's fidelity map and prints its break-even fidelity.
    FidelityMap(Common),
    /// Averages optimal schedules over link success probabilities.
    RateSweep(Common),
    /// Prints the optimal composition for one snapshot.
    Schedule(Common),
    /// Simulates memory occupancy at a repeater.
    MemoryTrace(Common),
    /// Prints the protocol latency breakdown.
    Latency(Common),
}

const MAP_KEYS: [&str; 6] = ["seed", "trials", "high_trials", "map_dir", "stream_blocks", "grid"];
const BSM_ONLY: &str = "bsm";

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::FidelityMap(c) => fidelity_map(&c),
        Command::RateSweep(c) => rate_sweep(&c),
        Command::Schedule(c) => schedule_cmd(&c),
        Command::MemoryTrace(c) => memory_trace_cmd(&c),
        Command::Latency(c) => latency(&c),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    MAP_KEYS.iter().chain(extra).copied().collect()
}

/// Parses a code id, restricted to the three codes the experiments use.
fn parse_code(p: &Params, raw: &str) -> Result<CodeId> {
    let id: CodeId = raw.parse()?;
    let id = match id {
        CodeId::Conv313 { .. } => CodeId::Conv313 {
            stream_blocks: p.get_or("stream_blocks", DEFAULT_STREAM_BLOCKS)?,
        },
        CodeId::Toric { d: 3 | 5 } => id,
        CodeId::Toric { .. } => bail!("unsupported code `{raw}`; expected conv-3-1-3, toric-18-2-3 or toric-50-2-5"),
    };
    Ok(id)
}

fn policy(p: &Params) -> Result<TrialPolicy> {
    let mut policy = match p.get::<u64>("trials")? {
        Some(base) => TrialPolicy::scaled(base),
        None => TrialPolicy::default(),
    };
    if let Some(high) = p.get("high_trials")? {
        policy.high = high;
    }
    if policy.base == 0 || policy.high == 0 {
        bail!("trial counts must be positive");
    }
    Ok(policy)
}

fn grid(p: &Params) -> Result<Vec<f64>> {
    Ok(p.list("grid")?.unwrap_or_else(distill::default_grid))
}

fn map_dir(p: &Params) -> Result<PathBuf> {
    let dir = p.path_or("map_dir", Path::new("maps"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

/// Cached map for `code`, built on demand; `None` for BSM-only runs.
fn load_map(p: &Params, code: Option<CodeId>) -> Result<Option<FidelityMap>> {
    let Some(code) = code else {
        return Ok(None);
    };
    let dir = map_dir(p)?;
    let map = distill::load_or_build(&dir, code, &grid(p)?, policy(p)?, p.seed()?)
        .with_context(|| format!("fidelity map for {code}"))?;
    Ok(Some(map))
}

fn write_output(p: &Params, text: &str) -> Result<()> {
    match p.get::<PathBuf>("output")? {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fidelity_map(common: &Common) -> Result<()> {
    let p = Params::resolve("fidelity-map", common, &keys(&["code", "output"]))?;
    let code = parse_code(&p, &p.require::<String>("code")?)?;
    let seed = p.seed()?;
    let policy = policy(&p)?;
    let grid = grid(&p)?;
    let path = match p.get::<PathBuf>("output")? {
        Some(path) => path,
        None => distill::cache_path(&map_dir(&p)?, code, policy, seed),
    };
    let map = distill::build_fidelity_map(distill::distiller(code)?.as_ref(), &grid, policy, seed)?;
    if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    map.write(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    println!("code: {code}");
    println!("grid points: {}", map.points().len());
    println!("map: {}", path.display());
    match map.break_even() {
        Ok(f) => println!("break-even fidelity: {}", fmt_sig10(f.value())),
        Err(e) => println!("break-even fidelity: none ({e})"),
    }
    Ok(())
}

/// Network parameters shared by `rate-sweep` and `schedule`.
fn network(p: &Params, code: Option<CodeId>, repeaters: usize, f0: f64) -> Result<NetworkConfig> {
    Ok(NetworkConfig {
        repeaters,
        multiplexing: p.get_or("multiplexing", 450)?,
        p: 1.0,
        f0: Fidelity::new(f0)?,
        code: code.unwrap_or(CodeId::Toric { d: 5 }),
        snapshots: p.get_or("snapshots", 200)?,
        tau: p.get_or("tau", 1.0)?,
    })
}

fn code_or_bsm(p: &Params, raw: &str) -> Result<Option<CodeId>> {
    if raw == BSM_ONLY {
        Ok(None)
    } else {
        parse_code(p, raw).map(Some)
    }
}

fn rate_sweep(common: &Common) -> Result<()> {
    let p = Params::resolve(
        "rate-sweep",
        common,
        &keys(&[
            "code",
            "repeaters",
            "f0",
            "p",
            "multiplexing",
            "snapshots",
            "tau",
            "output",
        ]),
    )?;
    let seed = p.seed()?;
    let codes: Vec<String> = p.list("code")?.unwrap_or_else(|| vec!["toric-50-2-5".into()]);
    let repeaters: Vec<usize> = p.list("repeaters")?.unwrap_or_else(|| vec![8]);
    let f0s: Vec<f64> = p.list("f0")?.unwrap_or_else(|| vec![0.99]);
    let ps: Vec<f64> = p
        .list("p")?
        .unwrap_or_else(|| (1..=10).map(|i| i as f64 / 10.0).collect());
    let mut out = String::from(
        "code,N,f0,p,seed,snapshots,mean_d_total,mean_rate,mean_e2e_count,mean_avg_fidelity,modal_optimal_composition\n",
    );
    for raw in &codes {
        let code = code_or_bsm(&p, raw)?;
        let map = load_map(&p, code)?;
        let name = code.map_or(BSM_ONLY.to_string(), |c| c.to_string());
        for &n in &repeaters {
            for &f0 in &f0s {
                let cfg = network(&p, code, n, f0)?;
                for row in schedule::rate_sweep(&cfg, &ps, map.as_ref(), seed)? {
                    writeln!(
                        out,
                        "{name},{n},{},{},{seed},{},{},{},{},{},{}",
                        fmt_sig10(f0),
                        fmt_sig10(row.p),
                        row.snapshots,
                        fmt_sig10(row.mean_d_total),
                        fmt_sig10(row.mean_rate),
                        fmt_sig10(row.mean_e2e_count),
                        fmt_sig10(row.mean_avg_fidelity),
                        row.modal_composition
                    )?;
                }
            }
        }
    }
    write_output(&p, &out)
}

fn schedule_cmd(common: &Common) -> Result<()> {
    let p = Params::resolve(
        "schedule",
        common,
        &keys(&["code", "repeaters", "f0", "p", "multiplexing", "tau", "snapshot"]),
    )?;
    let seed = p.seed()?;
    let code = code_or_bsm(&p, &p.get_or("code", "toric-50-2-5".to_string())?)?;
    let mut cfg = network(&p, code, p.require("repeaters")?, p.require("f0")?)?;
    cfg.p = p.get_or("p", 1.0)?;
    cfg.validate()?;
    let snapshot = if cfg.p == 1.0 {
        Snapshot::full(&cfg)
    } else {
        let index: u64 = p.get_or("snapshot", 0)?;
        schedule::sample_snapshot(&cfg, &mut rng::stream(seed, "snapshot", index))
    };
    let map = load_map(&p, code)?;
    let (comp, eval) = schedule::optimal_schedule(&snapshot, map.as_ref(), &cfg)?;
    let hops = schedule::plan_hops(&snapshot, &comp, map.as_ref(), &cfg)?;

    println!("code: {}", code.map_or(BSM_ONLY.to_string(), |c| c.to_string()));
    println!("segment links: {:?}", snapshot.counts);
    println!("optimal composition: {comp}");
    for (i, hop) in hops.iter().enumerate() {
        let classes: Vec<String> = hop
            .links
            .iter()
            .map(|c| format!("{} x {}", c.count, fmt_sig10(c.fidelity)))
            .collect();
        println!(
            "hop {i}: segments {}, links in {}, hop fidelity {}, {}: [{}]",
            hop.segments,
            hop.links_in,
            fmt_sig10(hop.hop_fidelity),
            if hop.distilled { "distilled" } else { "not distilled" },
            classes.join(", ")
        );
    }
    for c in &eval.e2e {
        println!("end-to-end class: {} x {}", c.count, fmt_sig10(c.fidelity));
    }
    println!("end-to-end links: {}", eval.e2e_count);
    println!("average fidelity: {}", fmt_sig10(eval.avg_fidelity));
    println!("d_total: {}", fmt_sig10(eval.d_total));
    println!("rate: {}", fmt_sig10(eval.rate));
    Ok(())
}

fn memory_trace_cmd(common: &Common) -> Result<()> {
    let p = Params::resolve(
        "memory-trace",
        common,
        &[
            "role",
            "convention",
            "m",
            "code",
            "tau_l",
            "tau_p",
            "tau_bsm",
            "tau_dec",
            "horizon",
            "output",
        ],
    )?;
    let ticks = Ticks {
        l: p.get_or("tau_l", Ticks::REFERENCE.l)?,
        p: p.get_or("tau_p", Ticks::REFERENCE.p)?,
        bsm: p.get_or("tau_bsm", Ticks::REFERENCE.bsm)?,
        dec: p.get_or("tau_dec", Ticks::REFERENCE.dec)?,
    };
    let m: u64 = p.get_or("m", 450)?;
    let code = parse_code(&p, &p.get_or("code", "toric-50-2-5".to_string())?)?;
    let shape = BlockShape::new(code.n() as u64, code.k() as u64)?;
    let roles = match p.get_or("role", "both".to_string())?.as_str() {
        "both" => vec![Role::Bsm, Role::Distillation],
        r => vec![r.parse()?],
    };
    let convention: Option<ReleaseConvention> = p.get("convention")?;
    let horizon: u64 = p.get_or("horizon", 3 * ticks.t3() + 3)?;

    let mut csv = String::from(MemoryTrace::CSV_HEADER);
    csv.push('\n');
    for role in roles {
        let conv = convention.unwrap_or(match role {
            Role::Bsm => ReleaseConvention::Lagged,
            Role::Distillation => ReleaseConvention::Immediate,
        });
        let trace = memory_trace(role, &ticks, m, shape, horizon, conv)?;
        csv.extend(trace.to_csv().lines().skip(1).flat_map(|l| [l, "\n"]));
        let closed = q_max_closed_form(role, &ticks, m, shape);
        println!(
            "{role}: simulated max {} ({} M), closed form {} ({} M)",
            trace.max_occupancy,
            fmt_sig10(trace.max_occupancy as f64 / m as f64),
            fmt_sig10(closed),
            fmt_sig10(closed / m as f64)
        );
    }
    match p.get::<PathBuf>("output")? {
        Some(_) => write_output(&p, &csv),
        None => Ok(()),
    }
}

fn latency(common: &Common) -> Result<()> {
    let p = Params::resolve(
        "latency",
        common,
        &["length_km", "repeaters", "c", "tau_bsm_us", "tau_dec_us"],
    )?;
    let l = p.get_or("length_km", 100.0)? * 1e3;
    let n: usize = p.get_or("repeaters", 9)?;
    let c: f64 = p.get_or("c", 2e8)?;
    let tau_bsm = p.get_or("tau_bsm_us", 10.0)? * 1e-6;
    let tau_dec = p.get_or("tau_dec_us", 50.0)? * 1e-6;
    let lat = latencies(l, n, c)?;
    let total = total_latency(&lat, tau_bsm, tau_dec);
    let us = |s: f64| fmt_sig10(s * 1e6);
    println!("quantity,microseconds");
    println!("tau_l,{}", us(lat.tau_l));
    println!("tau_p,{}", us(lat.tau_p));
    println!("tau_bsm,{}", us(tau_bsm));
    println!("tau_dec,{}", us(tau_dec));
    println!("tau_dist,{}", us(lat.tau_dist));
    println!("tau_cc,{}", us(lat.tau_cc));
    println!("total,{}", us(total.total));
    if total.ordering_holds {
        println!("ordering tau_bsm < tau_dist < tau_bsm + tau_cc: holds");
    } else {
        println!("ordering tau_bsm < tau_dist < tau_bsm + tau_cc: VIOLATED, total is not valid for these parameters");
    }
    Ok(())
}
