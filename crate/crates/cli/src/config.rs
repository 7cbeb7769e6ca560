//! Parameter resolution: built-in defaults, then the config file's `[global]`
//! and command sections, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;

/// Options shared by every command.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Common {
    /// Configuration file with a `[global]` section and one section per command.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Global seed for every stochastic component.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials per map grid point (ten times as many at high fidelity).
    #[arg(long)]
    pub trials: Option<u64>,
    /// Snapshots averaged per link success probability below one.
    #[arg(long)]
    pub snapshots: Option<usize>,
    /// Output file.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides any configuration key, e.g. `--set f0=0.97`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Every key some command accepts. `[global]` keys outside this list are
/// errors; keys in it apply only to the commands that use them.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "trials",
    "high_trials",
    "map_dir",
    "stream_blocks",
    "grid",
    "code",
    "repeaters",
    "f0",
    "p",
    "multiplexing",
    "snapshots",
    "tau",
    "output",
    "snapshot",
    "role",
    "convention",
    "m",
    "tau_l",
    "tau_p",
    "tau_bsm",
    "tau_dec",
    "horizon",
    "length_km",
    "c",
    "tau_bsm_us",
    "tau_dec_us",
];

#[derive(Debug, Clone)]
pub struct Params {
    section: &'static str,
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn resolve(section: &'static str, common: &Common, allowed: &[&str]) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = &common.config {
            let ini = Ini::load_from_file(path).with_context(|| format!("reading config {}", path.display()))?;
            if let Some(props) = ini.section(Some("global")) {
                for (k, v) in props.iter() {
                    let k = k.trim();
                    if !KNOWN_KEYS.contains(&k) {
                        bail!("unknown key `{k}` in [global]");
                    }
                    if allowed.contains(&k) {
                        values.insert(k.to_string(), v.trim().to_string());
                    }
                }
            }
            if let Some(props) = ini.section(Some(section)) {
                for (k, v) in props.iter() {
                    values.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
        }
        for (key, flag) in [
            ("seed", common.seed.map(|v| v.to_string())),
            ("trials", common.trials.map(|v| v.to_string())),
            ("snapshots", common.snapshots.map(|v| v.to_string())),
            ("output", common.output.as_ref().map(|p| p.display().to_string())),
        ] {
            if let Some(v) = flag {
                values.insert(key.to_string(), v);
            }
        }
        for kv in &common.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{kv}`"))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        let params = Self { section, values };
        for key in params.values.keys() {
            if !allowed.contains(&key.as_str()) {
                bail!(
                    "unknown key `{key}` for {section}; expected one of: {}",
                    allowed.join(", ")
                );
            }
        }
        Ok(params)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("{}: bad value `{v}` for `{key}`: {e}", self.section))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| anyhow!("{} requires `{key}` (config file or --set {key}=...)", self.section))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| anyhow!("{}: bad entry `{s}` in `{key}`: {e}", self.section))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed")?.ok_or_else(|| {
            anyhow!(
                "{} is stochastic and needs a seed (--seed or `seed` in the config)",
                self.section
            )
        })
    }

    pub fn path_or(&self, key: &str, default: &Path) -> PathBuf {
        self.values
            .get(key)
            .map(PathBuf::from)
            .unwrap_or_else(|| default.to_path_buf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ini");
        std::fs::write(
            &path,
            "[global]\nseed = 1\nf0 = 0.9\n\n[schedule]\nf0 = 0.97\nrepeaters = 8\n",
        )
        .unwrap();
        let common = Common {
            config: Some(path),
            seed: Some(5),
            overrides: vec!["repeaters=9".into()],
            ..Common::default()
        };
        let p = Params::resolve("schedule", &common, &["seed", "f0", "repeaters"]).unwrap();
        assert_eq!(p.seed().unwrap(), 5);
        assert_eq!(p.require::<f64>("f0").unwrap(), 0.97);
        assert_eq!(p.require::<usize>("repeaters").unwrap(), 9);
        assert!(Params::resolve("schedule", &common, &["seed", "f0"]).is_err());
    }

    #[test]
    fn global_keys_apply_only_where_used() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ini");
        std::fs::write(&path, "[global]\nseed = 1\nmap_dir = maps\n").unwrap();
        let common = Common {
            config: Some(path.clone()),
            ..Common::default()
        };
        let p = Params::resolve("latency", &common, &["length_km"]).unwrap();
        assert!(p.get::<u64>("seed").unwrap().is_none());
        std::fs::write(&path, "[global]\nsed = 1\n").unwrap();
        assert!(Params::resolve("latency", &common, &["length_km"]).is_err());
    }

    #[test]
    fn lists_and_missing_values() {
        let common = Common {
            overrides: vec!["p=0.5, 0.9,1".into()],
            ..Common::default()
        };
        let p = Params::resolve("rate-sweep", &common, &["p", "seed"]).unwrap();
        assert_eq!(p.list::<f64>("p").unwrap().unwrap(), vec![0.5, 0.9, 1.0]);
        assert!(p.seed().is_err());
        assert!(p.require::<f64>("f0").is_err());
        let bad = Common {
            overrides: vec!["p".into()],
            ..Common::default()
        };
        assert!(Params::resolve("rate-sweep", &bad, &["p"]).is_err());
    }
}
