use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::CodecSpec;
use crate::error::{Error, Result};
use crate::synthgen::EventKind;

pub const DEFAULT_CORPUS_BYTES: u64 = 192 << 20;
pub const MIN_REPS: usize = 3;
pub const MIN_SIZE: u64 = 4 << 10;
pub const MAX_SIZE: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Codecs,
    Rac,
    Blockstore,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::Codecs, Experiment::Rac, Experiment::Blockstore];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Codecs => "codecs",
            Experiment::Rac => "rac",
            Experiment::Blockstore => "blockstore",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment {s:?}")))
    }
}

/// Whether the data a read needs is already memory-resident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    Cold,
    Hot,
}

impl FromStr for CacheMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cold" => Ok(CacheMode::Cold),
            "hot" => Ok(CacheMode::Hot),
            _ => Err(Error::InvalidArgument(format!("unknown cache mode {s:?}"))),
        }
    }
}

impl fmt::Display for CacheMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CacheMode::Cold => "cold",
            CacheMode::Hot => "hot",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorkloadKind {
    SequentialAll,
    /// `k` distinct events in random order.
    RandomK(u64),
    /// Events `0, n, 2n, ...`.
    Stride(u64),
}

/// A read pattern over one branch. Written as `seq@tsmall`,
/// `random-1000@tsmall` or `stride-100@tfloat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub branch: EventKind,
}

impl WorkloadSpec {
    pub fn new(kind: WorkloadKind, branch: EventKind) -> Self {
        WorkloadSpec { kind, branch }
    }
}

impl fmt::Display for WorkloadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            WorkloadKind::SequentialAll => write!(f, "seq")?,
            WorkloadKind::RandomK(k) => write!(f, "random-{k}")?,
            WorkloadKind::Stride(n) => write!(f, "stride-{n}")?,
        }
        write!(f, "@{}", self.branch.branch_name())
    }
}

impl FromStr for WorkloadSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad workload {s:?}, expected e.g. random-1000@tsmall"));
        let (pattern, branch) = s.split_once('@').ok_or_else(bad)?;
        let branch: EventKind = branch.parse()?;
        let count = |n: &str| match n.parse::<u64>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(bad()),
        };
        let kind = match pattern.split_once('-') {
            None if pattern == "seq" => WorkloadKind::SequentialAll,
            Some(("random", k)) => WorkloadKind::RandomK(count(k)?),
            Some(("stride", n)) => WorkloadKind::Stride(count(n)?),
            _ => return Err(bad()),
        };
        Ok(WorkloadSpec { kind, branch })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub corpus_bytes: u64,
    pub seed: u64,
    pub codecs: Vec<CodecSpec>,
    /// Basket capacities and block sizes swept.
    pub sizes: Vec<u64>,
    pub workloads: Vec<WorkloadSpec>,
    pub cache_modes: Vec<CacheMode>,
    pub reps: usize,
    /// Run ratio-only sweeps on several threads.
    pub parallel: bool,
}

fn specs(names: &[&str]) -> Vec<CodecSpec> {
    names.iter().map(|n| n.parse().expect("built-in codec name")).collect()
}

fn workloads(names: &[&str]) -> Vec<WorkloadSpec> {
    names.iter().map(|n| n.parse().expect("built-in workload")).collect()
}

impl BenchConfig {
    pub fn defaults(exp: Experiment) -> Self {
        let base = BenchConfig {
            corpus_bytes: DEFAULT_CORPUS_BYTES,
            seed: 1,
            codecs: specs(&["deflate-6"]),
            sizes: vec![65536],
            workloads: Vec::new(),
            cache_modes: vec![CacheMode::Cold, CacheMode::Hot],
            reps: MIN_REPS,
            parallel: false,
        };
        match exp {
            Experiment::Codecs => BenchConfig {
                codecs: specs(&[
                    "identity", "deflate-1", "deflate-6", "deflate-9", "lzma-1", "lzma-5", "lzma-9", "lz4",
                    "lz4hc-9",
                ]),
                cache_modes: Vec::new(),
                ..base
            },
            Experiment::Rac => BenchConfig {
                workloads: workloads(&["random-1000@tsmall", "seq@tsmall", "random-1000@tfloat"]),
                ..base
            },
            Experiment::Blockstore => BenchConfig {
                sizes: vec![4 << 10, 16 << 10, 64 << 10, 256 << 10, 1 << 20],
                codecs: specs(&["deflate-9"]),
                workloads: workloads(&["stride-100@tsmall", "stride-10@tsmall"]),
                ..base
            },
        }
    }

    pub fn validate(&self, exp: Experiment) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::InvalidArgument(format!(
                "reps must be at least {MIN_REPS}, got {}",
                self.reps
            )));
        }
        if self.codecs.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidArgument("codec and size lists must not be empty".into()));
        }
        for &s in &self.sizes {
            if !(MIN_SIZE..=MAX_SIZE).contains(&s) {
                return Err(Error::InvalidArgument(format!("size {s} outside [4 KiB, 1 MiB]")));
            }
            if exp == Experiment::Blockstore {
                crate::blockstore::check_block_size(s)?;
            }
        }
        Ok(())
    }

    /// Loads the `[codecs]`, `[rac]` or `[blockstore]` section of a TOML
    /// config on top of the experiment defaults. A missing section yields
    /// the defaults.
    pub fn from_toml(text: &str, exp: Experiment) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        let patch = match exp {
            Experiment::Codecs => file.codecs,
            Experiment::Rac => file.rac,
            Experiment::Blockstore => file.blockstore,
        };
        let mut cfg = BenchConfig::defaults(exp);
        if let Some(p) = patch {
            p.apply(&mut cfg)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    codecs: Option<ConfigPatch>,
    rac: Option<ConfigPatch>,
    blockstore: Option<ConfigPatch>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigPatch {
    corpus_bytes: Option<u64>,
    corpus_mib: Option<u64>,
    seed: Option<u64>,
    codecs: Option<Vec<String>>,
    sizes: Option<Vec<u64>>,
    workloads: Option<Vec<String>>,
    cache_modes: Option<Vec<String>>,
    reps: Option<usize>,
    parallel: Option<bool>,
}

impl ConfigPatch {
    fn apply(self, cfg: &mut BenchConfig) -> Result<()> {
        if let Some(b) = self.corpus_bytes {
            cfg.corpus_bytes = b;
        }
        if let Some(m) = self.corpus_mib {
            cfg.corpus_bytes = m << 20;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.codecs {
            cfg.codecs = c.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(s) = self.sizes {
            cfg.sizes = s;
        }
        if let Some(w) = self.workloads {
            cfg.workloads = w.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(m) = self.cache_modes {
            cfg.cache_modes = m.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(r) = self.reps {
            cfg.reps = r;
        }
        if let Some(p) = self.parallel {
            cfg.parallel = p;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_round_trip() {
        for s in ["seq@tsmall", "random-1000@tsmall", "stride-100@tfloat", "stride-1@tlarge"] {
            assert_eq!(s.parse::<WorkloadSpec>().unwrap().to_string(), s);
        }
        for bad in ["seq", "random@tsmall", "random-0@tsmall", "stride-x@tfloat", "seq@nope", "walk-3@tsmall"] {
            assert!(bad.parse::<WorkloadSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn defaults_validate() {
        for e in Experiment::ALL {
            BenchConfig::defaults(e).validate(e).unwrap();
        }
    }

    #[test]
    fn validation_limits() {
        let mut c = BenchConfig::defaults(Experiment::Blockstore);
        c.reps = 2;
        assert!(c.validate(Experiment::Blockstore).is_err());
        c.reps = 3;
        c.sizes = vec![48 << 10];
        assert!(matches!(c.validate(Experiment::Blockstore), Err(Error::InvalidBlockSize(_))));
        assert!(c.validate(Experiment::Rac).is_ok());
        c.sizes = vec![2 << 20];
        assert!(c.validate(Experiment::Rac).is_err());
    }

    #[test]
    fn toml_sections() {
        let text = r#"
            [rac]
            corpus_mib = 24
            seed = 7
            codecs = ["lz4", "deflate-1"]
            workloads = ["random-10@tsmall"]
            cache_modes = ["hot"]

            [blockstore]
            sizes = [4096, 1048576]
        "#;
        let rac = BenchConfig::from_toml(text, Experiment::Rac).unwrap();
        assert_eq!(rac.corpus_bytes, 24 << 20);
        assert_eq!(rac.seed, 7);
        assert_eq!(rac.codecs, vec![CodecSpec::LZ4, CodecSpec::deflate(1).unwrap()]);
        assert_eq!(rac.cache_modes, vec![CacheMode::Hot]);
        assert_eq!(rac.reps, MIN_REPS);
        let bs = BenchConfig::from_toml(text, Experiment::Blockstore).unwrap();
        assert_eq!(bs.sizes, vec![4096, 1 << 20]);
        let codecs = BenchConfig::from_toml(text, Experiment::Codecs).unwrap();
        assert_eq!(codecs, BenchConfig::defaults(Experiment::Codecs));
        assert!(BenchConfig::from_toml("[rac]\nbogus = 1\n", Experiment::Rac).is_err());
    }
}
