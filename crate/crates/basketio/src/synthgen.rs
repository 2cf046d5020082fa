//! Deterministic generators for the three synthetic event shapes.
//!
//! Every event is a run of little-endian `f32` values. A fresh uniform value
//! is drawn and then occupies six consecutive slots, so values further than
//! six slots apart are unrelated while neighbours repeat exactly.
//!
//! | kind     | values    | payload bytes |
//! |----------|-----------|---------------|
//! | `TFloat` | 6         | 24            |
//! | `TSmall` | 1000      | 4000          |
//! | `TLarge` | 1_000_000 | 4_000_000     |

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Identifier of the random source, recorded in benchmark reports.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Consecutive slots sharing one drawn value.
pub const REPEAT_PERIOD: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    TFloat,
    TSmall,
    TLarge,
}

impl EventKind {
    pub const ALL: [EventKind; 3] = [EventKind::TFloat, EventKind::TSmall, EventKind::TLarge];

    pub fn values_per_event(self) -> usize {
        match self {
            EventKind::TFloat => 6,
            EventKind::TSmall => 1000,
            EventKind::TLarge => 1_000_000,
        }
    }

    pub fn payload_len(self) -> usize {
        self.values_per_event() * 4
    }

    /// Branch name used when the kind is written to a container.
    pub fn branch_name(self) -> &'static str {
        match self {
            EventKind::TFloat => "tfloat",
            EventKind::TSmall => "tsmall",
            EventKind::TLarge => "tlarge",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.branch_name())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.branch_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown event kind {s:?}")))
    }
}

/// One serialized event and its position within its branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPayload {
    pub bytes: Vec<u8>,
    pub logical_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub kind: EventKind,
    pub seed: u64,
    pub count: u64,
}

impl GenSpec {
    pub fn new(kind: EventKind, seed: u64, count: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("event count must be at least 1".into()));
        }
        Ok(GenSpec { kind, seed, count })
    }

    /// Raw bytes the stream will produce.
    pub fn total_bytes(&self) -> u64 {
        self.count * self.kind.payload_len() as u64
    }
}

/// Lazily generated events of one [`GenSpec`].
pub struct EventStream {
    spec: GenSpec,
    rng: ChaCha8Rng,
    next: u64,
}

pub fn generate(spec: GenSpec) -> EventStream {
    EventStream {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        next: 0,
    }
}

impl EventStream {
    fn fill(&mut self, buf: &mut Vec<u8>) {
        let n = self.spec.kind.values_per_event();
        buf.reserve(n * 4);
        let mut remaining = n;
        while remaining > 0 {
            let value: f32 = self.rng.random();
            let run = remaining.min(REPEAT_PERIOD);
            for _ in 0..run {
                buf.extend_from_slice(&value.to_le_bytes());
            }
            remaining -= run;
        }
    }
}

impl Iterator for EventStream {
    type Item = EventPayload;

    fn next(&mut self) -> Option<EventPayload> {
        if self.next >= self.spec.count {
            return None;
        }
        let mut bytes = Vec::new();
        self.fill(&mut bytes);
        let logical_index = self.next;
        self.next += 1;
        Some(EventPayload {
            bytes,
            logical_index,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.spec.count - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for EventStream {}

/// Relative share of raw bytes per kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mix {
    pub tfloat: f64,
    pub tsmall: f64,
    pub tlarge: f64,
}

impl Default for Mix {
    fn default() -> Self {
        Mix {
            tfloat: 1.0,
            tsmall: 1.0,
            tlarge: 1.0,
        }
    }
}

impl Mix {
    fn share(&self, kind: EventKind) -> f64 {
        match kind {
            EventKind::TFloat => self.tfloat,
            EventKind::TSmall => self.tsmall,
            EventKind::TLarge => self.tlarge,
        }
    }
}

/// Three-branch corpus description; streams are generated on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub specs: Vec<GenSpec>,
}

impl Corpus {
    pub fn spec(&self, kind: EventKind) -> GenSpec {
        *self
            .specs
            .iter()
            .find(|s| s.kind == kind)
            .expect("corpus holds every kind")
    }

    pub fn streams(&self) -> impl Iterator<Item = (EventKind, EventStream)> + '_ {
        self.specs.iter().map(|s| (s.kind, generate(*s)))
    }

    pub fn total_bytes(&self) -> u64 {
        self.specs.iter().map(GenSpec::total_bytes).sum()
    }
}

/// Picks per-kind event counts so each branch carries its share of
/// `total_bytes`, rounded to the nearest whole event (at least one).
///
/// With the default equal mix every branch lands within 5% of a third of
/// the total as long as the large-event share spans a few events.
pub fn corpus(total_bytes: u64, mix: Mix, seed: u64) -> Result<Corpus> {
    if total_bytes < 1 << 20 {
        return Err(Error::InvalidArgument(format!(
            "corpus must be at least 1 MiB, got {total_bytes} bytes"
        )));
    }
    let shares = EventKind::ALL.map(|k| mix.share(k));
    if shares.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::InvalidMix(format!(
            "proportions must be positive and finite: {mix:?}"
        )));
    }
    let sum: f64 = shares.iter().sum();
    let specs = EventKind::ALL
        .iter()
        .zip(shares)
        .enumerate()
        .map(|(i, (&kind, share))| {
            let bytes = total_bytes as f64 * share / sum;
            let count = (bytes / kind.payload_len() as f64).round().max(1.0) as u64;
            GenSpec {
                kind,
                seed: derive_seed(seed, i as u64),
                count,
            }
        })
        .collect();
    Ok(Corpus { specs })
}

/// splitmix64 step, so each branch gets an unrelated stream.
fn derive_seed(seed: u64, lane: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(lane + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
