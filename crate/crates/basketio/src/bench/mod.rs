//! Desk-scale benchmark harness: codec matrix, RAC on/off studies and the
//! block-packed versus container sweeps.
//!
//! Timings are medians over `reps` runs of the calling thread's CPU clock and
//! a monotonic wall clock. "Cold" reads open a fresh store over a file on
//! disk and count every byte pulled from it; "hot" reads go to a store whose
//! file image is memory-resident and which has already served the workload
//! once.

mod config;
mod report;

pub use config::{
    BenchConfig, CacheMode, Experiment, WorkloadKind, WorkloadSpec, DEFAULT_CORPUS_BYTES, MIN_REPS,
};
pub use report::{emit_report, parse_csv, ratio, BenchReport, ReportFormat, ReportRow, COLUMNS};

use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blockstore::{self, BlockStore, CacheConfig};
use crate::clock::{measure, Timing};
use crate::codec::{Codec, CodecSpec};
use crate::container::{ReaderOptions, TreeIndex, TreeReader, TreeWriter, WriterOptions};
use crate::error::Result;
use crate::synthgen::{corpus, EventKind, Mix, RNG_ALGORITHM};

/// One branch of the corpus held contiguously; synthetic events of a kind
/// all have the same length.
pub struct BranchData {
    pub kind: EventKind,
    pub event_len: usize,
    pub bytes: Vec<u8>,
}

impl BranchData {
    pub fn events(&self) -> std::slice::ChunksExact<'_, u8> {
        self.bytes.chunks_exact(self.event_len)
    }

    pub fn event_count(&self) -> u64 {
        (self.bytes.len() / self.event_len) as u64
    }
}

pub fn load_corpus(total_bytes: u64, seed: u64) -> Result<Vec<BranchData>> {
    let c = corpus(total_bytes, Mix::default(), seed)?;
    Ok(c.streams()
        .map(|(kind, stream)| {
            let mut bytes = Vec::with_capacity(c.spec(kind).total_bytes() as usize);
            for ev in stream {
                bytes.extend_from_slice(&ev.bytes);
            }
            BranchData {
                kind,
                event_len: kind.payload_len(),
                bytes,
            }
        })
        .collect())
}

fn config_id(name: &str, cfg: &BenchConfig) -> String {
    format!("{name}/{RNG_ALGORITHM}-{}", cfg.seed)
}

fn median(mut ts: Vec<Timing>) -> Timing {
    let mid = ts.len() / 2;
    ts.sort_by_key(|t| t.real);
    let real = ts[mid].real;
    ts.sort_by_key(|t| t.cpu);
    Timing { real, cpu: ts[mid].cpu }
}

fn set_timing(row: &mut ReportRow, reps: usize, t: Timing) {
    row.reps = reps as u32;
    row.real_time = t.real.as_secs_f64();
    row.cpu_time = t.cpu.as_secs_f64();
}

/// Runs `f` `reps` times; returns the last value and the median timing.
fn timed<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, Timing)> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let (v, t) = measure(&mut f);
        last = Some(v?);
        times.push(t);
    }
    Ok((last.expect("reps >= 1"), median(times)))
}

/// Bytes per basket the container writer produces for fixed-size events:
/// events are pushed until the buffer reaches `capacity`.
fn basket_bytes(event_len: usize, capacity: u64) -> usize {
    (capacity as usize).div_ceil(event_len) * event_len
}

pub struct WrittenContainer {
    pub image: Arc<[u8]>,
    pub index: TreeIndex,
    /// Median append time per branch, in corpus order.
    pub branch_times: Vec<Timing>,
}

/// Writes the corpus one branch after another, timing each branch.
pub fn write_container(data: &[BranchData], opts: WriterOptions, reps: usize) -> Result<WrittenContainer> {
    let mut times: Vec<Vec<Timing>> = vec![Vec::new(); data.len()];
    let mut last = None;
    for _ in 0..reps.max(1) {
        let mut w = TreeWriter::new(Vec::new(), opts)?;
        for (slot, b) in data.iter().enumerate() {
            let name = b.kind.branch_name();
            let (r, t) = measure(|| -> Result<()> {
                for ev in b.events() {
                    w.append_event(name, ev)?;
                }
                w.flush_branch(name)
            });
            r?;
            times[slot].push(t);
        }
        let index = w.finalize()?;
        last = Some((w.into_inner()?, index));
    }
    let (image, index) = last.expect("at least one rep");
    Ok(WrittenContainer {
        image: image.into(),
        index,
        branch_times: times.into_iter().map(median).collect(),
    })
}

/// Event indices a workload visits, in visiting order.
pub fn workload_indices(w: &WorkloadSpec, total: u64, seed: u64) -> Vec<u64> {
    match w.kind {
        WorkloadKind::SequentialAll => (0..total).collect(),
        WorkloadKind::Stride(n) => (0..total).step_by(n as usize).collect(),
        WorkloadKind::RandomK(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (w.branch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            sample(&mut rng, total as usize, (k.min(total)) as usize)
                .into_iter()
                .map(|i| i as u64)
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Traffic {
    pub bytes_fetched: u64,
    pub bytes_decompressed: u64,
    pub touched: u64,
}

impl Traffic {
    fn since(self, earlier: Traffic) -> Traffic {
        Traffic {
            bytes_fetched: self.bytes_fetched - earlier.bytes_fetched,
            bytes_decompressed: self.bytes_decompressed - earlier.bytes_decompressed,
            touched: self.touched - earlier.touched,
        }
    }
}

/// Something that can serve the events of one branch by index.
pub trait EventSource {
    fn read(&self, index: u64) -> Result<usize>;
    fn traffic(&self) -> Traffic;
}

pub struct ContainerSource {
    pub reader: TreeReader,
    pub branch: &'static str,
}

impl EventSource for ContainerSource {
    fn read(&self, index: u64) -> Result<usize> {
        Ok(self.reader.read_event(self.branch, index)?.len())
    }

    fn traffic(&self) -> Traffic {
        let s = self.reader.stats();
        Traffic {
            bytes_fetched: s.bytes_fetched,
            bytes_decompressed: s.bytes_decompressed,
            touched: s.baskets_loaded,
        }
    }
}

/// A packed copy of an uncompressed container, read through the byte
/// spans the events occupy in that container.
pub struct PackedSource {
    pub store: BlockStore,
    pub spans: Arc<Vec<(u64, u64)>>,
}

impl EventSource for PackedSource {
    fn read(&self, index: u64) -> Result<usize> {
        let (off, len) = self.spans[index as usize];
        Ok(self.store.read_range(off, len)?.len())
    }

    fn traffic(&self) -> Traffic {
        let s = self.store.stats();
        Traffic {
            bytes_fetched: s.bytes_fetched_compressed,
            bytes_decompressed: s.bytes_decompressed,
            touched: s.blocks_fetched,
        }
    }
}

fn read_all<S: EventSource>(src: &S, indices: &[u64]) -> Result<u64> {
    let mut n = 0;
    for &i in indices {
        n += src.read(i)? as u64;
    }
    Ok(n)
}

/// Replays `indices` against stores produced by `open`. Cold mode opens a
/// fresh store per repetition; hot mode warms one store with an untimed
/// pass first. Traffic is that of the last repetition.
pub fn run_reads<S: EventSource>(
    mode: CacheMode,
    reps: usize,
    indices: &[u64],
    open: impl Fn() -> Result<S>,
) -> Result<(Timing, Traffic)> {
    let mut times = Vec::with_capacity(reps);
    let mut traffic = Traffic::default();
    let warm = match mode {
        CacheMode::Hot => {
            let s = open()?;
            read_all(&s, indices)?;
            Some(s)
        }
        CacheMode::Cold => None,
    };
    for _ in 0..reps {
        let fresh;
        let src = match &warm {
            Some(s) => s,
            None => {
                fresh = open()?;
                &fresh
            }
        };
        let before = src.traffic();
        let (r, t) = measure(|| read_all(src, indices));
        r?;
        times.push(t);
        traffic = src.traffic().since(before);
    }
    Ok((median(times), traffic))
}

fn fill_read_row(mut row: ReportRow, mode: CacheMode, reps: usize, r: Result<(Timing, Traffic)>) -> ReportRow {
    row.cache_mode = Some(mode);
    match r {
        Ok((t, traffic)) => {
            set_timing(&mut row, reps, t);
            row.bytes_fetched = traffic.bytes_fetched;
            row.bytes_decompressed = traffic.bytes_decompressed;
            row.blocks_or_baskets_touched = traffic.touched;
            row
        }
        Err(e) => row.sizes(0, 0).failed(&e),
    }
}

/// Compression and decompression of the whole corpus, cut into
/// basket-sized pieces, for every codec and size.
pub fn bench_codecs(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate(Experiment::Codecs)?;
    let data = load_corpus(cfg.corpus_bytes, cfg.seed)?;
    let id = config_id("codecs", cfg);
    let mut report = BenchReport::default();
    for &size in &cfg.sizes {
        let chunks: Vec<&[u8]> = data
            .iter()
            .flat_map(|b| b.bytes.chunks(basket_bytes(b.event_len, size)))
            .collect();
        let raw: u64 = chunks.iter().map(|c| c.len() as u64).sum();
        for &spec in &cfg.codecs {
            let name = spec.to_string();
            let codec = Codec::new();
            let compressed = timed(cfg.reps, || chunks.iter().map(|c| codec.compress(spec, c)).collect::<Result<Vec<_>>>());
            let (frames, t) = match compressed {
                Ok(v) => v,
                Err(e) => {
                    report.rows.push(ReportRow::new(&id, &name, size, "compress").failed(&e));
                    continue;
                }
            };
            let stored: u64 = frames.iter().map(|f| f.len() as u64).sum();
            let mut row = ReportRow::new(&id, &name, size, "compress").sizes(raw, stored);
            set_timing(&mut row, cfg.reps, t);
            row.blocks_or_baskets_touched = chunks.len() as u64;
            report.rows.push(row);

            let decompressed = timed(cfg.reps, || {
                for (f, c) in frames.iter().zip(&chunks) {
                    codec.decompress(spec, f, c.len())?;
                }
                Ok(())
            });
            let mut row = ReportRow::new(&id, &name, size, "decompress").sizes(raw, stored);
            match decompressed {
                Ok(((), t)) => {
                    set_timing(&mut row, cfg.reps, t);
                    row.bytes_decompressed = raw;
                    row.blocks_or_baskets_touched = chunks.len() as u64;
                }
                Err(e) => row = row.sizes(0, 0).failed(&e),
            }
            report.rows.push(row);
        }
    }
    Ok(report)
}

fn temp_image(dir: &Path, name: &str, image: &[u8]) -> Result<std::path::PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, image)?;
    Ok(path)
}

/// The corpus written with RAC off and on: per-branch write rows, then read
/// rows for every workload and cache mode.
pub fn bench_rac(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate(Experiment::Rac)?;
    let data = load_corpus(cfg.corpus_bytes, cfg.seed)?;
    let dir = tempfile::tempdir()?;
    let mut report = BenchReport::default();
    for &spec in &cfg.codecs {
        let name = spec.to_string();
        for &size in &cfg.sizes {
            let mut written = Vec::new();
            for rac in [false, true] {
                let id = config_id(if rac { "rac-on" } else { "rac-off" }, cfg);
                let w = match write_container(&data, WriterOptions::new(size, spec, rac), cfg.reps) {
                    Ok(w) => w,
                    Err(e) => {
                        report.rows.push(ReportRow::new(&id, &name, size, "write").failed(&e));
                        continue;
                    }
                };
                for (b, t) in data.iter().zip(&w.branch_times) {
                    let dir_entry = w.index.branch(b.kind.branch_name()).expect("branch written");
                    let mut row = ReportRow::new(&id, &name, size, format!("write@{}", b.kind.branch_name()))
                        .sizes(b.bytes.len() as u64, dir_entry.stored_bytes());
                    set_timing(&mut row, cfg.reps, *t);
                    row.blocks_or_baskets_touched = dir_entry.baskets.len() as u64;
                    report.rows.push(row);
                }
                let path = temp_image(dir.path(), &format!("{name}-{size}-{rac}.rcf"), &w.image)?;
                written.push((id, w, path));
            }
            for wl in &cfg.workloads {
                let branch = wl.branch.branch_name();
                for &mode in &cfg.cache_modes {
                    for (id, w, path) in &written {
                        let dir_entry = w.index.branch(branch).expect("branch written");
                        let indices = workload_indices(wl, dir_entry.total_events(), cfg.seed);
                        let raw = data.iter().find(|b| b.kind == wl.branch).map_or(0, |b| b.bytes.len() as u64);
                        let row = ReportRow::new(id, &name, size, wl.to_string()).sizes(raw, dir_entry.stored_bytes());
                        let r = run_reads(mode, cfg.reps, &indices, || {
                            let reader = match mode {
                                CacheMode::Cold => TreeReader::open_with(path, ReaderOptions::default())?,
                                CacheMode::Hot => TreeReader::from_bytes(w.image.clone(), ReaderOptions::default())?,
                            };
                            Ok(ContainerSource { reader, branch })
                        });
                        report.rows.push(fill_read_row(row, mode, cfg.reps, r));
                    }
                }
            }
        }
    }
    Ok(report)
}

fn pack_timed(image: &[u8], block_size: u64, spec: CodecSpec, reps: usize) -> Result<(Vec<u8>, Timing)> {
    timed(reps, || Ok(blockstore::pack_bytes(image, block_size, spec)?.0))
}

/// Layout-blind block packing of an uncompressed container versus the
/// container compressed with the same codec at a matching basket size.
///
/// Both ratios use the corpus payload as the raw size, so container
/// metadata counts against the packed file just as it would on disk.
pub fn bench_blockstore(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate(Experiment::Blockstore)?;
    let data = load_corpus(cfg.corpus_bytes, cfg.seed)?;
    let payload: u64 = data.iter().map(|b| b.bytes.len() as u64).sum();
    let plain = write_container(&data, WriterOptions::new(65536, CodecSpec::IDENTITY, false), 1)?;
    let plain_reader = TreeReader::from_bytes(plain.image.clone(), ReaderOptions::default())?;
    let mut spans = std::collections::HashMap::new();
    for wl in &cfg.workloads {
        if let std::collections::hash_map::Entry::Vacant(e) = spans.entry(wl.branch) {
            e.insert(Arc::new(plain_reader.raw_event_spans(wl.branch.branch_name())?));
        }
    }
    let dir = tempfile::tempdir()?;
    let store_id = config_id("blockstore", cfg);
    let tree_id = config_id("container", cfg);
    let mut report = BenchReport::default();

    for &spec in &cfg.codecs {
        let name = spec.to_string();
        // Ratio sweep; the only part allowed to run on several threads.
        let packed: Vec<Result<(Vec<u8>, Timing)>> = if cfg.parallel {
            let image: &[u8] = &plain.image;
            std::thread::scope(|s| {
                let handles: Vec<_> = cfg
                    .sizes
                    .iter()
                    .map(|&size| s.spawn(move || pack_timed(image, size, spec, 1)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("pack thread")).collect()
            })
        } else {
            cfg.sizes.iter().map(|&size| pack_timed(&plain.image, size, spec, cfg.reps)).collect()
        };
        let pack_reps = if cfg.parallel { 1 } else { cfg.reps };

        for (&size, packed) in cfg.sizes.iter().zip(packed) {
            let packed = match packed {
                Ok((bytes, t)) => {
                    let mut row = ReportRow::new(&store_id, &name, size, "pack").sizes(payload, bytes.len() as u64);
                    set_timing(&mut row, pack_reps, t);
                    row.blocks_or_baskets_touched = plain.image.len().div_ceil(size as usize) as u64;
                    report.rows.push(row);
                    Some(Arc::<[u8]>::from(bytes))
                }
                Err(e) => {
                    report.rows.push(ReportRow::new(&store_id, &name, size, "pack").failed(&e));
                    None
                }
            };
            let tree = match write_container(&data, WriterOptions::new(size, spec, false), cfg.reps) {
                Ok(w) => {
                    let mut row =
                        ReportRow::new(&tree_id, &name, size, "write").sizes(payload, w.image.len() as u64);
                    let total = w.branch_times.iter().fold(Timing::default(), |a, t| Timing {
                        real: a.real + t.real,
                        cpu: a.cpu + t.cpu,
                    });
                    set_timing(&mut row, cfg.reps, total);
                    row.blocks_or_baskets_touched = w.index.branches.iter().map(|b| b.baskets.len() as u64).sum();
                    report.rows.push(row);
                    Some(w)
                }
                Err(e) => {
                    report.rows.push(ReportRow::new(&tree_id, &name, size, "write").failed(&e));
                    None
                }
            };
            let packed_path = match &packed {
                Some(p) => Some(temp_image(dir.path(), &format!("{name}-{size}.bpk"), p)?),
                None => None,
            };
            let tree_path = match &tree {
                Some(w) => Some(temp_image(dir.path(), &format!("{name}-{size}.rcf"), &w.image)?),
                None => None,
            };

            for wl in &cfg.workloads {
                let branch = wl.branch.branch_name();
                let branch_spans = spans[&wl.branch].clone();
                let indices = workload_indices(wl, branch_spans.len() as u64, cfg.seed);
                for &mode in &cfg.cache_modes {
                    if let (Some(p), Some(path)) = (&packed, &packed_path) {
                        let row = ReportRow::new(&store_id, &name, size, wl.to_string()).sizes(payload, p.len() as u64);
                        let r = run_reads(mode, cfg.reps, &indices, || {
                            let store = match mode {
                                CacheMode::Cold => BlockStore::open(path, CacheConfig::default())?,
                                CacheMode::Hot => BlockStore::from_bytes(p.clone(), CacheConfig::default())?,
                            };
                            Ok(PackedSource {
                                store,
                                spans: branch_spans.clone(),
                            })
                        });
                        report.rows.push(fill_read_row(row, mode, cfg.reps, r));
                    }
                    if let (Some(w), Some(path)) = (&tree, &tree_path) {
                        let row =
                            ReportRow::new(&tree_id, &name, size, wl.to_string()).sizes(payload, w.image.len() as u64);
                        let r = run_reads(mode, cfg.reps, &indices, || {
                            let reader = match mode {
                                CacheMode::Cold => TreeReader::open_with(path, ReaderOptions::default())?,
                                CacheMode::Hot => TreeReader::from_bytes(w.image.clone(), ReaderOptions::default())?,
                            };
                            Ok(ContainerSource { reader, branch })
                        });
                        report.rows.push(fill_read_row(row, mode, cfg.reps, r));
                    }
                }
            }
        }
    }
    Ok(report)
}

pub fn run_experiment(exp: Experiment, cfg: &BenchConfig) -> Result<BenchReport> {
    match exp {
        Experiment::Codecs => bench_codecs(cfg),
        Experiment::Rac => bench_rac(cfg),
        Experiment::Blockstore => bench_blockstore(cfg),
    }
}
