//! Layout-blind external compression: any file is cut into equal blocks,
//! each compressed on its own, with an index that maps byte ranges back to
//! blocks.
//!
//! Packed layout, little-endian:
//!
//! ```text
//! "BPK1" | version u16 | codec u8 | level u8 | block_size u32 | original_len u64
//! block frames...
//! comp_len u32 * entry_count | entry_count u32 | index_offset u64 | "BPK1"
//! ```
//!
//! Block offsets are not stored; they are the prefix sums of `comp_len`
//! starting right after the 20-byte header.
//!
//! Reads go through two caches. The fetch cache holds compressed blocks
//! already pulled from the backing store (disk to memory). The decoded
//! cache holds decompressed blocks, the way a kernel page cache holds the
//! plain pages of a mounted compressed filesystem.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use lru::LruCache;

use crate::codec::{Codec, CodecSpec};
use crate::error::{Error, Result};
use crate::source::ByteSource;

pub const MAGIC: [u8; 4] = *b"BPK1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 20;
const TAIL_LEN: u64 = 4 + 8 + 4;
pub const MIN_BLOCK_SIZE: u64 = 4096;
pub const MAX_BLOCK_SIZE: u64 = 1 << 20;

pub fn check_block_size(block_size: u64) -> Result<()> {
    if !block_size.is_power_of_two() || !(MIN_BLOCK_SIZE..=MAX_BLOCK_SIZE).contains(&block_size) {
        return Err(Error::InvalidBlockSize(block_size));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockEntry {
    pub file_offset: u64,
    pub comp_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockIndex {
    pub block_size: u64,
    pub original_len: u64,
    pub codec: CodecSpec,
    pub entries: Vec<BlockEntry>,
}

impl BlockIndex {
    pub fn block_count(&self) -> usize {
        self.entries.len()
    }

    /// Uncompressed length of block `k`; only the last one may be short.
    pub fn block_len(&self, k: usize) -> u64 {
        let start = k as u64 * self.block_size;
        self.block_size.min(self.original_len - start)
    }

    /// Size of the whole packed file.
    pub fn packed_len(&self) -> u64 {
        HEADER_LEN + self.compressed_bytes() + 4 * self.entries.len() as u64 + TAIL_LEN
    }

    pub fn compressed_bytes(&self) -> u64 {
        self.entries.iter().map(|e| e.comp_len).sum()
    }

    /// Blocks overlapping `[offset, offset + len)`.
    pub fn blocks_for(&self, offset: u64, len: u64) -> std::ops::RangeInclusive<usize> {
        let first = offset / self.block_size;
        let last = (offset + len - 1) / self.block_size;
        first as usize..=last as usize
    }
}

/// Packs any byte stream. Returns the index written to `out`.
pub fn pack<R: Read, W: Write>(
    mut input: R,
    mut out: W,
    block_size: u64,
    spec: CodecSpec,
    codec: &Codec,
) -> Result<BlockIndex> {
    check_block_size(block_size)?;
    // original_len is known only at the end; buffer frames behind a
    // placeholder header would need Seek, so the header is emitted after
    // reading everything into block frames.
    let mut frames: Vec<Vec<u8>> = Vec::new();
    let mut original_len = 0u64;
    let mut block = vec![0u8; block_size as usize];
    loop {
        let n = read_full(&mut input, &mut block)?;
        if n == 0 {
            break;
        }
        original_len += n as u64;
        frames.push(codec.compress(spec, &block[..n])?);
        if n < block.len() {
            break;
        }
    }
    let [id, level] = spec.to_wire();
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[id, level])?;
    out.write_all(&(block_size as u32).to_le_bytes())?;
    out.write_all(&original_len.to_le_bytes())?;
    let mut entries = Vec::with_capacity(frames.len());
    let mut pos = HEADER_LEN;
    for f in &frames {
        out.write_all(f)?;
        entries.push(BlockEntry {
            file_offset: pos,
            comp_len: f.len() as u64,
        });
        pos += f.len() as u64;
    }
    let index_offset = pos;
    for e in &entries {
        let len = u32::try_from(e.comp_len)
            .map_err(|_| Error::InvalidArgument("compressed block exceeds 4 GiB".into()))?;
        out.write_all(&len.to_le_bytes())?;
    }
    out.write_all(&(entries.len() as u32).to_le_bytes())?;
    out.write_all(&index_offset.to_le_bytes())?;
    out.write_all(&MAGIC)?;
    out.flush()?;
    Ok(BlockIndex {
        block_size,
        original_len,
        codec: spec,
        entries,
    })
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub fn pack_file(
    input: impl AsRef<Path>,
    output: impl AsRef<Path>,
    block_size: u64,
    spec: CodecSpec,
) -> Result<BlockIndex> {
    check_block_size(block_size)?;
    let reader = BufReader::new(File::open(input)?);
    let writer = BufWriter::new(File::create(output)?);
    pack(reader, writer, block_size, spec, &Codec::new())
}

pub fn pack_bytes(data: &[u8], block_size: u64, spec: CodecSpec) -> Result<(Vec<u8>, BlockIndex)> {
    let mut out = Vec::new();
    let index = pack(data, &mut out, block_size, spec, &Codec::new())?;
    Ok((out, index))
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptFrame(msg.into())
}

fn parse_index(source: &ByteSource) -> Result<BlockIndex> {
    let len = source.len();
    if len < HEADER_LEN + TAIL_LEN {
        return Err(corrupt("packed file too short"));
    }
    let head = source.read_at(0, HEADER_LEN as usize)?;
    if head[..4] != MAGIC {
        return Err(corrupt("bad packed-file magic"));
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != VERSION {
        return Err(corrupt(format!("unsupported packed-file version {version}")));
    }
    let codec = CodecSpec::from_wire(head[6], head[7]).map_err(|e| corrupt(e.to_string()))?;
    let block_size = u32::from_le_bytes(head[8..12].try_into().unwrap()) as u64;
    check_block_size(block_size).map_err(|e| corrupt(e.to_string()))?;
    let original_len = u64::from_le_bytes(head[12..20].try_into().unwrap());

    let tail = source.read_at(len - TAIL_LEN, TAIL_LEN as usize)?;
    if tail[12..] != MAGIC {
        return Err(corrupt("missing packed-file trailer"));
    }
    let count = u32::from_le_bytes(tail[..4].try_into().unwrap()) as u64;
    let index_offset = u64::from_le_bytes(tail[4..12].try_into().unwrap());
    if count != original_len.div_ceil(block_size) {
        return Err(corrupt("block count does not match original length"));
    }
    if index_offset < HEADER_LEN || index_offset.checked_add(4 * count + TAIL_LEN) != Some(len) {
        return Err(corrupt("index offset inconsistent with file length"));
    }
    let raw = source.read_at(index_offset, 4 * count as usize)?;
    let mut entries = Vec::with_capacity(count as usize);
    let mut pos = HEADER_LEN;
    for c in raw.chunks_exact(4) {
        let comp_len = u32::from_le_bytes(c.try_into().unwrap()) as u64;
        entries.push(BlockEntry {
            file_offset: pos,
            comp_len,
        });
        pos += comp_len;
    }
    if pos != index_offset {
        return Err(corrupt("block lengths do not tile the data region"));
    }
    Ok(BlockIndex {
        block_size,
        original_len,
        codec,
        entries,
    })
}

/// Capacities, in blocks, of the two read caches. Zero disables a cache and
/// `usize::MAX` leaves it unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    pub fetched_blocks: usize,
    pub decoded_blocks: usize,
}

impl CacheConfig {
    pub const NONE: CacheConfig = CacheConfig {
        fetched_blocks: 0,
        decoded_blocks: 0,
    };

    /// Keeps fetched compressed blocks but decompresses on every read.
    pub const FETCH_ONLY: CacheConfig = CacheConfig {
        fetched_blocks: usize::MAX,
        decoded_blocks: 0,
    };
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            fetched_blocks: usize::MAX,
            decoded_blocks: usize::MAX,
        }
    }
}

type BlockCache = Mutex<LruCache<usize, Arc<Vec<u8>>>>;

fn make_cache(capacity: usize) -> Option<BlockCache> {
    match capacity {
        0 => None,
        usize::MAX => Some(Mutex::new(LruCache::unbounded())),
        n => Some(Mutex::new(LruCache::new(NonZeroUsize::new(n).unwrap()))),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FetchStats {
    pub blocks_fetched: u64,
    pub bytes_fetched_compressed: u64,
    pub bytes_decompressed: u64,
}

#[derive(Debug, Default)]
struct AtomicStats {
    blocks_fetched: AtomicU64,
    bytes_fetched_compressed: AtomicU64,
    bytes_decompressed: AtomicU64,
}

/// An opened packed file serving random byte-range reads.
pub struct BlockStore {
    source: ByteSource,
    index: BlockIndex,
    codec: Codec,
    fetched: Option<BlockCache>,
    decoded: Option<BlockCache>,
    stats: AtomicStats,
}

impl BlockStore {
    pub fn open(path: impl AsRef<Path>, cache: CacheConfig) -> Result<Self> {
        Self::from_source(ByteSource::open(path)?, cache)
    }

    pub fn from_bytes(bytes: impl Into<Arc<[u8]>>, cache: CacheConfig) -> Result<Self> {
        Self::from_source(ByteSource::from_bytes(bytes), cache)
    }

    pub fn from_source(source: ByteSource, cache: CacheConfig) -> Result<Self> {
        let index = parse_index(&source)?;
        source.reset_counters();
        Ok(BlockStore {
            source,
            index,
            codec: Codec::new(),
            fetched: make_cache(cache.fetched_blocks),
            decoded: make_cache(cache.decoded_blocks),
            stats: AtomicStats::default(),
        })
    }

    pub fn index(&self) -> &BlockIndex {
        &self.index
    }

    pub fn original_len(&self) -> u64 {
        self.index.original_len
    }

    pub fn stats(&self) -> FetchStats {
        FetchStats {
            blocks_fetched: self.stats.blocks_fetched.load(Ordering::Relaxed),
            bytes_fetched_compressed: self.stats.bytes_fetched_compressed.load(Ordering::Relaxed),
            bytes_decompressed: self.stats.bytes_decompressed.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&self) {
        self.stats.blocks_fetched.store(0, Ordering::Relaxed);
        self.stats.bytes_fetched_compressed.store(0, Ordering::Relaxed);
        self.stats.bytes_decompressed.store(0, Ordering::Relaxed);
    }

    /// Empties both caches: the next read is fully cold.
    pub fn clear_caches(&self) {
        for c in [&self.fetched, &self.decoded].into_iter().flatten() {
            c.lock().unwrap_or_else(|p| p.into_inner()).clear();
        }
    }

    fn fetch(&self, k: usize) -> Result<Arc<Vec<u8>>> {
        if let Some(c) = &self.fetched {
            if let Some(hit) = c.lock().unwrap_or_else(|p| p.into_inner()).get(&k) {
                return Ok(hit.clone());
            }
        }
        let e = self.index.entries[k];
        let frame = Arc::new(self.source.read_at(e.file_offset, e.comp_len as usize)?);
        self.stats.blocks_fetched.fetch_add(1, Ordering::Relaxed);
        self.stats
            .bytes_fetched_compressed
            .fetch_add(e.comp_len, Ordering::Relaxed);
        if let Some(c) = &self.fetched {
            c.lock().unwrap_or_else(|p| p.into_inner()).put(k, frame.clone());
        }
        Ok(frame)
    }

    fn decode(&self, k: usize, frame: &[u8]) -> Result<Vec<u8>> {
        let len = self.index.block_len(k);
        let block = self.codec.decompress(self.index.codec, frame, len as usize)?;
        self.stats.bytes_decompressed.fetch_add(len, Ordering::Relaxed);
        Ok(block)
    }

    /// Block `k` in plain form, through both caches.
    pub fn block(&self, k: usize) -> Result<Arc<Vec<u8>>> {
        if let Some(c) = &self.decoded {
            if let Some(hit) = c.lock().unwrap_or_else(|p| p.into_inner()).get(&k) {
                return Ok(hit.clone());
            }
        }
        let frame = self.fetch(k)?;
        let block = Arc::new(self.decode(k, &frame)?);
        if let Some(c) = &self.decoded {
            c.lock().unwrap_or_else(|p| p.into_inner()).put(k, block.clone());
        }
        Ok(block)
    }

    /// Bytes `[offset, offset + len)` of the original file.
    pub fn read_range(&self, offset: u64, len: u64) -> Result<Vec<u8>> {
        let total = self.index.original_len;
        if offset.checked_add(len).is_none_or(|end| end > total) {
            return Err(Error::RangeOutOfBounds { offset, len, total });
        }
        let mut out = Vec::with_capacity(len as usize);
        if len == 0 {
            return Ok(out);
        }
        let bs = self.index.block_size;
        for k in self.index.blocks_for(offset, len) {
            let block = self.block(k)?;
            let block_start = k as u64 * bs;
            let from = offset.max(block_start) - block_start;
            let to = (offset + len).min(block_start + block.len() as u64) - block_start;
            out.extend_from_slice(&block[from as usize..to as usize]);
        }
        Ok(out)
    }

    /// Writes the original stream to `out`, block by block, bypassing caches.
    pub fn unpack_to<W: Write>(&self, mut out: W) -> Result<()> {
        for k in 0..self.index.block_count() {
            let e = self.index.entries[k];
            let frame = self.source.read_at(e.file_offset, e.comp_len as usize)?;
            self.stats.blocks_fetched.fetch_add(1, Ordering::Relaxed);
            self.stats
                .bytes_fetched_compressed
                .fetch_add(e.comp_len, Ordering::Relaxed);
            out.write_all(&self.decode(k, &frame)?)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn unpack_file(&self, output: impl AsRef<Path>) -> Result<()> {
        self.unpack_to(BufWriter::new(File::create(output)?))
    }
}
