use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use lru::LruCache;

use super::{BasketLocator, TreeIndex, FILE_HEADER_LEN, FORMAT_VERSION, MAGIC, TRAILER_LEN};
use crate::basket::{
    decode_tables, BasketHeader, BasketRecord, BasketTables, EventLayout, BASKET_HEADER_LEN,
};
use crate::codec::{Algorithm, Codec};
use crate::error::{Error, Result};
use crate::rac::RacTables;
use crate::source::ByteSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReaderOptions {
    /// Baskets kept after use. Plain baskets are cached decompressed, RAC
    /// baskets only keep their tables. Zero disables caching.
    pub cache_entries: usize,
}

impl Default for ReaderOptions {
    fn default() -> Self {
        ReaderOptions { cache_entries: 1 }
    }
}

/// Backing-store traffic of a reader.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub bytes_fetched: u64,
    pub fetches: u64,
    pub cache_hits: u64,
    /// Baskets opened from the backing store (cache misses).
    pub baskets_loaded: u64,
    pub bytes_decompressed: u64,
}

impl ReadStats {
    /// Traffic between an earlier snapshot and this one.
    pub fn since(&self, earlier: &ReadStats) -> ReadStats {
        ReadStats {
            bytes_fetched: self.bytes_fetched - earlier.bytes_fetched,
            fetches: self.fetches - earlier.fetches,
            cache_hits: self.cache_hits - earlier.cache_hits,
            baskets_loaded: self.baskets_loaded - earlier.baskets_loaded,
            bytes_decompressed: self.bytes_decompressed - earlier.bytes_decompressed,
        }
    }
}

#[derive(Debug)]
enum CachedBasket {
    Plain { data: Vec<u8>, offsets: Vec<usize> },
    Rac(RacTables),
}

type BasketKey = (usize, usize);

pub struct TreeReader {
    source: ByteSource,
    index: TreeIndex,
    footer: Vec<u8>,
    codec: Codec,
    cache: Option<Mutex<LruCache<BasketKey, Arc<CachedBasket>>>>,
    cache_hits: AtomicU64,
    baskets_loaded: AtomicU64,
}

impl TreeReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path, ReaderOptions::default())
    }

    pub fn open_with(path: impl AsRef<Path>, opts: ReaderOptions) -> Result<Self> {
        Self::from_source(ByteSource::open(path)?, opts)
    }

    /// Reader over a file image already in memory.
    pub fn from_bytes(bytes: impl Into<Arc<[u8]>>, opts: ReaderOptions) -> Result<Self> {
        Self::from_source(ByteSource::from_bytes(bytes), opts)
    }

    pub fn from_source(source: ByteSource, opts: ReaderOptions) -> Result<Self> {
        let len = source.len();
        if len < FILE_HEADER_LEN + TRAILER_LEN {
            return Err(Error::BadMagic);
        }
        let head = source.read_at(0, FILE_HEADER_LEN as usize)?;
        if head[..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::CorruptFooter(format!("unsupported format version {version}")));
        }
        let trailer = source.read_at(len - TRAILER_LEN, TRAILER_LEN as usize)?;
        if trailer[8..] != MAGIC {
            return Err(Error::BadMagic);
        }
        let footer_offset = u64::from_le_bytes(trailer[..8].try_into().unwrap());
        let footer_end = len - TRAILER_LEN;
        if footer_offset < FILE_HEADER_LEN || footer_offset > footer_end {
            return Err(Error::CorruptFooter(format!("footer offset {footer_offset} out of range")));
        }
        let footer = source.read_at(footer_offset, (footer_end - footer_offset) as usize)?;
        let index = TreeIndex::decode(&footer, footer_offset)?;
        source.reset_counters();
        let cache = NonZeroUsize::new(opts.cache_entries).map(|n| Mutex::new(LruCache::new(n)));
        Ok(TreeReader {
            source,
            index,
            footer,
            codec: Codec::new(),
            cache,
            cache_hits: Default::default(),
            baskets_loaded: Default::default(),
        })
    }

    pub fn index(&self) -> &TreeIndex {
        &self.index
    }

    /// Footer bytes exactly as stored.
    pub fn footer_bytes(&self) -> &[u8] {
        &self.footer
    }

    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    pub fn file_len(&self) -> u64 {
        self.source.len()
    }

    pub fn total_events(&self, branch: &str) -> Result<u64> {
        self.index
            .total_events(branch)
            .ok_or_else(|| Error::UnknownBranch(branch.to_owned()))
    }

    pub fn stats(&self) -> ReadStats {
        ReadStats {
            bytes_fetched: self.source.fetched_bytes(),
            fetches: self.source.fetches(),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            baskets_loaded: self.baskets_loaded.load(Ordering::Relaxed),
            bytes_decompressed: self.codec.bytes_decompressed(),
        }
    }

    /// Empties the basket cache; the next read of any basket is cold.
    pub fn clear_cache(&self) {
        if let Some(c) = &self.cache {
            c.lock().unwrap_or_else(|p| p.into_inner()).clear();
        }
    }

    fn locate(&self, branch: &str, index: u64) -> Result<(usize, usize, &BasketLocator)> {
        let b = self
            .index
            .branches
            .iter()
            .position(|d| d.name == branch)
            .ok_or_else(|| Error::UnknownBranch(branch.to_owned()))?;
        let dir = &self.index.branches[b];
        let k = dir.basket_for(index).ok_or(Error::IndexOutOfRange {
            index,
            len: dir.total_events(),
        })?;
        Ok((b, k, &dir.baskets[k]))
    }

    fn cached(&self, key: BasketKey) -> Option<Arc<CachedBasket>> {
        let cache = self.cache.as_ref()?;
        let hit = cache.lock().unwrap_or_else(|p| p.into_inner()).get(&key).cloned();
        if hit.is_some() {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    fn remember(&self, key: BasketKey, basket: Arc<CachedBasket>) {
        if let Some(cache) = &self.cache {
            cache.lock().unwrap_or_else(|p| p.into_inner()).put(key, basket);
        }
    }

    fn check_header(loc: &BasketLocator, h: &BasketHeader) -> Result<()> {
        if h.codec != loc.codec
            || h.flags != loc.flags
            || h.event_count != loc.event_count
            || h.compressed_len != loc.compressed_len
            || h.first_event_index != loc.first_event_index
        {
            return Err(Error::corrupt(format!(
                "basket header at {} disagrees with its locator",
                loc.file_offset
            )));
        }
        Ok(())
    }

    fn load_plain(&self, loc: &BasketLocator) -> Result<CachedBasket> {
        let bytes = self.source.read_at(loc.file_offset, loc.encoded_len() as usize)?;
        let record = BasketRecord::decode(&bytes)?;
        Self::check_header(loc, &record.header)?;
        let BasketTables::Plain(layout) = &record.tables else {
            return Err(Error::corrupt("plain locator points at a RAC basket"));
        };
        let data = self.codec.decompress(
            record.header.codec,
            &record.payload,
            record.header.uncompressed_len as usize,
        )?;
        let offsets = layout.offsets(record.header.event_count as usize);
        Ok(CachedBasket::Plain { data, offsets })
    }

    fn load_rac_tables(&self, loc: &BasketLocator) -> Result<CachedBasket> {
        let head = self
            .source
            .read_at(loc.file_offset, BASKET_HEADER_LEN + loc.tables_len())?;
        let header = BasketHeader::from_bytes(&head)?;
        Self::check_header(loc, &header)?;
        match decode_tables(&header, &head[BASKET_HEADER_LEN..])? {
            BasketTables::Rac(t) => Ok(CachedBasket::Rac(t)),
            BasketTables::Plain(_) => Err(Error::corrupt("RAC locator points at a plain basket")),
        }
    }

    /// Returns the payload stored at `index` of `branch`.
    ///
    /// A plain basket is fetched and decompressed whole; a RAC basket only
    /// has its tables and the one event frame fetched.
    pub fn read_event(&self, branch: &str, index: u64) -> Result<Vec<u8>> {
        let (b, k, loc) = self.locate(branch, index)?;
        let key = (b, k);
        let basket = match self.cached(key) {
            Some(hit) => hit,
            None => {
                self.baskets_loaded.fetch_add(1, Ordering::Relaxed);
                let fresh = Arc::new(if loc.flags & crate::basket::FLAG_RAC != 0 {
                    self.load_rac_tables(loc)?
                } else {
                    self.load_plain(loc)?
                });
                self.remember(key, fresh.clone());
                fresh
            }
        };
        let i = (index - loc.first_event_index) as usize;
        match &*basket {
            CachedBasket::Plain { data, offsets } => Ok(data[offsets[i]..offsets[i + 1]].to_vec()),
            CachedBasket::Rac(tables) => {
                let (start, len) = tables.access_point(i)?;
                let frame = self
                    .source
                    .read_at(loc.payload_offset() + start, len as usize)?;
                self.codec
                    .decompress(loc.codec, &frame, tables.uncomp_lens[i] as usize)
            }
        }
    }

    /// Events at `0, stride, 2 * stride, ...` of `branch`.
    pub fn scan(&self, branch: &str, stride: u64) -> Result<Scan<'_>> {
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        let total = self.total_events(branch)?;
        Ok(Scan {
            reader: self,
            branch: branch.to_owned(),
            next: 0,
            stride,
            total,
        })
    }

    /// `(file offset, length)` of every event of a branch stored with the
    /// identity codec and without RAC. Used to replay event reads against a
    /// layout-blind copy of the file.
    pub fn raw_event_spans(&self, branch: &str) -> Result<Vec<(u64, u64)>> {
        let dir = self
            .index
            .branch(branch)
            .ok_or_else(|| Error::UnknownBranch(branch.to_owned()))?;
        let mut spans = Vec::with_capacity(dir.total_events() as usize);
        for loc in &dir.baskets {
            if loc.codec.algorithm() != Algorithm::Identity || loc.flags & crate::basket::FLAG_RAC != 0 {
                return Err(Error::InvalidArgument(format!(
                    "branch {branch:?} is not stored uncompressed"
                )));
            }
            let head = self
                .source
                .read_at(loc.file_offset, BASKET_HEADER_LEN + loc.tables_len())?;
            let header = BasketHeader::from_bytes(&head)?;
            Self::check_header(loc, &header)?;
            let BasketTables::Plain(layout) = decode_tables(&header, &head[BASKET_HEADER_LEN..])?
            else {
                unreachable!("flags checked above");
            };
            let base = loc.payload_offset();
            for i in 0..loc.event_count as usize {
                let (start, len) = match &layout {
                    EventLayout::Uniform(l) => (i as u64 * l, *l),
                    EventLayout::Lengths(_) => {
                        let (s, l) = layout.event_range(i);
                        (s as u64, l as u64)
                    }
                };
                spans.push((base + start, len));
            }
        }
        self.source.reset_counters();
        Ok(spans)
    }
}

pub struct Scan<'a> {
    reader: &'a TreeReader,
    branch: String,
    next: u64,
    stride: u64,
    total: u64,
}

impl Iterator for Scan<'_> {
    type Item = Result<Vec<u8>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.total {
            return None;
        }
        let i = self.next;
        self.next = self.next.saturating_add(self.stride);
        Some(self.reader.read_event(&self.branch, i))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total.saturating_sub(self.next).div_ceil(self.stride) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Scan<'_> {}
