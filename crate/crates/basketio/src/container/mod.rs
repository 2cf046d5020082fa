//! Columnar event container: a tree of named branches, each a sequence of
//! compressed baskets.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! "RCF1" | format_version u16 | reserved u16
//! basket*                                   (see `basket`)
//! footer: branch_count u32, then per branch
//!         name_len u16 | name | locator_count u32 | locator*
//! locator: file_offset u64 | compressed_len u64 | event_count u32
//!          first_event_index u64 | codec u8 | level u8 | flags u8 | pad u8
//! trailer: footer_offset u64 | "RCF1"
//! ```

mod reader;
mod writer;

pub use reader::{ReadStats, ReaderOptions, Scan, TreeReader};
pub use writer::{TreeWriter, WriterOptions};

use crate::basket::{tables_len, BasketHeader, BASKET_HEADER_LEN};
use crate::codec::CodecSpec;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RCF1";
pub const FORMAT_VERSION: u16 = 1;
pub const FILE_HEADER_LEN: u64 = 8;
pub const TRAILER_LEN: u64 = 12;
pub const DEFAULT_BASKET_CAPACITY: u64 = 65536;
pub const MIN_BASKET_CAPACITY: u64 = 4096;
const LOCATOR_LEN: usize = 32;

/// Where one basket lives and which events it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasketLocator {
    pub file_offset: u64,
    pub compressed_len: u64,
    pub event_count: u32,
    pub first_event_index: u64,
    pub codec: CodecSpec,
    pub flags: u8,
}

impl BasketLocator {
    pub(crate) fn from_header(file_offset: u64, h: &BasketHeader) -> Self {
        BasketLocator {
            file_offset,
            compressed_len: h.compressed_len,
            event_count: h.event_count,
            first_event_index: h.first_event_index,
            codec: h.codec,
            flags: h.flags,
        }
    }

    pub fn tables_len(&self) -> usize {
        tables_len(self.flags, self.event_count)
    }

    /// Header, tables and payload of the basket on disk.
    pub fn encoded_len(&self) -> u64 {
        (BASKET_HEADER_LEN + self.tables_len()) as u64 + self.compressed_len
    }

    pub fn payload_offset(&self) -> u64 {
        self.file_offset + (BASKET_HEADER_LEN + self.tables_len()) as u64
    }

    pub fn contains(&self, index: u64) -> bool {
        index >= self.first_event_index && index < self.first_event_index + self.event_count as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchDirectory {
    pub name: String,
    pub baskets: Vec<BasketLocator>,
}

impl BranchDirectory {
    pub fn total_events(&self) -> u64 {
        self.baskets.iter().map(|b| b.event_count as u64).sum()
    }

    /// Bytes the branch occupies on disk, headers and tables included.
    pub fn stored_bytes(&self) -> u64 {
        self.baskets.iter().map(BasketLocator::encoded_len).sum()
    }

    /// Position of the basket holding `index`.
    pub fn basket_for(&self, index: u64) -> Option<usize> {
        let pos = self
            .baskets
            .partition_point(|b| b.first_event_index <= index);
        let k = pos.checked_sub(1)?;
        self.baskets[k].contains(index).then_some(k)
    }
}

/// Directory of every branch in a file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TreeIndex {
    pub branches: Vec<BranchDirectory>,
}

impl TreeIndex {
    pub fn branch(&self, name: &str) -> Option<&BranchDirectory> {
        self.branches.iter().find(|b| b.name == name)
    }

    pub fn total_events(&self, name: &str) -> Option<u64> {
        self.branch(name).map(BranchDirectory::total_events)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.branches.len() as u32).to_le_bytes());
        for br in &self.branches {
            out.extend_from_slice(&(br.name.len() as u16).to_le_bytes());
            out.extend_from_slice(br.name.as_bytes());
            out.extend_from_slice(&(br.baskets.len() as u32).to_le_bytes());
            for loc in &br.baskets {
                out.extend_from_slice(&loc.file_offset.to_le_bytes());
                out.extend_from_slice(&loc.compressed_len.to_le_bytes());
                out.extend_from_slice(&loc.event_count.to_le_bytes());
                out.extend_from_slice(&loc.first_event_index.to_le_bytes());
                let [id, level] = loc.codec.to_wire();
                out.extend_from_slice(&[id, level, loc.flags, 0]);
            }
        }
        out
    }

    /// Parses a footer and checks every locator against the data region
    /// `[FILE_HEADER_LEN, data_end)`.
    pub fn decode(b: &[u8], data_end: u64) -> Result<Self> {
        let mut cur = Cursor { b, pos: 0 };
        let branch_count = cur.u32()?;
        let mut branches = Vec::new();
        for _ in 0..branch_count {
            let name_len = cur.u16()? as usize;
            let name = std::str::from_utf8(cur.take(name_len)?)
                .map_err(|_| footer_err("branch name is not UTF-8"))?
                .to_owned();
            if branches.iter().any(|b: &BranchDirectory| b.name == name) {
                return Err(footer_err(format!("duplicate branch {name:?}")));
            }
            let count = cur.u32()? as usize;
            let mut baskets = Vec::with_capacity(count.min(1 << 20));
            let mut next_index = 0u64;
            for _ in 0..count {
                let file_offset = cur.u64()?;
                let compressed_len = cur.u64()?;
                let event_count = cur.u32()?;
                let first_event_index = cur.u64()?;
                let tail = cur.take(4)?;
                let codec = CodecSpec::from_wire(tail[0], tail[1])
                    .map_err(|e| footer_err(format!("locator codec: {e}")))?;
                let loc = BasketLocator {
                    file_offset,
                    compressed_len,
                    event_count,
                    first_event_index,
                    codec,
                    flags: tail[2],
                };
                if event_count == 0 || first_event_index != next_index {
                    return Err(footer_err(format!(
                        "locators of {name:?} do not tile the event range at {next_index}"
                    )));
                }
                let end = file_offset.checked_add(loc.encoded_len());
                if file_offset < FILE_HEADER_LEN || end.is_none_or(|e| e > data_end) {
                    return Err(footer_err(format!("basket at {file_offset} outside data region")));
                }
                next_index += event_count as u64;
                baskets.push(loc);
            }
            branches.push(BranchDirectory { name, baskets });
        }
        if cur.pos != b.len() {
            return Err(footer_err("trailing bytes after footer"));
        }
        Ok(TreeIndex { branches })
    }
}

fn footer_err(msg: impl Into<String>) -> Error {
    Error::CorruptFooter(msg.into())
}

struct Cursor<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .b
            .get(self.pos..self.pos + n)
            .ok_or_else(|| footer_err("footer truncated"))?;
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Encoded size of the footer for `index`.
pub fn footer_len(index: &TreeIndex) -> usize {
    4 + index
        .branches
        .iter()
        .map(|b| 2 + b.name.len() + 4 + LOCATOR_LEN * b.baskets.len())
        .sum::<usize>()
}
