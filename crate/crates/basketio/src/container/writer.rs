use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{
    BasketLocator, BranchDirectory, TreeIndex, DEFAULT_BASKET_CAPACITY, FORMAT_VERSION, MAGIC,
    MIN_BASKET_CAPACITY,
};
use crate::basket::BasketRecord;
use crate::codec::{Codec, CodecSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriterOptions {
    /// Uncompressed bytes buffered per branch before a basket is sealed.
    pub basket_capacity: u64,
    pub codec: CodecSpec,
    pub rac: bool,
}

impl Default for WriterOptions {
    fn default() -> Self {
        WriterOptions {
            basket_capacity: DEFAULT_BASKET_CAPACITY,
            codec: CodecSpec::default(),
            rac: false,
        }
    }
}

impl WriterOptions {
    pub fn new(basket_capacity: u64, codec: CodecSpec, rac: bool) -> Self {
        WriterOptions {
            basket_capacity,
            codec,
            rac,
        }
    }
}

#[derive(Debug)]
struct BranchBuffer {
    name: String,
    data: Vec<u8>,
    lens: Vec<usize>,
    next_index: u64,
    baskets: Vec<BasketLocator>,
}

/// Single-pass writer. Baskets are written as they fill; the footer and
/// trailer are written by [`TreeWriter::finalize`].
pub struct TreeWriter<W: Write = BufWriter<File>> {
    out: Option<W>,
    pos: u64,
    opts: WriterOptions,
    branches: Vec<BranchBuffer>,
    codec: Codec,
    finalized: bool,
}

impl TreeWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, opts: WriterOptions) -> Result<Self> {
        check_capacity(opts.basket_capacity)?;
        let file = File::create(path)?;
        TreeWriter::new(BufWriter::with_capacity(1 << 20, file), opts)
    }
}

fn check_capacity(capacity: u64) -> Result<()> {
    if capacity < MIN_BASKET_CAPACITY || capacity > u32::MAX as u64 {
        return Err(Error::InvalidCapacity(capacity));
    }
    Ok(())
}

impl<W: Write> TreeWriter<W> {
    pub fn new(mut out: W, opts: WriterOptions) -> Result<Self> {
        check_capacity(opts.basket_capacity)?;
        out.write_all(&MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&[0, 0])?;
        Ok(TreeWriter {
            out: Some(out),
            pos: super::FILE_HEADER_LEN,
            opts,
            branches: Vec::new(),
            codec: Codec::new(),
            finalized: false,
        })
    }

    pub fn options(&self) -> &WriterOptions {
        &self.opts
    }

    /// Compression counters of every basket sealed so far.
    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    /// Registers a branch so it appears in the index even if it stays empty.
    pub fn declare_branch(&mut self, name: &str) -> Result<()> {
        self.branch_slot(name).map(|_| ())
    }

    fn branch_slot(&mut self, name: &str) -> Result<usize> {
        if self.finalized {
            return Err(Error::WriterClosed);
        }
        if let Some(i) = self.branches.iter().position(|b| b.name == name) {
            return Ok(i);
        }
        if name.is_empty() || name.len() > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "branch name must be 1..=65535 bytes, got {}",
                name.len()
            )));
        }
        self.branches.push(BranchBuffer {
            name: name.to_owned(),
            data: Vec::new(),
            lens: Vec::new(),
            next_index: 0,
            baskets: Vec::new(),
        });
        Ok(self.branches.len() - 1)
    }

    /// Buffers one event. Once the branch buffer reaches the basket capacity
    /// it is sealed into a basket and written out; a single event larger than
    /// the capacity therefore always ends its basket.
    pub fn append_event(&mut self, branch: &str, payload: &[u8]) -> Result<()> {
        if self.finalized {
            return Err(Error::WriterClosed);
        }
        if payload.is_empty() {
            return Err(Error::EmptyPayload);
        }
        if payload.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("event larger than 4 GiB".into()));
        }
        let slot = self.branch_slot(branch)?;
        let buf = &mut self.branches[slot];
        buf.data.extend_from_slice(payload);
        buf.lens.push(payload.len());
        if buf.data.len() as u64 >= self.opts.basket_capacity {
            self.seal(slot)?;
        }
        Ok(())
    }

    fn seal(&mut self, slot: usize) -> Result<()> {
        let buf = &mut self.branches[slot];
        if buf.lens.is_empty() {
            return Ok(());
        }
        let mut events = Vec::with_capacity(buf.lens.len());
        let mut at = 0;
        for len in &buf.lens {
            events.push(&buf.data[at..at + len]);
            at += len;
        }
        let record = BasketRecord::pack(&self.codec, &events, self.opts.codec, self.opts.rac)?
            .with_first_event_index(buf.next_index);
        let out = self.out.as_mut().ok_or(Error::WriterClosed)?;
        let encoded = record.encode();
        out.write_all(&encoded)?;
        buf.baskets
            .push(BasketLocator::from_header(self.pos, &record.header));
        self.pos += encoded.len() as u64;
        buf.next_index += buf.lens.len() as u64;
        buf.data.clear();
        buf.lens.clear();
        Ok(())
    }

    /// Seals the partial basket of `branch`, if any. Appending more events
    /// afterwards starts a new basket.
    pub fn flush_branch(&mut self, branch: &str) -> Result<()> {
        let slot = self
            .branches
            .iter()
            .position(|b| b.name == branch)
            .ok_or_else(|| Error::UnknownBranch(branch.to_owned()))?;
        if self.finalized {
            return Err(Error::WriterClosed);
        }
        self.seal(slot)
    }

    /// Flushes partial baskets, writes footer and trailer, and closes the
    /// output. A second call fails with [`Error::WriterClosed`].
    pub fn finalize(&mut self) -> Result<TreeIndex> {
        if self.finalized {
            return Err(Error::WriterClosed);
        }
        for slot in 0..self.branches.len() {
            self.seal(slot)?;
        }
        let index = TreeIndex {
            branches: self
                .branches
                .iter()
                .map(|b| BranchDirectory {
                    name: b.name.clone(),
                    baskets: b.baskets.clone(),
                })
                .collect(),
        };
        let footer_offset = self.pos;
        let out = self.out.as_mut().ok_or(Error::WriterClosed)?;
        out.write_all(&index.encode())?;
        out.write_all(&footer_offset.to_le_bytes())?;
        out.write_all(&MAGIC)?;
        out.flush()?;
        self.finalized = true;
        Ok(index)
    }

    /// The underlying sink, once finalized.
    pub fn into_inner(mut self) -> Result<W> {
        if !self.finalized {
            return Err(Error::InvalidArgument("writer not finalized".into()));
        }
        self.out.take().ok_or(Error::WriterClosed)
    }
}
