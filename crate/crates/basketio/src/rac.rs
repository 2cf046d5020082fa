//! Random access compression: every event of a basket is its own codec
//! frame, and two uncompressed tables record where each frame starts and how
//! long the event is once decompressed.
//!
//! Reading event `i` touches only `payload[comp_offsets[i]..comp_offsets[i + 1]]`.
//! The price is lost cross-event redundancy plus `8 * n + 4` table bytes.

use crate::basket::{check_events, BasketHeader, BasketRecord, BasketTables, FLAG_RAC};
use crate::codec::{Codec, CodecSpec};
use crate::error::{Error, Result};

/// Per-event access points of a RAC basket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RacTables {
    /// `event_count + 1` entries; the last equals the payload length.
    pub comp_offsets: Vec<u32>,
    pub uncomp_lens: Vec<u32>,
}

impl RacTables {
    pub fn encoded_len(event_count: usize) -> usize {
        4 * (event_count + 1) + 4 * event_count
    }

    pub fn event_count(&self) -> usize {
        self.uncomp_lens.len()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        for v in self.comp_offsets.iter().chain(&self.uncomp_lens) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn decode(b: &[u8], event_count: usize) -> Result<Self> {
        if b.len() < Self::encoded_len(event_count) {
            return Err(Error::corrupt("short RAC tables"));
        }
        let mut words = b
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()));
        let comp_offsets = words.by_ref().take(event_count + 1).collect();
        let uncomp_lens = words.take(event_count).collect();
        Ok(RacTables {
            comp_offsets,
            uncomp_lens,
        })
    }

    /// Checks the tables against the basket header. Runs before any frame is
    /// decompressed.
    pub fn validate(&self, header: &BasketHeader) -> Result<()> {
        let n = header.event_count as usize;
        if self.uncomp_lens.len() != n || self.comp_offsets.len() != n + 1 {
            return Err(Error::corrupt("RAC table length does not match event count"));
        }
        if self.comp_offsets[0] != 0 {
            return Err(Error::corrupt("first RAC offset is not zero"));
        }
        if self.comp_offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::corrupt("RAC offsets are not strictly increasing"));
        }
        if self.comp_offsets[n] as u64 != header.compressed_len {
            return Err(Error::corrupt("last RAC offset does not match payload length"));
        }
        if self.uncomp_lens.contains(&0) {
            return Err(Error::corrupt("zero-length event in RAC table"));
        }
        let sum: u64 = self.uncomp_lens.iter().map(|l| *l as u64).sum();
        if sum != header.uncompressed_len {
            return Err(Error::corrupt("RAC lengths do not sum to basket length"));
        }
        Ok(())
    }

    /// `(offset, length)` of event `i`'s frame within the payload.
    pub fn access_point(&self, i: usize) -> Result<(u64, u64)> {
        if i >= self.event_count() {
            return Err(Error::IndexOutOfRange {
                index: i as u64,
                len: self.event_count() as u64,
            });
        }
        let start = self.comp_offsets[i] as u64;
        Ok((start, self.comp_offsets[i + 1] as u64 - start))
    }
}

/// Compresses each event as an independent frame and records access points.
pub fn pack_rac_basket<E: AsRef<[u8]>>(
    codec: &Codec,
    events: &[E],
    spec: CodecSpec,
) -> Result<BasketRecord> {
    let (event_count, uncompressed_len) = check_events(events)?;
    let mut payload = Vec::new();
    let mut comp_offsets = Vec::with_capacity(events.len() + 1);
    comp_offsets.push(0u32);
    for e in events {
        let frame = codec.compress(spec, e.as_ref())?;
        payload.extend_from_slice(&frame);
        let end = u32::try_from(payload.len())
            .map_err(|_| Error::InvalidArgument("RAC basket payload exceeds 4 GiB".into()))?;
        comp_offsets.push(end);
    }
    let tables = RacTables {
        comp_offsets,
        uncomp_lens: events.iter().map(|e| e.as_ref().len() as u32).collect(),
    };
    Ok(BasketRecord {
        header: BasketHeader {
            codec: spec,
            flags: FLAG_RAC,
            event_count,
            uncompressed_len,
            compressed_len: payload.len() as u64,
            first_event_index: 0,
        },
        tables: BasketTables::Rac(tables),
        payload,
    })
}

fn rac_tables(basket: &BasketRecord) -> Result<&RacTables> {
    match &basket.tables {
        BasketTables::Rac(t) => Ok(t),
        BasketTables::Plain(_) => Err(Error::InvalidArgument("basket is not in RAC mode".into())),
    }
}

pub fn access_point(basket: &BasketRecord, i: usize) -> Result<(u64, u64)> {
    rac_tables(basket)?.access_point(i)
}

/// Decompresses event `i` alone.
pub fn unpack_event(codec: &Codec, basket: &BasketRecord, i: usize) -> Result<Vec<u8>> {
    let tables = rac_tables(basket)?;
    let (start, len) = tables.access_point(i)?;
    let frame = basket
        .payload
        .get(start as usize..(start + len) as usize)
        .ok_or_else(|| Error::corrupt("RAC access point beyond payload"))?;
    codec.decompress(basket.header.codec, frame, tables.uncomp_lens[i] as usize)
}
