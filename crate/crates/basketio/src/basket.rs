//! Basket records: the unit of compression and I/O.
//!
//! On-disk layout, little-endian:
//!
//! ```text
//! codec u8 | level u8 | flags u8 | reserved u8 | event_count u32
//! uncompressed_len u64 | compressed_len u64 | first_event_index u64
//! [RAC]    comp_offsets u32 * (event_count + 1), uncomp_lens u32 * event_count
//! [VARLEN] event_lens u32 * event_count
//! payload (compressed_len bytes)
//! ```
//!
//! A plain basket with neither table holds events of identical length.

use crate::codec::{Codec, CodecSpec};
use crate::error::{Error, Result};
use crate::rac::RacTables;

pub const BASKET_HEADER_LEN: usize = 32;

/// Events are compressed individually and located through [`RacTables`].
pub const FLAG_RAC: u8 = 0b01;
/// A plain basket carries an explicit per-event length table.
pub const FLAG_VARLEN: u8 = 0b10;
const KNOWN_FLAGS: u8 = FLAG_RAC | FLAG_VARLEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasketHeader {
    pub codec: CodecSpec,
    pub flags: u8,
    pub event_count: u32,
    pub uncompressed_len: u64,
    pub compressed_len: u64,
    pub first_event_index: u64,
}

impl BasketHeader {
    pub fn is_rac(&self) -> bool {
        self.flags & FLAG_RAC != 0
    }

    pub fn to_bytes(&self) -> [u8; BASKET_HEADER_LEN] {
        let mut b = [0u8; BASKET_HEADER_LEN];
        let [id, level] = self.codec.to_wire();
        b[0] = id;
        b[1] = level;
        b[2] = self.flags;
        b[4..8].copy_from_slice(&self.event_count.to_le_bytes());
        b[8..16].copy_from_slice(&self.uncompressed_len.to_le_bytes());
        b[16..24].copy_from_slice(&self.compressed_len.to_le_bytes());
        b[24..32].copy_from_slice(&self.first_event_index.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        if b.len() < BASKET_HEADER_LEN {
            return Err(Error::corrupt("short basket header"));
        }
        let codec = CodecSpec::from_wire(b[0], b[1])
            .map_err(|e| Error::corrupt(format!("basket codec: {e}")))?;
        let flags = b[2];
        if flags & !KNOWN_FLAGS != 0 || flags == KNOWN_FLAGS {
            return Err(Error::corrupt(format!("bad basket flags {flags:#04x}")));
        }
        let header = BasketHeader {
            codec,
            flags,
            event_count: u32::from_le_bytes(b[4..8].try_into().unwrap()),
            uncompressed_len: u64::from_le_bytes(b[8..16].try_into().unwrap()),
            compressed_len: u64::from_le_bytes(b[16..24].try_into().unwrap()),
            first_event_index: u64::from_le_bytes(b[24..32].try_into().unwrap()),
        };
        if header.event_count == 0 {
            return Err(Error::corrupt("basket with zero events"));
        }
        Ok(header)
    }

    /// Bytes of tables between the header and the payload.
    pub fn tables_len(&self) -> usize {
        tables_len(self.flags, self.event_count)
    }

    /// Header, tables and payload.
    pub fn encoded_len(&self) -> u64 {
        (BASKET_HEADER_LEN + self.tables_len()) as u64 + self.compressed_len
    }
}

pub(crate) fn tables_len(flags: u8, event_count: u32) -> usize {
    let n = event_count as usize;
    if flags & FLAG_RAC != 0 {
        RacTables::encoded_len(n)
    } else if flags & FLAG_VARLEN != 0 {
        4 * n
    } else {
        0
    }
}

/// Event boundaries of a decompressed plain basket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventLayout {
    Uniform(u64),
    Lengths(Vec<u32>),
}

impl EventLayout {
    pub fn event_range(&self, i: usize) -> (usize, usize) {
        match self {
            EventLayout::Uniform(len) => {
                let len = *len as usize;
                (i * len, len)
            }
            EventLayout::Lengths(lens) => {
                let start: usize = lens[..i].iter().map(|l| *l as usize).sum();
                (start, lens[i] as usize)
            }
        }
    }

    /// Start offset of every event, plus the total length.
    pub fn offsets(&self, event_count: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(event_count + 1);
        let mut acc = 0usize;
        out.push(0);
        for i in 0..event_count {
            acc += match self {
                EventLayout::Uniform(len) => *len as usize,
                EventLayout::Lengths(lens) => lens[i] as usize,
            };
            out.push(acc);
        }
        out
    }
}

/// Tables that sit between header and payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasketTables {
    Plain(EventLayout),
    Rac(RacTables),
}

/// A basket held in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasketRecord {
    pub header: BasketHeader,
    pub tables: BasketTables,
    pub payload: Vec<u8>,
}

fn read_u32s(b: &[u8], n: usize) -> Vec<u32> {
    b[..4 * n]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

/// Parses and validates the tables that follow `header`.
pub(crate) fn decode_tables(header: &BasketHeader, b: &[u8]) -> Result<BasketTables> {
    let n = header.event_count as usize;
    if b.len() < header.tables_len() {
        return Err(Error::corrupt("short basket tables"));
    }
    if header.is_rac() {
        let tables = RacTables::decode(b, n)?;
        tables.validate(header)?;
        return Ok(BasketTables::Rac(tables));
    }
    let layout = if header.flags & FLAG_VARLEN != 0 {
        let lens = read_u32s(b, n);
        if lens.contains(&0) {
            return Err(Error::corrupt("zero-length event in basket"));
        }
        let sum: u64 = lens.iter().map(|l| *l as u64).sum();
        if sum != header.uncompressed_len {
            return Err(Error::corrupt("event lengths do not sum to basket length"));
        }
        EventLayout::Lengths(lens)
    } else {
        let n = n as u64;
        if header.uncompressed_len == 0 || header.uncompressed_len % n != 0 {
            return Err(Error::corrupt("uniform basket length not divisible by event count"));
        }
        EventLayout::Uniform(header.uncompressed_len / n)
    };
    Ok(BasketTables::Plain(layout))
}

impl BasketRecord {
    /// Packs `events` into one basket, either as a single frame or with
    /// per-event frames when `rac` is set.
    pub fn pack<E: AsRef<[u8]>>(
        codec: &Codec,
        events: &[E],
        spec: CodecSpec,
        rac: bool,
    ) -> Result<Self> {
        if rac {
            crate::rac::pack_rac_basket(codec, events, spec)
        } else {
            pack_plain(codec, events, spec)
        }
    }

    pub fn with_first_event_index(mut self, first: u64) -> Self {
        self.header.first_event_index = first;
        self
    }

    pub fn encoded_len(&self) -> u64 {
        self.header.encoded_len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len() as usize);
        out.extend_from_slice(&self.header.to_bytes());
        match &self.tables {
            BasketTables::Rac(t) => t.encode_into(&mut out),
            BasketTables::Plain(EventLayout::Lengths(lens)) => {
                for l in lens {
                    out.extend_from_slice(&l.to_le_bytes());
                }
            }
            BasketTables::Plain(EventLayout::Uniform(_)) => {}
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(b: &[u8]) -> Result<Self> {
        let header = BasketHeader::from_bytes(b)?;
        let tables = decode_tables(&header, &b[BASKET_HEADER_LEN..])?;
        let start = BASKET_HEADER_LEN + header.tables_len();
        let end = start as u64 + header.compressed_len;
        if end != b.len() as u64 {
            return Err(Error::corrupt(format!(
                "basket payload is {} bytes, header says {}",
                b.len().saturating_sub(start),
                header.compressed_len
            )));
        }
        Ok(BasketRecord {
            header,
            tables,
            payload: b[start..].to_vec(),
        })
    }

    pub fn is_rac(&self) -> bool {
        self.header.is_rac()
    }

    /// Decompresses every event of the basket.
    pub fn unpack_all(&self, codec: &Codec) -> Result<Vec<Vec<u8>>> {
        match &self.tables {
            BasketTables::Rac(_) => (0..self.header.event_count as usize)
                .map(|i| crate::rac::unpack_event(codec, self, i))
                .collect(),
            BasketTables::Plain(layout) => {
                let data = codec.decompress(
                    self.header.codec,
                    &self.payload,
                    self.header.uncompressed_len as usize,
                )?;
                let offsets = layout.offsets(self.header.event_count as usize);
                Ok(offsets.windows(2).map(|w| data[w[0]..w[1]].to_vec()).collect())
            }
        }
    }
}

pub(crate) fn check_events<E: AsRef<[u8]>>(events: &[E]) -> Result<(u32, u64)> {
    if events.is_empty() {
        return Err(Error::InvalidArgument("basket needs at least one event".into()));
    }
    let count = u32::try_from(events.len())
        .map_err(|_| Error::InvalidArgument("too many events for one basket".into()))?;
    let mut total = 0u64;
    for e in events {
        let len = e.as_ref().len();
        if len == 0 {
            return Err(Error::EmptyPayload);
        }
        if len > u32::MAX as usize {
            return Err(Error::InvalidArgument("event larger than 4 GiB".into()));
        }
        total += len as u64;
    }
    Ok((count, total))
}

fn pack_plain<E: AsRef<[u8]>>(codec: &Codec, events: &[E], spec: CodecSpec) -> Result<BasketRecord> {
    let (event_count, uncompressed_len) = check_events(events)?;
    let first_len = events[0].as_ref().len();
    let uniform = events.iter().all(|e| e.as_ref().len() == first_len);
    let mut raw = Vec::with_capacity(uncompressed_len as usize);
    for e in events {
        raw.extend_from_slice(e.as_ref());
    }
    let payload = codec.compress(spec, &raw)?;
    let (flags, layout) = if uniform {
        (0, EventLayout::Uniform(first_len as u64))
    } else {
        (
            FLAG_VARLEN,
            EventLayout::Lengths(events.iter().map(|e| e.as_ref().len() as u32).collect()),
        )
    };
    Ok(BasketRecord {
        header: BasketHeader {
            codec: spec,
            flags,
            event_count,
            uncompressed_len,
            compressed_len: payload.len() as u64,
            first_event_index: 0,
        },
        tables: BasketTables::Plain(layout),
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_bytes_are_little_endian() {
        let h = BasketHeader {
            codec: CodecSpec::deflate(6).unwrap(),
            flags: FLAG_RAC,
            event_count: 0x0102_0304,
            uncompressed_len: 0x1122,
            compressed_len: 0x33,
            first_event_index: 7,
        };
        let b = h.to_bytes();
        assert_eq!(&b[..8], &[1, 6, 1, 0, 4, 3, 2, 1]);
        assert_eq!(&b[8..10], &[0x22, 0x11]);
        assert_eq!(b[16], 0x33);
        assert_eq!(b[24], 7);
        assert_eq!(BasketHeader::from_bytes(&b).unwrap(), h);
    }

    #[test]
    fn header_rejects_garbage() {
        let mut b = BasketHeader {
            codec: CodecSpec::LZ4,
            flags: 0,
            event_count: 1,
            uncompressed_len: 1,
            compressed_len: 1,
            first_event_index: 0,
        }
        .to_bytes();
        b[2] = 0x80;
        assert!(matches!(BasketHeader::from_bytes(&b), Err(Error::CorruptFrame(_))));
        b[2] = 0;
        b[0] = 42;
        assert!(matches!(BasketHeader::from_bytes(&b), Err(Error::CorruptFrame(_))));
        b[0] = 3;
        b[4] = 0;
        assert!(matches!(BasketHeader::from_bytes(&b), Err(Error::CorruptFrame(_))));
    }

    #[test]
    fn plain_layouts() {
        let codec = Codec::new();
        let spec = CodecSpec::deflate(6).unwrap();
        let uniform = BasketRecord::pack(&codec, &[b"abcd", b"efgh"], spec, false).unwrap();
        assert_eq!(uniform.header.flags, 0);
        assert_eq!(uniform.header.tables_len(), 0);
        let varied: Vec<&[u8]> = vec![b"a", b"bcd", b"ef"];
        let varlen = BasketRecord::pack(&codec, &varied, spec, false).unwrap();
        assert_eq!(varlen.header.flags, FLAG_VARLEN);
        assert_eq!(varlen.header.tables_len(), 12);
        let bytes = varlen.encode();
        assert_eq!(bytes.len() as u64, varlen.encoded_len());
        let back = BasketRecord::decode(&bytes).unwrap();
        assert_eq!(back, varlen);
        assert_eq!(back.unpack_all(&codec).unwrap(), varied);
    }

    #[test]
    fn empty_inputs_rejected() {
        let codec = Codec::new();
        let none: [&[u8]; 0] = [];
        assert!(BasketRecord::pack(&codec, &none, CodecSpec::LZ4, false).is_err());
        assert!(matches!(
            BasketRecord::pack(&codec, &[b"x".as_slice(), b"".as_slice()], CodecSpec::LZ4, false),
            Err(Error::EmptyPayload)
        ));
    }

    #[test]
    fn inconsistent_lengths_are_corrupt() {
        let codec = Codec::new();
        let rec = BasketRecord::pack(&codec, &[b"a".as_slice(), b"bb".as_slice()], CodecSpec::IDENTITY, false).unwrap();
        let mut bytes = rec.encode();
        // first length entry 1 -> 2: sum no longer matches
        bytes[BASKET_HEADER_LEN] = 2;
        assert!(matches!(BasketRecord::decode(&bytes), Err(Error::CorruptFrame(_))));
        let mut truncated = rec.encode();
        truncated.pop();
        assert!(matches!(BasketRecord::decode(&truncated), Err(Error::CorruptFrame(_))));
    }
}
