//! Uniform interface over the Deflate (zlib), LZMA (xz) and LZ4 (frame)
//! compression formats.
//!
//! Every compressed unit is a complete, self-delimiting frame of its format.
//! The uncompressed length always travels out of band and is checked on
//! decompression.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::clock::thread_cpu_time;
use crate::error::{Error, Result};

/// Compression format identifier. The discriminant is the on-disk byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Algorithm {
    Identity = 0,
    Deflate = 1,
    Lzma = 2,
    Lz4 = 3,
    Lz4Hc = 4,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Identity,
        Algorithm::Deflate,
        Algorithm::Lzma,
        Algorithm::Lz4,
        Algorithm::Lz4Hc,
    ];

    pub fn from_id(id: u8) -> Result<Self> {
        Algorithm::ALL
            .get(id as usize)
            .copied()
            .ok_or(Error::UnknownCodec(id))
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Accepted levels, inclusive.
    pub fn level_range(self) -> (u8, u8) {
        match self {
            Algorithm::Identity | Algorithm::Lz4 => (0, 0),
            Algorithm::Deflate | Algorithm::Lzma => (1, 9),
            Algorithm::Lz4Hc => (4, 9),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Identity => "identity",
            Algorithm::Deflate => "deflate",
            Algorithm::Lzma => "lzma",
            Algorithm::Lz4 => "lz4",
            Algorithm::Lz4Hc => "lz4hc",
        }
    }

    /// Whether the provider for this format was compiled in.
    pub fn is_available(self) -> bool {
        match self {
            Algorithm::Identity => true,
            Algorithm::Deflate => cfg!(feature = "deflate"),
            Algorithm::Lzma => cfg!(feature = "lzma"),
            Algorithm::Lz4 | Algorithm::Lz4Hc => cfg!(feature = "lz4"),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("zlib") && *a == Algorithm::Deflate))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown codec {s:?}")))
    }
}

/// A compression format together with its level.
///
/// Construction normalizes the pair: level 0 of Deflate or LZMA becomes
/// [`Algorithm::Identity`], and plain LZ4 always carries level 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodecSpec {
    algorithm: Algorithm,
    level: u8,
}

impl CodecSpec {
    pub const IDENTITY: CodecSpec = CodecSpec {
        algorithm: Algorithm::Identity,
        level: 0,
    };
    pub const LZ4: CodecSpec = CodecSpec {
        algorithm: Algorithm::Lz4,
        level: 0,
    };

    pub fn new(algorithm: Algorithm, level: u8) -> Result<Self> {
        let algorithm = match (algorithm, level) {
            (Algorithm::Deflate | Algorithm::Lzma, 0) => Algorithm::Identity,
            (a, _) => a,
        };
        let level = match algorithm {
            Algorithm::Identity if level == 0 => 0,
            Algorithm::Lz4 => 0,
            _ => level,
        };
        let (lo, hi) = algorithm.level_range();
        if level < lo || level > hi {
            return Err(Error::UnsupportedLevel { algorithm, level });
        }
        Ok(CodecSpec { algorithm, level })
    }

    pub fn deflate(level: u8) -> Result<Self> {
        Self::new(Algorithm::Deflate, level)
    }

    pub fn lzma(level: u8) -> Result<Self> {
        Self::new(Algorithm::Lzma, level)
    }

    pub fn lz4hc(level: u8) -> Result<Self> {
        Self::new(Algorithm::Lz4Hc, level)
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    /// The `(codec id, level)` byte pair used in file headers.
    pub fn to_wire(&self) -> [u8; 2] {
        [self.algorithm.id(), self.level]
    }

    pub fn from_wire(id: u8, level: u8) -> Result<Self> {
        let algorithm = Algorithm::from_id(id)?;
        let spec = Self::new(algorithm, level)?;
        // Reject pairs that only become valid through normalization.
        if spec.to_wire() != [id, level] {
            return Err(Error::UnsupportedLevel { algorithm, level });
        }
        Ok(spec)
    }
}

impl Default for CodecSpec {
    fn default() -> Self {
        CodecSpec {
            algorithm: Algorithm::Deflate,
            level: 6,
        }
    }
}

impl fmt::Display for CodecSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.algorithm {
            Algorithm::Identity | Algorithm::Lz4 => write!(f, "{}", self.algorithm),
            a => write!(f, "{}-{}", a, self.level),
        }
    }
}

/// Parses `deflate-6`, `lzma-5`, `lz4`, `lz4hc-9`, `identity`.
impl FromStr for CodecSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, level) = match s.rsplit_once('-') {
            Some((name, level)) => {
                let level = level
                    .parse::<u8>()
                    .map_err(|_| Error::InvalidArgument(format!("bad codec level in {s:?}")))?;
                (name, Some(level))
            }
            None => (s, None),
        };
        let algorithm: Algorithm = name.parse()?;
        let level = level.unwrap_or(match algorithm {
            Algorithm::Deflate => 6,
            Algorithm::Lzma => 5,
            Algorithm::Lz4Hc => 9,
            Algorithm::Identity | Algorithm::Lz4 => 0,
        });
        CodecSpec::new(algorithm, level)
    }
}

/// Template entry returned by [`list_codecs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecInfo {
    pub template: CodecSpec,
    pub name: &'static str,
    pub levels: (u8, u8),
    pub available: bool,
}

pub fn list_codecs() -> Vec<CodecInfo> {
    let entry = |algorithm: Algorithm, level: u8, name: &'static str| CodecInfo {
        template: CodecSpec { algorithm, level },
        name,
        levels: algorithm.level_range(),
        available: algorithm.is_available(),
    };
    vec![
        entry(Algorithm::Identity, 0, "Identity (no compression)"),
        entry(Algorithm::Deflate, 6, "Deflate (zlib format)"),
        entry(Algorithm::Lzma, 5, "LZMA (xz format)"),
        entry(Algorithm::Lz4, 0, "LZ4 (frame format)"),
        entry(Algorithm::Lz4Hc, 9, "LZ4HC (frame format, high compression)"),
    ]
}

/// Read-only copy of a [`CodecCounters`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CounterSnapshot {
    pub bytes_in: u64,
    pub bytes_out: u64,
    pub calls: u64,
    pub cpu_nanos: u64,
}

impl CounterSnapshot {
    /// `bytes_in / bytes_out`, for a compression counter.
    pub fn ratio(&self) -> Option<f64> {
        (self.bytes_out > 0).then(|| self.bytes_in as f64 / self.bytes_out as f64)
    }

    pub fn since(&self, earlier: &CounterSnapshot) -> CounterSnapshot {
        CounterSnapshot {
            bytes_in: self.bytes_in - earlier.bytes_in,
            bytes_out: self.bytes_out - earlier.bytes_out,
            calls: self.calls - earlier.calls,
            cpu_nanos: self.cpu_nanos - earlier.cpu_nanos,
        }
    }
}

#[derive(Debug, Default)]
pub struct CodecCounters {
    bytes_in: AtomicU64,
    bytes_out: AtomicU64,
    calls: AtomicU64,
    cpu_nanos: AtomicU64,
}

impl CodecCounters {
    fn record(&self, bytes_in: usize, bytes_out: usize, cpu_nanos: u64) {
        self.bytes_in.fetch_add(bytes_in as u64, Ordering::Relaxed);
        self.bytes_out.fetch_add(bytes_out as u64, Ordering::Relaxed);
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.cpu_nanos.fetch_add(cpu_nanos, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            bytes_in: self.bytes_in.load(Ordering::Relaxed),
            bytes_out: self.bytes_out.load(Ordering::Relaxed),
            calls: self.calls.load(Ordering::Relaxed),
            cpu_nanos: self.cpu_nanos.load(Ordering::Relaxed),
        }
    }
}

/// Codec session: compresses and decompresses frames and accounts for the
/// bytes and CPU time spent doing it.
///
/// Sessions hold no data state and are safe to share between threads.
#[derive(Debug, Default)]
pub struct Codec {
    compressed: CodecCounters,
    decompressed: CodecCounters,
}

impl Codec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counters of [`Codec::compress`]: `bytes_in` is raw, `bytes_out` is framed.
    pub fn compress_counters(&self) -> CounterSnapshot {
        self.compressed.snapshot()
    }

    /// Counters of [`Codec::decompress`]: `bytes_in` is framed, `bytes_out` is raw.
    pub fn decompress_counters(&self) -> CounterSnapshot {
        self.decompressed.snapshot()
    }

    /// Total raw bytes produced by decompression so far.
    pub fn bytes_decompressed(&self) -> u64 {
        self.decompressed.bytes_out.load(Ordering::Relaxed)
    }

    pub fn compress(&self, spec: CodecSpec, data: &[u8]) -> Result<Vec<u8>> {
        let start = thread_cpu_time();
        let out = compress_frame(spec, data)?;
        let cpu = thread_cpu_time().saturating_sub(start);
        self.compressed
            .record(data.len(), out.len(), cpu.as_nanos() as u64);
        Ok(out)
    }

    pub fn decompress(&self, spec: CodecSpec, frame: &[u8], expected_len: usize) -> Result<Vec<u8>> {
        let start = thread_cpu_time();
        let out = decompress_frame(spec, frame, expected_len)?;
        let cpu = thread_cpu_time().saturating_sub(start);
        self.decompressed
            .record(frame.len(), out.len(), cpu.as_nanos() as u64);
        Ok(out)
    }
}

fn compress_frame(spec: CodecSpec, data: &[u8]) -> Result<Vec<u8>> {
    match spec.algorithm {
        Algorithm::Identity => Ok(data.to_vec()),
        Algorithm::Deflate => providers::deflate(spec.level, data),
        Algorithm::Lzma => providers::lzma(spec.level, data),
        Algorithm::Lz4 | Algorithm::Lz4Hc => providers::lz4(spec.level, data),
    }
}

fn decompress_frame(spec: CodecSpec, frame: &[u8], expected_len: usize) -> Result<Vec<u8>> {
    let out = match spec.algorithm {
        Algorithm::Identity => frame.to_vec(),
        Algorithm::Deflate => providers::inflate(frame, expected_len)?,
        Algorithm::Lzma => providers::unlzma(frame, expected_len)?,
        Algorithm::Lz4 | Algorithm::Lz4Hc => providers::unlz4(frame, expected_len)?,
    };
    if out.len() != expected_len {
        return Err(Error::LengthMismatch {
            expected: expected_len as u64,
            actual: out.len() as u64,
        });
    }
    Ok(out)
}

fn overrun(expected_len: usize, actual: usize) -> Error {
    Error::LengthMismatch {
        expected: expected_len as u64,
        actual: actual as u64,
    }
}

#[cfg(feature = "deflate")]
mod deflate_provider {
    use flate2::{Compress, Compression, Decompress, FlushCompress, FlushDecompress, Status};

    use super::overrun;
    use crate::error::{Error, Result};

    pub fn deflate(level: u8, data: &[u8]) -> Result<Vec<u8>> {
        let mut c = Compress::new(Compression::new(level as u32), true);
        let mut out = Vec::with_capacity(data.len() / 2 + 64);
        loop {
            let consumed = c.total_in() as usize;
            let status = c
                .compress_vec(&data[consumed..], &mut out, FlushCompress::Finish)
                .map_err(|e| Error::corrupt(format!("deflate: {e}")))?;
            if status == Status::StreamEnd {
                return Ok(out);
            }
            out.reserve(out.capacity().max(256));
        }
    }

    pub fn inflate(frame: &[u8], expected_len: usize) -> Result<Vec<u8>> {
        let mut d = Decompress::new(true);
        let mut out = Vec::with_capacity(expected_len + 1);
        loop {
            let (in_before, out_before) = (d.total_in(), d.total_out());
            let status = d
                .decompress_vec(&frame[in_before as usize..], &mut out, FlushDecompress::Finish)
                .map_err(|e| Error::corrupt(format!("inflate: {e}")))?;
            if status == Status::StreamEnd {
                if (d.total_in() as usize) != frame.len() {
                    return Err(Error::corrupt("trailing bytes after deflate stream"));
                }
                return Ok(out);
            }
            if out.len() > expected_len {
                return Err(overrun(expected_len, out.len()));
            }
            if out.len() == out.capacity() {
                out.reserve(64);
            } else if d.total_in() == in_before && d.total_out() == out_before {
                return Err(Error::corrupt("truncated deflate stream"));
            }
        }
    }
}

#[cfg(feature = "lzma")]
mod lzma_provider {
    use xz2::stream::{Action, Check, Filters, LzmaOptions, Status, Stream};

    use super::overrun;
    use crate::error::{Error, Result};

    /// Dictionary size of each xz preset.
    const PRESET_DICT: [u32; 10] = [
        1 << 18,
        1 << 20,
        1 << 21,
        1 << 22,
        1 << 22,
        1 << 23,
        1 << 23,
        1 << 24,
        1 << 25,
        1 << 26,
    ];

    fn lzma_err(e: xz2::stream::Error) -> Error {
        Error::corrupt(format!("lzma: {e:?}"))
    }

    pub fn lzma(level: u8, data: &[u8]) -> Result<Vec<u8>> {
        let mut opts = LzmaOptions::new_preset(level as u32).map_err(lzma_err)?;
        // A dictionary larger than the input buys nothing but setup cost.
        let dict = (data.len().max(4096) as u64).min(PRESET_DICT[level as usize] as u64);
        opts.dict_size(dict as u32);
        let mut filters = Filters::new();
        filters.lzma2(&opts);
        let mut s = Stream::new_stream_encoder(&filters, Check::Crc64).map_err(lzma_err)?;
        let mut out = Vec::with_capacity(data.len() / 3 + 128);
        loop {
            let consumed = s.total_in() as usize;
            let status = s
                .process_vec(&data[consumed..], &mut out, Action::Finish)
                .map_err(lzma_err)?;
            if status == Status::StreamEnd {
                return Ok(out);
            }
            if out.len() == out.capacity() {
                out.reserve(out.capacity().max(256));
            }
        }
    }

    pub fn unlzma(frame: &[u8], expected_len: usize) -> Result<Vec<u8>> {
        let mut s = Stream::new_stream_decoder(u64::MAX, 0).map_err(lzma_err)?;
        let mut out = Vec::with_capacity(expected_len + 1);
        loop {
            let (in_before, out_before) = (s.total_in(), s.total_out());
            let status = s
                .process_vec(&frame[in_before as usize..], &mut out, Action::Finish)
                .map_err(lzma_err)?;
            if status == Status::StreamEnd {
                if (s.total_in() as usize) != frame.len() {
                    return Err(Error::corrupt("trailing bytes after xz stream"));
                }
                return Ok(out);
            }
            if out.len() > expected_len {
                return Err(overrun(expected_len, out.len()));
            }
            if out.len() == out.capacity() {
                out.reserve(64);
            } else if s.total_in() == in_before && s.total_out() == out_before {
                return Err(Error::corrupt("truncated xz stream"));
            }
        }
    }
}

#[cfg(feature = "lz4")]
mod lz4_provider {
    use std::io::{Read, Write};

    use lz4::liblz4::BlockChecksum;
    use lz4::{ContentChecksum, Decoder, EncoderBuilder};

    use super::overrun;
    use crate::error::{Error, Result};

    pub fn lz4(level: u8, data: &[u8]) -> Result<Vec<u8>> {
        let mut enc = EncoderBuilder::new()
            .level(level as u32)
            .checksum(ContentChecksum::ChecksumEnabled)
            .block_checksum(BlockChecksum::NoBlockChecksum)
            .build(Vec::with_capacity(data.len() / 2 + 32))?;
        enc.write_all(data)?;
        let (out, res) = enc.finish();
        res?;
        Ok(out)
    }

    pub fn unlz4(frame: &[u8], expected_len: usize) -> Result<Vec<u8>> {
        let mut dec = Decoder::new(frame).map_err(|e| Error::corrupt(format!("lz4: {e}")))?;
        let mut out = Vec::with_capacity(expected_len + 1);
        (&mut dec)
            .take(expected_len as u64 + 1)
            .read_to_end(&mut out)
            .map_err(|e| Error::corrupt(format!("lz4: {e}")))?;
        if out.len() > expected_len {
            return Err(overrun(expected_len, out.len()));
        }
        let (rest, res) = dec.finish();
        if res.is_err() {
            return Err(Error::corrupt("truncated lz4 frame"));
        }
        if !rest.is_empty() {
            return Err(Error::corrupt("trailing bytes after lz4 frame"));
        }
        Ok(out)
    }
}

/// Dispatch to compiled-in providers, or `CodecUnavailable` stand-ins.
mod providers {
    #[cfg(feature = "deflate")]
    pub use super::deflate_provider::{deflate, inflate};
    #[cfg(feature = "lz4")]
    pub use super::lz4_provider::{lz4, unlz4};
    #[cfg(feature = "lzma")]
    pub use super::lzma_provider::{lzma, unlzma};

    #[allow(unused_imports)]
    use super::Algorithm;
    #[allow(unused_imports)]
    use crate::error::{Error, Result};

    #[cfg(not(feature = "deflate"))]
    pub fn deflate(_: u8, _: &[u8]) -> Result<Vec<u8>> {
        Err(Error::CodecUnavailable(Algorithm::Deflate))
    }
    #[cfg(not(feature = "deflate"))]
    pub fn inflate(_: &[u8], _: usize) -> Result<Vec<u8>> {
        Err(Error::CodecUnavailable(Algorithm::Deflate))
    }
    #[cfg(not(feature = "lzma"))]
    pub fn lzma(_: u8, _: &[u8]) -> Result<Vec<u8>> {
        Err(Error::CodecUnavailable(Algorithm::Lzma))
    }
    #[cfg(not(feature = "lzma"))]
    pub fn unlzma(_: &[u8], _: usize) -> Result<Vec<u8>> {
        Err(Error::CodecUnavailable(Algorithm::Lzma))
    }
    #[cfg(not(feature = "lz4"))]
    pub fn lz4(_: u8, _: &[u8]) -> Result<Vec<u8>> {
        Err(Error::CodecUnavailable(Algorithm::Lz4))
    }
    #[cfg(not(feature = "lz4"))]
    pub fn unlz4(_: &[u8], _: usize) -> Result<Vec<u8>> {
        Err(Error::CodecUnavailable(Algorithm::Lz4))
    }
}

/// Every valid `(algorithm, level)` pair.
pub fn all_specs() -> Vec<CodecSpec> {
    Algorithm::ALL
        .into_iter()
        .flat_map(|a| {
            let (lo, hi) = a.level_range();
            (lo..=hi).map(move |l| CodecSpec { algorithm: a, level: l })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn patterned(len: usize) -> Vec<u8> {
        (0..len).map(|i| ((i / 7) % 251) as u8).collect()
    }

    #[test]
    fn identity_is_exact() {
        let codec = Codec::new();
        assert_eq!(codec.compress(CodecSpec::IDENTITY, b"abc").unwrap(), b"abc");
        assert_eq!(codec.decompress(CodecSpec::IDENTITY, b"", 0).unwrap(), b"");
        let c = codec.compress_counters();
        assert_eq!((c.calls, c.bytes_in, c.bytes_out), (1, 3, 3));
        assert_eq!(codec.decompress_counters().calls, 1);
    }

    #[test]
    fn empty_input_round_trips_for_every_spec() {
        let codec = Codec::new();
        for spec in all_specs() {
            let frame = codec.compress(spec, &[]).unwrap();
            assert_eq!(codec.decompress(spec, &frame, 0).unwrap(), Vec::<u8>::new(), "{spec}");
        }
    }

    #[test]
    fn level_validation() {
        assert!(matches!(
            CodecSpec::deflate(10),
            Err(Error::UnsupportedLevel { .. })
        ));
        assert!(matches!(CodecSpec::lz4hc(3), Err(Error::UnsupportedLevel { .. })));
        assert!(CodecSpec::lz4hc(4).is_ok());
        assert_eq!(CodecSpec::deflate(0).unwrap(), CodecSpec::IDENTITY);
        assert_eq!(CodecSpec::lzma(0).unwrap(), CodecSpec::IDENTITY);
        assert_eq!(CodecSpec::new(Algorithm::Lz4, 7).unwrap(), CodecSpec::LZ4);
        assert!(CodecSpec::new(Algorithm::Identity, 3).is_err());
    }

    #[test]
    fn wire_pairs() {
        for spec in all_specs() {
            let [id, level] = spec.to_wire();
            assert_eq!(CodecSpec::from_wire(id, level).unwrap(), spec);
        }
        assert_eq!(CodecSpec::deflate(6).unwrap().to_wire(), [1, 6]);
        assert_eq!(CodecSpec::lz4hc(9).unwrap().to_wire(), [4, 9]);
        assert!(matches!(CodecSpec::from_wire(9, 0), Err(Error::UnknownCodec(9))));
        assert!(CodecSpec::from_wire(1, 0).is_err());
        assert!(CodecSpec::from_wire(3, 5).is_err());
    }

    #[test]
    fn parse_and_display() {
        for spec in all_specs() {
            assert_eq!(spec.to_string().parse::<CodecSpec>().unwrap(), spec);
        }
        assert_eq!("zlib-1".parse::<CodecSpec>().unwrap(), CodecSpec::deflate(1).unwrap());
        assert_eq!("lz4".parse::<CodecSpec>().unwrap(), CodecSpec::LZ4);
        assert!("brotli-3".parse::<CodecSpec>().is_err());
    }

    #[test]
    fn list_includes_every_format() {
        let list = list_codecs();
        for a in Algorithm::ALL {
            assert!(list.iter().any(|c| c.template.algorithm() == a));
        }
        let hc = list
            .iter()
            .find(|c| c.template.algorithm() == Algorithm::Lz4Hc)
            .unwrap();
        assert_eq!(hc.levels, (4, 9));
        let codec = Codec::new();
        for info in &list {
            let f = codec.compress(info.template, b"hello").unwrap();
            assert_eq!(codec.decompress(info.template, &f, 5).unwrap(), b"hello");
        }
    }

    #[test]
    fn truncated_deflate_frame_is_corrupt() {
        let codec = Codec::new();
        let spec = CodecSpec::deflate(6).unwrap();
        let data = patterned(10_000);
        let frame = codec.compress(spec, &data).unwrap();
        let err = codec
            .decompress(spec, &frame[..frame.len() - 1], data.len())
            .unwrap_err();
        assert!(matches!(err, Error::CorruptFrame(_)), "{err:?}");
    }

    #[test]
    fn truncated_frames_are_corrupt_for_all_formats() {
        let codec = Codec::new();
        let data = patterned(50_000);
        for spec in all_specs()
            .into_iter()
            .filter(|s| s.algorithm() != Algorithm::Identity)
        {
            let frame = codec.compress(spec, &data).unwrap();
            for cut in [1, frame.len() / 2] {
                let err = codec
                    .decompress(spec, &frame[..frame.len() - cut], data.len())
                    .unwrap_err();
                assert!(matches!(err, Error::CorruptFrame(_)), "{spec} cut {cut}: {err:?}");
            }
        }
    }

    #[test]
    fn wrong_expected_length_is_reported() {
        let codec = Codec::new();
        let data = patterned(4096);
        for spec in all_specs() {
            let frame = codec.compress(spec, &data).unwrap();
            for expected in [data.len() - 1, data.len() + 1] {
                let err = codec.decompress(spec, &frame, expected).unwrap_err();
                assert!(matches!(err, Error::LengthMismatch { .. }), "{spec}: {err:?}");
            }
        }
    }

    #[test]
    fn bit_flip_in_payload_is_detected() {
        let codec = Codec::new();
        let data = patterned(20_000);
        for spec in [
            CodecSpec::deflate(6).unwrap(),
            CodecSpec::lzma(5).unwrap(),
            CodecSpec::LZ4,
        ] {
            let mut frame = codec.compress(spec, &data).unwrap();
            let mid = frame.len() / 2;
            frame[mid] ^= 0x40;
            assert!(codec.decompress(spec, &frame, data.len()).is_err(), "{spec}");
        }
    }

    #[test]
    fn compression_is_deterministic_in_process() {
        let codec = Codec::new();
        let data = patterned(100_000);
        for spec in all_specs() {
            assert_eq!(
                codec.compress(spec, &data).unwrap(),
                codec.compress(spec, &data).unwrap(),
                "{spec}"
            );
        }
    }

    #[test]
    fn counters_accumulate() {
        let codec = Codec::new();
        let spec = CodecSpec::deflate(1).unwrap();
        let data = patterned(8192);
        let f = codec.compress(spec, &data).unwrap();
        codec.compress(spec, &data).unwrap();
        codec.decompress(spec, &f, data.len()).unwrap();
        let c = codec.compress_counters();
        assert_eq!(c.calls, 2);
        assert_eq!(c.bytes_in, 2 * 8192);
        assert_eq!(c.bytes_out, 2 * f.len() as u64);
        assert!(c.ratio().unwrap() > 1.0);
        let d = codec.decompress_counters();
        assert_eq!((d.bytes_in, d.bytes_out), (f.len() as u64, 8192));
        assert_eq!(codec.bytes_decompressed(), 8192);
        assert_eq!(CounterSnapshot::default().ratio(), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_any_spec(
            data in prop::collection::vec(any::<u8>(), 0..20_000),
            idx in 0usize..1000,
        ) {
            let specs = all_specs();
            let spec = specs[idx % specs.len()];
            let codec = Codec::new();
            let frame = codec.compress(spec, &data).unwrap();
            prop_assert_eq!(codec.decompress(spec, &frame, data.len()).unwrap(), data);
        }
    }
}
