use std::io;

use thiserror::Error;

use crate::codec::Algorithm;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported level {level} for {algorithm}")]
    UnsupportedLevel { algorithm: Algorithm, level: u8 },

    #[error("codec {0} is not available in this build")]
    CodecUnavailable(Algorithm),

    #[error("unknown codec id {0}")]
    UnknownCodec(u8),

    #[error("corrupt frame: {0}")]
    CorruptFrame(String),

    #[error("decompressed length {actual} does not match expected {expected}")]
    LengthMismatch { expected: u64, actual: u64 },

    #[error("basket capacity {0} is below the 4096 byte floor")]
    InvalidCapacity(u64),

    #[error("event payloads must not be empty")]
    EmptyPayload,

    #[error("writer is already finalized")]
    WriterClosed,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("unknown branch {0:?}")]
    UnknownBranch(String),

    #[error("bad magic")]
    BadMagic,

    #[error("corrupt footer: {0}")]
    CorruptFooter(String),

    #[error("block size {0} is not a power of two in 4096..=1048576")]
    InvalidBlockSize(u64),

    #[error("range {offset}+{len} exceeds length {total}")]
    RangeOutOfBounds { offset: u64, len: u64, total: u64 },

    #[error("invalid corpus mix: {0}")]
    InvalidMix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    /// Short machine-greppable class of the error, used as the CLI prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io(_) => "E_IO",
            Error::CorruptFrame(_)
            | Error::LengthMismatch { .. }
            | Error::BadMagic
            | Error::CorruptFooter(_)
            | Error::UnknownCodec(_) => "E_CORRUPT",
            Error::IndexOutOfRange { .. } | Error::RangeOutOfBounds { .. } => "E_RANGE",
            Error::CodecUnavailable(_) => "E_UNAVAILABLE",
            _ => "E_USAGE",
        }
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::CorruptFrame(msg.into())
    }
}
