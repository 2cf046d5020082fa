//! Positioned reads from a file or an in-memory image, with a running count
//! of bytes pulled from the backing store.

use std::fs::File;
use std::io::{self, Read, Seek, SeekFrom};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

#[derive(Debug)]
enum Backing {
    File(Mutex<File>),
    Memory(Arc<[u8]>),
}

#[derive(Debug)]
pub struct ByteSource {
    backing: Backing,
    len: u64,
    fetched_bytes: AtomicU64,
    fetches: AtomicU64,
}

impl ByteSource {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        Ok(ByteSource {
            backing: Backing::File(Mutex::new(file)),
            len,
            fetched_bytes: AtomicU64::new(0),
            fetches: AtomicU64::new(0),
        })
    }

    /// A memory-resident image; models a file already in the page cache.
    pub fn from_bytes(bytes: impl Into<Arc<[u8]>>) -> Self {
        let bytes = bytes.into();
        ByteSource {
            len: bytes.len() as u64,
            backing: Backing::Memory(bytes),
            fetched_bytes: AtomicU64::new(0),
            fetches: AtomicU64::new(0),
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_memory(&self) -> bool {
        matches!(self.backing, Backing::Memory(_))
    }

    pub fn read_at(&self, offset: u64, len: usize) -> io::Result<Vec<u8>> {
        let end = offset.checked_add(len as u64);
        if end.is_none_or(|end| end > self.len) {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                format!("read of {len} bytes at {offset} past end ({})", self.len),
            ));
        }
        let out = match &self.backing {
            Backing::Memory(bytes) => bytes[offset as usize..offset as usize + len].to_vec(),
            Backing::File(file) => {
                let mut buf = vec![0u8; len];
                let mut f = file.lock().unwrap_or_else(|p| p.into_inner());
                f.seek(SeekFrom::Start(offset))?;
                f.read_exact(&mut buf)?;
                buf
            }
        };
        self.fetched_bytes.fetch_add(len as u64, Ordering::Relaxed);
        self.fetches.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }

    /// Bytes read through [`ByteSource::read_at`] so far.
    pub fn fetched_bytes(&self) -> u64 {
        self.fetched_bytes.load(Ordering::Relaxed)
    }

    pub fn fetches(&self) -> u64 {
        self.fetches.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.fetched_bytes.store(0, Ordering::Relaxed);
        self.fetches.store(0, Ordering::Relaxed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_and_memory_agree() {
        let data: Vec<u8> = (0..=255u8).cycle().take(10_000).collect();
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        tmp.write_all(&data).unwrap();
        let file = ByteSource::open(tmp.path()).unwrap();
        let mem = ByteSource::from_bytes(data.clone());
        for (off, len) in [(0, 10), (9990, 10), (1234, 4000)] {
            assert_eq!(file.read_at(off, len).unwrap(), mem.read_at(off, len).unwrap());
        }
        assert_eq!(file.fetched_bytes(), 4020);
        assert_eq!(mem.fetches(), 3);
        assert!(file.read_at(9995, 10).is_err());
        assert!(mem.read_at(u64::MAX, 2).is_err());
        mem.reset_counters();
        assert_eq!(mem.fetched_bytes(), 0);
    }
}
