use std::sync::Arc;

use basketio::blockstore::{pack_bytes, pack_file, BlockStore, CacheConfig, FetchStats};
use basketio::container::{TreeWriter, WriterOptions};
use basketio::synthgen::{generate, EventKind, GenSpec};
use basketio::{CodecSpec, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const SIZES: [u64; 5] = [4 << 10, 16 << 10, 64 << 10, 256 << 10, 1 << 20];

fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut v = vec![0u8; len];
    ChaCha8Rng::seed_from_u64(seed).fill(&mut v[..]);
    v
}

fn digest(b: &[u8]) -> [u8; 32] {
    Sha256::digest(b).into()
}

#[test]
fn ten_mib_file_survives_pack_unpack() {
    let dir = tempfile::tempdir().unwrap();
    let (src, packed, out) = (dir.path().join("src"), dir.path().join("p"), dir.path().join("out"));
    let data = random_bytes(10 << 20, 1);
    std::fs::write(&src, &data).unwrap();
    let idx = pack_file(&src, &packed, 64 << 10, CodecSpec::deflate(6).unwrap()).unwrap();
    assert_eq!(idx.block_count(), 160);
    assert_eq!(std::fs::metadata(&packed).unwrap().len(), idx.packed_len());
    BlockStore::open(&packed, CacheConfig::NONE).unwrap().unpack_file(&out).unwrap();
    assert_eq!(digest(&std::fs::read(&out).unwrap()), digest(&data));
}

#[test]
fn empty_file_packs_to_no_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let (src, packed, out) = (dir.path().join("e"), dir.path().join("p"), dir.path().join("o"));
    std::fs::write(&src, b"").unwrap();
    let idx = pack_file(&src, &packed, 4096, CodecSpec::LZ4).unwrap();
    assert_eq!(idx.block_count(), 0);
    BlockStore::open(&packed, CacheConfig::default()).unwrap().unpack_file(&out).unwrap();
    assert!(std::fs::read(&out).unwrap().is_empty());
    assert!(matches!(
        pack_file(&src, &packed, 3000, CodecSpec::LZ4),
        Err(Error::InvalidBlockSize(3000))
    ));
}

#[test]
fn container_file_survives_pack_unpack() {
    let mut w = TreeWriter::new(Vec::new(), WriterOptions::new(16384, CodecSpec::LZ4, true)).unwrap();
    for kind in [EventKind::TFloat, EventKind::TSmall] {
        for ev in generate(GenSpec::new(kind, 2, 500).unwrap()) {
            w.append_event(kind.branch_name(), &ev.bytes).unwrap();
        }
    }
    w.finalize().unwrap();
    let image = w.into_inner().unwrap();
    let (packed, _) = pack_bytes(&image, 16384, CodecSpec::deflate(6).unwrap()).unwrap();
    let store = BlockStore::from_bytes(packed, CacheConfig::NONE).unwrap();
    let mut back = Vec::new();
    store.unpack_to(&mut back).unwrap();
    assert_eq!(digest(&back), digest(&image));
}

#[test]
fn larger_blocks_compress_better() {
    let mut corpus = Vec::new();
    for ev in generate(GenSpec::new(EventKind::TSmall, 4, 800).unwrap()) {
        corpus.extend_from_slice(&ev.bytes);
    }
    let spec = CodecSpec::deflate(6).unwrap();
    let small = pack_bytes(&corpus, 4096, spec).unwrap().1.packed_len();
    let large = pack_bytes(&corpus, 1 << 20, spec).unwrap().1.packed_len();
    assert!(large <= small);
}

#[test]
fn warm_decoded_cache_is_free_at_every_block_size() {
    let data = random_bytes(3 << 20, 8);
    for bs in SIZES {
        let (packed, _) = pack_bytes(&data, bs, CodecSpec::LZ4).unwrap();
        let store = BlockStore::from_bytes(packed, CacheConfig::default()).unwrap();
        store.read_range(0, data.len() as u64).unwrap();
        store.reset_stats();
        let mut rng = ChaCha8Rng::seed_from_u64(bs);
        for _ in 0..200 {
            let off = rng.random_range(0..data.len() as u64 - 5000);
            assert_eq!(store.read_range(off, 5000).unwrap(), data[off as usize..off as usize + 5000]);
        }
        assert_eq!(store.stats(), FetchStats::default(), "block size {bs}");
    }
}

#[test]
fn concurrent_reads_keep_exact_totals() {
    let data = random_bytes(1 << 20, 5);
    let (packed, idx) = pack_bytes(&data, 4096, CodecSpec::LZ4).unwrap();
    let store = Arc::new(BlockStore::from_bytes(packed, CacheConfig::NONE).unwrap());
    std::thread::scope(|s| {
        for t in 0..4u64 {
            let (store, data) = (store.clone(), &data);
            s.spawn(move || {
                for k in (t..256).step_by(4) {
                    let off = k * 4096;
                    assert_eq!(store.read_range(off, 4096).unwrap(), data[off as usize..off as usize + 4096]);
                }
            });
        }
    });
    let stats = store.stats();
    assert_eq!(stats.blocks_fetched, 256);
    assert_eq!(stats.bytes_fetched_compressed, idx.compressed_bytes());
    assert_eq!(stats.bytes_decompressed, 1 << 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unpack_inverts_pack(
        data in prop::collection::vec(any::<u8>(), 0..40_000),
        bs in prop::sample::select(SIZES.to_vec()),
        spec in prop::sample::select(vec![CodecSpec::IDENTITY, CodecSpec::deflate(1).unwrap(), CodecSpec::lzma(1).unwrap(), CodecSpec::LZ4, CodecSpec::lz4hc(4).unwrap()]),
    ) {
        let (packed, idx) = pack_bytes(&data, bs, spec).unwrap();
        prop_assert_eq!(idx.block_count() as u64, (data.len() as u64).div_ceil(bs));
        let store = BlockStore::from_bytes(packed, CacheConfig::default()).unwrap();
        let mut back = Vec::new();
        store.unpack_to(&mut back).unwrap();
        prop_assert_eq!(&back, &data);
        prop_assert_eq!(store.read_range(0, data.len() as u64).unwrap(), data);
    }

    #[test]
    fn cold_reads_fetch_exactly_the_overlapping_blocks(
        len in 1u64..9000,
        start in any::<prop::sample::Index>(),
        bs in prop::sample::select(vec![4096u64, 8192, 16384]),
    ) {
        let data: Vec<u8> = (0..100_000u32).map(|i| (i % 253) as u8).collect();
        let (packed, _) = pack_bytes(&data, bs, CodecSpec::LZ4).unwrap();
        let store = BlockStore::from_bytes(packed, CacheConfig::default()).unwrap();
        let offset = start.index(data.len() - len as usize + 1) as u64;
        let got = store.read_range(offset, len).unwrap();
        prop_assert_eq!(&got[..], &data[offset as usize..(offset + len) as usize]);
        let expected = (offset + len - 1) / bs - offset / bs + 1;
        prop_assert_eq!(store.stats().blocks_fetched, expected);
    }
}
