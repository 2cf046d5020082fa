// Pack an arbitrary file into fixed-size compressed blocks and read byte
// ranges from it, watching what each read fetches.

use basketio::blockstore::{pack_file, BlockStore, CacheConfig};
use basketio::CodecSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("input.txt");
    let packed = dir.path().join("input.bpk");
    let text: String = (0..40_000).map(|i| format!("line {i}: the quick brown fox\n")).collect();
    std::fs::write(&input, &text)?;

    let index = pack_file(&input, &packed, 16 << 10, CodecSpec::deflate(9)?)?;
    println!("{} bytes -> {} bytes in {} blocks", index.original_len, index.packed_len(), index.block_count());

    let store = BlockStore::open(&packed, CacheConfig::default())?;
    let (offset, len) = (100_000u64, 40_000u64);
    let got = store.read_range(offset, len)?;
    assert_eq!(&got[..], &text.as_bytes()[offset as usize..(offset + len) as usize]);
    let cold = store.stats();
    println!("cold read touched blocks {:?}: {cold:?}", index.blocks_for(offset, len));

    store.read_range(offset, len)?;
    assert_eq!(store.stats(), cold, "warm read is served from cache");

    let restored = dir.path().join("restored.txt");
    store.unpack_file(&restored)?;
    assert_eq!(std::fs::read_to_string(&restored)?, text);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
