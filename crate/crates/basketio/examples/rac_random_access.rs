// Random single-event reads with and without per-event compression.
// With RAC only the requested event is decompressed.

use basketio::container::{ReaderOptions, TreeReader, TreeWriter, WriterOptions};
use basketio::synthgen::{generate, EventKind, GenSpec};
use basketio::CodecSpec;
use rand::SeedableRng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GenSpec::new(EventKind::TSmall, 3, 2000)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let picks = rand::seq::index::sample(&mut rng, 2000, 100).into_vec();

    for rac in [false, true] {
        let mut writer = TreeWriter::new(Vec::new(), WriterOptions::new(64 << 10, CodecSpec::deflate(6)?, rac))?;
        for ev in generate(spec) {
            writer.append_event("tsmall", &ev.bytes)?;
        }
        let index = writer.finalize()?;
        let reader = TreeReader::from_bytes(writer.into_inner()?, ReaderOptions::default())?;
        let requested: usize = picks
            .iter()
            .map(|&i| reader.read_event("tsmall", i as u64).map(|e| e.len()))
            .sum::<Result<_, _>>()?;
        let stats = reader.stats();
        println!(
            "rac={rac:<5} stored {:>7} bytes, requested {requested}, decompressed {}",
            index.branch("tsmall").unwrap().stored_bytes(),
            stats.bytes_decompressed
        );
        if rac {
            assert_eq!(stats.bytes_decompressed, requested as u64);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
