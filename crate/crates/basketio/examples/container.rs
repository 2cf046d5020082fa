// Write a two-branch container to disk, then read it back by index and by
// stride.

use basketio::container::{TreeReader, TreeWriter, WriterOptions};
use basketio::CodecSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("events.rcf");

    let mut writer = TreeWriter::create(&path, WriterOptions::new(16 << 10, CodecSpec::lz4hc(9)?, false))?;
    for i in 0..5000u32 {
        writer.append_event("hits", &i.to_le_bytes().repeat(8))?;
        if i % 10 == 0 {
            writer.append_event("tracks", format!("track {i}").as_bytes())?;
        }
    }
    let index = writer.finalize()?;
    drop(writer);
    for b in &index.branches {
        println!("{:<8} {:>5} events in {:>3} baskets, {:>6} bytes stored", b.name, b.total_events(), b.baskets.len(), b.stored_bytes());
    }

    let reader = TreeReader::open(&path)?;
    assert_eq!(reader.read_event("hits", 4321)?, 4321u32.to_le_bytes().repeat(8));
    assert_eq!(reader.read_event("tracks", 7)?, b"track 70");
    let every_hundredth = reader.scan("hits", 100)?.count();
    assert_eq!(every_hundredth, 50);
    println!("file {} bytes, reader stats {:?}", reader.file_len(), reader.stats());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
