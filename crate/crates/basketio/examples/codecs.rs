// Compress one buffer with every codec family and compare frame sizes.

use basketio::codec::list_codecs;
use basketio::{Codec, CodecSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let data: Vec<u8> = (0..200_000u32).flat_map(|i| ((i / 3) as u16).to_le_bytes()).collect();
    let codec = Codec::new();
    for info in list_codecs().into_iter().filter(|c| c.available) {
        let spec = info.template;
        let frame = codec.compress(spec, &data)?;
        let back = codec.decompress(spec, &frame, data.len())?;
        assert_eq!(back, data);
        println!("{spec:>10}  {:>7} -> {:>7} bytes", data.len(), frame.len());
    }
    // Wire form is two bytes: algorithm id and level.
    let spec = CodecSpec::deflate(9)?;
    assert_eq!(CodecSpec::from_wire(spec.to_wire()[0], spec.to_wire()[1])?, spec);
    let counters = codec.compress_counters();
    println!("compressed {} bytes in {} calls", counters.bytes_in, counters.calls);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
