// Deterministic synthetic events: three kinds and a byte-budgeted corpus.

use basketio::synthgen::{corpus, generate, EventKind, GenSpec, Mix};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for kind in EventKind::ALL {
        let first = generate(GenSpec::new(kind, 42, 1)?).next().expect("one event");
        println!("{:<7} {:>6} bytes per event", kind.branch_name(), first.bytes.len());
    }

    // Same seed, same bytes.
    let a: Vec<_> = generate(GenSpec::new(EventKind::TFloat, 7, 50)?).collect();
    let b: Vec<_> = generate(GenSpec::new(EventKind::TFloat, 7, 50)?).collect();
    assert_eq!(a, b);

    let c = corpus(8 << 20, Mix::default(), 1)?;
    for s in &c.specs {
        println!("{:<7} {:>6} events, {:>8} bytes", s.kind.branch_name(), s.count, s.total_bytes());
    }
    println!("corpus total {} bytes", c.total_bytes());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
