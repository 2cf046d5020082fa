use std::sync::Arc;

use basketio::container::{
    footer_len, ReaderOptions, TreeReader, TreeWriter, WriterOptions, TRAILER_LEN,
};
use basketio::{CodecSpec, Error};
use proptest::prelude::*;

fn write_mem(opts: WriterOptions, events: &[(String, Vec<u8>)]) -> Vec<u8> {
    let mut w = TreeWriter::new(Vec::new(), opts).unwrap();
    for (b, p) in events {
        w.append_event(b, p).unwrap();
    }
    w.finalize().unwrap();
    w.into_inner().unwrap()
}

fn by_branch(events: &[(String, Vec<u8>)]) -> Vec<(String, Vec<Vec<u8>>)> {
    let mut out: Vec<(String, Vec<Vec<u8>>)> = Vec::new();
    for (b, p) in events {
        match out.iter_mut().find(|(n, _)| n == b) {
            Some((_, v)) => v.push(p.clone()),
            None => out.push((b.clone(), vec![p.clone()])),
        }
    }
    out
}

fn event_strategy() -> impl Strategy<Value = Vec<(String, Vec<u8>)>> {
    let payload = prop_oneof![
        4 => prop::collection::vec(any::<u8>(), 1..64),
        2 => prop::collection::vec(0u8..4, 1..3000),
        1 => (1usize..20_000).prop_map(|n| vec![7u8; n]),
    ];
    prop::collection::vec((prop::sample::select(vec!["a", "b", "γ"]), payload), 0..120)
        .prop_map(|v| v.into_iter().map(|(b, p)| (b.to_string(), p)).collect())
}

fn spec_strategy() -> impl Strategy<Value = CodecSpec> {
    prop::sample::select(vec![
        CodecSpec::IDENTITY,
        CodecSpec::deflate(1).unwrap(),
        CodecSpec::lzma(1).unwrap(),
        CodecSpec::LZ4,
        CodecSpec::lz4hc(4).unwrap(),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_and_layout_invariants(
        events in event_strategy(),
        spec in spec_strategy(),
        rac in any::<bool>(),
        capacity in prop::sample::select(vec![4096u64, 10_000, 65536]),
    ) {
        let image = write_mem(WriterOptions::new(capacity, spec, rac), &events);
        let reader = TreeReader::from_bytes(image.clone(), ReaderOptions::default()).unwrap();
        let expected = by_branch(&events);
        prop_assert_eq!(reader.index().branches.len(), expected.len());
        for (name, payloads) in &expected {
            prop_assert_eq!(reader.total_events(name).unwrap(), payloads.len() as u64);
            for (i, p) in payloads.iter().enumerate() {
                prop_assert_eq!(&reader.read_event(name, i as u64).unwrap(), p);
            }
            let dir = reader.index().branch(name).unwrap();
            // Locators tile the event range.
            let mut next = 0;
            for loc in &dir.baskets {
                prop_assert_eq!(loc.first_event_index, next);
                next += loc.event_count as u64;
            }
            prop_assert_eq!(next, payloads.len() as u64);
            // Every basket but the last reached capacity or holds one event.
            let mut start = 0usize;
            for (k, loc) in dir.baskets.iter().enumerate() {
                let n = loc.event_count as usize;
                let raw: usize = payloads[start..start + n].iter().map(Vec::len).sum();
                if k + 1 < dir.baskets.len() {
                    prop_assert!(raw as u64 >= capacity || n == 1);
                }
                start += n;
            }
        }
        // Re-encoding the loaded index reproduces the footer bytes.
        let encoded = reader.index().encode();
        prop_assert_eq!(encoded.len(), footer_len(reader.index()));
        prop_assert_eq!(&encoded[..], reader.footer_bytes());
        let footer_offset = image.len() - TRAILER_LEN as usize - encoded.len();
        prop_assert_eq!(&image[footer_offset..image.len() - TRAILER_LEN as usize], &encoded[..]);
    }

    #[test]
    fn cold_plain_read_decompresses_whole_basket(
        events in prop::collection::vec(prop::collection::vec(any::<u8>(), 1..3000), 1..80),
        pick in any::<prop::sample::Index>(),
    ) {
        let tagged: Vec<_> = events.iter().map(|e| ("x".to_string(), e.clone())).collect();
        let image = write_mem(WriterOptions::new(8192, CodecSpec::deflate(6).unwrap(), false), &tagged);
        let reader = TreeReader::from_bytes(image, ReaderOptions::default()).unwrap();
        let i = pick.index(events.len()) as u64;
        let dir = reader.index().branch("x").unwrap();
        let loc = dir.baskets[dir.basket_for(i).unwrap()];
        let start = loc.first_event_index as usize;
        let basket_raw: usize = events[start..start + loc.event_count as usize].iter().map(Vec::len).sum();
        reader.read_event("x", i).unwrap();
        prop_assert_eq!(reader.stats().bytes_decompressed, basket_raw as u64);
    }
}

#[test]
fn ten_payloads_read_back() {
    let events: Vec<_> = (0..10u8).map(|i| ("b".to_string(), vec![i; 100 + i as usize])).collect();
    let image = write_mem(WriterOptions::default(), &events);
    let r = TreeReader::from_bytes(image, ReaderOptions::default()).unwrap();
    assert_eq!(r.read_event("b", 7).unwrap(), vec![7u8; 107]);
    assert!(matches!(
        r.read_event("b", 10),
        Err(Error::IndexOutOfRange { index: 10, len: 10 })
    ));
    assert!(matches!(r.read_event("zz", 0), Err(Error::UnknownBranch(_))));
}

#[test]
fn scan_strides() {
    let events: Vec<_> = (0..1000u32).map(|i| ("s".to_string(), i.to_le_bytes().to_vec())).collect();
    let image = write_mem(WriterOptions::new(4096, CodecSpec::LZ4, false), &events);
    let r = TreeReader::from_bytes(image, ReaderOptions::default()).unwrap();
    let all: Vec<_> = r.scan("s", 1).unwrap().map(Result::unwrap).collect();
    assert_eq!(all.len(), 1000);
    assert!(all.iter().enumerate().all(|(i, e)| e == &(i as u32).to_le_bytes()));
    assert_eq!(r.scan("s", 10).unwrap().count(), 100);
    let hundredth: Vec<_> = r.scan("s", 100).unwrap().map(Result::unwrap).collect();
    assert_eq!(hundredth.len(), 10);
    assert_eq!(hundredth[3], 300u32.to_le_bytes());
    assert!(matches!(r.scan("s", 0), Err(Error::InvalidArgument(_))));
}

#[test]
fn file_round_trip_and_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.rcf");
    let mut w = TreeWriter::create(&path, WriterOptions::new(65536, CodecSpec::deflate(6).unwrap(), false)).unwrap();
    let written = w.finalize().unwrap();
    drop(w);
    let r = TreeReader::open(&path).unwrap();
    assert!(r.index().branches.is_empty());
    assert_eq!(r.index(), &written);

    let mut w = TreeWriter::create(&path, WriterOptions::new(4096, CodecSpec::lzma(6).unwrap(), true)).unwrap();
    for i in 0..500u32 {
        w.append_event(if i % 2 == 0 { "even" } else { "odd" }, &vec![(i % 251) as u8; 1 + (i as usize % 900)])
            .unwrap();
    }
    let written = w.finalize().unwrap();
    drop(w);
    let r = TreeReader::open(&path).unwrap();
    assert_eq!(r.index(), &written);
    assert_eq!(r.total_events("even").unwrap(), 250);
    assert_eq!(r.read_event("odd", 100).unwrap(), vec![(201 % 251) as u8; 1 + 201 % 900]);
}

#[test]
fn damaged_files_are_rejected() {
    let events: Vec<_> = (0..50u8).map(|i| ("b".to_string(), vec![i; 500])).collect();
    let image = write_mem(WriterOptions::new(4096, CodecSpec::deflate(6).unwrap(), false), &events);

    let mut flipped = image.clone();
    flipped[0] ^= 0x01;
    assert!(matches!(TreeReader::from_bytes(flipped, ReaderOptions::default()), Err(Error::BadMagic)));

    let mut tail = image.clone();
    let n = tail.len();
    tail[n - 1] ^= 0x01;
    assert!(matches!(TreeReader::from_bytes(tail, ReaderOptions::default()), Err(Error::BadMagic)));

    let mut footer = image.clone();
    let off = n - TRAILER_LEN as usize - 3;
    footer[off] ^= 0xff;
    assert!(TreeReader::from_bytes(footer, ReaderOptions::default()).is_err());

    // Damage inside the first basket payload surfaces on read.
    let mut payload = image.clone();
    payload[8 + 32 + 20] ^= 0xff;
    let r = TreeReader::from_bytes(payload, ReaderOptions::default()).unwrap();
    let err = r.read_event("b", 0).unwrap_err();
    assert_eq!(err.code(), "E_CORRUPT", "{err}");
}

#[test]
fn concurrent_reads_share_a_reader() {
    let events: Vec<_> = (0..2000u32).map(|i| ("c".to_string(), i.to_le_bytes().repeat(30))).collect();
    let image = write_mem(WriterOptions::new(4096, CodecSpec::LZ4, false), &events);
    let r = Arc::new(TreeReader::from_bytes(image, ReaderOptions { cache_entries: 4 }).unwrap());
    std::thread::scope(|s| {
        for t in 0..4u32 {
            let r = r.clone();
            s.spawn(move || {
                for i in (t..2000).step_by(7) {
                    assert_eq!(r.read_event("c", i as u64).unwrap(), i.to_le_bytes().repeat(30));
                }
            });
        }
    });
}

#[test]
fn cache_disabled_decompresses_every_time() {
    let events: Vec<_> = (0..32u8).map(|i| ("c".to_string(), vec![i; 1000])).collect();
    let image: Arc<[u8]> = write_mem(WriterOptions::new(65536, CodecSpec::deflate(6).unwrap(), false), &events).into();
    let cached = TreeReader::from_bytes(image.clone(), ReaderOptions::default()).unwrap();
    let uncached = TreeReader::from_bytes(image, ReaderOptions { cache_entries: 0 }).unwrap();
    for i in 0..5 {
        cached.read_event("c", i).unwrap();
        uncached.read_event("c", i).unwrap();
    }
    assert_eq!(cached.stats().bytes_decompressed, 32_000);
    assert_eq!(cached.stats().cache_hits, 4);
    assert_eq!(uncached.stats().bytes_decompressed, 5 * 32_000);
}
