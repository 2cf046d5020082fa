use std::path::Path;
use std::process::Command;

use basketio::bench::parse_csv;
use basketio::cli::run;

fn run_cli(args: &[&str]) -> (i32, Vec<u8>, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args.iter().copied(), &mut out, &mut err);
    (code, out, String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn codecs_lists_at_least_five() {
    let (code, out, _) = run_cli(&["codecs"]);
    assert_eq!(code, 0);
    assert!(String::from_utf8(out).unwrap().lines().count() >= 5);
}

#[test]
fn out_of_range_read_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.rcf");
    let (code, _, err) = run_cli(&["gen", "--kind", "tsmall", "--count", "50", "--seed", "3", "--out", p(&f)]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = run_cli(&["read", "--file", p(&f), "--branch", "tsmall", "--index", "1000000000"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.starts_with("E_RANGE:"), "{err}");
    let (code, _, err) = run_cli(&["read", "--file", p(&f), "--branch", "nope", "--index", "0"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("E_USAGE:"), "{err}");
}

#[test]
fn same_arguments_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.rcf"), dir.path().join("b.rcf"));
    let gen = |f: &Path| run_cli(&["gen", "--corpus-mib", "2", "--seed", "9", "--out", p(f)]);
    let (ca, oa, _) = gen(&a);
    let (cb, ob, _) = gen(&b);
    assert_eq!((ca, cb), (0, 0));
    assert_eq!(oa, ob);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let read = |f: &Path| run_cli(&["read", "--file", p(f), "--branch", "tfloat", "--stride", "97"]);
    let (_, ra, _) = read(&a);
    assert_eq!(ra, read(&b).1);
    assert!(!ra.is_empty());
}

#[test]
fn rewrite_keeps_every_event() {
    let dir = tempfile::tempdir().unwrap();
    let (src, dst) = (dir.path().join("src.rcf"), dir.path().join("dst.rcf"));
    assert_eq!(run_cli(&["gen", "--kind", "tsmall", "--count", "300", "--out", p(&src)]).0, 0);
    let (code, out, err) = run_cli(&[
        "write", "--in", p(&src), "--out", p(&dst), "--basket-size", "8192", "--codec", "lzma", "--level", "3", "--rac",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(String::from_utf8(out).unwrap().starts_with("tsmall\t300\t"));
    let raw = |f: &Path| run_cli(&["read", "--file", p(f), "--branch", "tsmall", "--stride", "1", "--raw"]).1;
    let original = raw(&src);
    assert_eq!(original.len(), 300 * 4000);
    assert_eq!(raw(&dst), original);
}

#[test]
fn pack_unpack_and_corruption_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (src, packed, back) = (dir.path().join("s"), dir.path().join("p"), dir.path().join("b"));
    let data: Vec<u8> = (0..300_000u32).map(|i| (i % 97) as u8).collect();
    std::fs::write(&src, &data).unwrap();
    let (code, _, err) = run_cli(&["pack", "--in", p(&src), "--out", p(&packed), "--block-size", "16384", "--codec", "lz4hc", "--level", "5"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(run_cli(&["unpack", "--in", p(&packed), "--out", p(&back)]).0, 0);
    assert_eq!(std::fs::read(&back).unwrap(), data);

    let (code, _, err) = run_cli(&["pack", "--in", p(&src), "--out", p(&packed), "--block-size", "5000"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("E_USAGE:"), "{err}");

    let mut bytes = std::fs::read(&src).unwrap();
    bytes.truncate(10);
    std::fs::write(&packed, &bytes).unwrap();
    let (code, _, err) = run_cli(&["unpack", "--in", p(&packed), "--out", p(&back)]);
    assert_eq!(code, 3);
    assert!(err.starts_with("E_CORRUPT:"), "{err}");

    let (code, _, err) = run_cli(&["unpack", "--in", p(&dir.path().join("missing")), "--out", p(&back)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("E_IO:"), "{err}");
}

#[test]
fn bench_rac_csv_keeps_large_events_neutral() {
    let (code, out, err) = run_cli(&["bench", "rac", "--corpus-mib", "24", "--seed", "7", "--format", "csv"]);
    assert_eq!(code, 0, "{err}");
    let report = parse_csv(&out).unwrap();
    let tlarge: Vec<_> = report.find(|r| r.workload == "write@tlarge").collect();
    assert_eq!(tlarge.len(), 2);
    let (a, b) = (tlarge[0].ratio, tlarge[1].ratio);
    assert!((a - b).abs() / a.max(b) < 0.01, "{a} vs {b}");
    assert!(report.rows.iter().all(|r| r.config_id.ends_with("/chacha8-7")));
}

#[test]
fn bench_rejects_too_few_reps() {
    let (code, _, err) = run_cli(&["bench", "codecs", "--corpus-mib", "1", "--reps", "2"]);
    assert_eq!(code, 1);
    assert!(err.lines().last().unwrap().starts_with("E_USAGE:"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_basketio");
    let ok = Command::new(exe).arg("codecs").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("lz4hc"));
    let bad = Command::new(exe).args(["gen", "--unknown"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("E_USAGE:"));
}
