// A small RAC benchmark run printed as a table and as CSV.

use basketio::bench::{bench_rac, emit_report, parse_csv, BenchConfig, CacheMode, Experiment, ReportFormat};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = BenchConfig {
        corpus_bytes: 4 << 20,
        codecs: vec!["lz4".parse()?],
        workloads: vec!["random-100@tsmall".parse()?],
        cache_modes: vec![CacheMode::Cold],
        ..BenchConfig::defaults(Experiment::Rac)
    };
    cfg.validate(Experiment::Rac)?;
    let report = bench_rac(&cfg)?;
    emit_report(&report, ReportFormat::Table, std::io::stdout())?;

    let mut csv = Vec::new();
    emit_report(&report, ReportFormat::Csv, &mut csv)?;
    assert_eq!(parse_csv(&csv)?, report);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
