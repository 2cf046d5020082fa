use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::CacheMode;
use crate::error::{Error, Result};

/// One measurement. Times are seconds, medians over `reps` runs. Row kinds:
///
/// * `compress` / `decompress` / `write` / `pack`: sizes describe the data
///   produced, `raw_size / compressed_size = ratio`.
/// * read workloads (`random-1000@tsmall`, ...): sizes describe the stored
///   branch or file read from; the traffic columns describe one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config_id: String,
    pub codec: String,
    pub size: u64,
    pub workload: String,
    pub cache_mode: Option<CacheMode>,
    pub reps: u32,
    pub real_time: f64,
    pub cpu_time: f64,
    pub raw_size: u64,
    pub compressed_size: u64,
    pub ratio: f64,
    pub bytes_fetched: u64,
    pub bytes_decompressed: u64,
    pub blocks_or_baskets_touched: u64,
    /// Empty unless the run failed; failed rows carry zeros.
    pub error: String,
}

pub const COLUMNS: [&str; 15] = [
    "config_id",
    "codec",
    "size",
    "workload",
    "cache_mode",
    "reps",
    "real_time",
    "cpu_time",
    "raw_size",
    "compressed_size",
    "ratio",
    "bytes_fetched",
    "bytes_decompressed",
    "blocks_or_baskets_touched",
    "error",
];

pub fn ratio(raw: u64, compressed: u64) -> f64 {
    if compressed == 0 {
        0.0
    } else {
        raw as f64 / compressed as f64
    }
}

impl ReportRow {
    pub fn new(config_id: impl Into<String>, codec: impl Into<String>, size: u64, workload: impl Into<String>) -> Self {
        ReportRow {
            config_id: config_id.into(),
            codec: codec.into(),
            size,
            workload: workload.into(),
            cache_mode: None,
            reps: 0,
            real_time: 0.0,
            cpu_time: 0.0,
            raw_size: 0,
            compressed_size: 0,
            ratio: 0.0,
            bytes_fetched: 0,
            bytes_decompressed: 0,
            blocks_or_baskets_touched: 0,
            error: String::new(),
        }
    }

    pub fn sizes(mut self, raw: u64, compressed: u64) -> Self {
        self.raw_size = raw;
        self.compressed_size = compressed;
        self.ratio = ratio(raw, compressed);
        self
    }

    pub fn failed(mut self, err: &Error) -> Self {
        self.error = format!("{}: {err}", err.code());
        self
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn find<'a>(&'a self, pred: impl Fn(&ReportRow) -> bool + 'a) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| pred(r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}, expected csv or table"))),
        }
    }
}

pub fn emit_report(report: &BenchReport, format: ReportFormat, out: impl Write) -> io::Result<()> {
    match format {
        ReportFormat::Csv => emit_csv(report, out),
        ReportFormat::Table => emit_table(report, out),
    }
}

fn emit_csv(report: &BenchReport, out: impl Write) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(COLUMNS)?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()
}

/// Parses CSV produced by [`emit_report`].
pub fn parse_csv(text: &[u8]) -> Result<BenchReport> {
    let mut r = csv::Reader::from_reader(text);
    let headers = r
        .headers()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    if headers.iter().ne(COLUMNS) {
        return Err(Error::InvalidArgument("csv header does not match the report schema".into()));
    }
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(BenchReport { rows })
}

fn emit_table(report: &BenchReport, mut out: impl Write) -> io::Result<()> {
    let head = [
        "config", "codec", "size", "workload", "cache", "reps", "real_s", "cpu_s", "raw", "stored", "ratio",
        "fetched", "decompressed", "touched", "error",
    ];
    let cells: Vec<[String; 15]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.config_id.clone(),
                r.codec.clone(),
                r.size.to_string(),
                r.workload.clone(),
                r.cache_mode.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
                r.reps.to_string(),
                format!("{:.4}", r.real_time),
                format!("{:.4}", r.cpu_time),
                r.raw_size.to_string(),
                r.compressed_size.to_string(),
                format!("{:.3}", r.ratio),
                r.bytes_fetched.to_string(),
                r.bytes_decompressed.to_string(),
                r.blocks_or_baskets_touched.to_string(),
                r.error.clone(),
            ]
        })
        .collect();
    let mut widths = head.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |out: &mut dyn Write, items: &[&str]| -> io::Result<()> {
        let mut s = String::new();
        for (i, (c, w)) in items.iter().zip(widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            // Text columns left, numbers right.
            if matches!(i, 0 | 1 | 3 | 4 | 14) {
                s.push_str(&format!("{c:<w$}"));
            } else {
                s.push_str(&format!("{c:>w$}"));
            }
        }
        writeln!(out, "{}", s.trim_end())
    };
    line(&mut out, &head)?;
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &refs)?;
    }
    Ok(())
}
