//! Command-line front end. [`run`] takes the arguments after the program
//! name and writes data to `stdout`, diagnostics to `stderr`.
//!
//! Exit codes: 0 success, 1 usage or range error, 2 I/O error, 3 corrupt
//! data. Every failure prints one line starting with a code such as
//! `E_RANGE:`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{emit_report, run_experiment, BenchConfig, Experiment, ReportFormat};
use crate::blockstore::{self, BlockStore, CacheConfig};
use crate::codec::{list_codecs, Algorithm, CodecSpec};
use crate::container::{ReaderOptions, TreeReader, TreeWriter, WriterOptions, DEFAULT_BASKET_CAPACITY};
use crate::error::{Error, Result};
use crate::synthgen::{corpus, generate, EventKind, GenSpec, Mix};

#[derive(Debug, Parser)]
#[command(name = "basketio", version, about = "Columnar event baskets, codecs and block packing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic events into an uncompressed container
    Gen(GenArgs),
    /// Rewrite a container with another codec, basket size or RAC setting
    Write(WriteArgs),
    /// Read events of one branch
    Read(ReadArgs),
    /// Compress any file into fixed-size indexed blocks
    Pack(PackArgs),
    /// Restore a packed file
    Unpack(UnpackArgs),
    /// Run a benchmark and print its report
    Bench(BenchArgs),
    /// List codecs and their level ranges
    Codecs,
}

#[derive(Debug, Args)]
struct CodecArgs {
    /// identity, deflate (alias zlib), lzma, lz4 or lz4hc
    #[arg(long, default_value = "deflate")]
    codec: String,
    /// Compression level; defaults to the codec's usual level
    #[arg(long)]
    level: Option<u8>,
}

impl CodecArgs {
    fn spec(&self) -> Result<CodecSpec> {
        let algorithm: Algorithm = self.codec.parse()?;
        match self.level {
            Some(level) => CodecSpec::new(algorithm, level),
            None => algorithm.name().parse(),
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Event type: tfloat, tsmall or tlarge
    #[arg(long, required_unless_present = "corpus_mib", conflicts_with = "corpus_mib")]
    kind: Option<String>,
    /// Number of events
    #[arg(long, requires = "kind")]
    count: Option<u64>,
    /// Write all three branches, splitting this many MiB evenly
    #[arg(long)]
    corpus_mib: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BASKET_CAPACITY)]
    basket_size: u64,
}

#[derive(Debug, Args)]
struct WriteArgs {
    /// Source container
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BASKET_CAPACITY)]
    basket_size: u64,
    #[command(flatten)]
    codec: CodecArgs,
    /// Compress each event separately with an access-point table
    #[arg(long)]
    rac: bool,
}

#[derive(Debug, Args)]
struct ReadArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    branch: String,
    /// Read a single event
    #[arg(long, required_unless_present = "stride", conflicts_with = "stride")]
    index: Option<u64>,
    /// Read events 0, N, 2N, ...
    #[arg(long)]
    stride: Option<u64>,
    /// Write the raw payloads instead of one summary line per event
    #[arg(long)]
    raw: bool,
}

#[derive(Debug, Args)]
struct PackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Power of two between 4096 and 1048576
    #[arg(long, default_value_t = 65536)]
    block_size: u64,
    #[command(flatten)]
    codec: CodecArgs,
}

#[derive(Debug, Args)]
struct UnpackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Codecs,
    Rac,
    Blockstore,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Table,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(value_enum)]
    experiment: ExperimentArg,
    /// Key = value config file with [codecs], [rac] and [blockstore] sections
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus_mib: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated codec list, e.g. deflate-6,lz4
    #[arg(long, value_delimiter = ',')]
    codecs: Vec<String>,
    /// Comma-separated basket or block sizes in bytes
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<u64>,
    /// Comma-separated workloads, e.g. random-1000@tsmall,stride-100@tsmall
    #[arg(long, value_delimiter = ',')]
    workloads: Vec<String>,
    /// Run ratio-only sweeps on several threads
    #[arg(long)]
    parallel: bool,
}

fn exit_code(err: &Error) -> i32 {
    match err.code() {
        "E_IO" => 2,
        "E_CORRUPT" => 3,
        _ => 1,
    }
}

/// Runs one command. `args` excludes the program name.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("basketio")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let text = e.render().to_string();
                    let first = text.lines().next().unwrap_or("invalid arguments");
                    let _ = writeln!(stderr, "E_USAGE: {}", first.trim_start_matches("error: "));
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}: {e}", e.code());
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Gen(a) => gen(a, stdout),
        Command::Write(a) => rewrite(a, stdout),
        Command::Read(a) => read(a, stdout),
        Command::Pack(a) => pack(a, stdout),
        Command::Unpack(a) => unpack(a, stdout),
        Command::Bench(a) => bench(a, stdout, stderr),
        Command::Codecs => {
            for c in list_codecs() {
                let (lo, hi) = c.levels;
                writeln!(
                    stdout,
                    "{}\t{}\tlevels {lo}..={hi}\t{}",
                    c.name,
                    c.template,
                    if c.available { "available" } else { "unavailable" }
                )?;
            }
            Ok(())
        }
    }
}

fn gen(a: GenArgs, stdout: &mut dyn Write) -> Result<()> {
    let specs = match (a.corpus_mib, a.kind) {
        (Some(mib), _) => corpus(mib << 20, Mix::default(), a.seed)?.specs,
        (None, Some(kind)) => {
            let count = a
                .count
                .ok_or_else(|| Error::InvalidArgument("--count is required with --kind".into()))?;
            vec![GenSpec::new(kind.parse::<EventKind>()?, a.seed, count)?]
        }
        (None, None) => unreachable!("clap requires --kind or --corpus-mib"),
    };
    let mut w = TreeWriter::create(&a.out, WriterOptions::new(a.basket_size, CodecSpec::IDENTITY, false))?;
    for spec in &specs {
        let name = spec.kind.branch_name();
        w.declare_branch(name)?;
        for ev in generate(*spec) {
            w.append_event(name, &ev.bytes)?;
        }
    }
    w.finalize()?;
    for spec in &specs {
        writeln!(stdout, "{}\t{}\t{}", spec.kind.branch_name(), spec.count, spec.total_bytes())?;
    }
    Ok(())
}

fn rewrite(a: WriteArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = a.codec.spec()?;
    let reader = TreeReader::open_with(&a.input, ReaderOptions::default())?;
    let mut w = TreeWriter::create(&a.out, WriterOptions::new(a.basket_size, spec, a.rac))?;
    for dir in &reader.index().branches {
        w.declare_branch(&dir.name)?;
        for ev in reader.scan(&dir.name, 1)? {
            w.append_event(&dir.name, &ev?)?;
        }
    }
    let index = w.finalize()?;
    for dir in &index.branches {
        writeln!(
            stdout,
            "{}\t{}\t{}\t{}",
            dir.name,
            dir.total_events(),
            dir.baskets.len(),
            dir.stored_bytes()
        )?;
    }
    Ok(())
}

fn read(a: ReadArgs, stdout: &mut dyn Write) -> Result<()> {
    let reader = TreeReader::open(&a.file)?;
    let mut emit = |i: u64, ev: Vec<u8>| -> Result<()> {
        if a.raw {
            stdout.write_all(&ev)?;
        } else {
            let head: String = ev.iter().take(16).map(|b| format!("{b:02x}")).collect();
            writeln!(stdout, "{i}\t{}\t{head}", ev.len())?;
        }
        Ok(())
    };
    match (a.index, a.stride) {
        (Some(i), _) => emit(i, reader.read_event(&a.branch, i)?)?,
        (None, Some(stride)) => {
            for (n, ev) in reader.scan(&a.branch, stride)?.enumerate() {
                emit(n as u64 * stride, ev?)?;
            }
        }
        (None, None) => unreachable!("clap requires --index or --stride"),
    }
    Ok(())
}

fn pack(a: PackArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = a.codec.spec()?;
    let index = blockstore::pack_file(&a.input, &a.out, a.block_size, spec)?;
    writeln!(
        stdout,
        "{}\t{}\t{}\t{}",
        index.original_len,
        index.packed_len(),
        index.block_count(),
        index.codec
    )?;
    Ok(())
}

fn unpack(a: UnpackArgs, stdout: &mut dyn Write) -> Result<()> {
    let store = BlockStore::open(&a.input, CacheConfig::NONE)?;
    store.unpack_file(&a.out)?;
    writeln!(stdout, "{}", store.original_len())?;
    Ok(())
}

fn bench(a: BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let exp = match a.experiment {
        ExperimentArg::Codecs => Experiment::Codecs,
        ExperimentArg::Rac => Experiment::Rac,
        ExperimentArg::Blockstore => Experiment::Blockstore,
    };
    let mut cfg = match &a.config {
        Some(path) => BenchConfig::from_toml(&std::fs::read_to_string(path)?, exp)?,
        None => BenchConfig::defaults(exp),
    };
    if let Some(mib) = a.corpus_mib {
        cfg.corpus_bytes = mib << 20;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = a.reps {
        cfg.reps = reps;
    }
    if !a.codecs.is_empty() {
        cfg.codecs = a.codecs.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if !a.sizes.is_empty() {
        cfg.sizes = a.sizes;
    }
    if !a.workloads.is_empty() {
        cfg.workloads = a.workloads.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    cfg.parallel |= a.parallel;
    writeln!(
        stderr,
        "bench {exp}: corpus {} bytes, seed {}, {} reps",
        cfg.corpus_bytes, cfg.seed, cfg.reps
    )?;
    let report = run_experiment(exp, &cfg)?;
    let format = match a.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Table => ReportFormat::Table,
    };
    emit_report(&report, format, stdout)?;
    Ok(())
}
