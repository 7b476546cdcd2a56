//! The `ternhash` command line: one subcommand per pipeline stage.
//!
//! ```text
//! synth   -> features.trnh
//! fit     features -> thresholds.trnt
//! encode  features (+ thresholds) -> codes.trnc
//! eval    queries.trnc + database.trnc -> report on stdout
//! hist    queries.trnc + database.trnc -> distance histograms
//! bench   timing table
//! convert features.csv <-> features.trnh
//! ```
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 format, 5 corrupt code,
//! 6 invalid data, 7 dimension mismatch, 8 invalid parameter,
//! 9 degenerate range.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, BenchConfig, BenchKind};
use crate::encoder::{encode_features_binary, encode_features_ternary};
use crate::error::{Error, Result};
use crate::eval::{self, AmbiguitySampling, TopK};
use crate::io::{self, CodeKind, SynthParams};
use crate::packed::Metric;
use crate::threshold::{fit_thresholds, DEFAULT_BINS};
use crate::trit::Logic;

#[derive(Debug, Parser)]
#[command(name = "ternhash", version, about = "Ternary hash codes from binary hashing outputs")]
pub struct Cli {
    /// Worker threads (0 = one per core). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate seeded Gaussian features standing in for network outputs.
    Synth(SynthArgs),
    /// Fit per-bit double thresholds.
    Fit(FitArgs),
    /// Encode features into binary or ternary codes.
    Encode(EncodeArgs),
    /// Evaluate retrieval of queries against a database.
    Eval(EvalArgs),
    /// Positive/negative distance histograms and their overlap.
    Hist(HistArgs),
    /// Time 1-query-vs-database distance sweeps.
    Bench(BenchArgs),
    /// Convert features between CSV and TRNH (chosen by extension).
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 32)]
    pub bits: usize,
    #[arg(long = "per-class", default_value_t = 200)]
    pub per_class: usize,
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ambiguity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path (.trnh, or .csv).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LogicArg {
    Kleene,
    #[value(alias = "luka")]
    Lukasiewicz,
    Bochvar,
}

impl From<LogicArg> for Logic {
    fn from(l: LogicArg) -> Logic {
        match l {
            LogicArg::Kleene => Logic::Kleene,
            LogicArg::Lukasiewicz => Logic::Lukasiewicz,
            LogicArg::Bochvar => Logic::Bochvar,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Binary,
    #[value(alias = "luka")]
    Lukasiewicz,
    Kleene,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Binary => Metric::Binary,
            MetricArg::Lukasiewicz => Metric::Lukasiewicz,
            MetricArg::Kleene => Metric::Kleene,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Feature file (.trnh or .csv).
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = LogicArg::Kleene)]
    pub logic: LogicArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Binary,
    Ternary,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Threshold table; required for ternary mode.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Ternary)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub database: PathBuf,
    /// Distance (default: kleene for ternary codes, binary for binary codes).
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Cutoff for mAP@k: a positive integer or "all".
    #[arg(long, default_value = "all")]
    pub k: String,
    /// Sampled (query, positive, negative) triples for the ambiguity rate.
    #[arg(long, default_value_t = eval::DEFAULT_AMBIGUITY_TRIPLES)]
    pub triples: usize,
    /// Enumerate every triple instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the distance histograms as CSV.
    #[arg(long = "hist-out")]
    pub hist_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchKindArg {
    Matmul,
    Binary,
    #[value(alias = "luka")]
    Lukasiewicz,
    Kleene,
}

impl From<BenchKindArg> for BenchKind {
    fn from(k: BenchKindArg) -> BenchKind {
        match k {
            BenchKindArg::Matmul => BenchKind::Matmul,
            BenchKindArg::Binary => BenchKind::Binary,
            BenchKindArg::Lukasiewicz => BenchKind::Lukasiewicz,
            BenchKindArg::Kleene => BenchKind::Kleene,
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Single kind to time; the full table when absent.
    #[arg(long, value_enum)]
    pub kind: Option<BenchKindArg>,
    /// Trits per code (binary uses twice as many bits). Repeatable.
    #[arg(long)]
    pub length: Vec<usize>,
    #[arg(long = "n-db", default_value_t = bench::DEFAULT_DB)]
    pub n_db: usize,
    #[arg(long, default_value_t = bench::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        Error::Format(_) => 4,
        Error::CorruptCode { .. } => 5,
        Error::Data(_) => 6,
        Error::Dimension { .. } => 7,
        Error::Parameter(_) => 8,
        Error::DegenerateRange(_) => 9,
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return 8;
        }
    };
    let mut buf = Vec::new();
    let result = pool.install(|| dispatch(cli.command, &mut buf));
    let _ = out.write_all(&buf);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Encode(a) => encode(a, out),
        Command::Eval(a) => evaluate(a, out),
        Command::Hist(a) => hist(a, out),
        Command::Bench(a) => run_bench(a, out),
        Command::Convert(a) => convert(a, out),
    }
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let params = SynthParams {
        classes: a.classes,
        bits: a.bits,
        per_class: a.per_class,
        separation: a.separation,
        ambiguity: a.ambiguity,
        seed: a.seed,
    };
    let set = io::synth_gaussian(&params)?;
    io::save_features_any(&set, &a.out)?;
    writeln!(out, "samples: {}", set.len())?;
    writeln!(out, "bits: {}", set.bits())?;
    writeln!(out, "classes: {}", set.classes())?;
    writeln!(out, "seed: {}", a.seed)?;
    writeln!(out, "out: {}", a.out.display())?;
    Ok(())
}

fn fit(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let features = io::load_features_any(&a.features)?;
    let logic = Logic::from(a.logic);
    let fitted = fit_thresholds(&features, a.bins, logic)?;
    io::save_thresholds(&fitted.table(), &a.out)?;
    let degenerate = fitted.degenerate_bits();
    if !degenerate.is_empty() {
        log::warn!("degenerate bits: {degenerate:?}");
    }
    writeln!(out, "bits: {}", fitted.bits.len())?;
    writeln!(out, "bins: {}", a.bins)?;
    writeln!(out, "logic: {logic}")?;
    writeln!(out, "objective_total: {:.9}", fitted.total_objective())?;
    writeln!(out, "degenerate_bits: {}", degenerate.len())?;
    writeln!(out, "out: {}", a.out.display())?;
    Ok(())
}

fn encode(a: EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let features = io::load_features_any(&a.features)?;
    let codes = match a.mode {
        ModeArg::Binary => encode_features_binary(&features)?,
        ModeArg::Ternary => {
            let path = a
                .thresholds
                .as_ref()
                .ok_or_else(|| Error::param("--thresholds is required for ternary mode"))?;
            encode_features_ternary(&features, &io::load_thresholds(path)?)?
        }
    };
    io::save_codes(&codes, &a.out)?;
    writeln!(out, "kind: {}", codes.kind().name())?;
    writeln!(out, "codes: {}", codes.len())?;
    writeln!(out, "length: {}", codes.length())?;
    writeln!(out, "out: {}", a.out.display())?;
    Ok(())
}

fn load_pair(p: &PairArgs) -> Result<(io::CodeSet, io::CodeSet, Metric)> {
    let queries = io::load_codes(&p.queries)?;
    let database = io::load_codes(&p.database)?;
    let metric = match p.metric {
        Some(m) => m.into(),
        None => match database.kind() {
            CodeKind::Binary => Metric::Binary,
            CodeKind::Ternary => Metric::Kleene,
        },
    };
    Ok((queries, database, metric))
}

fn evaluate(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let (queries, database, metric) = load_pair(&a.pair)?;
    let k: TopK = a.k.parse()?;
    let sampling = if a.exhaustive {
        AmbiguitySampling::Exhaustive
    } else {
        AmbiguitySampling::Sampled {
            triples: a.triples,
            seed: a.seed,
        }
    };
    let report = eval::evaluate(&queries, &database, metric, k, sampling)?;
    if let Some(path) = &a.hist_out {
        fs::write(path, report.histograms.to_csv())?;
    }
    out.write_all(report.render().as_bytes())?;
    Ok(())
}

fn hist(a: HistArgs, out: &mut dyn Write) -> Result<()> {
    let (queries, database, metric) = load_pair(&a.pair)?;
    let h = eval::distance_histograms(&queries, &database, metric)?;
    match &a.out {
        Some(path) => fs::write(path, h.to_csv())?,
        None => out.write_all(h.to_csv().as_bytes())?,
    }
    writeln!(out, "overlap: {:.6}", eval::overlap_area(&h))?;
    Ok(())
}

fn run_bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let lengths = if a.length.is_empty() {
        bench::TABLE_LENGTHS.to_vec()
    } else {
        a.length.clone()
    };
    let reports = match a.kind {
        Some(kind) => lengths
            .iter()
            .map(|&length| {
                bench::run_bench(&BenchConfig {
                    kind: kind.into(),
                    length,
                    n_db: a.n_db,
                    reps: a.reps,
                    seed: a.seed,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        None => bench::run_table(&lengths, a.n_db, a.reps, a.seed)?,
    };
    out.write_all(bench::render_table(&reports).as_bytes())?;
    writeln!(out, "seed: {}", a.seed)?;
    for r in &reports {
        writeln!(out, "checksum {} {}: {}", r.kind, r.length, r.checksum)?;
    }
    Ok(())
}

fn convert(a: ConvertArgs, out: &mut dyn Write) -> Result<()> {
    let set = io::load_features_any(&a.input)?;
    io::save_features_any(&set, &a.output)?;
    writeln!(out, "samples: {}", set.len())?;
    writeln!(out, "out: {}", a.output.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("ternhash").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_lists_flags() {
        let (code, out, _) = run_str(&["eval", "--help"]);
        assert_eq!(code, 0);
        for flag in ["--queries", "--database", "--metric", "--k", "--triples", "--seed", "--threads"] {
            assert!(out.contains(flag), "{flag} missing from help");
        }
    }

    #[test]
    fn unknown_flag_fails() {
        let (code, _, err) = run_str(&["fit", "--features", "x.trnh", "--out", "t.trnt", "--bogus"]);
        assert_eq!(code, 2);
        assert!(err.contains("--bogus"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let (code, _, err) = run_str(&["fit", "--features", "/nonexistent/f.trnh", "--out", "/tmp/t.trnt"]);
        assert_eq!(code, 3);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn exit_codes_are_distinct() {
        let errors = [
            Error::Io(std::io::Error::other("x")),
            Error::format("x"),
            Error::CorruptCode { position: 0 },
            Error::data("x"),
            Error::dimension(1, 2),
            Error::param("x"),
            Error::DegenerateRange(0.0),
        ];
        let mut codes: Vec<i32> = errors.iter().map(exit_code).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), errors.len());
        assert!(!codes.contains(&0) && !codes.contains(&2));
    }
}
