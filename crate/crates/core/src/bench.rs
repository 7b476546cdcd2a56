//! Timing harness: one query against a database of `n_db` random codes.
//!
//! Ternary kinds use `length` trits, `binary` uses `2 * length` bits (a
//! ternary code occupies twice as many machine bits), and `matmul` scores
//! `2 * length`-dimensional `f32` vectors by inner product. Every sweep
//! folds its distances into a checksum that must agree across repetitions.

use std::fmt::{self, Write as _};
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::packed::{scan, words_for_bits, words_for_trits, Metric, PackedTernaryCode};
use crate::trit::Trit;

/// Trit lengths of the published timing table; binary codes use twice as
/// many bits.
pub const TABLE_LENGTHS: [usize; 5] = [16, 32, 64, 128, 256];
pub const DEFAULT_REPS: usize = 5;
pub const DEFAULT_DB: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchKind {
    Matmul,
    Binary,
    Lukasiewicz,
    Kleene,
}

impl BenchKind {
    /// Row order of the timing table.
    pub const TABLE_ORDER: [BenchKind; 4] = [
        BenchKind::Matmul,
        BenchKind::Kleene,
        BenchKind::Lukasiewicz,
        BenchKind::Binary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Matmul => "matmul",
            BenchKind::Binary => "binary",
            BenchKind::Lukasiewicz => "lukasiewicz",
            BenchKind::Kleene => "kleene",
        }
    }
}

impl fmt::Display for BenchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matmul" => Ok(BenchKind::Matmul),
            "binary" => Ok(BenchKind::Binary),
            "lukasiewicz" | "luka" => Ok(BenchKind::Lukasiewicz),
            "kleene" => Ok(BenchKind::Kleene),
            _ => Err(Error::param(format!("unknown bench kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub kind: BenchKind,
    /// Trits per ternary code.
    pub length: usize,
    pub n_db: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub kind: BenchKind,
    /// Trits per ternary code (binary and matmul use twice this).
    pub length: usize,
    pub n_db: usize,
    pub reps: usize,
    pub times: Vec<f64>,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub checksum: u64,
}

/// Inner product of `query` with every row of a row-major `database`.
pub fn matmul_float_distance(query: &[f32], database: &[f32]) -> Result<Vec<f32>> {
    let k = query.len();
    if k == 0 {
        return if database.is_empty() {
            Ok(Vec::new())
        } else {
            Err(Error::dimension(0, database.len()))
        };
    }
    if !database.len().is_multiple_of(k) {
        return Err(Error::dimension(k, database.len() % k));
    }
    let mut out = vec![0.0f32; database.len() / k];
    matmul_into(query, database, &mut out);
    Ok(out)
}

fn matmul_into(query: &[f32], database: &[f32], out: &mut [f32]) {
    let k = query.len();
    for (row, o) in database.chunks_exact(k).zip(out.iter_mut()) {
        let mut lanes = [0.0f32; 8];
        let mut q = query.chunks_exact(8);
        let mut r = row.chunks_exact(8);
        for (qa, ra) in (&mut q).zip(&mut r) {
            for l in 0..8 {
                lanes[l] += qa[l] * ra[l];
            }
        }
        let mut acc: f32 = lanes.iter().sum();
        for (a, b) in q.remainder().iter().zip(r.remainder()) {
            acc += a * b;
        }
        *o = acc;
    }
}

fn random_ternary_words(rng: &mut ChaCha8Rng, length: usize, count: usize) -> Vec<u64> {
    let mut words = Vec::with_capacity(count * words_for_trits(length));
    let mut trits = vec![Trit::Unknown; length];
    for _ in 0..count {
        trits
            .iter_mut()
            .for_each(|t| *t = Trit::ALL[rng.random_range(0..3)]);
        words.extend(PackedTernaryCode::pack(&trits).into_words());
    }
    words
}

fn random_binary_words(rng: &mut ChaCha8Rng, bits: usize, count: usize) -> Vec<u64> {
    let wpc = words_for_bits(bits);
    let mut words = Vec::with_capacity(count * wpc);
    for _ in 0..count {
        for w in 0..wpc {
            let valid = (bits - w * 64).min(64);
            let mask = if valid == 64 { !0 } else { (1u64 << valid) - 1 };
            words.push(rng.random::<u64>() & mask);
        }
    }
    words
}

enum Workload {
    Codes {
        metric: Metric,
        len: usize,
        wpc: usize,
        query: Vec<u64>,
        db: Vec<u64>,
        out: Vec<u32>,
    },
    Floats {
        query: Vec<f32>,
        db: Vec<f32>,
        out: Vec<f32>,
    },
}

impl Workload {
    fn new(cfg: &BenchConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = cfg.n_db;
        match cfg.kind {
            BenchKind::Matmul => {
                let dim = 2 * cfg.length;
                let mut gen = |count: usize| -> Vec<f32> {
                    (0..count)
                        .map(|_| rng.sample::<f64, _>(StandardNormal) as f32)
                        .collect()
                };
                let query = gen(dim);
                let db = gen(dim * n);
                Workload::Floats {
                    query,
                    db,
                    out: vec![0.0; n],
                }
            }
            BenchKind::Binary => {
                let bits = 2 * cfg.length;
                Workload::Codes {
                    metric: Metric::Binary,
                    len: bits,
                    wpc: words_for_bits(bits),
                    query: random_binary_words(&mut rng, bits, 1),
                    db: random_binary_words(&mut rng, bits, n),
                    out: vec![0; n],
                }
            }
            BenchKind::Lukasiewicz | BenchKind::Kleene => Workload::Codes {
                metric: if cfg.kind == BenchKind::Kleene {
                    Metric::Kleene
                } else {
                    Metric::Lukasiewicz
                },
                len: cfg.length,
                wpc: words_for_trits(cfg.length),
                query: random_ternary_words(&mut rng, cfg.length, 1),
                db: random_ternary_words(&mut rng, cfg.length, n),
                out: vec![0; n],
            },
        }
    }

    /// One timed sweep; returns the checksum of its distances.
    fn sweep(&mut self) -> u64 {
        match self {
            Workload::Codes {
                metric,
                len,
                wpc,
                query,
                db,
                out,
            } => {
                scan(*metric, black_box(query), black_box(db), *wpc, *len, out);
                black_box(&*out).iter().map(|&d| d as u64).sum()
            }
            Workload::Floats { query, db, out } => {
                matmul_into(black_box(query), black_box(db), out);
                black_box(&*out)
                    .iter()
                    .fold(0u64, |acc, v| acc.wrapping_add(v.to_bits() as u64))
            }
        }
    }
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Runs one warm-up sweep, then `reps` timed sweeps on a single thread.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.length == 0 {
        return Err(Error::param("bench length must be positive"));
    }
    if cfg.reps == 0 {
        return Err(Error::param("bench needs at least one repetition"));
    }
    let mut work = Workload::new(cfg);
    let checksum = work.sweep();
    let mut times = Vec::with_capacity(cfg.reps);
    for rep in 0..cfg.reps {
        let start = Instant::now();
        let sum = work.sweep();
        times.push(start.elapsed().as_secs_f64());
        if sum != checksum {
            return Err(Error::data(format!(
                "checksum changed on repetition {rep}: {sum} != {checksum}"
            )));
        }
    }
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BenchReport {
        kind: cfg.kind,
        length: cfg.length,
        n_db: cfg.n_db,
        reps: cfg.reps,
        min: sorted[0],
        median: median(&sorted),
        mean: times.iter().sum::<f64>() / times.len() as f64,
        times,
        checksum,
    })
}

/// Every kind at every length, in table order.
pub fn run_table(lengths: &[usize], n_db: usize, reps: usize, seed: u64) -> Result<Vec<BenchReport>> {
    let mut reports = Vec::new();
    for kind in BenchKind::TABLE_ORDER {
        for &length in lengths {
            reports.push(run_bench(&BenchConfig {
                kind,
                length,
                n_db,
                reps,
                seed,
            })?);
        }
    }
    Ok(reports)
}

/// Comma-delimited table of median seconds: one row per kind, one column per
/// `trits/bits` length pair.
pub fn render_table(reports: &[BenchReport]) -> String {
    let mut lengths: Vec<usize> = reports.iter().map(|r| r.length).collect();
    lengths.sort_unstable();
    lengths.dedup();
    let n_db = reports.first().map_or(0, |r| r.n_db);
    let mut s = format!("1@{n_db}");
    for l in &lengths {
        let _ = write!(s, ",{}/{}", l, 2 * l);
    }
    s.push('\n');
    for kind in BenchKind::TABLE_ORDER {
        if !reports.iter().any(|r| r.kind == kind) {
            continue;
        }
        s.push_str(kind.name());
        for &l in &lengths {
            match reports.iter().find(|r| r.kind == kind && r.length == l) {
                Some(r) => {
                    let _ = write!(s, ",{:.6e}", r.median);
                }
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

impl BenchReport {
    pub fn render(&self) -> String {
        format!(
            "kind: {}\nlength: {}\nn_db: {}\nreps: {}\nmin_s: {:.6e}\nmedian_s: {:.6e}\nmean_s: {:.6e}\nchecksum: {}\n",
            self.kind,
            self.length,
            self.n_db,
            self.reps,
            self.min,
            self.median,
            self.mean,
            self.checksum
        )
    }
}
