//! Feature, code and threshold containers and their on-disk formats.
//!
//! All binary formats are little-endian and start with a four byte magic:
//!
//! ```text
//! TRNH  "TRNH" u32 version=1, u32 n, u32 K, u32 C,
//!       n*K f32 outputs (row-major), n u32 labels
//! TRNC  "TRNC" u32 version=1, u8 kind (0 binary, 1 ternary), u32 n, u32 length,
//!       n * ceil(bits/64) u64 words, n u32 labels
//! TRNT  "TRNT" u32 version=1, u32 K, K * (f64 t1, f64 t2)
//! ```
//!
//! where `bits` is `length` for binary codes and `2 * length` for ternary
//! codes, packed as in [`crate::packed`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::packed::{
    validate_binary_words, validate_ternary_words, words_for_bits, words_for_trits, Metric,
    PackedBinaryCode, PackedTernaryCode,
};
use crate::threshold::{ThresholdPair, ThresholdTable};

pub const FEATURES_MAGIC: [u8; 4] = *b"TRNH";
pub const CODES_MAGIC: [u8; 4] = *b"TRNC";
pub const THRESHOLDS_MAGIC: [u8; 4] = *b"TRNT";
pub const FORMAT_VERSION: u32 = 1;

/// Raw per-bit network outputs with one class label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    bits: usize,
    classes: usize,
    outputs: Vec<f32>,
    labels: Vec<u32>,
}

impl FeatureSet {
    pub fn new(bits: usize, classes: usize, outputs: Vec<f32>, labels: Vec<u32>) -> Result<Self> {
        let n = labels.len();
        let expected = n
            .checked_mul(bits)
            .ok_or_else(|| Error::format("feature dimensions overflow"))?;
        if outputs.len() != expected {
            return Err(Error::dimension(expected, outputs.len()));
        }
        if let Some(&l) = labels.iter().find(|&&l| l as usize >= classes) {
            return Err(Error::data(format!("label {l} out of range for {classes} classes")));
        }
        if let Some(v) = outputs.iter().find(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite output {v}")));
        }
        Ok(FeatureSet {
            bits,
            classes,
            outputs,
            labels,
        })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Outputs per sample.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn outputs(&self) -> &[f32] {
        &self.outputs
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.outputs[i * self.bits..(i + 1) * self.bits]
    }

    /// All outputs of bit `k`, widened to `f64`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.outputs[i * self.bits + k] as f64)
            .collect()
    }

    /// Samples at the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> FeatureSet {
        let mut outputs = Vec::with_capacity(indices.len() * self.bits);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            outputs.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        FeatureSet {
            bits: self.bits,
            classes: self.classes,
            outputs,
            labels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CodeKind {
    Binary = 0,
    Ternary = 1,
}

impl CodeKind {
    pub fn words_per_code(self, length: usize) -> usize {
        match self {
            CodeKind::Binary => words_for_bits(length),
            CodeKind::Ternary => words_for_trits(length),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CodeKind::Binary => "binary",
            CodeKind::Ternary => "ternary",
        }
    }
}

/// `n` packed codes of one kind and length, stored contiguously, with labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSet {
    kind: CodeKind,
    length: usize,
    words: Vec<u64>,
    labels: Vec<u32>,
}

impl CodeSet {
    /// `words` holds `labels.len()` codes back to back; every code is
    /// validated.
    pub fn new(kind: CodeKind, length: usize, words: Vec<u64>, labels: Vec<u32>) -> Result<Self> {
        let wpc = kind.words_per_code(length);
        let expected = labels
            .len()
            .checked_mul(wpc)
            .ok_or_else(|| Error::format("code dimensions overflow"))?;
        if words.len() != expected {
            return Err(Error::dimension(expected, words.len()));
        }
        if wpc > 0 {
            for (i, code) in words.chunks_exact(wpc).enumerate() {
                let checked = match kind {
                    CodeKind::Binary => validate_binary_words(length, code),
                    CodeKind::Ternary => validate_ternary_words(length, code),
                };
                checked.map_err(|e| match e {
                    Error::CorruptCode { position } => Error::CorruptCode {
                        position: i * length + position,
                    },
                    other => other,
                })?;
            }
        }
        Ok(CodeSet {
            kind,
            length,
            words,
            labels,
        })
    }

    pub fn from_ternary(codes: &[PackedTernaryCode], labels: Vec<u32>) -> Result<Self> {
        Self::from_codes(CodeKind::Ternary, codes.iter().map(|c| (c.len(), c.words())), labels)
    }

    pub fn from_binary(codes: &[PackedBinaryCode], labels: Vec<u32>) -> Result<Self> {
        Self::from_codes(CodeKind::Binary, codes.iter().map(|c| (c.len(), c.words())), labels)
    }

    fn from_codes<'a>(
        kind: CodeKind,
        codes: impl ExactSizeIterator<Item = (usize, &'a [u64])>,
        labels: Vec<u32>,
    ) -> Result<Self> {
        if codes.len() != labels.len() {
            return Err(Error::dimension(codes.len(), labels.len()));
        }
        let mut length = None;
        let mut words = Vec::new();
        for (len, w) in codes {
            match length {
                None => length = Some(len),
                Some(l) if l != len => return Err(Error::dimension(l, len)),
                _ => {}
            }
            words.extend_from_slice(w);
        }
        Ok(CodeSet {
            kind,
            length: length.unwrap_or(0),
            words,
            labels,
        })
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    /// Symbols per code (bits or trits).
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn words_per_code(&self) -> usize {
        self.kind.words_per_code(self.length)
    }

    /// Number of codes.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn code_words(&self, i: usize) -> &[u64] {
        let wpc = self.words_per_code();
        &self.words[i * wpc..(i + 1) * wpc]
    }

    pub fn ternary(&self, i: usize) -> Option<PackedTernaryCode> {
        (self.kind == CodeKind::Ternary).then(|| {
            PackedTernaryCode::from_words(self.length, self.code_words(i).to_vec())
                .expect("validated on construction")
        })
    }

    pub fn binary(&self, i: usize) -> Option<PackedBinaryCode> {
        (self.kind == CodeKind::Binary).then(|| {
            PackedBinaryCode::from_words(self.length, self.code_words(i).to_vec())
                .expect("validated on construction")
        })
    }

    /// Errors unless `metric` applies to this kind of code.
    pub fn check_metric(&self, metric: Metric) -> Result<()> {
        let ok = match self.kind {
            CodeKind::Binary => metric == Metric::Binary,
            CodeKind::Ternary => metric.is_ternary(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!(
                "metric {metric} does not apply to {} codes",
                self.kind.name()
            )))
        }
    }
}

// ---------------------------------------------------------------------------
// Byte-level helpers
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    buf: &'a [u8],
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::format(format!("truncated {} file", self.what)));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    /// Checks that exactly `n` bytes remain, before allocating for them.
    fn expect_remaining(&self, n: Option<usize>) -> Result<()> {
        match n {
            None => Err(Error::format(format!("{} dimensions overflow", self.what))),
            Some(n) if self.buf.len() < n => {
                Err(Error::format(format!("truncated {} file", self.what)))
            }
            Some(n) if self.buf.len() > n => Err(Error::format(format!(
                "{} trailing bytes after {} payload",
                self.buf.len() - n,
                self.what
            ))),
            Some(_) => Ok(()),
        }
    }
}

/// Reads and checks the magic before touching the rest of the stream, then
/// returns the remaining bytes.
fn read_after_magic(mut reader: impl Read, magic: [u8; 4], what: &str) -> Result<Vec<u8>> {
    let mut head = [0u8; 4];
    reader.read_exact(&mut head).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format(format!("truncated {what} file")),
        _ => Error::Io(e),
    })?;
    if head != magic {
        return Err(Error::format(format!(
            "bad magic {:02X?}, expected {} ({what})",
            head,
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    Ok(rest)
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported version {v}")));
    }
    Ok(())
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::format(format!("{what} {v} does not fit in u32")))
}

// ---------------------------------------------------------------------------
// TRNH
// ---------------------------------------------------------------------------

pub fn write_features(set: &FeatureSet, mut w: impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + set.outputs.len() * 4 + set.labels.len() * 4);
    buf.extend_from_slice(&FEATURES_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&dim_u32(set.len(), "sample count")?.to_le_bytes());
    buf.extend_from_slice(&dim_u32(set.bits, "bit count")?.to_le_bytes());
    buf.extend_from_slice(&dim_u32(set.classes, "class count")?.to_le_bytes());
    for v in &set.outputs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for l in &set.labels {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_features(reader: impl Read) -> Result<FeatureSet> {
    let bytes = read_after_magic(reader, FEATURES_MAGIC, "TRNH")?;
    let mut cur = Cursor { buf: &bytes, what: "TRNH" };
    check_version(cur.u32()?)?;
    let n = cur.u32()? as usize;
    let bits = cur.u32()? as usize;
    let classes = cur.u32()? as usize;
    let payload = n
        .checked_mul(bits)
        .and_then(|x| x.checked_mul(4))
        .and_then(|x| x.checked_add(n.checked_mul(4)?));
    cur.expect_remaining(payload)?;
    let outputs: Vec<f32> = cur
        .take(n * bits * 4)?
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let labels: Vec<u32> = cur
        .take(n * 4)?
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FeatureSet::new(bits, classes, outputs, labels)
}

pub fn save_features(set: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_features(set, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    read_features(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// CSV features
// ---------------------------------------------------------------------------

/// Header row, one column per output, then a `label` column.
pub fn write_features_csv(set: &FeatureSet, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..set.bits).map(|k| format!("b{k}")).collect();
    header.push("label".into());
    out.write_record(&header).map_err(csv_error)?;
    for i in 0..set.len() {
        let mut rec: Vec<String> = set.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(set.labels[i].to_string());
        out.write_record(&rec).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses CSV features. Values are rounded to `f32`; the class count is one
/// past the largest label.
pub fn read_features_csv(r: impl Read) -> Result<FeatureSet> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().next_back().map(str::trim) != Some("label") {
        return Err(Error::format("CSV header must end with a 'label' column"));
    }
    let bits = header.len() - 1;
    let mut outputs = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != bits + 1 {
            return Err(Error::format(format!(
                "CSV row {} has {} fields, expected {}",
                line + 1,
                rec.len(),
                bits + 1
            )));
        }
        for field in rec.iter().take(bits) {
            let v: f32 = field.trim().parse().map_err(|_| {
                Error::data(format!("CSV row {}: '{field}' is not a number", line + 1))
            })?;
            outputs.push(v);
        }
        let label = rec[bits].trim();
        labels.push(label.parse().map_err(|_| {
            Error::data(format!("CSV row {}: '{label}' is not a label", line + 1))
        })?);
    }
    let classes = labels.iter().max().map_or(0, |&m| m as usize + 1);
    FeatureSet::new(bits, classes, outputs, labels)
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::format(format!("CSV: {e}"))
    }
}

pub fn save_features_csv(set: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    write_features_csv(set, BufWriter::new(File::create(path)?))
}

pub fn load_features_csv(path: impl AsRef<Path>) -> Result<FeatureSet> {
    read_features_csv(BufReader::new(File::open(path)?))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads CSV when the extension is `.csv`, TRNH otherwise.
pub fn load_features_any(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    if is_csv(path) {
        load_features_csv(path)
    } else {
        load_features(path)
    }
}

pub fn save_features_any(set: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        save_features_csv(set, path)
    } else {
        save_features(set, path)
    }
}

// ---------------------------------------------------------------------------
// TRNC
// ---------------------------------------------------------------------------

pub fn write_codes(set: &CodeSet, mut w: impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(17 + set.words.len() * 8 + set.labels.len() * 4);
    buf.extend_from_slice(&CODES_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(set.kind as u8);
    buf.extend_from_slice(&dim_u32(set.len(), "code count")?.to_le_bytes());
    buf.extend_from_slice(&dim_u32(set.length, "code length")?.to_le_bytes());
    for word in &set.words {
        buf.extend_from_slice(&word.to_le_bytes());
    }
    for l in &set.labels {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_codes(reader: impl Read) -> Result<CodeSet> {
    let bytes = read_after_magic(reader, CODES_MAGIC, "TRNC")?;
    let mut cur = Cursor { buf: &bytes, what: "TRNC" };
    check_version(cur.u32()?)?;
    let kind = match cur.u8()? {
        0 => CodeKind::Binary,
        1 => CodeKind::Ternary,
        k => return Err(Error::format(format!("unknown code kind {k}"))),
    };
    let n = cur.u32()? as usize;
    let length = cur.u32()? as usize;
    let wpc = kind.words_per_code(length);
    let payload = n
        .checked_mul(wpc)
        .and_then(|x| x.checked_mul(8))
        .and_then(|x| x.checked_add(n.checked_mul(4)?));
    cur.expect_remaining(payload)?;
    let words: Vec<u64> = cur
        .take(n * wpc * 8)?
        .chunks_exact(8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let labels: Vec<u32> = cur
        .take(n * 4)?
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    CodeSet::new(kind, length, words, labels)
}

pub fn save_codes(set: &CodeSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_codes(set, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_codes(path: impl AsRef<Path>) -> Result<CodeSet> {
    read_codes(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// TRNT
// ---------------------------------------------------------------------------

pub fn write_thresholds(table: &ThresholdTable, mut w: impl Write) -> Result<()> {
    let mut buf = Vec::with_capacity(12 + table.num_bits() * 16);
    buf.extend_from_slice(&THRESHOLDS_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&dim_u32(table.num_bits(), "bit count")?.to_le_bytes());
    for p in table.pairs() {
        buf.extend_from_slice(&p.t1.to_le_bytes());
        buf.extend_from_slice(&p.t2.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_thresholds(reader: impl Read) -> Result<ThresholdTable> {
    let bytes = read_after_magic(reader, THRESHOLDS_MAGIC, "TRNT")?;
    let mut cur = Cursor { buf: &bytes, what: "TRNT" };
    check_version(cur.u32()?)?;
    let k = cur.u32()? as usize;
    cur.expect_remaining(k.checked_mul(16))?;
    let mut pairs = Vec::with_capacity(k);
    for bit in 0..k {
        let t1 = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let t2 = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let pair = ThresholdPair::new(t1, t2)
            .map_err(|e| Error::format(format!("threshold pair for bit {bit}: {e}")))?;
        pairs.push(pair);
    }
    Ok(ThresholdTable::new(pairs))
}

pub fn save_thresholds(table: &ThresholdTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_thresholds(table, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_thresholds(path: impl AsRef<Path>) -> Result<ThresholdTable> {
    read_thresholds(BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// Synthetic features
// ---------------------------------------------------------------------------

/// Parameters of [`synth_gaussian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub classes: usize,
    pub bits: usize,
    pub per_class: usize,
    /// Distance between the two per-bit class means.
    pub separation: f64,
    /// Probability that a sample's bit is drawn around 0 instead.
    pub ambiguity: f64,
    pub seed: u64,
}

/// Gaussian stand-in for the outputs of a trained hashing network.
///
/// Every (class, bit) gets a random sign; a sample of that class draws the
/// bit from `N(sign * separation / 2, 1)`, except that with probability
/// `ambiguity` the mean is 0. Samples are grouped by class, class 0 first.
pub fn synth_gaussian(p: &SynthParams) -> Result<FeatureSet> {
    if p.classes < 2 {
        return Err(Error::param("synthetic data needs at least 2 classes"));
    }
    if p.bits < 1 {
        return Err(Error::param("synthetic data needs at least 1 bit"));
    }
    if !(0.0..=1.0).contains(&p.ambiguity) {
        return Err(Error::param(format!("ambiguity {} outside [0, 1]", p.ambiguity)));
    }
    if !p.separation.is_finite() {
        return Err(Error::param("separation must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let signs: Vec<f64> = (0..p.classes * p.bits)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let half = p.separation / 2.0;
    let n = p.classes * p.per_class;
    let mut outputs = Vec::with_capacity(n * p.bits);
    let mut labels = Vec::with_capacity(n);
    for c in 0..p.classes {
        for _ in 0..p.per_class {
            for k in 0..p.bits {
                let ambiguous = rng.random::<f64>() < p.ambiguity;
                let mean = if ambiguous { 0.0 } else { signs[c * p.bits + k] * half };
                let noise: f64 = rng.sample(StandardNormal);
                outputs.push((mean + noise) as f32);
            }
            labels.push(c as u32);
        }
    }
    FeatureSet::new(p.bits, p.classes, outputs, labels)
}
