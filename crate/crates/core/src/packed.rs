//! Bit-packed codes and word-parallel distance kernels.
//!
//! A ternary code stores each trit in two bits `t1 t2`:
//!
//! | trit | `t1 t2` |
//! |------|---------|
//! | `+1` | `10`    |
//! | `0`  | `00`    |
//! | `-1` | `01`    |
//!
//! Trit `j` lives in word `j / 32`; `t1` is bit `2(j % 32) + 1` and `t2` is
//! bit `2(j % 32)`. Words are little-endian in the stream and every bit past
//! the last trit is zero. The pattern `11` is never produced.
//!
//! With this layout the Łukasiewicz distance is half the popcount of
//! `a ^ b`, and the Kleene distance additionally sets the low bit of every
//! pair where both trits are `0` (`t_b = ¬(t1 ∨ t2 ∨ t1' ∨ t2')`).
//!
//! All kernels return distances in half units so that accumulation stays in
//! integers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trit::{Logic, TernaryDistance, Trit};

/// Low bit of every two-bit pair.
pub const LOW_BITS: u64 = 0x5555_5555_5555_5555;

pub const TRITS_PER_WORD: usize = 32;
pub const BITS_PER_WORD: usize = 64;

/// Two-bit patterns used by the trit encoding (`00`, `01`, `10`); `11` is
/// left unused.
pub const USED_PAIR_PATTERNS: [u64; 3] = [0b00, 0b01, 0b10];

#[inline]
pub const fn words_for_trits(len: usize) -> usize {
    len.div_ceil(TRITS_PER_WORD)
}

#[inline]
pub const fn words_for_bits(len: usize) -> usize {
    len.div_ceil(BITS_PER_WORD)
}

#[inline]
const fn trit_bits(t: Trit) -> u64 {
    match t {
        Trit::Pos => 0b10,
        Trit::Unknown => 0b00,
        Trit::Neg => 0b01,
    }
}

/// Mask of the bits in word `w` that belong to the first `len` trits.
#[inline(always)]
fn ternary_word_mask(len: usize, w: usize) -> u64 {
    let start = w * TRITS_PER_WORD;
    if len >= start + TRITS_PER_WORD {
        !0
    } else if len <= start {
        0
    } else {
        (1u64 << (2 * (len - start))) - 1
    }
}

#[inline(always)]
fn binary_word_mask(len: usize, w: usize) -> u64 {
    let start = w * BITS_PER_WORD;
    if len >= start + BITS_PER_WORD {
        !0
    } else if len <= start {
        0
    } else {
        (1u64 << (len - start)) - 1
    }
}

/// SWAR population count. Used where the native instruction is not
/// available; must agree with `u64::count_ones`.
#[inline]
pub const fn popcount_portable(mut x: u64) -> u32 {
    x -= (x >> 1) & 0x5555_5555_5555_5555;
    x = (x & 0x3333_3333_3333_3333) + ((x >> 2) & 0x3333_3333_3333_3333);
    x = (x + (x >> 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    (x.wrapping_mul(0x0101_0101_0101_0101) >> 56) as u32
}

/// Pairs with `t1 = t2 = 1`, reported on their low bit.
#[inline(always)]
fn invalid_pairs(w: u64) -> u64 {
    (w >> 1) & w & LOW_BITS
}

/// A fixed-length ternary code, two bits per trit.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PackedTernaryCode {
    len: usize,
    words: Vec<u64>,
}

impl PackedTernaryCode {
    pub fn pack(trits: &[Trit]) -> Self {
        let mut words = vec![0u64; words_for_trits(trits.len())];
        for (j, &t) in trits.iter().enumerate() {
            words[j / TRITS_PER_WORD] |= trit_bits(t) << (2 * (j % TRITS_PER_WORD));
        }
        PackedTernaryCode {
            len: trits.len(),
            words,
        }
    }

    /// Wraps raw words after checking the word count, the absence of `11`
    /// pairs and zero padding.
    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        validate_ternary_words(len, &words)?;
        Ok(PackedTernaryCode { len, words })
    }

    /// Number of trits.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    pub fn get(&self, j: usize) -> Option<Trit> {
        (j < self.len).then(|| decode_pair(self.words[j / TRITS_PER_WORD], j).expect("validated"))
    }

    pub fn trits(&self) -> Vec<Trit> {
        unpack_ternary(self.len, &self.words).expect("validated on construction")
    }
}

impl fmt::Debug for PackedTernaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PackedTernaryCode({}; ", self.len)?;
        for t in self.trits() {
            f.write_str(match t {
                Trit::Pos => "+",
                Trit::Unknown => "0",
                Trit::Neg => "-",
            })?;
        }
        f.write_str(")")
    }
}

#[inline]
fn decode_pair(word: u64, j: usize) -> Result<Trit> {
    match (word >> (2 * (j % TRITS_PER_WORD))) & 0b11 {
        0b10 => Ok(Trit::Pos),
        0b00 => Ok(Trit::Unknown),
        0b01 => Ok(Trit::Neg),
        _ => Err(Error::CorruptCode { position: j }),
    }
}

pub fn validate_ternary_words(len: usize, words: &[u64]) -> Result<()> {
    let expected = words_for_trits(len);
    if words.len() != expected {
        return Err(Error::dimension(expected, words.len()));
    }
    for (w, &word) in words.iter().enumerate() {
        let mask = ternary_word_mask(len, w);
        let bad = invalid_pairs(word & mask);
        if bad != 0 {
            let position = w * TRITS_PER_WORD + bad.trailing_zeros() as usize / 2;
            return Err(Error::CorruptCode { position });
        }
        if word & !mask != 0 {
            return Err(Error::format(format!(
                "nonzero padding bits in word {w} of a {len}-trit code"
            )));
        }
    }
    Ok(())
}

pub fn pack_ternary(trits: &[Trit]) -> PackedTernaryCode {
    PackedTernaryCode::pack(trits)
}

/// Decodes the first `len` trits of a word stream. A `11` pair is an error.
pub fn unpack_ternary(len: usize, words: &[u64]) -> Result<Vec<Trit>> {
    if words.len() < words_for_trits(len) {
        return Err(Error::dimension(words_for_trits(len), words.len()));
    }
    (0..len)
        .map(|j| decode_pair(words[j / TRITS_PER_WORD], j))
        .collect()
}

/// A fixed-length binary code, one bit per symbol (`+1 ↦ 1`, `-1 ↦ 0`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PackedBinaryCode {
    len: usize,
    words: Vec<u64>,
}

impl PackedBinaryCode {
    /// `true` stands for `+1`.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; words_for_bits(bits.len())];
        for (i, &b) in bits.iter().enumerate() {
            words[i / BITS_PER_WORD] |= (b as u64) << (i % BITS_PER_WORD);
        }
        PackedBinaryCode {
            len: bits.len(),
            words,
        }
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Result<Self> {
        validate_binary_words(len, &words)?;
        Ok(PackedBinaryCode { len, words })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn into_words(self) -> Vec<u64> {
        self.words
    }

    pub fn bit(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| (self.words[i / BITS_PER_WORD] >> (i % BITS_PER_WORD)) & 1 == 1)
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.bit(i).unwrap()).collect()
    }

    /// The same sign pattern as a ternary code with no UNKNOWN trits.
    pub fn to_ternary(&self) -> PackedTernaryCode {
        let trits: Vec<Trit> = self
            .bits()
            .into_iter()
            .map(|b| if b { Trit::Pos } else { Trit::Neg })
            .collect();
        PackedTernaryCode::pack(&trits)
    }
}

impl fmt::Debug for PackedBinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PackedBinaryCode({}; ", self.len)?;
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

pub fn validate_binary_words(len: usize, words: &[u64]) -> Result<()> {
    let expected = words_for_bits(len);
    if words.len() != expected {
        return Err(Error::dimension(expected, words.len()));
    }
    for (w, &word) in words.iter().enumerate() {
        if word & !binary_word_mask(len, w) != 0 {
            return Err(Error::format(format!(
                "nonzero padding bits in word {w} of a {len}-bit code"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Word kernels. Distances are in half units.
// ---------------------------------------------------------------------------

/// `popcount(a ^ b)`, i.e. twice the Łukasiewicz distance. Zero padding
/// contributes nothing, so no mask is needed.
#[inline(always)]
pub fn lukasiewicz_halves(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

#[inline(always)]
fn kleene_word(x: u64, y: u64, mask: u64) -> u32 {
    let any = x | y;
    let both_unknown = !(any | (any >> 1)) & LOW_BITS & mask;
    ((x ^ y) | both_unknown).count_ones()
}

/// Twice the Kleene distance over the first `len` trits.
#[inline(always)]
pub fn kleene_halves(a: &[u64], b: &[u64], len: usize) -> u32 {
    let full = (len / TRITS_PER_WORD).min(a.len()).min(b.len());
    let mut acc = 0u32;
    for w in 0..full {
        acc += kleene_word(a[w], b[w], !0);
    }
    for w in full..a.len().min(b.len()) {
        acc += kleene_word(a[w], b[w], ternary_word_mask(len, w));
    }
    acc
}

/// Binary Hamming distance (whole bits, not half units).
#[inline(always)]
pub fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

pub fn thd_lukasiewicz_packed(
    a: &PackedTernaryCode,
    b: &PackedTernaryCode,
) -> Result<TernaryDistance> {
    if a.len != b.len {
        return Err(Error::dimension(a.len, b.len));
    }
    Ok(TernaryDistance::from_halves(
        lukasiewicz_halves(&a.words, &b.words) as u64,
    ))
}

pub fn thd_kleene_packed(a: &PackedTernaryCode, b: &PackedTernaryCode) -> Result<TernaryDistance> {
    if a.len != b.len {
        return Err(Error::dimension(a.len, b.len));
    }
    Ok(TernaryDistance::from_halves(
        kleene_halves(&a.words, &b.words, a.len) as u64,
    ))
}

pub fn thd_packed(
    a: &PackedTernaryCode,
    b: &PackedTernaryCode,
    logic: Logic,
) -> Result<TernaryDistance> {
    match logic {
        Logic::Lukasiewicz => thd_lukasiewicz_packed(a, b),
        Logic::Kleene | Logic::Bochvar => thd_kleene_packed(a, b),
    }
}

pub fn hamming_binary_packed(a: &PackedBinaryCode, b: &PackedBinaryCode) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::dimension(a.len, b.len));
    }
    Ok(hamming_words(&a.words, &b.words))
}

/// Distance used to rank a database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Hamming distance between binary codes.
    Binary,
    Lukasiewicz,
    /// Kleene (and Bochvar) ternary distance.
    Kleene,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Binary => "binary",
            Metric::Lukasiewicz => "lukasiewicz",
            Metric::Kleene => "kleene",
        }
    }

    pub fn is_ternary(self) -> bool {
        !matches!(self, Metric::Binary)
    }

    /// Half-unit distance between two codes of `len` symbols. Binary
    /// distances are doubled so every metric shares one scale.
    #[inline(always)]
    pub fn halves(self, a: &[u64], b: &[u64], len: usize) -> u32 {
        match self {
            Metric::Binary => 2 * hamming_words(a, b),
            Metric::Lukasiewicz => lukasiewicz_halves(a, b),
            Metric::Kleene => kleene_halves(a, b, len),
        }
    }

    /// Largest possible half-unit distance for `len` symbols.
    pub fn max_halves(self, len: usize) -> usize {
        2 * len
    }
}

impl From<Logic> for Metric {
    fn from(logic: Logic) -> Self {
        match logic {
            Logic::Lukasiewicz => Metric::Lukasiewicz,
            Logic::Kleene | Logic::Bochvar => Metric::Kleene,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "hamming" => Ok(Metric::Binary),
            other => other.parse::<Logic>().map(Metric::from).map_err(|_| {
                Error::param(format!(
                    "unknown metric '{s}' (expected binary, luka or kleene)"
                ))
            }),
        }
    }
}

#[inline(always)]
fn scan_generic(
    metric: Metric,
    query: &[u64],
    database: &[u64],
    words_per_code: usize,
    len: usize,
    out: &mut [u32],
) {
    for (row, d) in database.chunks_exact(words_per_code).zip(out.iter_mut()) {
        *d = metric.halves(query, row, len);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn scan_popcnt(
    metric: Metric,
    query: &[u64],
    database: &[u64],
    words_per_code: usize,
    len: usize,
    out: &mut [u32],
) {
    match metric {
        Metric::Binary => scan_generic(Metric::Binary, query, database, words_per_code, len, out),
        Metric::Lukasiewicz => {
            scan_generic(Metric::Lukasiewicz, query, database, words_per_code, len, out)
        }
        Metric::Kleene => scan_generic(Metric::Kleene, query, database, words_per_code, len, out),
    }
}

/// Half-unit distances from `query` to every code of a contiguous database
/// (`words_per_code` words per row). Uses the native popcount instruction
/// when the CPU has one.
pub fn scan(
    metric: Metric,
    query: &[u64],
    database: &[u64],
    words_per_code: usize,
    len: usize,
    out: &mut [u32],
) {
    assert_eq!(query.len(), words_per_code);
    if words_per_code == 0 {
        // Empty codes: every distance is zero.
        out.iter_mut().for_each(|d| *d = 0);
        return;
    }
    assert_eq!(database.len() / words_per_code, out.len());
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("popcnt") {
            // SAFETY: the CPU supports popcnt.
            unsafe { scan_popcnt(metric, query, database, words_per_code, len, out) };
            return;
        }
    }
    match metric {
        Metric::Binary => scan_generic(Metric::Binary, query, database, words_per_code, len, out),
        Metric::Lukasiewicz => {
            scan_generic(Metric::Lukasiewicz, query, database, words_per_code, len, out)
        }
        Metric::Kleene => scan_generic(Metric::Kleene, query, database, words_per_code, len, out),
    }
}

/// [`scan`] without the native popcount path; words are counted with
/// [`popcount_portable`].
pub fn scan_portable(
    metric: Metric,
    query: &[u64],
    database: &[u64],
    words_per_code: usize,
    len: usize,
    out: &mut [u32],
) {
    if words_per_code == 0 {
        out.iter_mut().for_each(|d| *d = 0);
        return;
    }
    for (row, d) in database.chunks_exact(words_per_code).zip(out.iter_mut()) {
        let mut acc = 0u32;
        for (w, (&x, &y)) in query.iter().zip(row).enumerate() {
            acc += match metric {
                Metric::Binary => 2 * popcount_portable(x ^ y),
                Metric::Lukasiewicz => popcount_portable(x ^ y),
                Metric::Kleene => {
                    let any = x | y;
                    let tb = !(any | (any >> 1)) & LOW_BITS & ternary_word_mask(len, w);
                    popcount_portable((x ^ y) | tb)
                }
            };
        }
        *d = acc;
    }
}
