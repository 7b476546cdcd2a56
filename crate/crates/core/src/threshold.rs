//! Per-bit double-threshold search.
//!
//! For one hash bit, the raw outputs of every class are binned into a shared
//! equal-width histogram over the observed range. Each candidate pair of bin
//! indices `(i, j)` with `0 <= i < j <= R` splits every class into three
//! masses: below bin `i` (trit `-1`), bins `i..=j` (trit `0`) and above bin
//! `j` (trit `+1`). The candidate is scored by the expected ternary Hamming
//! distance summed over all ordered class pairs, with same-class pairs
//! subtracted:
//!
//! ```text
//! E(X) = Σ_{A,B} (-1)^[A = B] E(A, B)
//! ```
//!
//! and the best candidate wins, ties going to the smallest `i`, then the
//! smallest `j`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::FeatureSet;
use crate::trit::Logic;

pub const DEFAULT_BINS: usize = 100;

/// Probabilities of a set of samples being assigned `+1`, `0` and `-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TritProbabilities {
    pub pos: f64,
    pub unknown: f64,
    pub neg: f64,
}

impl TritProbabilities {
    pub fn new(pos: f64, unknown: f64, neg: f64) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !(ok(pos) && ok(unknown) && ok(neg)) {
            return Err(Error::param(format!(
                "probabilities ({pos}, {unknown}, {neg}) outside [0, 1]"
            )));
        }
        if ((pos + unknown + neg) - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!(
                "probabilities ({pos}, {unknown}, {neg}) do not sum to 1"
            )));
        }
        Ok(TritProbabilities { pos, unknown, neg })
    }
}

/// Expected ternary Hamming distance between a trit drawn from `a` and an
/// independent trit drawn from `b`.
#[inline]
pub fn expected_thd_pair(a: &TritProbabilities, b: &TritProbabilities, logic: Logic) -> f64 {
    let opposite = a.pos * b.neg + a.neg * b.pos;
    let one_unknown = a.unknown * (b.pos + b.neg) + b.unknown * (a.pos + a.neg);
    if logic.unknown_pairs_differ() {
        opposite + 0.5 * a.unknown * b.unknown + 0.5 * one_unknown
    } else {
        opposite + 0.5 * one_unknown
    }
}

/// Inter-class expected distance minus intra-class expected distance, over
/// the full `C × C` grid of ordered class pairs.
pub fn pairwise_objective(probs: &[TritProbabilities], logic: Logic) -> f64 {
    let mut total = 0.0;
    for (a, pa) in probs.iter().enumerate() {
        for (b, pb) in probs.iter().enumerate() {
            let e = expected_thd_pair(pa, pb, logic);
            if a == b {
                total -= e;
            } else {
                total += e;
            }
        }
    }
    total
}

/// Per-class histograms of one bit's outputs on shared equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassHistogram {
    num_classes: usize,
    num_bins: usize,
    edges: Vec<f64>,
    /// `num_classes × num_bins`, row-major.
    counts: Vec<u64>,
    class_totals: Vec<u64>,
}

impl ClassHistogram {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    /// `num_bins + 1` ascending edges; the first is the minimum output and
    /// the last the maximum.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self, class: usize) -> &[u64] {
        &self.counts[class * self.num_bins..(class + 1) * self.num_bins]
    }

    pub fn class_total(&self, class: usize) -> u64 {
        self.class_totals[class]
    }

    /// A class with no samples has a uniform placeholder row and is left out
    /// of the objective.
    pub fn is_populated(&self, class: usize) -> bool {
        self.class_totals[class] > 0
    }

    /// Normalized row for `class`.
    pub fn probs(&self, class: usize) -> Vec<f64> {
        let total = self.class_totals[class];
        if total == 0 {
            return vec![1.0 / self.num_bins as f64; self.num_bins];
        }
        self.counts(class)
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }

    /// Bin containing `v`. Values on an interior edge go to the right bin;
    /// the maximum goes to the last bin.
    pub fn bin_of(&self, v: f64) -> usize {
        bin_index(&self.edges, v)
    }
}

fn bin_index(edges: &[f64], v: f64) -> usize {
    let interior = &edges[1..edges.len() - 1];
    interior.partition_point(|&e| e <= v)
}

fn equal_width_edges(min: f64, max: f64, bins: usize) -> Vec<f64> {
    let span = max - min;
    let mut edges: Vec<f64> = (0..=bins)
        .map(|k| min + span * (k as f64 / bins as f64))
        .collect();
    edges[bins] = max;
    edges
}

fn check_inputs(outputs: &[f64], labels: &[u32], num_classes: usize, num_bins: usize) -> Result<()> {
    if num_bins < 2 {
        return Err(Error::param(format!("need at least 2 bins, got {num_bins}")));
    }
    if outputs.is_empty() {
        return Err(Error::param("no samples"));
    }
    if outputs.len() != labels.len() {
        return Err(Error::dimension(outputs.len(), labels.len()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l as usize >= num_classes) {
        return Err(Error::data(format!("label {l} out of range for {num_classes} classes")));
    }
    if let Some(v) = outputs.iter().find(|v| !v.is_finite()) {
        return Err(Error::data(format!("non-finite output {v}")));
    }
    Ok(())
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

pub fn build_histograms(
    outputs: &[f64],
    labels: &[u32],
    num_classes: usize,
    num_bins: usize,
) -> Result<ClassHistogram> {
    check_inputs(outputs, labels, num_classes, num_bins)?;
    let (min, max) = min_max(outputs);
    if min == max {
        return Err(Error::DegenerateRange(min));
    }
    let edges = equal_width_edges(min, max, num_bins);
    let mut counts = vec![0u64; num_classes * num_bins];
    let mut class_totals = vec![0u64; num_classes];
    for (&v, &label) in outputs.iter().zip(labels) {
        let c = label as usize;
        counts[c * num_bins + bin_index(&edges, v)] += 1;
        class_totals[c] += 1;
    }
    Ok(ClassHistogram {
        num_classes,
        num_bins,
        edges,
        counts,
        class_totals,
    })
}

/// Double thresholds for one bit: `-1` below `t1`, `0` on `[t1, t2]`, `+1`
/// above `t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    pub t1: f64,
    pub t2: f64,
}

impl ThresholdPair {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !t1.is_finite() || !t2.is_finite() {
            return Err(Error::data(format!("non-finite threshold ({t1}, {t2})")));
        }
        if t1 > t2 {
            return Err(Error::param(format!("t1 = {t1} exceeds t2 = {t2}")));
        }
        Ok(ThresholdPair { t1, t2 })
    }
}

impl fmt::Display for ThresholdPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.t1, self.t2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    pairs: Vec<ThresholdPair>,
}

impl ThresholdTable {
    pub fn new(pairs: Vec<ThresholdPair>) -> Self {
        ThresholdTable { pairs }
    }

    pub fn num_bits(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[ThresholdPair] {
        &self.pairs
    }
}

/// Outcome of the search on one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct BitSearch {
    /// Winning `i`: first bin of the UNKNOWN band.
    pub lower_bin: usize,
    /// Winning `j`: last bin of the UNKNOWN band (may equal the bin count).
    pub upper_bin: usize,
    pub thresholds: ThresholdPair,
    pub objective: f64,
    /// All outputs were equal; thresholds collapse onto that value.
    pub constant: bool,
    /// Classes with no samples on this bit, excluded from the objective.
    pub empty_classes: Vec<u32>,
}

impl BitSearch {
    pub fn is_degenerate(&self) -> bool {
        self.constant || !self.empty_classes.is_empty()
    }
}

/// Trit probabilities of every populated class for candidate `(i, j)`, from
/// per-class prefix counts.
fn candidate_probs(
    prefix: &[Vec<u64>],
    totals: &[u64],
    num_bins: usize,
    i: usize,
    j: usize,
    out: &mut Vec<TritProbabilities>,
) {
    out.clear();
    let upper = (j + 1).min(num_bins);
    for (p, &total) in prefix.iter().zip(totals) {
        let below = p[i];
        let band = p[upper] - p[i];
        let above = total - p[upper];
        let n = total as f64;
        out.push(TritProbabilities {
            pos: above as f64 / n,
            unknown: band as f64 / n,
            neg: below as f64 / n,
        });
    }
}

/// Exhaustive search over `0 <= i < j <= R`.
pub fn search_bit(
    outputs: &[f64],
    labels: &[u32],
    num_classes: usize,
    num_bins: usize,
    logic: Logic,
) -> Result<BitSearch> {
    let hist = match build_histograms(outputs, labels, num_classes, num_bins) {
        Ok(h) => h,
        Err(Error::DegenerateRange(v)) => {
            let mut present = vec![false; num_classes];
            labels.iter().for_each(|&l| present[l as usize] = true);
            return Ok(BitSearch {
                lower_bin: 0,
                upper_bin: 0,
                thresholds: ThresholdPair { t1: v, t2: v },
                objective: 0.0,
                constant: true,
                empty_classes: empty_classes(&present),
            });
        }
        Err(e) => return Err(e),
    };
    Ok(search_histogram(&hist, logic))
}

fn empty_classes(present: &[bool]) -> Vec<u32> {
    present
        .iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(c, _)| c as u32)
        .collect()
}

/// Runs the candidate scan on an already built histogram.
pub fn search_histogram(hist: &ClassHistogram, logic: Logic) -> BitSearch {
    let r = hist.num_bins;
    let populated: Vec<usize> = (0..hist.num_classes)
        .filter(|&c| hist.is_populated(c))
        .collect();
    let prefix: Vec<Vec<u64>> = populated
        .iter()
        .map(|&c| {
            let mut p = Vec::with_capacity(r + 1);
            let mut acc = 0;
            p.push(0);
            for &n in hist.counts(c) {
                acc += n;
                p.push(acc);
            }
            p
        })
        .collect();
    let totals: Vec<u64> = populated.iter().map(|&c| hist.class_total(c)).collect();

    let mut probs = Vec::with_capacity(populated.len());
    let mut best = (0, 1, f64::NEG_INFINITY);
    for i in 0..r {
        for j in i + 1..=r {
            candidate_probs(&prefix, &totals, r, i, j, &mut probs);
            let objective = pairwise_objective(&probs, logic);
            if objective > best.2 {
                best = (i, j, objective);
            }
        }
    }
    let (i, j, objective) = best;
    let present: Vec<bool> = (0..hist.num_classes).map(|c| hist.is_populated(c)).collect();
    BitSearch {
        lower_bin: i,
        upper_bin: j,
        thresholds: ThresholdPair {
            t1: hist.edges[i],
            t2: hist.edges[(j + 1).min(r)],
        },
        objective,
        constant: false,
        empty_classes: empty_classes(&present),
    }
}

/// Result of fitting every bit of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFit {
    pub bits: Vec<BitSearch>,
}

impl ThresholdFit {
    pub fn table(&self) -> ThresholdTable {
        ThresholdTable::new(self.bits.iter().map(|b| b.thresholds).collect())
    }

    pub fn degenerate_bits(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_degenerate())
            .map(|(k, _)| k)
            .collect()
    }

    pub fn total_objective(&self) -> f64 {
        self.bits.iter().map(|b| b.objective).sum()
    }
}

/// Searches every bit independently. Bits run in parallel on the current
/// rayon pool; the result does not depend on scheduling.
pub fn fit_thresholds(features: &FeatureSet, num_bins: usize, logic: Logic) -> Result<ThresholdFit> {
    if num_bins < 2 {
        return Err(Error::param(format!("need at least 2 bins, got {num_bins}")));
    }
    let bits = (0..features.bits())
        .into_par_iter()
        .map(|k| {
            let column = features.column(k);
            search_bit(&column, features.labels(), features.classes(), num_bins, logic)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdFit { bits })
}
