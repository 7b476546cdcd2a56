//! Retrieval quality: mAP@k, positive/negative distance histograms, their
//! overlap, the neighborhood-ambiguity rate, and the Poisson binomial PMF.
//!
//! Rankings sort the database by ascending distance and break ties by
//! ascending database index. Distances are handled in half units throughout
//! (see [`Metric::halves`]), so ranking is a counting sort.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::CodeSet;
use crate::packed::{scan, Metric};

/// Retrieval cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopK {
    All,
    Top(usize),
}

impl TopK {
    fn limit(self, n: usize) -> usize {
        match self {
            TopK::All => n,
            TopK::Top(k) => k.min(n),
        }
    }

    fn cap(self) -> usize {
        match self {
            TopK::All => usize::MAX,
            TopK::Top(k) => k,
        }
    }
}

impl fmt::Display for TopK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopK::All => f.write_str("all"),
            TopK::Top(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for TopK {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(TopK::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(TopK::Top(k)),
            _ => Err(Error::param(format!("k must be a positive integer or 'all', got '{s}'"))),
        }
    }
}

/// AP@k of a ranked relevance list: the sum of precision@i over relevant
/// positions `i <= k`, divided by `min(k, total relevant)`. Zero when
/// nothing is relevant.
pub fn average_precision(relevance: &[bool], k: TopK) -> f64 {
    let total = relevance.iter().filter(|&&r| r).count();
    if total == 0 {
        return 0.0;
    }
    let limit = k.limit(relevance.len());
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in relevance[..limit].iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total.min(k.cap()) as f64
}

fn check_pair(queries: &CodeSet, database: &CodeSet, metric: Metric) -> Result<()> {
    queries.check_metric(metric)?;
    database.check_metric(metric)?;
    if queries.length() != database.length() {
        return Err(Error::dimension(database.length(), queries.length()));
    }
    if database.is_empty() {
        return Err(Error::param("empty database"));
    }
    Ok(())
}

/// Half-unit distances from query `q` to every database code.
fn query_distances(queries: &CodeSet, q: usize, database: &CodeSet, metric: Metric) -> Vec<u32> {
    let mut out = vec![0u32; database.len()];
    scan(
        metric,
        queries.code_words(q),
        database.words(),
        database.words_per_code(),
        database.length(),
        &mut out,
    );
    out
}

/// Database indices by ascending distance, ties by ascending index.
pub fn rank(distances: &[u32]) -> Vec<usize> {
    let max = distances.iter().copied().max().unwrap_or(0) as usize;
    let mut starts = vec![0usize; max + 2];
    for &d in distances {
        starts[d as usize + 1] += 1;
    }
    for b in 1..starts.len() {
        starts[b] += starts[b - 1];
    }
    let mut order = vec![0usize; distances.len()];
    for (i, &d) in distances.iter().enumerate() {
        let slot = &mut starts[d as usize];
        order[*slot] = i;
        *slot += 1;
    }
    order
}

/// mAP@k with single-label relevance (equal labels).
pub fn map_at_k(queries: &CodeSet, database: &CodeSet, k: TopK, metric: Metric) -> Result<f64> {
    let (ql, dl) = (queries.labels(), database.labels());
    map_at_k_with(queries, database, k, metric, |q, d| ql[q] == dl[d])
}

/// mAP@k with a caller-supplied relevance predicate over
/// `(query index, database index)`, e.g. intersecting label sets.
pub fn map_at_k_with<F>(
    queries: &CodeSet,
    database: &CodeSet,
    k: TopK,
    metric: Metric,
    relevant: F,
) -> Result<f64>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    check_pair(queries, database, metric)?;
    if queries.is_empty() {
        return Err(Error::param("no queries"));
    }
    let aps: Vec<f64> = (0..queries.len())
        .into_par_iter()
        .map(|q| {
            let order = rank(&query_distances(queries, q, database, metric));
            let rel: Vec<bool> = order.iter().map(|&d| relevant(q, d)).collect();
            average_precision(&rel, k)
        })
        .collect();
    // Summed in query order so the result is independent of scheduling.
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Normalized histograms of query-to-database distances for relevant
/// (positive) and irrelevant (negative) pairs, indexed by half units
/// `0..=max_halves`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistograms {
    pub max_halves: usize,
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
    pub pos_pairs: u64,
    pub neg_pairs: u64,
}

impl DistanceHistograms {
    fn from_counts(pos: Vec<u64>, neg: Vec<u64>) -> Self {
        let norm = |c: &[u64]| -> (Vec<f64>, u64) {
            let total: u64 = c.iter().sum();
            let h = if total == 0 {
                vec![0.0; c.len()]
            } else {
                c.iter().map(|&x| x as f64 / total as f64).collect()
            };
            (h, total)
        };
        let (pos_h, pos_pairs) = norm(&pos);
        let (neg_h, neg_pairs) = norm(&neg);
        DistanceHistograms {
            max_halves: pos.len() - 1,
            pos: pos_h,
            neg: neg_h,
            pos_pairs,
            neg_pairs,
        }
    }

    /// Distance value of support index `h`.
    pub fn distance(h: usize) -> f64 {
        h as f64 * 0.5
    }

    pub fn swapped(&self) -> Self {
        DistanceHistograms {
            max_halves: self.max_halves,
            pos: self.neg.clone(),
            neg: self.pos.clone(),
            pos_pairs: self.neg_pairs,
            neg_pairs: self.pos_pairs,
        }
    }

    /// Delimited `distance,pos,neg` table.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("distance,pos,neg\n");
        for h in 0..=self.max_halves {
            let _ = writeln!(s, "{},{:.9},{:.9}", Self::distance(h), self.pos[h], self.neg[h]);
        }
        s
    }
}

pub fn distance_histograms(
    queries: &CodeSet,
    database: &CodeSet,
    metric: Metric,
) -> Result<DistanceHistograms> {
    let (ql, dl) = (queries.labels(), database.labels());
    distance_histograms_with(queries, database, metric, |q, d| ql[q] == dl[d])
}

pub fn distance_histograms_with<F>(
    queries: &CodeSet,
    database: &CodeSet,
    metric: Metric,
    relevant: F,
) -> Result<DistanceHistograms>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    check_pair(queries, database, metric)?;
    if queries.is_empty() {
        return Err(Error::param("no queries"));
    }
    let bins = metric.max_halves(database.length()) + 1;
    let (pos, neg) = (0..queries.len())
        .into_par_iter()
        .map(|q| {
            let mut pos = vec![0u64; bins];
            let mut neg = vec![0u64; bins];
            for (d, &dist) in query_distances(queries, q, database, metric).iter().enumerate() {
                if relevant(q, d) {
                    pos[dist as usize] += 1;
                } else {
                    neg[dist as usize] += 1;
                }
            }
            (pos, neg)
        })
        .reduce(
            || (vec![0u64; bins], vec![0u64; bins]),
            |(mut p, mut n), (p2, n2)| {
                p.iter_mut().zip(p2).for_each(|(a, b)| *a += b);
                n.iter_mut().zip(n2).for_each(|(a, b)| *a += b);
                (p, n)
            },
        );
    Ok(DistanceHistograms::from_counts(pos, neg))
}

/// `Σ min(pos, neg)` over the shared support.
pub fn overlap_area(h: &DistanceHistograms) -> f64 {
    h.pos.iter().zip(&h.neg).map(|(p, n)| p.min(*n)).sum()
}

/// How ambiguity triples are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbiguitySampling {
    /// `triples` draws, uniform over all valid (query, positive, negative)
    /// triples.
    Sampled { triples: usize, seed: u64 },
    /// Every valid triple.
    Exhaustive,
}

pub const DEFAULT_AMBIGUITY_TRIPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ambiguity {
    /// Fraction of triples with `d(q, n) - d(q, p) <= 0`.
    pub rate: f64,
    pub ambiguous: u64,
    pub triples: u64,
    /// Queries without a positive or without a negative in the database.
    pub skipped_queries: usize,
}

struct LabelGroups {
    /// Database indices sorted by label (stable).
    order: Vec<usize>,
    ranges: BTreeMap<u32, (usize, usize)>,
}

impl LabelGroups {
    fn new(labels: &[u32]) -> Self {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by_key(|&i| labels[i]);
        let mut ranges = BTreeMap::new();
        let mut start = 0;
        while start < order.len() {
            let label = labels[order[start]];
            let mut end = start;
            while end < order.len() && labels[order[end]] == label {
                end += 1;
            }
            ranges.insert(label, (start, end));
            start = end;
        }
        LabelGroups { order, ranges }
    }

    fn range(&self, label: u32) -> (usize, usize) {
        self.ranges.get(&label).copied().unwrap_or((0, 0))
    }
}

/// Rate of ambiguous (query, positive, negative) triples, where a triple is
/// ambiguous when the negative is no farther from the query than the
/// positive. Relevance is label equality.
pub fn ambiguity_rate(
    queries: &CodeSet,
    database: &CodeSet,
    metric: Metric,
    sampling: AmbiguitySampling,
) -> Result<Ambiguity> {
    check_pair(queries, database, metric)?;
    let groups = LabelGroups::new(database.labels());
    let n = database.len();
    let mut valid = Vec::new();
    let mut weights = Vec::new();
    for (q, &label) in queries.labels().iter().enumerate() {
        let (s, e) = groups.range(label);
        let npos = (e - s) as u64;
        let nneg = n as u64 - npos;
        if npos > 0 && nneg > 0 {
            valid.push(q);
            weights.push(npos * nneg);
        }
    }
    let skipped_queries = queries.len() - valid.len();
    if skipped_queries > 0 {
        log::warn!("{skipped_queries} queries lack a positive or a negative; skipped");
    }
    if valid.is_empty() {
        return Ok(Ambiguity {
            rate: 0.0,
            ambiguous: 0,
            triples: 0,
            skipped_queries,
        });
    }

    let (ambiguous, triples) = match sampling {
        AmbiguitySampling::Exhaustive => {
            let counts: Vec<u64> = valid
                .par_iter()
                .map(|&q| {
                    let dist = query_distances(queries, q, database, metric);
                    exhaustive_ambiguous(&dist, database.labels(), queries.labels()[q])
                })
                .collect();
            (counts.iter().sum(), weights.iter().sum())
        }
        AmbiguitySampling::Sampled { triples, seed } => {
            let mut cumulative = Vec::with_capacity(weights.len());
            let mut acc = 0u64;
            for w in &weights {
                acc += w;
                cumulative.push(acc);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let wpc = database.words_per_code();
            let len = database.length();
            let mut ambiguous = 0u64;
            for _ in 0..triples {
                let r = rng.random_range(0..acc);
                let slot = cumulative.partition_point(|&c| c <= r);
                let q = valid[slot];
                let (s, e) = groups.range(queries.labels()[q]);
                let p = groups.order[rng.random_range(s..e)];
                let r = rng.random_range(0..n - (e - s));
                let neg = groups.order[if r < s { r } else { r + (e - s) }];
                let qw = queries.code_words(q);
                let dp = metric.halves(qw, &database.words()[p * wpc..(p + 1) * wpc], len);
                let dn = metric.halves(qw, &database.words()[neg * wpc..(neg + 1) * wpc], len);
                if dn <= dp {
                    ambiguous += 1;
                }
            }
            (ambiguous, triples as u64)
        }
    };
    Ok(Ambiguity {
        rate: if triples == 0 { 0.0 } else { ambiguous as f64 / triples as f64 },
        ambiguous,
        triples,
        skipped_queries,
    })
}

/// Number of (positive, negative) pairs with `d_neg <= d_pos`.
fn exhaustive_ambiguous(dist: &[u32], labels: &[u32], label: u32) -> u64 {
    let max = dist.iter().copied().max().unwrap_or(0) as usize;
    // at_least[d] = positives at distance >= d.
    let mut at_least = vec![0u64; max + 2];
    for (&d, &l) in dist.iter().zip(labels) {
        if l == label {
            at_least[d as usize] += 1;
        }
    }
    for d in (0..=max).rev() {
        at_least[d] += at_least[d + 1];
    }
    dist.iter()
        .zip(labels)
        .filter(|(_, &l)| l != label)
        .map(|(&d, _)| at_least[d as usize])
        .sum()
}

/// Exact PMF of a sum of independent Bernoulli(`p_i`) variables, by
/// folding one variable at a time into the running distribution.
pub fn poisson_binomial_pmf(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::param(format!("probability {bad} outside [0, 1]")));
    }
    let mut pmf = Vec::with_capacity(p.len() + 1);
    pmf.push(1.0);
    for &pi in p {
        pmf.push(0.0);
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * (1.0 - pi) + pmf[k - 1] * pi;
        }
        pmf[0] *= 1.0 - pi;
    }
    Ok(pmf)
}

/// Everything `eval` reports for one query/database pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub metric: Metric,
    pub k: TopK,
    pub code_length: usize,
    pub num_queries: usize,
    pub num_database: usize,
    pub map_at_k: f64,
    pub overlap: f64,
    pub ambiguity: Ambiguity,
    pub sampling: AmbiguitySampling,
    pub histograms: DistanceHistograms,
}

pub fn evaluate(
    queries: &CodeSet,
    database: &CodeSet,
    metric: Metric,
    k: TopK,
    sampling: AmbiguitySampling,
) -> Result<RetrievalReport> {
    let map = map_at_k(queries, database, k, metric)?;
    let histograms = distance_histograms(queries, database, metric)?;
    let ambiguity = ambiguity_rate(queries, database, metric, sampling)?;
    Ok(RetrievalReport {
        metric,
        k,
        code_length: database.length(),
        num_queries: queries.len(),
        num_database: database.len(),
        map_at_k: map,
        overlap: overlap_area(&histograms),
        ambiguity,
        sampling,
        histograms,
    })
}

impl RetrievalReport {
    /// `key: value` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "metric: {}", self.metric);
        let _ = writeln!(s, "code_length: {}", self.code_length);
        let _ = writeln!(s, "queries: {}", self.num_queries);
        let _ = writeln!(s, "database: {}", self.num_database);
        let _ = writeln!(s, "k: {}", self.k);
        let _ = writeln!(s, "map_at_k: {:.6}", self.map_at_k);
        let _ = writeln!(s, "overlap: {:.6}", self.overlap);
        let _ = writeln!(s, "ambiguity_rate: {:.6}", self.ambiguity.rate);
        let _ = writeln!(s, "ambiguity_triples: {}", self.ambiguity.triples);
        match self.sampling {
            AmbiguitySampling::Sampled { seed, .. } => {
                let _ = writeln!(s, "ambiguity_mode: sampled");
                let _ = writeln!(s, "seed: {seed}");
            }
            AmbiguitySampling::Exhaustive => {
                let _ = writeln!(s, "ambiguity_mode: exhaustive");
            }
        }
        let _ = writeln!(s, "skipped_queries: {}", self.ambiguity.skipped_queries);
        let _ = writeln!(s, "positive_pairs: {}", self.histograms.pos_pairs);
        let _ = writeln!(s, "negative_pairs: {}", self.histograms.neg_pairs);
        s
    }
}
