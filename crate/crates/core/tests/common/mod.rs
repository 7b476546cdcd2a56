//! Reference implementations shared by the integration tests. Nothing here
//! calls into the code paths it is used to check.

#![allow(dead_code)]

use rand::Rng;
use ternhash::trit::{Logic, Trit};

/// Row/column order: +1, 0, -1.
pub const ORDER: [i8; 3] = [1, 0, -1];

/// `a ↔ b`, Łukasiewicz.
pub const LUKA_EQ: [[i8; 3]; 3] = [[1, 0, -1], [0, 1, 0], [-1, 0, 1]];
/// `a ↔ b`, Kleene (Bochvar shares it).
pub const KLEENE_EQ: [[i8; 3]; 3] = [[1, 0, -1], [0, 0, 0], [-1, 0, 1]];
/// `¬a`.
pub const NOT: [i8; 3] = [-1, 0, 1];

/// Distances in half units.
pub const LUKA_THD2: [[u64; 3]; 3] = [[0, 1, 2], [1, 0, 1], [2, 1, 0]];
pub const KLEENE_THD2: [[u64; 3]; 3] = [[0, 1, 2], [1, 1, 1], [2, 1, 0]];

pub fn idx(t: Trit) -> usize {
    ORDER.iter().position(|&v| v == t.value()).unwrap()
}

pub fn eq_table(logic: Logic) -> &'static [[i8; 3]; 3] {
    match logic {
        Logic::Lukasiewicz => &LUKA_EQ,
        Logic::Kleene | Logic::Bochvar => &KLEENE_EQ,
    }
}

pub fn thd2_table(logic: Logic) -> &'static [[u64; 3]; 3] {
    match logic {
        Logic::Lukasiewicz => &LUKA_THD2,
        Logic::Kleene | Logic::Bochvar => &KLEENE_THD2,
    }
}

/// Sum of table lookups, in half units.
pub fn table_distance2(a: &[Trit], b: &[Trit], logic: Logic) -> u64 {
    let t = thd2_table(logic);
    a.iter().zip(b).map(|(&x, &y)| t[idx(x)][idx(y)]).sum()
}

pub fn random_trits(rng: &mut impl Rng, len: usize) -> Vec<Trit> {
    (0..len).map(|_| Trit::ALL[rng.random_range(0..3)]).collect()
}

pub fn random_signs(rng: &mut impl Rng, len: usize) -> Vec<Trit> {
    (0..len)
        .map(|_| if rng.random::<bool>() { Trit::Pos } else { Trit::Neg })
        .collect()
}

/// Expected distance written straight from the two-set formulas, with the
/// left mass playing TRUE.
pub fn naive_expected(a: (f64, f64, f64), b: (f64, f64, f64), kleene: bool) -> f64 {
    let (at, au, af) = a;
    let (bt, bu, bf) = b;
    if kleene {
        1.0 * (at * bf + af * bt) + 0.5 * au * bu + 0.5 * (au * (bt + bf) + bu * (at + af))
    } else {
        1.0 * (at * bf + af * bt) + 0.5 * (au * (bt + bf) + bu * (at + af))
    }
}

/// Brute-force double-threshold search. Counts samples directly for every
/// candidate `(i, j)`, `0 <= i < j <= bins`, and keeps the first strict
/// maximum. Returns `(i, j, objective)`.
pub fn naive_search(
    outputs: &[f64],
    labels: &[u32],
    classes: usize,
    bins: usize,
    kleene: bool,
) -> (usize, usize, f64) {
    let min = outputs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let edges: Vec<f64> = (0..=bins)
        .map(|k| {
            if k == bins {
                max
            } else {
                min + (max - min) * (k as f64 / bins as f64)
            }
        })
        .collect();
    let bin_of = |v: f64| -> usize {
        let mut b = 0;
        for k in 1..bins {
            if edges[k] <= v {
                b = k;
            }
        }
        b
    };
    let sample_bins: Vec<usize> = outputs.iter().map(|&v| bin_of(v)).collect();

    let mut best = (0, 0, f64::NEG_INFINITY);
    for i in 0..bins {
        for j in i + 1..=bins {
            let mut masses = Vec::new();
            for c in 0..classes as u32 {
                let (mut left, mut mid, mut right, mut total) = (0u64, 0u64, 0u64, 0u64);
                for (&b, &l) in sample_bins.iter().zip(labels) {
                    if l != c {
                        continue;
                    }
                    total += 1;
                    if b < i {
                        left += 1;
                    } else if b <= j {
                        mid += 1;
                    } else {
                        right += 1;
                    }
                }
                if total > 0 {
                    let n = total as f64;
                    masses.push((left as f64 / n, mid as f64 / n, right as f64 / n));
                }
            }
            let mut objective = 0.0;
            for (x, &a) in masses.iter().enumerate() {
                for (y, &b) in masses.iter().enumerate() {
                    let e = naive_expected(a, b, kleene);
                    if x == y {
                        objective -= e;
                    } else {
                        objective += e;
                    }
                }
            }
            if objective > best.2 {
                best = (i, j, objective);
            }
        }
    }
    best
}

/// AP@k by definition, for a ranking given as database indices.
pub fn naive_ap(ranking: &[usize], relevant: &dyn Fn(usize) -> bool, k: usize) -> f64 {
    let total = ranking.iter().filter(|&&d| relevant(d)).count();
    if total == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for cut in 1..=k.min(ranking.len()) {
        if relevant(ranking[cut - 1]) {
            let hits = ranking[..cut].iter().filter(|&&d| relevant(d)).count();
            sum += hits as f64 / cut as f64;
        }
    }
    sum / total.min(k) as f64
}
