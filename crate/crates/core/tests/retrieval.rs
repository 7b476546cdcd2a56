mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ternhash::eval::{
    ambiguity_rate, average_precision, distance_histograms, distance_histograms_with, evaluate,
    map_at_k, map_at_k_with, overlap_area, poisson_binomial_pmf, rank, AmbiguitySampling, TopK,
};
use ternhash::io::CodeSet;
use ternhash::packed::{PackedBinaryCode, PackedTernaryCode};
use ternhash::trit::{Logic, Trit};
use ternhash::{Error, Metric};

fn random_set(rng: &mut ChaCha8Rng, n: usize, len: usize, classes: u32) -> (Vec<Vec<Trit>>, CodeSet) {
    let trits: Vec<Vec<Trit>> = (0..n).map(|_| random_trits(rng, len)).collect();
    let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let packed: Vec<_> = trits.iter().map(|t| PackedTernaryCode::pack(t)).collect();
    (trits.clone(), CodeSet::from_ternary(&packed, labels).unwrap())
}

fn naive_map(q: &[Vec<Trit>], ql: &[u32], d: &[Vec<Trit>], dl: &[u32], logic: Logic, k: usize) -> f64 {
    let mut total = 0.0;
    for (qi, code) in q.iter().enumerate() {
        let mut order: Vec<(u64, usize)> = d
            .iter()
            .enumerate()
            .map(|(di, dc)| (table_distance2(code, dc, logic), di))
            .collect();
        order.sort();
        let ranking: Vec<usize> = order.iter().map(|&(_, i)| i).collect();
        total += naive_ap(&ranking, &|i| dl[i] == ql[qi], k);
    }
    total / q.len() as f64
}

#[test]
fn map_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for round in 0..20 {
        let (qt, qs) = random_set(&mut rng, 15, 20 + round, 4);
        let (dt, ds) = random_set(&mut rng, 60, 20 + round, 4);
        for (metric, logic) in [(Metric::Kleene, Logic::Kleene), (Metric::Lukasiewicz, Logic::Lukasiewicz)] {
            for k in [1, 5, 17, 60] {
                let got = map_at_k(&qs, &ds, TopK::Top(k), metric).unwrap();
                let want = naive_map(&qt, qs.labels(), &dt, ds.labels(), logic, k);
                assert!((got - want).abs() < 1e-12, "round {round} k {k}: {got} vs {want}");
            }
            let all = map_at_k(&qs, &ds, TopK::All, metric).unwrap();
            assert_eq!(all, map_at_k(&qs, &ds, TopK::Top(60), metric).unwrap());
        }
    }
}

#[test]
fn toy_average_precision() {
    // Relevant at ranks 1, 3, 4: (1 + 2/3 + 3/4) / 3.
    let rel = [true, false, true, true, false];
    let ap = average_precision(&rel, TopK::All);
    assert!((ap - (1.0 + 2.0 / 3.0 + 0.75) / 3.0).abs() < 1e-15);
    // Cut at 2: only rank 1 counts, normaliser min(2, 3) = 2.
    assert_eq!(average_precision(&rel, TopK::Top(2)), 0.5);
    assert_eq!(average_precision(&[false; 4], TopK::All), 0.0);
}

#[test]
fn identical_codes_give_class_prior() {
    // All codes tie, so the ranking is database order and AP depends only on
    // where the relevant items sit. Interleaved labels give a closed form.
    let code = PackedTernaryCode::pack(&[Trit::Pos; 8]);
    let labels: Vec<u32> = (0..20).map(|i| i % 2).collect();
    let db = CodeSet::from_ternary(&vec![code.clone(); 20], labels).unwrap();
    let q = CodeSet::from_ternary(&[code], vec![0]).unwrap();
    let map = map_at_k(&q, &db, TopK::All, Metric::Kleene).unwrap();
    let want: f64 = (0..10).map(|h| (h + 1) as f64 / (2 * h + 1) as f64).sum::<f64>() / 10.0;
    assert!((map - want).abs() < 1e-12);
    // Roughly the prior of 0.5, as the ranking carries no information.
    assert!((map - 0.5).abs() < 0.25);
}

#[test]
fn database_permutation_invariance_without_ties() {
    // Codes with distinct distances to the single query.
    let query = vec![Trit::Pos; 12];
    let mut db_trits = Vec::new();
    for flips in 0..12 {
        let mut c = query.clone();
        c[..flips].iter_mut().for_each(|t| *t = Trit::Neg);
        db_trits.push(c);
    }
    let labels: Vec<u32> = (0..12).map(|i| (i % 3 == 0) as u32).collect();
    let build = |order: &[usize]| {
        let codes: Vec<_> = order.iter().map(|&i| PackedTernaryCode::pack(&db_trits[i])).collect();
        CodeSet::from_ternary(&codes, order.iter().map(|&i| labels[i]).collect()).unwrap()
    };
    let q = CodeSet::from_ternary(&[PackedTernaryCode::pack(&query)], vec![1]).unwrap();
    let forward: Vec<usize> = (0..12).collect();
    let shuffled = vec![5, 2, 11, 0, 7, 9, 1, 3, 10, 4, 8, 6];
    for metric in [Metric::Kleene, Metric::Lukasiewicz] {
        assert_eq!(
            map_at_k(&q, &build(&forward), TopK::Top(5), metric).unwrap(),
            map_at_k(&q, &build(&shuffled), TopK::Top(5), metric).unwrap()
        );
    }
}

#[test]
fn rank_breaks_ties_by_index() {
    assert_eq!(rank(&[3, 1, 3, 0, 1]), vec![3, 1, 4, 0, 2]);
}

#[test]
fn histograms_match_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (qt, qs) = random_set(&mut rng, 12, 37, 3);
    let (dt, ds) = random_set(&mut rng, 40, 37, 3);
    for (metric, logic) in [(Metric::Kleene, Logic::Kleene), (Metric::Lukasiewicz, Logic::Lukasiewicz)] {
        let h = distance_histograms(&qs, &ds, metric).unwrap();
        let mut pos = vec![0u64; 75];
        let mut neg = vec![0u64; 75];
        for (i, q) in qt.iter().enumerate() {
            for (j, d) in dt.iter().enumerate() {
                let dist = table_distance2(q, d, logic) as usize;
                if qs.labels()[i] == ds.labels()[j] {
                    pos[dist] += 1;
                } else {
                    neg[dist] += 1;
                }
            }
        }
        let (np, nn): (u64, u64) = (pos.iter().sum(), neg.iter().sum());
        assert_eq!((h.pos_pairs, h.neg_pairs), (np, nn));
        assert_eq!(h.max_halves, 74);
        for b in 0..75 {
            assert_eq!(h.pos[b], pos[b] as f64 / np as f64);
            assert_eq!(h.neg[b], neg[b] as f64 / nn as f64);
        }
        let ov = overlap_area(&h);
        assert!((0.0..=1.0 + 1e-12).contains(&ov));
        assert_eq!(ov, overlap_area(&h.swapped()));
    }
}

#[test]
fn ambiguity_exhaustive_matches_triple_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (qt, qs) = random_set(&mut rng, 10, 24, 3);
    let (dt, ds) = random_set(&mut rng, 30, 24, 3);
    for (metric, logic) in [(Metric::Kleene, Logic::Kleene), (Metric::Lukasiewicz, Logic::Lukasiewicz)] {
        let (mut amb, mut total) = (0u64, 0u64);
        for (i, q) in qt.iter().enumerate() {
            for (p, pc) in dt.iter().enumerate() {
                if ds.labels()[p] != qs.labels()[i] {
                    continue;
                }
                for (n, nc) in dt.iter().enumerate() {
                    if ds.labels()[n] == qs.labels()[i] {
                        continue;
                    }
                    total += 1;
                    if table_distance2(q, nc, logic) <= table_distance2(q, pc, logic) {
                        amb += 1;
                    }
                }
            }
        }
        let got = ambiguity_rate(&qs, &ds, metric, AmbiguitySampling::Exhaustive).unwrap();
        assert_eq!((got.ambiguous, got.triples), (amb, total));
        assert_eq!(got.rate, amb as f64 / total as f64);

        let sampled = ambiguity_rate(
            &qs,
            &ds,
            metric,
            AmbiguitySampling::Sampled { triples: 200_000, seed: 9 },
        )
        .unwrap();
        assert_eq!(sampled.triples, 200_000);
        assert!((sampled.rate - got.rate).abs() < 0.01, "{} vs {}", sampled.rate, got.rate);
    }
}

#[test]
fn separated_supports_have_no_ambiguity() {
    let a = PackedTernaryCode::pack(&[Trit::Pos; 16]);
    let b = PackedTernaryCode::pack(&[Trit::Neg; 16]);
    let db = CodeSet::from_ternary(&[a.clone(), a.clone(), b.clone(), b.clone()], vec![0, 0, 1, 1]).unwrap();
    let q = CodeSet::from_ternary(&[a, b], vec![0, 1]).unwrap();
    let r = evaluate(&q, &db, Metric::Kleene, TopK::All, AmbiguitySampling::Exhaustive).unwrap();
    assert_eq!(r.ambiguity.rate, 0.0);
    assert_eq!(r.overlap, 0.0);
    assert_eq!(r.map_at_k, 1.0);
    assert!(r.render().contains("ambiguity_rate: 0.000000"));
}

#[test]
fn binary_and_sign_ternary_agree() {
    // Sign-only ternary codes and the matching binary codes rank identically.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trits: Vec<Vec<Trit>> = (0..50).map(|_| random_signs(&mut rng, 40)).collect();
    let labels: Vec<u32> = (0..50).map(|_| rng.random_range(0..4)).collect();
    let ter = CodeSet::from_ternary(&trits.iter().map(|t| PackedTernaryCode::pack(t)).collect::<Vec<_>>(), labels.clone()).unwrap();
    let bin = CodeSet::from_binary(
        &trits
            .iter()
            .map(|t| PackedBinaryCode::from_bits(&t.iter().map(|&x| x == Trit::Pos).collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
        labels,
    )
    .unwrap();
    let b = map_at_k(&bin, &bin, TopK::Top(10), Metric::Binary).unwrap();
    assert_eq!(b, map_at_k(&ter, &ter, TopK::Top(10), Metric::Kleene).unwrap());
    assert_eq!(b, map_at_k(&ter, &ter, TopK::Top(10), Metric::Lukasiewicz).unwrap());
    assert_eq!(
        distance_histograms(&bin, &bin, Metric::Binary).unwrap(),
        distance_histograms(&ter, &ter, Metric::Kleene).unwrap()
    );
}

#[test]
fn multi_label_relevance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (_, qs) = random_set(&mut rng, 8, 16, 4);
    let (_, ds) = random_set(&mut rng, 30, 16, 4);
    // Label bitmasks: relevant when the masks intersect.
    let qm: Vec<u32> = (0..8).map(|_| rng.random_range(1..16)).collect();
    let dm: Vec<u32> = (0..30).map(|_| rng.random_range(1..16)).collect();
    let m = map_at_k_with(&qs, &ds, TopK::All, Metric::Kleene, |q, d| qm[q] & dm[d] != 0).unwrap();
    assert!((0.0..=1.0).contains(&m));
    let h = distance_histograms_with(&qs, &ds, Metric::Kleene, |q, d| qm[q] & dm[d] != 0).unwrap();
    let pairs = (0..8).flat_map(|q| (0..30).map(move |d| (q, d))).filter(|&(q, d)| qm[q] & dm[d] != 0).count();
    assert_eq!(h.pos_pairs, pairs as u64);
}

#[test]
fn mismatches_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (_, a) = random_set(&mut rng, 3, 10, 2);
    let (_, b) = random_set(&mut rng, 3, 11, 2);
    assert!(matches!(map_at_k(&a, &b, TopK::All, Metric::Kleene), Err(Error::Dimension { .. })));
    assert!(map_at_k(&a, &a, TopK::All, Metric::Binary).is_err());
    assert!("0".parse::<TopK>().is_err());
    assert_eq!("all".parse::<TopK>().unwrap(), TopK::All);
}

#[test]
fn poisson_binomial_matches_binomial() {
    let pmf = poisson_binomial_pmf(&[0.25; 10]).unwrap();
    let mut choose = 1.0;
    for k in 0..=10 {
        if k > 0 {
            choose = choose * (10 - k + 1) as f64 / k as f64;
        }
        let want = choose * 0.25f64.powi(k as i32) * 0.75f64.powi(10 - k as i32);
        assert!((pmf[k] - want).abs() < 1e-12);
    }
    assert_eq!(poisson_binomial_pmf(&[]).unwrap(), vec![1.0]);
    assert!(poisson_binomial_pmf(&[1.5]).is_err());
}
