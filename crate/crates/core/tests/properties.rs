use std::collections::HashMap;

use loopgas_core::enumeration::{all_binary_trees, enumerate_maps_brute, exact_mean_loops};
use loopgas_core::io::{read_maps, write_binary, write_text};
use loopgas_core::map::{canonical_code, face_count, validate};
use loopgas_core::rng::{derive_seed, rng_from_seed};
use loopgas_core::sampler::{sample_binary_tree, sample_map, Sampler};
use loopgas_core::stats::monte_carlo;
use loopgas_core::strands::{count_loops, decompose, gauss_code};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

fn critical(classes: usize) -> f64 {
    ChiSquared::new((classes - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999)
}

fn class_counts(p: usize, n: u64, seed: u64) -> Vec<u64> {
    let all = enumerate_maps_brute(p).unwrap();
    let index: HashMap<Vec<u8>, usize> = all
        .codes
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut counts = vec![0u64; all.len()];
    let mut sampler = Sampler::new();
    let mut rng = rng_from_seed(seed);
    for _ in 0..n {
        counts[index[&canonical_code(sampler.sample(p, &mut rng).unwrap())]] += 1;
    }
    counts
}

#[test]
fn rooted_maps_uniform_at_one_vertex() {
    let counts = class_counts(1, 200_000, 21);
    assert_eq!(counts.len(), 2);
    assert!(chi_square(&counts) < critical(2), "{counts:?}");
}

#[test]
fn rooted_maps_uniform_at_three_vertices() {
    let counts = class_counts(3, 540_000, 22);
    assert_eq!(counts.len(), 54);
    assert!(chi_square(&counts) < critical(54), "{counts:?}");
}

#[test]
fn tree_shapes_uniform_at_three_vertices() {
    let shapes: Vec<Vec<bool>> = all_binary_trees(3)
        .iter()
        .map(|t| t.word().to_vec())
        .collect();
    assert_eq!(shapes.len(), 5);
    let mut counts = vec![0u64; 5];
    let mut rng = rng_from_seed(23);
    for _ in 0..100_000 {
        let t = sample_binary_tree(3, &mut rng).unwrap();
        counts[shapes.iter().position(|s| s == t.word()).unwrap()] += 1;
    }
    assert!(chi_square(&counts) < critical(5), "{counts:?}");
}

#[test]
fn sampled_means_match_exact_means() {
    for p in 1..=5 {
        let exact = exact_mean_loops(p).unwrap().to_f64().unwrap();
        let e = monte_carlo(p, 400_000, derive_seed(24, p as u64)).unwrap();
        if exact == 0.0 {
            assert_eq!(e.mean, 0.0);
            continue;
        }
        assert!(
            (e.mean - exact).abs() <= 4.0 * e.stderr,
            "p={p}: {} vs {exact} (stderr {})",
            e.mean,
            e.stderr
        );
    }
}

#[test]
fn stderr_matches_spread_of_repeated_means() {
    let reps: Vec<f64> = (0..100)
        .map(|r| monte_carlo(16, 2_000, derive_seed(25, r)).unwrap().mean)
        .collect();
    let m = reps.iter().sum::<f64>() / reps.len() as f64;
    let sd = (reps.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps.len() - 1) as f64).sqrt();
    let reported = monte_carlo(16, 2_000, 26).unwrap().stderr;
    let ratio = sd / reported;
    assert!(
        (1.0 / 1.5..=1.5).contains(&ratio),
        "spread {sd} vs stderr {reported}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_maps_satisfy_invariants(p in 1usize..400, seed in any::<u64>()) {
        let m = sample_map(p, &mut rng_from_seed(seed)).unwrap();
        let diag = validate(&m).unwrap();
        prop_assert!(diag.ok, "{:?}", diag.violations);
        prop_assert_eq!(face_count(&m), p + 2);
        let s = decompose(&m);
        prop_assert!(s.k <= p);
        prop_assert_eq!(s.k, count_loops(&m));
        let covered = s.open_curve.len() + s.loops.iter().map(Vec::len).sum::<usize>();
        prop_assert_eq!(covered, 4 * p);
        let mut seen = vec![0u32; p + 1];
        for w in gauss_code(&m) {
            for x in w {
                seen[x] += 1;
            }
        }
        prop_assert!(seen[1..].iter().all(|&c| c == 2));
    }

    #[test]
    fn canonical_code_ignores_labels(p in 1usize..120, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let m = sample_map(p, &mut rng).unwrap();
        let mut vperm: Vec<usize> = (0..p).collect();
        vperm.shuffle(&mut rng);
        // Permute vertices, and rotate dart slots within each vertex.
        let shifts: Vec<usize> = (0..p).map(|_| rand::Rng::random_range(&mut rng, 0..4)).collect();
        let perm: Vec<usize> = (0..4 * p)
            .map(|d| 4 * vperm[d / 4] + (d % 4 + shifts[d / 4]) % 4)
            .collect();
        let r = m.relabeled(&perm, &vperm).unwrap();
        prop_assert!(validate(&r).unwrap().ok);
        prop_assert_eq!(canonical_code(&r), canonical_code(&m));
        prop_assert_eq!(count_loops(&r), count_loops(&m));
        prop_assert_eq!(gauss_code(&r), gauss_code(&m));
    }

    #[test]
    fn serialization_round_trips(p in 1usize..200, seed in any::<u64>(), binary in any::<bool>()) {
        let m = sample_map(p, &mut rng_from_seed(seed)).unwrap();
        let mut buf = Vec::new();
        if binary { write_binary(&mut buf, &m).unwrap() } else { write_text(&mut buf, &m).unwrap() }
        let back = read_maps(&buf[..]).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(canonical_code(&back[0]), canonical_code(&m));
    }

    #[test]
    fn swapping_legs_keeps_loops(p in 1usize..200, seed in any::<u64>()) {
        let m = sample_map(p, &mut rng_from_seed(seed)).unwrap();
        let s = m.with_swapped_legs();
        prop_assert!(validate(&s).unwrap().ok);
        prop_assert_eq!(count_loops(&s), count_loops(&m));
    }
}
