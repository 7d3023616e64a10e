//! Exact counts and exhaustive generation for small sizes.
//!
//! The closed formulas are evaluated in arbitrary precision. Exhaustive
//! generation runs every blossom tree through closure with both rootings and
//! deduplicates by canonical code; it is the reference against which the
//! sampler and the loop statistics are checked.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::{canonical_code, check_size, QuadMap};
use crate::sampler::{closure, BlossomTree, CompleteBinaryTree};
use crate::strands::count_loops;

/// Default bound on `p` for exhaustive generation.
pub const DEFAULT_MAX_P: usize = 5;
/// Exhaustive generation is refused above this size whatever the setting.
pub const HARD_MAX_P: usize = 7;

fn binomial(n: u64, k: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn catalan(p: usize) -> BigUint {
    binomial(2 * p as u64, p as u64) / (p as u64 + 1)
}

/// Rooted 4-regular planar maps with `p` vertices:
/// `2 · 3^p · (2p)! / (p! (p+2)!)`.
pub fn count_quartic_maps(p: usize) -> Result<BigUint> {
    check_size(p)?;
    let p64 = p as u64;
    let num = BigUint::from(2u32) * BigUint::from(3u32).pow(p as u32) * binomial(2 * p64, p64);
    Ok(num / ((p64 + 1) * (p64 + 2)))
}

/// Blossom trees with `p` inner vertices: `3^p · Catalan(p)`.
pub fn count_blossom_trees(p: usize) -> Result<BigUint> {
    check_size(p)?;
    Ok(BigUint::from(3u32).pow(p as u32) * catalan(p))
}

/// `ln(C(2p, p) / 4^p)`.
fn ln_central_binomial_over_4p(p: usize) -> f64 {
    if p <= 4096 {
        (1..=p).map(|i| (-0.5 / i as f64).ln_1p()).sum()
    } else {
        let x = p as f64;
        -0.5 * (std::f64::consts::PI * x).ln() - 1.0 / (8.0 * x) + 1.0 / (192.0 * x.powi(3))
            - 1.0 / (640.0 * x.powi(5))
    }
}

/// Exact count divided by its leading asymptotic form
/// `(2/√π) · 12^p · p^(-5/2)`, evaluated in log space.
pub fn asymptotic_ratio(p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::Size("p must be at least 1".into()));
    }
    let x = p as f64;
    let ln = ln_central_binomial_over_4p(p) + 0.5 * std::f64::consts::PI.ln() + 2.5 * x.ln()
        - (x + 1.0).ln()
        - (x + 2.0).ln();
    Ok(ln.exp())
}

/// Every complete binary tree with `p` inner vertices, in lexicographic
/// order of preorder words (inner before leaf).
pub fn all_binary_trees(p: usize) -> Vec<CompleteBinaryTree> {
    fn grow(word: &mut Vec<bool>, inner_left: usize, height: usize, out: &mut Vec<Vec<bool>>) {
        if height == 0 {
            if inner_left == 0 {
                out.push(word.clone());
            }
            return;
        }
        if inner_left > 0 {
            word.push(true);
            grow(word, inner_left - 1, height + 1, out);
            word.pop();
        }
        word.push(false);
        grow(word, inner_left, height - 1, out);
        word.pop();
    }
    if p == 0 {
        return Vec::new();
    }
    let mut words = Vec::new();
    grow(&mut Vec::with_capacity(2 * p + 1), p, 1, &mut words);
    words
        .into_iter()
        .map(|w| CompleteBinaryTree::from_word(w).expect("generated word is admissible"))
        .collect()
}

/// All `3^n` bud placements, as base-3 digit vectors.
fn all_buddings(n: usize) -> impl Iterator<Item = Vec<u8>> {
    let total = 3usize.pow(n as u32);
    (0..total).map(move |mut code| {
        (0..n)
            .map(|_| {
                let digit = (code % 3) as u8;
                code /= 3;
                digit
            })
            .collect()
    })
}

/// Result of exhaustive generation at one size.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub p: usize,
    /// Distinct rooted maps, sorted by canonical code.
    pub maps: Vec<QuadMap>,
    pub codes: Vec<Vec<u8>>,
    /// How many (blossom tree, rooting) pairs produced each map.
    pub multiplicities: Vec<u64>,
    /// Total (blossom tree, rooting) pairs processed.
    pub raw: u64,
}

impl Enumeration {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

fn check_enumerable(p: usize, max_p: usize) -> Result<()> {
    check_size(p)?;
    let limit = max_p.min(HARD_MAX_P);
    if p > limit {
        return Err(Error::Capacity(format!(
            "exhaustive generation limited to p <= {limit}, asked for {p}"
        )));
    }
    Ok(())
}

/// Closes every blossom tree with `p` inner vertices under both rootings
/// and groups the results by rooted-map isomorphism class.
pub fn enumerate_maps_brute(p: usize) -> Result<Enumeration> {
    enumerate_maps_brute_with_limit(p, DEFAULT_MAX_P)
}

pub fn enumerate_maps_brute_with_limit(p: usize, max_p: usize) -> Result<Enumeration> {
    check_enumerable(p, max_p)?;
    type Classes = BTreeMap<Vec<u8>, (u64, QuadMap)>;
    let per_shape: Vec<Result<(Classes, u64)>> = all_binary_trees(p)
        .into_par_iter()
        .map(|tree| {
            let mut classes = Classes::new();
            let mut raw = 0u64;
            for buds in all_buddings(p) {
                let partial = closure(&BlossomTree::new(tree.clone(), buds)?)?;
                for swap in [false, true] {
                    let map = partial.clone().rooted(swap)?;
                    raw += 1;
                    classes
                        .entry(canonical_code(&map))
                        .or_insert_with(|| (0, map))
                        .0 += 1;
                }
            }
            Ok((classes, raw))
        })
        .collect();

    let mut merged = Classes::new();
    let mut raw = 0;
    for item in per_shape {
        let (classes, r) = item?;
        raw += r;
        for (code, (count, map)) in classes {
            merged.entry(code).or_insert((0, map)).0 += count;
        }
    }
    let mut maps = Vec::with_capacity(merged.len());
    let mut codes = Vec::with_capacity(merged.len());
    let mut multiplicities = Vec::with_capacity(merged.len());
    for (code, (count, map)) in merged {
        codes.push(code);
        maps.push(map);
        multiplicities.push(count);
    }
    Ok(Enumeration {
        p,
        maps,
        codes,
        multiplicities,
        raw,
    })
}

/// `a_{k,p}`: number of rooted maps with `p` vertices and `k` loops,
/// indexed by `k`.
pub fn loop_distribution(p: usize) -> Result<Vec<u64>> {
    let e = enumerate_maps_brute_with_limit(p, HARD_MAX_P)?;
    let mut dist = vec![0u64; p + 1];
    for m in &e.maps {
        dist[count_loops(m)] += 1;
    }
    Ok(dist)
}

fn mean_of(dist: &[u64]) -> BigRational {
    let total: u64 = dist.iter().sum();
    let weighted: u64 = dist.iter().enumerate().map(|(k, &c)| k as u64 * c).sum();
    BigRational::new(BigInt::from(weighted), BigInt::from(total))
}

/// Exact average number of loops over all rooted maps with `p` vertices.
pub fn exact_mean_loops(p: usize) -> Result<BigRational> {
    exact_mean_loops_with_limit(p, DEFAULT_MAX_P)
}

pub fn exact_mean_loops_with_limit(p: usize, max_p: usize) -> Result<BigRational> {
    check_enumerable(p, max_p)?;
    Ok(mean_of(&loop_distribution(p)?))
}

/// Rounds a rational to `digits` decimals, half away from zero.
pub fn round_decimal(x: &BigRational, digits: u32) -> f64 {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = x * BigRational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    rounded.to_f64().unwrap_or(f64::NAN) / scale.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactCount {
    pub p: usize,
    pub maps: BigUint,
    pub blossom_trees: BigUint,
    pub mean_k: Option<BigRational>,
    /// `a_{k,p}` for `k = 0..=p`, when computed.
    pub loop_distribution: Option<Vec<u64>>,
}

/// Closed-form counts, plus the loop statistics when `p <= max_p`.
pub fn exact_count(p: usize, max_p: usize) -> Result<ExactCount> {
    let maps = count_quartic_maps(p)?;
    let blossom_trees = count_blossom_trees(p)?;
    let dist = if p <= max_p.min(HARD_MAX_P) {
        Some(loop_distribution(p)?)
    } else {
        None
    };
    Ok(ExactCount {
        p,
        maps,
        blossom_trees,
        mean_k: dist.as_deref().map(mean_of),
        loop_distribution: dist,
    })
}

impl ExactCount {
    /// `maps · (p + 2) == blossom_trees · 2`.
    pub fn satisfies_closure_identity(&self) -> bool {
        &self.maps * BigUint::from(self.p + 2) == &self.blossom_trees * BigUint::from(2u32)
    }
}
