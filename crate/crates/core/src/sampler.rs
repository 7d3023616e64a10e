//! Exact uniform sampling of rooted quartic maps through blossom trees.
//!
//! The pipeline has four stages:
//!
//! 1. a uniform complete binary tree with `p` inner vertices, drawn as a
//!    random arrangement of `p` inner and `p + 1` leaf symbols rotated into
//!    a valid preorder word by the cycle lemma;
//! 2. one bud per inner vertex, in one of its three free corners;
//! 3. closure: buds are matched to leaves with a stack while walking
//!    counterclockwise around the tree, twice around so that the cyclic
//!    matching is completed; two leaves stay free;
//! 4. one of the two free leaves becomes the in-leg, the other the out-leg.
//!
//! Each rooted map is the image of exactly `p + 2` (tree, rooting) pairs out
//! of `2 · 3^p · Catalan(p)`, so the output is uniform. All stages are linear
//! in `p`.
//!
//! Darts follow the standard layout: inner vertex `v` (numbered in preorder)
//! owns darts `4v..4v+4` counterclockwise, dart `4v` pointing to its parent.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::map::{check_size, QuadMap, LEG};

const BUD: u32 = u32::MAX - 1;
const LEAF: u32 = u32::MAX - 2;

/// Planted complete binary tree, stored as its preorder word
/// (`true` for an inner vertex, `false` for a leaf).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CompleteBinaryTree {
    word: Vec<bool>,
}

impl CompleteBinaryTree {
    /// Accepts a preorder word if it describes a tree with at least one
    /// inner vertex.
    pub fn from_word(word: Vec<bool>) -> Result<Self> {
        let mut height: i64 = 1;
        for (i, &inner) in word.iter().enumerate() {
            if height == 0 {
                return Err(Error::Structure(format!(
                    "preorder word closes early at {i}"
                )));
            }
            height += if inner { 1 } else { -1 };
        }
        if height != 0 {
            return Err(Error::Structure("preorder word is incomplete".into()));
        }
        let tree = CompleteBinaryTree { word };
        check_size(tree.inner_count())?;
        Ok(tree)
    }

    pub fn word(&self) -> &[bool] {
        &self.word
    }

    pub fn inner_count(&self) -> usize {
        self.word.len() / 2
    }

    /// Leaves of the binary tree, not counting the planted root edge.
    pub fn leaf_count(&self) -> usize {
        self.word.len() - self.inner_count()
    }
}

/// Fills `word` with a uniform preorder word of a binary tree with `p`
/// inner vertices.
fn sample_word_into<R: Rng + ?Sized>(word: &mut Vec<bool>, p: usize, rng: &mut R) {
    word.clear();
    word.resize(p, true);
    word.resize(2 * p + 1, false);
    word.shuffle(rng);

    // Cycle lemma: the rotation starting right after the first minimum of
    // the prefix sums is the unique admissible one.
    let mut height = 0i64;
    let mut lowest = i64::MAX;
    let mut cut = 0;
    for (i, &inner) in word.iter().enumerate() {
        height += if inner { 1 } else { -1 };
        if height < lowest {
            lowest = height;
            cut = i + 1;
        }
    }
    let len = word.len();
    word.rotate_left(cut % len);
}

/// Uniform complete binary tree with `p` inner vertices.
pub fn sample_binary_tree<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<CompleteBinaryTree> {
    check_size(p)?;
    let mut word = Vec::with_capacity(2 * p + 1);
    sample_word_into(&mut word, p, rng);
    Ok(CompleteBinaryTree { word })
}

/// Blossom tree: a complete binary tree where inner vertex `v` (preorder)
/// carries a bud in corner `buds[v]`, counting counterclockwise from the
/// parent edge among the three non-parent positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlossomTree {
    tree: CompleteBinaryTree,
    buds: Vec<u8>,
}

impl BlossomTree {
    pub fn new(tree: CompleteBinaryTree, buds: Vec<u8>) -> Result<Self> {
        if buds.len() != tree.inner_count() {
            return Err(Error::Structure(format!(
                "{} buds for {} inner vertices",
                buds.len(),
                tree.inner_count()
            )));
        }
        if let Some(b) = buds.iter().find(|&&b| b > 2) {
            return Err(Error::Structure(format!("bud position {b} not in 0..3")));
        }
        Ok(BlossomTree { tree, buds })
    }

    pub fn tree(&self) -> &CompleteBinaryTree {
        &self.tree
    }

    pub fn buds(&self) -> &[u8] {
        &self.buds
    }

    pub fn inner_count(&self) -> usize {
        self.tree.inner_count()
    }

    pub fn bud_count(&self) -> usize {
        self.buds.len()
    }

    /// Leaves including the root leaf.
    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count() + 1
    }
}

fn sample_buds_into<R: Rng + ?Sized>(buds: &mut Vec<u8>, p: usize, rng: &mut R) {
    buds.clear();
    buds.extend((0..p).map(|_| rng.random_range(0..3u8)));
}

/// Puts one bud on every inner vertex, uniformly and independently.
pub fn attach_buds<R: Rng + ?Sized>(tree: CompleteBinaryTree, rng: &mut R) -> BlossomTree {
    let mut buds = Vec::with_capacity(tree.inner_count());
    sample_buds_into(&mut buds, tree.inner_count(), rng);
    BlossomTree { tree, buds }
}

/// Closed blossom tree: a connected quartic map whose only unpaired darts
/// are two free leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialMap {
    opposite: Vec<u32>,
    free_leaves: Vec<u32>,
}

impl PartialMap {
    pub fn size(&self) -> usize {
        self.opposite.len() / 4
    }

    pub fn free_leaves(&self) -> Vec<usize> {
        self.free_leaves.iter().map(|&d| d as usize).collect()
    }

    /// Roots on the free leaves: the first becomes the in-leg unless `swap`.
    pub fn rooted(self, swap: bool) -> Result<QuadMap> {
        let [a, b] = <[u32; 2]>::try_from(self.free_leaves.as_slice()).map_err(|_| {
            Error::Structure(format!(
                "{} free leaves, expected 2",
                self.free_leaves.len()
            ))
        })?;
        let (i, o) = if swap { (b, a) } else { (a, b) };
        Ok(QuadMap::from_standard_layout(self.opposite, i, o))
    }
}

#[derive(Default, Debug)]
struct ClosureScratch {
    slots: Vec<u32>,
    buds: Vec<u32>,
    unmatched: Vec<u32>,
}

#[inline]
fn link(opposite: &mut [u32], a: u32, b: u32) {
    opposite[a as usize] = b;
    opposite[b as usize] = a;
}

/// Builds the darts of the blossom tree and closes it in one streaming pass.
///
/// Dangling darts are produced in counterclockwise contour order starting at
/// the root leaf; buds wait on a stack, a leaf takes the most recent waiting
/// bud. Leaves that find the stack empty are revisited on the second turn
/// around the contour. Returns the two leaves that stay free.
fn close_into(
    word: &[bool],
    bud_corners: &[u8],
    opposite: &mut Vec<u32>,
    scratch: &mut ClosureScratch,
) -> Result<[u32; 2]> {
    let p = bud_corners.len();
    opposite.clear();
    opposite.resize(4 * p, LEAF);
    let ClosureScratch {
        slots,
        buds,
        unmatched,
    } = scratch;
    slots.clear();
    buds.clear();
    unmatched.clear();

    let mut on_leaf = |opposite: &mut Vec<u32>, leaf: u32, buds: &mut Vec<u32>| match buds.pop() {
        Some(bud) => link(opposite, bud, leaf),
        None => unmatched.push(leaf),
    };

    let mut next_vertex = 0u32;
    for &inner in word {
        // Slot this symbol hangs from; buds met on the way join the stack.
        let parent_slot = loop {
            match slots.pop() {
                Some(s) if opposite[s as usize] == BUD => buds.push(s),
                other => break other,
            }
        };
        if inner {
            let v = next_vertex;
            if v as usize >= p {
                return Err(Error::Structure("more inner vertices than buds".into()));
            }
            next_vertex += 1;
            let base = 4 * v;
            match parent_slot {
                Some(s) => link(opposite, s, base),
                None => on_leaf(opposite, base, buds),
            }
            opposite[(base + 1 + bud_corners[v as usize] as u32) as usize] = BUD;
            slots.extend_from_slice(&[base + 3, base + 2, base + 1]);
        } else {
            match parent_slot {
                Some(s) => on_leaf(opposite, s, buds),
                None => return Err(Error::Structure("tree has no inner vertex".into())),
            }
        }
    }
    if next_vertex as usize != p {
        return Err(Error::Structure(format!(
            "{next_vertex} inner vertices for {p} buds"
        )));
    }
    while let Some(s) = slots.pop() {
        if opposite[s as usize] != BUD {
            return Err(Error::Structure("preorder word is incomplete".into()));
        }
        buds.push(s);
    }

    // Second turn: waiting buds take the leaves skipped at the start.
    let mut skipped = unmatched.iter();
    while let Some(bud) = buds.pop() {
        let leaf = *skipped
            .next()
            .ok_or_else(|| Error::Structure("more buds than leaves".into()))?;
        link(opposite, bud, leaf);
    }
    let free: Vec<u32> = skipped.copied().collect();
    match free.as_slice() {
        &[a, b] => {
            opposite[a as usize] = LEG;
            opposite[b as usize] = LEG;
            Ok([a, b])
        }
        _ => Err(Error::Structure(format!(
            "closure left {} free leaves, expected 2",
            free.len()
        ))),
    }
}

/// Closure of a blossom tree.
pub fn closure(bt: &BlossomTree) -> Result<PartialMap> {
    let mut opposite = Vec::new();
    let mut scratch = ClosureScratch::default();
    let free = close_into(bt.tree.word(), &bt.buds, &mut opposite, &mut scratch)?;
    Ok(PartialMap {
        opposite,
        free_leaves: free.to_vec(),
    })
}

/// Picks which free leaf is the in-leg with a fair coin.
pub fn choose_root<R: Rng + ?Sized>(partial: PartialMap, rng: &mut R) -> Result<QuadMap> {
    let swap = rng.random::<bool>();
    partial.rooted(swap)
}

/// Uniform rooted quartic map with `p` vertices.
pub fn sample_map<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<QuadMap> {
    let mut sampler = Sampler::new();
    sampler.sample(p, rng)?;
    Ok(sampler.into_map())
}

/// Reusable sampler that keeps its buffers between draws.
#[derive(Debug)]
pub struct Sampler {
    word: Vec<bool>,
    buds: Vec<u8>,
    scratch: ClosureScratch,
    map: QuadMap,
}

impl Default for Sampler {
    fn default() -> Self {
        Self::new()
    }
}

impl Sampler {
    pub fn new() -> Self {
        Sampler {
            word: Vec::new(),
            buds: Vec::new(),
            scratch: ClosureScratch::default(),
            map: QuadMap::from_standard_layout(Vec::new(), 0, 0),
        }
    }

    /// Draws a map into the internal buffer. Consumes the random stream in
    /// the same order as the four stand-alone stages.
    pub fn sample<R: Rng + ?Sized>(&mut self, p: usize, rng: &mut R) -> Result<&QuadMap> {
        check_size(p)?;
        sample_word_into(&mut self.word, p, rng);
        sample_buds_into(&mut self.buds, p, rng);
        let mut opposite = self.map.take_opposite();
        let [a, b] = close_into(&self.word, &self.buds, &mut opposite, &mut self.scratch)?;
        let (i, o) = if rng.random::<bool>() { (b, a) } else { (a, b) };
        self.map.refill_standard_layout(opposite, i, o);
        Ok(&self.map)
    }

    pub fn into_map(self) -> QuadMap {
        self.map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{face_count, validate};
    use crate::rng::rng_from_seed;

    #[test]
    fn zero_size_rejected() {
        let mut rng = rng_from_seed(1);
        assert!(matches!(
            sample_binary_tree(0, &mut rng),
            Err(Error::Size(_))
        ));
        assert!(matches!(sample_map(0, &mut rng), Err(Error::Size(_))));
    }

    #[test]
    fn words_are_admissible() {
        let mut rng = rng_from_seed(2);
        for p in 1..50 {
            let t = sample_binary_tree(p, &mut rng).unwrap();
            assert_eq!(t.inner_count(), p);
            assert_eq!(t.leaf_count(), p + 1);
            CompleteBinaryTree::from_word(t.word().to_vec()).unwrap();
        }
    }

    #[test]
    fn single_vertex_tree() {
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let t = sample_binary_tree(1, &mut rng).unwrap();
            assert_eq!(t.word(), &[true, false, false]);
        }
    }

    #[test]
    fn bad_words_rejected() {
        assert!(CompleteBinaryTree::from_word(vec![false]).is_err());
        assert!(CompleteBinaryTree::from_word(vec![true, false]).is_err());
        assert!(CompleteBinaryTree::from_word(vec![true, false, false, false]).is_err());
    }

    #[test]
    fn blossom_counts() {
        let mut rng = rng_from_seed(4);
        let bt = attach_buds(sample_binary_tree(37, &mut rng).unwrap(), &mut rng);
        assert_eq!(bt.bud_count(), 37);
        assert_eq!(bt.leaf_count(), 39);
        let bad = BlossomTree::new(bt.tree().clone(), vec![0; 36]);
        assert!(matches!(bad, Err(Error::Structure(_))));
    }

    #[test]
    fn single_vertex_closures() {
        let tree = CompleteBinaryTree::from_word(vec![true, false, false]).unwrap();
        for b in 0..3 {
            let bt = BlossomTree::new(tree.clone(), vec![b]).unwrap();
            let partial = closure(&bt).unwrap();
            assert_eq!(partial.free_leaves().len(), 2);
            for swap in [false, true] {
                let m = partial.clone().rooted(swap).unwrap();
                assert!(validate(&m).unwrap().ok);
                assert_eq!(face_count(&m), 3);
            }
        }
    }

    #[test]
    fn rooting_is_relabeling_only() {
        let mut rng = rng_from_seed(5);
        let bt = attach_buds(sample_binary_tree(12, &mut rng).unwrap(), &mut rng);
        let partial = closure(&bt).unwrap();
        let a = partial.clone().rooted(false).unwrap();
        let b = partial.rooted(true).unwrap();
        assert_eq!(a.size(), b.size());
        assert_eq!(a.dart_count(), b.dart_count());
        assert_eq!(face_count(&a), face_count(&b));
        assert_eq!(a.with_swapped_legs(), b);
    }

    #[test]
    fn root_coin_is_fair() {
        let tree = CompleteBinaryTree::from_word(vec![true, false, false]).unwrap();
        let partial = closure(&BlossomTree::new(tree, vec![1]).unwrap()).unwrap();
        let first = partial.free_leaves()[0];
        let mut rng = rng_from_seed(6);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| choose_root(partial.clone(), &mut rng).unwrap().in_leg() == first)
            .count();
        // 5 sigma band around n/2.
        assert!((hits as f64 - n as f64 / 2.0).abs() < 5.0 * (n as f64 / 4.0).sqrt());
    }

    #[test]
    fn staged_and_fused_paths_agree() {
        for seed in 0..20 {
            let p = 1 + seed as usize * 7;
            let mut r1 = rng_from_seed(seed);
            let t = sample_binary_tree(p, &mut r1).unwrap();
            let bt = attach_buds(t, &mut r1);
            let staged = choose_root(closure(&bt).unwrap(), &mut r1).unwrap();
            let mut r2 = rng_from_seed(seed);
            let fused = sample_map(p, &mut r2).unwrap();
            assert_eq!(staged, fused);
        }
    }

    #[test]
    fn sampler_reuse_matches_fresh_draws() {
        let mut sampler = Sampler::new();
        let mut r1 = rng_from_seed(8);
        let mut r2 = rng_from_seed(8);
        for p in [5, 5, 9, 1, 9] {
            let reused = sampler.sample(p, &mut r1).unwrap().clone();
            assert_eq!(reused, sample_map(p, &mut r2).unwrap());
        }
    }

    #[test]
    fn sampled_maps_are_valid() {
        let mut rng = rng_from_seed(9);
        for p in (1..200).chain([1000, 5000]) {
            let m = sample_map(p, &mut rng).unwrap();
            let diag = validate(&m).unwrap();
            assert!(diag.ok, "p={p}: {:?}", diag.violations);
            assert_eq!(face_count(&m), p + 2);
        }
    }
}
