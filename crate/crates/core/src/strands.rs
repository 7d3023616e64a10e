//! Curves traced through a quartic map.
//!
//! At a crossing a curve goes straight on: arriving by dart `a`, it leaves by
//! `next(next(a))`. The strand through the legs is the open curve; every
//! other strand is a closed loop. Strands are recorded as dart sequences
//! alternating arrival and departure darts, so each dart lies on exactly one
//! strand.

use std::fmt::Write as _;

use crate::map::{canonical_labels, QuadMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrandDecomposition {
    /// Number of closed loops.
    pub k: usize,
    /// From the in-leg to the out-leg.
    pub open_curve: Vec<usize>,
    pub loops: Vec<Vec<usize>>,
}

#[inline]
fn straight(map: &QuadMap, arrival: usize) -> usize {
    map.next(map.next(arrival))
}

/// Departure dart following `d` on its strand, or `None` when `d` is a leg
/// (end of the open curve).
#[inline]
pub fn strand_successor(map: &QuadMap, d: usize) -> Option<usize> {
    map.opposite(d).map(|a| straight(map, a))
}

/// Number of closed loops. Linear time, one bit of scratch per dart.
pub fn count_loops(map: &QuadMap) -> usize {
    let mut seen = vec![false; map.dart_count()];
    count_loops_with(map, &mut seen)
}

/// [`count_loops`] with a caller-provided scratch buffer.
pub fn count_loops_with(map: &QuadMap, seen: &mut Vec<bool>) -> usize {
    let n = map.dart_count();
    seen.clear();
    seen.resize(n, false);

    let mut a = map.in_leg();
    loop {
        seen[a] = true;
        let d = straight(map, a);
        seen[d] = true;
        match map.opposite(d) {
            Some(o) => a = o,
            None => break,
        }
    }

    let mut k = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        k += 1;
        let mut a = start;
        while !seen[a] {
            seen[a] = true;
            let d = straight(map, a);
            seen[d] = true;
            // Loops never meet a leg.
            a = map.opposite(d).unwrap_or(start);
        }
    }
    k
}

fn trace_from(map: &QuadMap, first_arrival: usize, seen: &mut [bool]) -> Vec<usize> {
    let mut darts = Vec::new();
    let mut a = first_arrival;
    while !seen[a] {
        seen[a] = true;
        darts.push(a);
        let d = straight(map, a);
        seen[d] = true;
        darts.push(d);
        match map.opposite(d) {
            Some(o) => a = o,
            None => break,
        }
    }
    darts
}

/// Splits the darts into the open curve and the closed loops. Loops are
/// listed in canonical order (by the root-anchored labeling) and start at
/// their smallest-label dart, so the result does not depend on dart ids.
pub fn decompose(map: &QuadMap) -> StrandDecomposition {
    let n = map.dart_count();
    let mut seen = vec![false; n];
    let open_curve = trace_from(map, map.in_leg(), &mut seen);

    let labels = canonical_labels(map);
    let mut by_label = vec![0usize; n];
    for (d, &l) in labels.iter().enumerate() {
        if (l as usize) < n {
            by_label[l as usize] = d;
        }
    }
    let mut loops = Vec::new();
    for &d in &by_label {
        if !seen[d] {
            loops.push(trace_from(map, d, &mut seen));
        }
    }
    StrandDecomposition {
        k: loops.len(),
        open_curve,
        loops,
    }
}

/// Crossing sequence of every strand: the open curve first, then the loops
/// of [`decompose`]. Crossings are numbered from 1 in order of first visit;
/// each label occurs exactly twice overall.
pub fn gauss_code(map: &QuadMap) -> Vec<Vec<usize>> {
    let strands = decompose(map);
    let mut label = vec![0usize; map.size()];
    let mut fresh = 0;
    std::iter::once(&strands.open_curve)
        .chain(&strands.loops)
        .map(|darts| {
            darts
                .iter()
                .step_by(2)
                .map(|&a| {
                    let v = map.vertex(a);
                    if label[v] == 0 {
                        fresh += 1;
                        label[v] = fresh;
                    }
                    label[v]
                })
                .collect()
        })
        .collect()
}

/// Text form of [`gauss_code`]: `O:` for the open curve, `L:` for loops.
pub fn format_gauss_code(words: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        out.push_str(if i == 0 { "O:" } else { "L:" });
        for x in w {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}
