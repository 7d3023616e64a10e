//! Rooted 4-regular planar maps with two legs, stored as a rotation system.
//!
//! A map with `p` vertices owns `4p` darts. Each dart records its vertex,
//! its opposite dart (or the leg sentinel) and the next dart counterclockwise
//! around the same vertex. Rooted maps have no non-trivial automorphisms, so
//! a breadth-first labeling anchored at the in-leg is a complete invariant
//! ([`canonical_code`]).

use std::fmt;

use crate::error::{Error, Result};

pub(crate) const LEG: u32 = u32::MAX;

/// Largest vertex count whose darts fit in 32-bit ids below the leg sentinel.
pub const MAX_VERTICES: usize = (u32::MAX as usize - 1) / 4;

/// A half-edge of the rotation system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dart {
    pub id: usize,
    pub vertex: usize,
    /// `None` marks a leg.
    pub opposite: Option<usize>,
    /// Counterclockwise successor around `vertex`.
    pub next: usize,
}

/// Rooted 4-regular planar map with an in-leg and an out-leg.
///
/// Values are immutable once built. Constructors only check that the dart
/// table has the right shape; [`validate`] checks the map invariants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadMap {
    p: usize,
    vertex: Vec<u32>,
    opposite: Vec<u32>,
    next: Vec<u32>,
    in_leg: u32,
    out_leg: u32,
}

fn to_id(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value)
        .ok()
        .filter(|&v| v != LEG)
        .ok_or_else(|| Error::Structure(format!("{what} {value} does not fit a dart id")))
}

pub fn check_size(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::Size(
            "a quartic map needs at least one vertex".into(),
        ));
    }
    if p > MAX_VERTICES {
        return Err(Error::Capacity(format!(
            "{p} vertices exceeds the limit of {MAX_VERTICES}"
        )));
    }
    Ok(())
}

impl QuadMap {
    /// Builds a map from an explicit dart table, `darts[i].id == i`.
    pub fn from_darts(p: usize, darts: &[Dart], in_leg: usize, out_leg: usize) -> Result<Self> {
        check_size(p)?;
        if darts.len() != 4 * p {
            return Err(Error::Structure(format!(
                "expected {} darts for p={p}, got {}",
                4 * p,
                darts.len()
            )));
        }
        let mut vertex = Vec::with_capacity(darts.len());
        let mut opposite = Vec::with_capacity(darts.len());
        let mut next = Vec::with_capacity(darts.len());
        for (i, d) in darts.iter().enumerate() {
            if d.id != i {
                return Err(Error::Structure(format!(
                    "dart at position {i} has id {}",
                    d.id
                )));
            }
            vertex.push(to_id(d.vertex, "vertex")?);
            opposite.push(match d.opposite {
                Some(o) => to_id(o, "opposite")?,
                None => LEG,
            });
            next.push(to_id(d.next, "next")?);
        }
        Ok(QuadMap {
            p,
            vertex,
            opposite,
            next,
            in_leg: to_id(in_leg, "in-leg")?,
            out_leg: to_id(out_leg, "out-leg")?,
        })
    }

    /// Map in the layout produced by the sampler: vertex `v` owns darts
    /// `4v..4v+4` in counterclockwise order.
    pub(crate) fn from_standard_layout(opposite: Vec<u32>, in_leg: u32, out_leg: u32) -> Self {
        let mut map = QuadMap {
            p: 0,
            vertex: Vec::new(),
            opposite: Vec::new(),
            next: Vec::new(),
            in_leg: 0,
            out_leg: 0,
        };
        map.refill_standard_layout(opposite, in_leg, out_leg);
        map
    }

    /// Reuses the vertex and rotation buffers when the size is unchanged.
    pub(crate) fn refill_standard_layout(&mut self, opposite: Vec<u32>, in_leg: u32, out_leg: u32) {
        debug_assert!(opposite.len().is_multiple_of(4));
        let n = opposite.len();
        if self.vertex.len() != n {
            self.vertex = (0..n as u32).map(|d| d >> 2).collect();
            self.next = (0..n as u32).map(|d| (d & !3) | ((d + 1) & 3)).collect();
        }
        self.p = n / 4;
        self.opposite = opposite;
        self.in_leg = in_leg;
        self.out_leg = out_leg;
    }

    pub(crate) fn take_opposite(&mut self) -> Vec<u32> {
        std::mem::take(&mut self.opposite)
    }

    /// Number of vertices (crossings).
    pub fn size(&self) -> usize {
        self.p
    }

    pub fn dart_count(&self) -> usize {
        self.opposite.len()
    }

    pub fn in_leg(&self) -> usize {
        self.in_leg as usize
    }

    pub fn out_leg(&self) -> usize {
        self.out_leg as usize
    }

    #[inline]
    pub fn vertex(&self, d: usize) -> usize {
        self.vertex[d] as usize
    }

    #[inline]
    pub fn opposite(&self, d: usize) -> Option<usize> {
        match self.opposite[d] {
            LEG => None,
            o => Some(o as usize),
        }
    }

    #[inline]
    pub fn next(&self, d: usize) -> usize {
        self.next[d] as usize
    }

    #[inline]
    pub fn is_leg(&self, d: usize) -> bool {
        self.opposite[d] == LEG
    }

    pub fn dart(&self, d: usize) -> Dart {
        Dart {
            id: d,
            vertex: self.vertex(d),
            opposite: self.opposite(d),
            next: self.next(d),
        }
    }

    pub fn darts(&self) -> impl Iterator<Item = Dart> + '_ {
        (0..self.dart_count()).map(|d| self.dart(d))
    }

    /// Same map with the roles of the two legs exchanged.
    pub fn with_swapped_legs(&self) -> QuadMap {
        let mut m = self.clone();
        std::mem::swap(&mut m.in_leg, &mut m.out_leg);
        m
    }

    /// Renames dart `d` to `perm[d]` and vertex `v` to `vertex_perm[v]`.
    /// The result is isomorphic to `self` as a rooted map.
    pub fn relabeled(&self, perm: &[usize], vertex_perm: &[usize]) -> Result<QuadMap> {
        let n = self.dart_count();
        if perm.len() != n || vertex_perm.len() != self.p {
            return Err(Error::Structure("permutation length mismatch".into()));
        }
        let mut darts = vec![
            Dart {
                id: 0,
                vertex: 0,
                opposite: None,
                next: 0
            };
            n
        ];
        for d in 0..n {
            let nd = perm[d];
            if nd >= n {
                return Err(Error::Structure(format!(
                    "permutation image {nd} out of range"
                )));
            }
            darts[nd] = Dart {
                id: nd,
                vertex: vertex_perm[self.vertex(d)],
                opposite: self.opposite(d).map(|o| perm[o]),
                next: perm[self.next(d)],
            };
        }
        QuadMap::from_darts(self.p, &darts, perm[self.in_leg()], perm[self.out_leg()])
    }

    /// Face walk step with the two legs glued back into the root edge.
    #[inline]
    fn face_step(&self, d: usize) -> usize {
        let across = match self.opposite(d) {
            Some(o) => o,
            None if d == self.in_leg() => self.out_leg(),
            None => self.in_leg(),
        };
        self.next(across)
    }

    /// Face walk step treating a leg as a U-turn (the open-curve picture).
    #[inline]
    fn open_face_step(&self, d: usize) -> usize {
        self.next(self.opposite(d).unwrap_or(d))
    }
}

/// Which defining property a map violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// `opposite` is not a fixed-point-free involution on non-leg darts.
    Involution,
    /// `next` is not a permutation of the darts.
    Rotation,
    /// A vertex orbit of `next` does not have length 4 or mixes vertex ids.
    Degree,
    /// Not exactly two legs, or the legs are not the declared in/out darts.
    Legs,
    Connectivity,
    /// Face count differs from `p + 2`.
    Genus,
    /// The two legs do not lie on a common face.
    OuterFace,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Involution => "involution",
            Rule::Rotation => "rotation",
            Rule::Degree => "degree",
            Rule::Legs => "legs",
            Rule::Connectivity => "connectivity",
            Rule::Genus => "genus",
            Rule::OuterFace => "outer-face",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    /// Offending dart, or vertex for [`Rule::Degree`].
    pub id: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapDiagnostics {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl MapDiagnostics {
    fn from_violations(violations: Vec<Violation>) -> Self {
        MapDiagnostics {
            ok: violations.is_empty(),
            violations,
        }
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

fn check_ranges(map: &QuadMap) -> Result<()> {
    let n = map.dart_count();
    let bad = |what: &str, d: usize, v: usize| {
        Err(Error::Structure(format!(
            "dart {d}: {what} {v} out of range"
        )))
    };
    for d in 0..n {
        if map.vertex(d) >= map.p {
            return bad("vertex", d, map.vertex(d));
        }
        if let Some(o) = map.opposite(d) {
            if o >= n {
                return bad("opposite", d, o);
            }
        }
        if map.next(d) >= n {
            return bad("next", d, map.next(d));
        }
    }
    if map.in_leg() >= n || map.out_leg() >= n {
        return Err(Error::Structure("leg dart out of range".into()));
    }
    Ok(())
}

/// Checks every defining property of a rooted quartic map with two legs.
///
/// Out-of-range ids are a structural error; all other defects are reported
/// as violations in the returned diagnostics.
pub fn validate(map: &QuadMap) -> Result<MapDiagnostics> {
    check_ranges(map)?;
    let n = map.dart_count();
    let mut out = Vec::new();

    let (a, b) = (map.in_leg(), map.out_leg());
    if a == b {
        out.push(Violation {
            rule: Rule::Legs,
            id: a,
        });
    }
    for leg in [a, b] {
        if !map.is_leg(leg) {
            out.push(Violation {
                rule: Rule::Legs,
                id: leg,
            });
        }
    }
    for d in (0..n).filter(|&d| map.is_leg(d) && d != a && d != b) {
        out.push(Violation {
            rule: Rule::Legs,
            id: d,
        });
    }
    let legs_ok = out.is_empty();

    let mut involution_ok = true;
    for d in 0..n {
        if let Some(o) = map.opposite(d) {
            if o == d || map.opposite(o) != Some(d) {
                involution_ok = false;
                out.push(Violation {
                    rule: Rule::Involution,
                    id: d,
                });
            }
        }
    }

    let mut hits = vec![0u8; n];
    for d in 0..n {
        let t = map.next(d);
        hits[t] = hits[t].saturating_add(1);
    }
    let mut rotation_ok = true;
    for (d, &h) in hits.iter().enumerate() {
        if h != 1 {
            rotation_ok = false;
            out.push(Violation {
                rule: Rule::Rotation,
                id: d,
            });
        }
    }

    if rotation_ok {
        let mut seen = vec![false; n];
        let mut orbits_at = vec![0u32; map.p];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let v = map.vertex(start);
            orbits_at[v] += 1;
            let mut len = 0usize;
            let mut mixed = false;
            let mut d = start;
            loop {
                seen[d] = true;
                len += 1;
                mixed |= map.vertex(d) != v;
                d = map.next(d);
                if d == start {
                    break;
                }
            }
            if len != 4 || mixed {
                out.push(Violation {
                    rule: Rule::Degree,
                    id: v,
                });
            }
        }
        for (v, &c) in orbits_at.iter().enumerate() {
            if c != 1 && !out.iter().any(|x| x.rule == Rule::Degree && x.id == v) {
                out.push(Violation {
                    rule: Rule::Degree,
                    id: v,
                });
            }
        }
    }

    // Connectivity over next and opposite.
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(d) = stack.pop() {
        let nb = [Some(map.next(d)), map.opposite(d)];
        for e in nb.into_iter().flatten() {
            if !seen[e] {
                seen[e] = true;
                stack.push(e);
            }
        }
    }
    if let Some(d) = seen.iter().position(|s| !s) {
        out.push(Violation {
            rule: Rule::Connectivity,
            id: d,
        });
    }

    if legs_ok && involution_ok && rotation_ok {
        if face_count(map) != map.p + 2 {
            out.push(Violation {
                rule: Rule::Genus,
                id: a,
            });
        }
        let mut d = map.open_face_step(a);
        let mut shared = false;
        for _ in 0..n {
            if d == b {
                shared = true;
                break;
            }
            if d == a {
                break;
            }
            d = map.open_face_step(d);
        }
        if !shared {
            out.push(Violation {
                rule: Rule::OuterFace,
                id: b,
            });
        }
    }

    Ok(MapDiagnostics::from_violations(out))
}

/// Number of faces once the two legs are joined into the root edge.
/// Equals `p + 2` on every valid map.
pub fn face_count(map: &QuadMap) -> usize {
    let n = map.dart_count();
    let mut seen = vec![false; n];
    let mut faces = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        faces += 1;
        let mut d = start;
        while !seen[d] {
            seen[d] = true;
            d = map.face_step(d);
        }
    }
    faces
}

/// Breadth-first labels of all darts, starting at the in-leg and exploring
/// `next` before `opposite`. Unreachable darts keep `u32::MAX`.
pub fn canonical_labels(map: &QuadMap) -> Vec<u32> {
    let n = map.dart_count();
    let mut label = vec![u32::MAX; n];
    let mut order = Vec::with_capacity(n);
    label[map.in_leg()] = 0;
    order.push(map.in_leg() as u32);
    let mut head = 0;
    while head < order.len() {
        let d = order[head] as usize;
        head += 1;
        for e in [Some(map.next(d)), map.opposite(d)].into_iter().flatten() {
            if label[e] == u32::MAX {
                label[e] = order.len() as u32;
                order.push(e as u32);
            }
        }
    }
    label
}

/// Byte string identifying the rooted map up to root- and
/// orientation-preserving isomorphism.
pub fn canonical_code(map: &QuadMap) -> Vec<u8> {
    let label = canonical_labels(map);
    let n = map.dart_count();
    let mut order = vec![0usize; n];
    for (d, &l) in label.iter().enumerate() {
        if l != u32::MAX {
            order[l as usize] = d;
        }
    }
    let mut code = Vec::with_capacity(8 + 4 + 8 * n);
    code.extend_from_slice(&(map.size() as u64).to_le_bytes());
    code.extend_from_slice(&label[map.out_leg()].to_le_bytes());
    for &d in &order {
        code.extend_from_slice(&label[map.next(d)].to_le_bytes());
        let o = map.opposite(d).map_or(LEG, |o| label[o]);
        code.extend_from_slice(&o.to_le_bytes());
    }
    code
}
