//! The truncated double sequence `p_{-N}, ..., p_N` whose tails approach the
//! two target continua.
//!
//! Each half is produced block by block. Block `j` walks the level-`j` net of
//! its continuum with ε-chains at radius `1/(2j)`, arriving at targets until
//! every net point lies within `1/(2j)` of an arrival and at least `4j` points
//! were emitted. Every arrival is followed by a short marker step, alternately
//! horizontal and vertical. Degenerate continua use the spiral targets
//! `p + 2^{-k} e^{ik}` (or the infinity surrogates) joined by subdivided
//! straight paths.
//!
//! Markers are oriented so that, read in increasing index, a horizontal marker
//! runs left to right and a vertical one bottom to top on both sides.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::continuum::{
    infinity_surrogate, level_radius, net_at, safe_edge, ContinuumError, ContinuumSpec, ProximityGraph,
};
use crate::sphere::{chordal, SpherePoint};

/// Relative cross-product threshold below which three points count as collinear.
pub const COLLINEAR_TOL: f64 = 1e-9;

/// Index of the first spiral target used for degenerate continua.
const FIRST_SPIRAL_TARGET: u32 = 1;

const MAX_HALVINGS: usize = 60;
const MAX_FIX_PASSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SequenceError {
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error("N = {0} is too small; need N >= 8")]
    TooShort(usize),
    #[error("N = {n} leaves the {side} side without a {orientation} marker")]
    MissingMarker {
        n: usize,
        side: Side,
        orientation: Orientation,
    },
    #[error("could not remove the collinear triple centred at index {0}")]
    Collinearity(i64),
    #[error("could not place a marker after index {0}")]
    MarkerPlacement(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Minus => -1.0,
            Side::Plus => 1.0,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    /// Argument of the marker direction.
    pub fn expected_angle(self) -> f64 {
        match self {
            Orientation::Horizontal => 0.0,
            Orientation::Vertical => FRAC_PI_2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Orientation::Horizontal => "H",
            Orientation::Vertical => "V",
        }
    }

    fn toggled(self) -> Self {
        match self {
            Orientation::Horizontal => Orientation::Vertical,
            Orientation::Vertical => Orientation::Horizontal,
        }
    }

    /// Exact orientation test on the step `a -> b`.
    pub fn holds(self, a: Complex64, b: Complex64) -> bool {
        let d = b - a;
        match self {
            Orientation::Horizontal => d.im == 0.0 && d.re > 0.0,
            Orientation::Vertical => d.re == 0.0 && d.im > 0.0,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Horizontal => "horizontal",
            Orientation::Vertical => "vertical",
        })
    }
}

/// Marker segment `[p_index, p_index+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Marker {
    pub index: i64,
    pub orientation: Orientation,
    pub side: Side,
}

/// Index range of one block on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockSpan {
    pub side: Side,
    pub level: u32,
    /// Lowest and highest index of the block.
    pub lo: i64,
    pub hi: i64,
    /// False when truncation cut the block short.
    pub complete: bool,
}

/// Block bookkeeping in distances from the origin index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Span {
    start: u64,
    end: u64,
    complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSequence {
    first: i64,
    points: Vec<Complex64>,
    markers: Vec<Marker>,
    spans_minus: Vec<Span>,
    spans_plus: Vec<Span>,
    /// Index of the minus half's innermost point; the bridge lies strictly between it and 0.
    seam: i64,
}

/// Relative cross product of the two steps of `a -> b -> c`.
pub fn collinearity_residual(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let u = b - a;
    let v = c - b;
    let scale = u.norm() * v.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (u * v.conj()).im.abs() / scale
}

pub fn is_collinear(a: Complex64, b: Complex64, c: Complex64) -> bool {
    collinearity_residual(a, b, c) <= COLLINEAR_TOL
}

impl DoubleSequence {
    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn last_index(&self) -> i64 {
        self.first + self.points.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, n: i64) -> Option<Complex64> {
        let k = n - self.first;
        (k >= 0).then(|| self.points.get(k as usize).copied()).flatten()
    }

    /// Points in increasing index order, starting at [`Self::first_index`].
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (i64, Complex64)> + ExactSizeIterator + '_ {
        self.points
            .iter()
            .enumerate()
            .map(move |(k, z)| (self.first + k as i64, *z))
    }

    /// Interior indices of the bridge joining the two halves (possibly empty).
    pub fn bridge(&self) -> std::ops::RangeInclusive<i64> {
        self.seam + 1..=-1
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn markers_of(&self, side: Side, orientation: Orientation) -> Vec<Marker> {
        self.markers
            .iter()
            .filter(|m| m.side == side && m.orientation == orientation)
            .copied()
            .collect()
    }

    fn spans(&self, side: Side) -> &[Span] {
        match side {
            Side::Minus => &self.spans_minus,
            Side::Plus => &self.spans_plus,
        }
    }

    /// Block boundaries `n(1) = 0 < n(2) < ...` as distances from index 0.
    pub fn schedule(&self, side: Side) -> Vec<u64> {
        self.spans(side).iter().map(|s| s.start).collect()
    }

    pub fn blocks(&self, side: Side) -> Vec<BlockSpan> {
        self.spans(side)
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (lo, hi) = match side {
                    Side::Plus => (s.start as i64, s.end as i64),
                    Side::Minus => (-(s.end as i64), -(s.start as i64)),
                };
                BlockSpan {
                    side,
                    level: i as u32 + 1,
                    lo,
                    hi,
                    complete: s.complete,
                }
            })
            .collect()
    }

    /// Last block that was not cut short by truncation.
    pub fn last_complete_block(&self, side: Side) -> Option<BlockSpan> {
        self.blocks(side).into_iter().rev().find(|b| b.complete)
    }

    pub fn side_of(&self, n: i64) -> Side {
        if n > 0 || (n == 0 && !self.spans_plus.is_empty()) {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// Block number of index `n` on its side.
    pub fn block_of(&self, n: i64) -> u32 {
        let spans = self.spans(self.side_of(n));
        let mag = n.unsigned_abs();
        spans.partition_point(|s| s.start <= mag).max(1) as u32
    }

    pub fn marker_tag(&self, n: i64) -> Option<Orientation> {
        self.markers.iter().find(|m| m.index == n).map(|m| m.orientation)
    }

    /// Checks every structural invariant and returns the list of violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for w in 0..self.points.len().saturating_sub(1) {
            let n = self.first + w as i64;
            let (a, b) = (self.points[w], self.points[w + 1]);
            let bound = 1.0 / self.block_of(n) as f64;
            let d = chordal(a, b);
            if !(d < bound) {
                violations.push(format!("step {n}: chordal {d} >= 1/j = {bound}"));
            } else if !safe_edge(a, b, bound) {
                violations.push(format!("step {n}: segment diameter >= 1/j = {bound}"));
            }
        }
        for w in 1..self.points.len().saturating_sub(1) {
            let r = collinearity_residual(self.points[w - 1], self.points[w], self.points[w + 1]);
            if !(r > COLLINEAR_TOL) {
                violations.push(format!(
                    "triple centred at {} is collinear (residual {r:e})",
                    self.first + w as i64
                ));
            }
        }
        for m in &self.markers {
            match (self.point(m.index), self.point(m.index + 1)) {
                (Some(a), Some(b)) if m.orientation.holds(a, b) => {}
                (Some(_), Some(_)) => {
                    violations.push(format!("marker at {} is not exactly {}", m.index, m.orientation))
                }
                _ => violations.push(format!("marker at {} is out of range", m.index)),
            }
        }
        for side in [Side::Minus, Side::Plus] {
            let spans = self.spans(side);
            if spans.is_empty() {
                continue;
            }
            if spans[0].start != 0 || spans.windows(2).any(|w| w[1].start <= w[0].start) {
                violations.push(format!("{side} schedule is not strictly increasing from 0"));
            }
            let need = spans.len() / 2;
            for o in [Orientation::Horizontal, Orientation::Vertical] {
                let have = self.markers_of(side, o).len();
                if have < need {
                    violations.push(format!(
                        "{side} side has {have} {o} markers, needs {need} for {} blocks",
                        spans.len()
                    ));
                }
            }
        }
        ValidationReport { violations }
    }

    /// CSV rows `n,re,im,marker`.
    pub fn csv_rows(&self) -> Vec<[String; 4]> {
        self.iter()
            .map(|(n, z)| {
                [
                    n.to_string(),
                    crate::export::fmt_f64(z.re),
                    crate::export::fmt_f64(z.im),
                    self.marker_tag(n).map(|o| o.tag()).unwrap_or("").to_string(),
                ]
            })
            .collect()
    }

    /// Groups of indices that must move rigidly: overlapping marker pairs.
    fn rigid_units(&self) -> BTreeMap<i64, Vec<i64>> {
        let mut unit_of: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
        let mut groups: Vec<Vec<i64>> = Vec::new();
        for m in &self.markers {
            let pair = [m.index, m.index + 1];
            if let Some(g) = groups.iter_mut().find(|g| g.contains(&pair[0]) || g.contains(&pair[1])) {
                for i in pair {
                    if !g.contains(&i) {
                        g.push(i);
                    }
                }
            } else {
                groups.push(pair.to_vec());
            }
        }
        for g in groups {
            for &i in &g {
                unit_of.insert(i, g.clone());
            }
        }
        unit_of
    }

    fn steps_safe_around(&self, moved: &[i64]) -> bool {
        let mut steps: Vec<i64> = moved.iter().flat_map(|&k| [k - 1, k]).collect();
        steps.sort_unstable();
        steps.dedup();
        steps.into_iter().all(|n| match (self.point(n), self.point(n + 1)) {
            (Some(a), Some(b)) => safe_edge(a, b, 1.0 / self.block_of(n) as f64),
            _ => true,
        })
    }

    fn shift(&mut self, indices: &[i64], v: Complex64) {
        for &k in indices {
            let w = (k - self.first) as usize;
            self.points[w] = Complex64::new(self.points[w].re + v.re, self.points[w].im + v.im);
        }
    }

    /// Displaces points (marker pairs as rigid units) until no three
    /// consecutive points are collinear.
    fn remove_collinear_triples(&mut self) -> Result<(), SequenceError> {
        let units = self.rigid_units();
        for _ in 0..MAX_FIX_PASSES {
            let mut changed = false;
            for w in 1..self.points.len().saturating_sub(1) {
                let (a, b, c) = (self.points[w - 1], self.points[w], self.points[w + 1]);
                if !is_collinear(a, b, c) {
                    continue;
                }
                let n = self.first + w as i64;
                let unit = units.get(&n).cloned().unwrap_or_else(|| vec![n]);
                let line = if c != a { c - a } else { b - a };
                let normal = if line.norm() > 0.0 {
                    Complex64::i() * line / line.norm()
                } else {
                    Complex64::i()
                };
                let j = self.block_of(n) as f64;
                let gap = (b - a).norm().min((c - b).norm());
                let gap = if gap > 0.0 {
                    gap
                } else {
                    (b - a).norm().max((c - b).norm())
                };
                let mut h = (1.0 / (8.0 * j)).min(gap / 8.0);
                let mut fixed = false;
                for _ in 0..MAX_HALVINGS {
                    for sign in [1.0, -1.0] {
                        let v = normal * (sign * h);
                        self.shift(&unit, v);
                        let ok = !is_collinear(self.points[w - 1], self.points[w], self.points[w + 1])
                            && self.steps_safe_around(&unit);
                        if ok {
                            fixed = true;
                            break;
                        }
                        self.shift(&unit, -v);
                    }
                    if fixed {
                        break;
                    }
                    h /= 2.0;
                }
                if !fixed {
                    return Err(SequenceError::Collinearity(n));
                }
                changed = true;
            }
            if !changed {
                return Ok(());
            }
        }
        Err(SequenceError::Collinearity(self.first))
    }

    /// Keeps indices within `[-n, n]`.
    fn truncate(&mut self, n: u64) {
        let lo = -(n as i64);
        let hi = n as i64;
        let keep_from = (lo.max(self.first) - self.first) as usize;
        let keep_to = (hi.min(self.last_index()) - self.first) as usize;
        self.points = self.points[keep_from..=keep_to].to_vec();
        self.first = lo.max(self.first);
        let (first, last) = (self.first, self.last_index());
        self.markers.retain(|m| m.index >= first && m.index < last);
        for spans in [&mut self.spans_minus, &mut self.spans_plus] {
            spans.retain(|s| s.start <= n);
            for s in spans.iter_mut() {
                if s.end > n {
                    s.end = n;
                    s.complete = false;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One half of the construction, indexed outward from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSequence {
    pub side: Side,
    /// Indices `0..=K` on the plus side, `-K..=0` on the minus side.
    pub sequence: DoubleSequence,
}

impl HalfSequence {
    pub fn complete_blocks(&self) -> usize {
        self.sequence.spans(self.side).iter().filter(|s| s.complete).count()
    }

    /// Point at distance `k` from index 0.
    pub fn outward(&self, k: usize) -> Option<Complex64> {
        let n = match self.side {
            Side::Plus => k as i64,
            Side::Minus => -(k as i64),
        };
        self.sequence.point(n)
    }
}

/// Output of the generator in emission order.
struct RawHalf {
    points: Vec<Complex64>,
    /// Emission index `k` of each marker pair `(k, k+1)`.
    markers: Vec<(usize, Orientation)>,
    spans: Vec<(usize, usize)>,
}

enum Walk {
    Spiral { center: SpherePoint, next: u32 },
    Nets { spec: ContinuumSpec },
}

/// Spiral target number `k`, drawn in block `j`.
///
/// Finite centres use radius `2^{-(j+3)}` so that every point of block `j`,
/// chords and markers included, stays within chordal `2^{-j}` of the centre.
fn spiral_target(center: SpherePoint, j: u32, k: u32) -> Complex64 {
    match center {
        SpherePoint::Finite(p) => p + Complex64::from_polar(0.5f64.powi(j as i32 + 3), k as f64),
        SpherePoint::Infinity => infinity_surrogate(k),
    }
}

/// Subdivision of `[a, b]` at dyadic parameters, bisecting only the pieces
/// that are not yet safe edges at `delta`. Includes both endpoints.
pub fn straight_path(a: Complex64, b: Complex64, delta: f64) -> Vec<Complex64> {
    fn at(a: Complex64, b: Complex64, t: f64) -> Complex64 {
        if t == 0.0 {
            a
        } else if t == 1.0 {
            b
        } else {
            a + (b - a) * t
        }
    }
    let mut out = vec![a];
    let mut stack = vec![(0.0f64, 1.0f64)];
    while let Some((t0, t1)) = stack.pop() {
        let (p, q) = (at(a, b, t0), at(a, b, t1));
        if safe_edge(p, q, delta) || t1 - t0 < 1e-9 {
            out.push(q);
        } else {
            let mid = 0.5 * (t0 + t1);
            stack.push((mid, t1));
            stack.push((t0, mid));
        }
    }
    out
}

struct Generator {
    side: Side,
    rng: ChaCha8Rng,
    points: Vec<Complex64>,
    markers: Vec<(usize, Orientation)>,
    next_orientation: Orientation,
    pending: bool,
}

impl Generator {
    /// Emits the marker step owed to the latest arrival, heading towards `next`.
    fn place_marker(&mut self, j: u32, next: Complex64) -> Result<(), SequenceError> {
        if !self.pending {
            return Ok(());
        }
        let k = self.points.len() - 1;
        let z = self.points[k];
        let prev_step = if k > 0 {
            (z - self.points[k - 1]).norm()
        } else {
            f64::INFINITY
        };
        let next_step = (next - z).norm();
        let bound = 1.0 / j as f64;
        let mut len = (1.0 / (4.0 * j as f64)).min(prev_step / 2.0).min(next_step / 2.0);
        let sign = self.side.sign();
        for _ in 0..MAX_HALVINGS {
            let m = match self.next_orientation {
                Orientation::Horizontal => Complex64::new(z.re + sign * len, z.im),
                Orientation::Vertical => Complex64::new(z.re, z.im + sign * len),
            };
            if m != z && m != next && safe_edge(z, m, bound) && safe_edge(m, next, bound) {
                self.points.push(m);
                self.markers.push((k, self.next_orientation));
                self.next_orientation = self.next_orientation.toggled();
                self.pending = false;
                return Ok(());
            }
            len /= 2.0;
        }
        Err(SequenceError::MarkerPlacement(k))
    }

    /// Appends a path that starts after the current point and ends at an arrival.
    fn travel(&mut self, j: u32, path: &[Complex64]) -> Result<(), SequenceError> {
        if let Some(&first) = path.first() {
            self.place_marker(j, first)?;
            self.points.extend_from_slice(path);
            self.pending = true;
        }
        Ok(())
    }

    fn pick(&mut self, candidates: &[usize]) -> usize {
        if candidates.len() == 1 {
            candidates[0]
        } else {
            candidates[self.rng.random_range(0..candidates.len())]
        }
    }
}

fn generate(spec: &ContinuumSpec, side: Side, n: usize, seed: u64) -> Result<RawHalf, SequenceError> {
    let mut walk = match spec {
        ContinuumSpec::Singleton(p) => Walk::Spiral {
            center: *p,
            next: FIRST_SPIRAL_TARGET,
        },
        other => Walk::Nets { spec: other.clone() },
    };
    let mut gen = Generator {
        side,
        rng: ChaCha8Rng::seed_from_u64(seed),
        points: Vec::new(),
        markers: Vec::new(),
        next_orientation: match side {
            Side::Plus => Orientation::Horizontal,
            Side::Minus => Orientation::Vertical,
        },
        pending: true,
    };
    let start = match &mut walk {
        Walk::Spiral { center, next } => {
            let z = spiral_target(*center, 1, *next);
            *next += 1;
            z
        }
        Walk::Nets { spec } => {
            let net = net_at(spec, 1)?;
            net.finite_points()?[0]
        }
    };
    gen.points.push(start);

    let mut spans = Vec::new();
    let mut j = 1u32;
    loop {
        let block_start = if j == 1 { 0 } else { gen.points.len() };
        let quota = 4 * j as usize;
        let delta = level_radius(j);
        match &mut walk {
            Walk::Spiral { center, next } => {
                while gen.points.len() - block_start < quota {
                    let here = *gen.points.last().unwrap();
                    let target = spiral_target(*center, j, *next);
                    *next += 1;
                    let path = straight_path(here, target, delta);
                    gen.travel(j, &path[1..])?;
                }
            }
            Walk::Nets { spec } => {
                let net = net_at(spec, j)?;
                let graph = ProximityGraph::new(&net)?;
                let here = *gen.points.last().unwrap();
                let mut node = match graph.index_of(here) {
                    Some(i) => i,
                    None => {
                        // nets that are not nested: walk straight to the nearest point
                        let nearest = (0..graph.len())
                            .min_by(|&a, &b| chordal(here, graph.point(a)).total_cmp(&chordal(here, graph.point(b))))
                            .expect("nets are nonempty");
                        let path = straight_path(here, graph.point(nearest), delta);
                        gen.travel(j, &path[1..])?;
                        nearest
                    }
                };
                let cover = delta;
                let mut covered = vec![false; graph.len()];
                let mark = |covered: &mut Vec<bool>, z: Complex64| {
                    for (i, c) in covered.iter_mut().enumerate() {
                        if !*c && chordal(z, graph.point(i)) < cover {
                            *c = true;
                        }
                    }
                };
                if gen.points.len() > block_start {
                    mark(&mut covered, graph.point(node));
                }
                while gen.points.len() - block_start < quota || covered.iter().any(|c| !c) {
                    let hops = graph.hops_from(node);
                    let reachable = |i: usize| i != node && hops[i] != usize::MAX;
                    let nearest_uncovered = (0..graph.len())
                        .filter(|&i| reachable(i) && !covered[i])
                        .map(|i| hops[i])
                        .min();
                    let candidates: Vec<usize> = match nearest_uncovered {
                        Some(h) => (0..graph.len())
                            .filter(|&i| reachable(i) && !covered[i] && hops[i] == h)
                            .collect(),
                        None => {
                            let far = (0..graph.len())
                                .filter(|&i| reachable(i))
                                .map(|i| hops[i])
                                .max()
                                .ok_or(SequenceError::MarkerPlacement(gen.points.len()))?;
                            (0..graph.len()).filter(|&i| reachable(i) && hops[i] == far).collect()
                        }
                    };
                    let target = gen.pick(&candidates);
                    let path = graph.shortest_path(node, target).expect("target is reachable");
                    let pts: Vec<Complex64> = path[1..].iter().map(|&i| graph.point(i)).collect();
                    gen.travel(j, &pts)?;
                    node = target;
                    mark(&mut covered, graph.point(node));
                }
            }
        }
        spans.push((block_start, gen.points.len() - 1));
        if gen.points.len() > n {
            break;
        }
        j += 1;
    }
    Ok(RawHalf {
        points: gen.points,
        markers: gen.markers,
        spans,
    })
}

impl RawHalf {
    /// One-sided indexed form; the minus side is mirrored onto `-K..=0`.
    fn into_sequence(self, side: Side) -> DoubleSequence {
        let count = self.points.len();
        let spans: Vec<Span> = self
            .spans
            .iter()
            .map(|&(s, e)| Span {
                start: s as u64,
                end: e as u64,
                complete: true,
            })
            .collect();
        match side {
            Side::Plus => DoubleSequence {
                first: 0,
                points: self.points,
                markers: self
                    .markers
                    .into_iter()
                    .map(|(k, o)| Marker {
                        index: k as i64,
                        orientation: o,
                        side,
                    })
                    .collect(),
                spans_minus: Vec::new(),
                spans_plus: spans,
                seam: 0,
            },
            Side::Minus => {
                let mut points = self.points;
                points.reverse();
                let mut markers: Vec<Marker> = self
                    .markers
                    .into_iter()
                    .map(|(k, o)| Marker {
                        index: -(k as i64) - 1,
                        orientation: o,
                        side,
                    })
                    .collect();
                markers.sort_by_key(|m| m.index);
                DoubleSequence {
                    first: -(count as i64 - 1),
                    points,
                    markers,
                    spans_minus: spans,
                    spans_plus: Vec::new(),
                    seam: 0,
                }
            }
        }
    }
}

fn check_markers(seq: &DoubleSequence, side: Side, n: usize) -> Result<(), SequenceError> {
    for o in [Orientation::Horizontal, Orientation::Vertical] {
        if seq.markers_of(side, o).is_empty() {
            return Err(SequenceError::MissingMarker {
                n,
                side,
                orientation: o,
            });
        }
    }
    Ok(())
}

/// Builds one half with at least `n + 1` points, finishing the block in progress.
pub fn build_half_sequence(
    spec: &ContinuumSpec,
    side: Side,
    n: usize,
    seed: u64,
) -> Result<HalfSequence, SequenceError> {
    if n < 8 {
        return Err(SequenceError::TooShort(n));
    }
    spec.validate()?;
    let raw = generate(spec, side, n, seed)?;
    let mut sequence = raw.into_sequence(side);
    sequence.remove_collinear_triples()?;
    let mut head = sequence.clone();
    head.truncate(n as u64);
    check_markers(&head, side, n)?;
    Ok(HalfSequence { side, sequence })
}

/// Seed of the minus half, decorrelated from the plus half.
fn minus_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Glues both halves through a straight bridge at the block-1 step bound and
/// truncates to indices `-n..=n`.
pub fn build_double_sequence(
    kminus: &ContinuumSpec,
    kplus: &ContinuumSpec,
    n: usize,
    seed: u64,
) -> Result<DoubleSequence, SequenceError> {
    if n < 8 {
        return Err(SequenceError::TooShort(n));
    }
    let plus = build_half_sequence(kplus, Side::Plus, n, seed)?.sequence;
    let minus = build_half_sequence(kminus, Side::Minus, n, minus_seed(seed))?.sequence;

    let q0 = plus.point(0).expect("plus half starts at 0");
    let h0 = minus.point(0).expect("minus half ends at 0");
    let bridge = if h0 == q0 { vec![q0] } else { straight_path(h0, q0, 1.0) };
    // minus half occupies -(K + c)..=-c with c = bridge steps
    let c = bridge.len() as i64 - 1;

    let mut points: Vec<Complex64> = minus.points[..minus.points.len() - 1].to_vec();
    points.extend_from_slice(&bridge[..bridge.len() - 1]);
    points.extend_from_slice(&plus.points);
    let first = minus.first - c;

    let mut markers: Vec<Marker> = minus
        .markers
        .iter()
        .map(|m| Marker {
            index: m.index - c,
            ..*m
        })
        .collect();
    markers.extend(plus.markers.iter().copied());

    let mut spans_minus: Vec<Span> = minus
        .spans_minus
        .iter()
        .map(|s| Span {
            start: s.start + c as u64,
            end: s.end + c as u64,
            complete: s.complete,
        })
        .collect();
    spans_minus[0].start = 0;

    let mut seq = DoubleSequence {
        first,
        points,
        markers,
        spans_minus,
        spans_plus: plus.spans_plus.clone(),
        seam: -c,
    };
    seq.truncate(n as u64);
    seq.remove_collinear_triples()?;
    check_markers(&seq, Side::Minus, n)?;
    check_markers(&seq, Side::Plus, n)?;
    Ok(seq)
}

/// Sequence from explicit nodes starting at index `first`, with no blocks or
/// markers. Useful for small hand-built curves.
pub fn from_nodes(first: i64, points: Vec<Complex64>) -> DoubleSequence {
    DoubleSequence {
        first,
        points,
        markers: Vec::new(),
        spans_minus: Vec::new(),
        spans_plus: Vec::new(),
        seam: 0,
    }
}
