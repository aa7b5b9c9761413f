//! Points of the extended complex plane and the chordal metric.
//!
//! The chordal distance between two finite points is
//! `2|z - w| / (sqrt(1 + |z|^2) sqrt(1 + |w|^2))` and `d(z, inf) = 2 / sqrt(1 + |z|^2)`.
//! Both are evaluated through `hypot`, which keeps the computation overflow-free
//! for every admissible modulus.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

/// Largest modulus accepted for a finite point.
pub const MAX_MODULUS: f64 = 1e150;

/// Default number of samples used by [`segment_chordal_diameter`].
pub const DEFAULT_SEGMENT_SAMPLES: usize = 129;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SphereError {
    #[error("coordinate is not a finite number")]
    NonFinite,
    #[error("modulus {0:e} exceeds the admissible bound {MAX_MODULUS:e}")]
    TooLarge(f64),
    #[error("cannot parse point {0:?}")]
    Parse(String),
    #[error("empty point set in a verification request")]
    EmptySet,
    #[error("segment endpoint is the point at infinity")]
    InfiniteEndpoint,
    #[error("segment sampling needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub fn new(re: f64, im: f64) -> Result<Self, SphereError> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Result<Self, SphereError> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(SphereError::NonFinite);
        }
        let m = z.norm();
        if m > MAX_MODULUS {
            return Err(SphereError::TooLarge(m));
        }
        Ok(SpherePoint::Finite(z))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(z) => Some(*z),
            SpherePoint::Infinity => None,
        }
    }
}

impl From<Complex64> for SpherePoint {
    /// Unchecked conversion for values produced internally.
    fn from(z: Complex64) -> Self {
        SpherePoint::Finite(z)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Infinity => write!(f, "inf"),
            SpherePoint::Finite(z) => {
                if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
                    write!(f, "{}-{}i", z.re, -z.im)
                } else {
                    write!(f, "{}+{}i", z.re, z.im)
                }
            }
        }
    }
}

impl FromStr for SpherePoint {
    type Err = SphereError;

    /// Accepts `inf`, `∞`, and anything `Complex64::from_str` understands
    /// (`-1`, `2+3i`, `0.5i`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(SpherePoint::Infinity),
            _ => {}
        }
        let z = Complex64::from_str(t).map_err(|_| SphereError::Parse(s.to_string()))?;
        SpherePoint::from_complex(z)
    }
}

/// Scale factor `sqrt(1 + |z|^2)`.
#[inline]
fn lift(z: Complex64) -> f64 {
    1f64.hypot(z.norm())
}

/// Chordal distance between two finite points.
#[inline]
pub fn chordal(z: Complex64, w: Complex64) -> f64 {
    let d = 2.0 * ((z - w).norm() / lift(z)) / lift(w);
    d.min(2.0)
}

/// Chordal distance from a finite point to infinity.
#[inline]
pub fn chordal_to_infinity(z: Complex64) -> f64 {
    (2.0 / lift(z)).min(2.0)
}

pub fn chordal_distance(p: SpherePoint, q: SpherePoint) -> f64 {
    match (p, q) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity) | (SpherePoint::Infinity, SpherePoint::Finite(z)) => {
            chordal_to_infinity(z)
        }
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => chordal(z, w),
    }
}

/// A finite set of sphere points without exact duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    points: Vec<SpherePoint>,
}

impl PointSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from `points`, dropping exact duplicates and keeping first
    /// occurrences in order.
    pub fn from_points<I: IntoIterator<Item = SpherePoint>>(points: I) -> Self {
        let mut set = PointSet::new();
        for p in points {
            set.insert(p);
        }
        set
    }

    /// Inserts `p` unless an equal point is present. Returns its index.
    pub fn insert(&mut self, p: SpherePoint) -> usize {
        if let Some(i) = self.index_of(&p) {
            return i;
        }
        self.points.push(p);
        self.points.len() - 1
    }

    pub fn index_of(&self, p: &SpherePoint) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    pub fn contains(&self, p: &SpherePoint) -> bool {
        self.index_of(p).is_some()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SpherePoint> {
        self.points.iter()
    }

    /// Equality as sets, independent of order.
    pub fn same_set(&self, other: &PointSet) -> bool {
        self.len() == other.len() && self.iter().all(|p| other.contains(p))
    }
}

impl FromIterator<SpherePoint> for PointSet {
    fn from_iter<I: IntoIterator<Item = SpherePoint>>(iter: I) -> Self {
        PointSet::from_points(iter)
    }
}

/// `sup_{a in A} inf_{b in B} d(a, b)` over raw slices.
pub fn directed_hausdorff(a: &[SpherePoint], b: &[SpherePoint]) -> f64 {
    a.iter()
        .map(|&p| b.iter().map(|&q| chordal_distance(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Chordal Hausdorff distance between two nonempty point clouds.
pub fn hausdorff_points(a: &[SpherePoint], b: &[SpherePoint]) -> Result<f64, SphereError> {
    if a.is_empty() || b.is_empty() {
        return Err(SphereError::EmptySet);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

pub fn hausdorff_chordal(a: &PointSet, b: &PointSet) -> Result<f64, SphereError> {
    hausdorff_points(a.points(), b.points())
}

fn segment_samples(a: Complex64, b: Complex64, samples: usize) -> Vec<Complex64> {
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|k| {
            if k == 0 {
                a
            } else if k == samples - 1 {
                b
            } else {
                let s = k as f64 / last;
                a + (b - a) * s
            }
        })
        .collect()
}

/// Largest pairwise chordal distance among `samples` equally spaced points of
/// the Euclidean segment `[a, b]`.
pub fn segment_chordal_diameter(a: SpherePoint, b: SpherePoint, samples: usize) -> Result<f64, SphereError> {
    let (Some(a), Some(b)) = (a.finite(), b.finite()) else {
        return Err(SphereError::InfiniteEndpoint);
    };
    if samples < 2 {
        return Err(SphereError::TooFewSamples(samples));
    }
    Ok(segment_diameter(a, b, samples))
}

pub(crate) fn segment_diameter(a: Complex64, b: Complex64, samples: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let pts = segment_samples(a, b, samples);
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(chordal(pts[i], pts[j]));
        }
    }
    best
}

/// `segment_diameter(a, b, samples) < bound`, exiting at the first pair that
/// reaches the bound.
fn distance_to_origin(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let t = (-(a.re * d.re + a.im * d.im) / d.norm_sqr()).clamp(0.0, 1.0);
    (a + d * t).norm()
}

pub(crate) fn segment_diameter_below(a: Complex64, b: Complex64, samples: usize, bound: f64) -> bool {
    if a == b {
        return 0.0 < bound;
    }
    // every pair on the segment is within 2|b-a| / (1 + m^2), m = distance to the origin
    let m = distance_to_origin(a, b);
    if 2.0 * (b - a).norm() / (1.0 + m * m) * (1.0 + 1e-9) < bound {
        return true;
    }
    let pts = segment_samples(a, b, samples);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if chordal(pts[i], pts[j]) >= bound {
                return false;
            }
        }
    }
    true
}
