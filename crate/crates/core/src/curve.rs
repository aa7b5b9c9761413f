//! The polygonal curve through the nodes of a double sequence.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::sequence::{DoubleSequence, Side};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("parameter {t} is outside the domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("a curve needs at least two nodes")]
    TooFewNodes,
}

/// Anything that can be evaluated together with its derivative on a closed interval.
pub trait CurveSampler {
    fn domain(&self) -> (f64, f64);

    /// Value and derivative at `t`.
    fn eval(&self, t: f64) -> Result<(Complex64, Complex64), CurveError>;

    fn check_domain(&self, t: f64) -> Result<(), CurveError> {
        let (lo, hi) = self.domain();
        if t >= lo && t <= hi {
            Ok(())
        } else {
            Err(CurveError::OutOfDomain { t, lo, hi })
        }
    }
}

impl<S: CurveSampler + ?Sized> CurveSampler for &S {
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }

    fn eval(&self, t: f64) -> Result<(Complex64, Complex64), CurveError> {
        (**self).eval(t)
    }
}

/// Curve given by a closure returning value and derivative.
pub struct FnCurve {
    domain: (f64, f64),
    f: Box<dyn Fn(f64) -> (Complex64, Complex64) + Send + Sync>,
}

impl FnCurve {
    pub fn new(domain: (f64, f64), f: impl Fn(f64) -> (Complex64, Complex64) + Send + Sync + 'static) -> Self {
        Self { domain, f: Box::new(f) }
    }
}

impl std::fmt::Debug for FnCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnCurve").field("domain", &self.domain).finish()
    }
}

impl CurveSampler for FnCurve {
    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn eval(&self, t: f64) -> Result<(Complex64, Complex64), CurveError> {
        self.check_domain(t)?;
        Ok((self.f)(t))
    }
}

/// Midpoint parameter of a marker segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkerParam {
    pub s: f64,
    pub expected_angle: f64,
    pub side: Side,
}

pub type MarkerParams = Vec<MarkerParam>;

/// `eta(t) = p_n + (t - n)(p_{n+1} - p_n)` on `[n, n+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalCurve {
    first: i64,
    nodes: Vec<Complex64>,
}

impl PolygonalCurve {
    pub fn from_nodes(first: i64, nodes: Vec<Complex64>) -> Result<Self, CurveError> {
        if nodes.len() < 2 {
            return Err(CurveError::TooFewNodes);
        }
        Ok(Self { first, nodes })
    }

    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn last_index(&self) -> i64 {
        self.first + self.nodes.len() as i64 - 1
    }

    pub fn node(&self, n: i64) -> Option<Complex64> {
        let k = n - self.first;
        (k >= 0).then(|| self.nodes.get(k as usize).copied()).flatten()
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// Direction `p_{n+1} - p_n` of the piece starting at node `n`.
    pub fn step(&self, n: i64) -> Option<Complex64> {
        Some(self.node(n + 1)? - self.node(n)?)
    }

    /// Index of the piece containing `t`; the last node belongs to the last piece.
    fn piece(&self, t: f64) -> i64 {
        (t.floor() as i64).clamp(self.first, self.last_index() - 1)
    }
}

impl CurveSampler for PolygonalCurve {
    fn domain(&self) -> (f64, f64) {
        (self.first as f64, self.last_index() as f64)
    }

    fn eval(&self, t: f64) -> Result<(Complex64, Complex64), CurveError> {
        self.check_domain(t)?;
        let n = self.piece(t);
        let a = self.node(n).expect("piece in range");
        let d = self.step(n).expect("piece in range");
        let s = t - n as f64;
        let value = if s == 0.0 {
            a
        } else if s == 1.0 {
            self.node(n + 1).expect("piece in range")
        } else {
            a + d * s
        };
        Ok((value, d))
    }
}

pub fn build_polygonal(seq: &DoubleSequence) -> Result<(PolygonalCurve, MarkerParams), CurveError> {
    let curve = PolygonalCurve::from_nodes(seq.first_index(), seq.points().to_vec())?;
    let markers = seq
        .markers()
        .iter()
        .map(|m| MarkerParam {
            s: m.index as f64 + 0.5,
            expected_angle: m.orientation.expected_angle(),
            side: m.side,
        })
        .collect();
    Ok((curve, markers))
}

/// Rows `t,re,im,d_re,d_im` at the given parameters.
pub fn sample_rows<S: CurveSampler>(curve: &S, ts: &[f64]) -> Result<Vec<[String; 5]>, CurveError> {
    use crate::export::fmt_f64;
    ts.iter()
        .map(|&t| {
            let (z, d) = curve.eval(t)?;
            Ok([fmt_f64(t), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(d.re), fmt_f64(d.im)])
        })
        .collect()
}

/// `count` equally spaced parameters covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * (i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}
