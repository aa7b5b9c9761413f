//! C¹ curve obtained from the polygonal curve by blending each corner.
//!
//! On the window `[n - δ, n + δ]` the derivative interpolates linearly from
//! the incoming direction `d1` to the outgoing direction `d2`. The value is the
//! antiderivative anchored at whichever window end is nearer, written so that
//! it coincides bit for bit with the adjacent linear piece at that end.

use num_complex::Complex64;
use thiserror::Error;

use crate::curve::{CurveError, CurveSampler, PolygonalCurve};

/// Cap on every blend half-width, so blends stay clear of the midpoints `n ± 1/2`.
pub const MAX_HALF_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothingError {
    #[error("parameter {t} is outside the blend window [{lo}, {hi}]")]
    OutsideWindow { t: f64, lo: f64, hi: f64 },
    #[error("budget must be positive, got {0}")]
    Budget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerBlend {
    pub n: i64,
    pub delta: f64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub z: Complex64,
    /// Node before the corner, so the left half reproduces `eta` exactly.
    pub prev: Complex64,
}

impl CornerBlend {
    /// Blend for a corner with explicit data; `prev` defaults to `z - d1`.
    pub fn new(n: i64, delta: f64, d1: Complex64, d2: Complex64, z: Complex64) -> Self {
        Self {
            n,
            delta,
            d1,
            d2,
            z,
            prev: z - d1,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        let n = self.n as f64;
        (n - self.delta, n + self.delta)
    }

    /// Value and derivative inside the window.
    pub fn eval(&self, t: f64) -> Result<(Complex64, Complex64), SmoothingError> {
        let (lo, hi) = self.window();
        if !(t >= lo && t <= hi) {
            return Err(SmoothingError::OutsideWindow { t, lo, hi });
        }
        let n = self.n as f64;
        let two_delta = 2.0 * self.delta;
        if t < n {
            let u = (t - lo) / two_delta;
            let value = self.prev + self.d1 * (t - (n - 1.0)) + (self.d2 - self.d1) * (self.delta * u * u);
            Ok((value, self.d1 * (1.0 - u) + self.d2 * u))
        } else {
            let v = (hi - t) / two_delta;
            let value = self.z + self.d2 * (t - n) - (self.d1 - self.d2) * (self.delta * v * v);
            Ok((value, self.d1 * v + self.d2 * (1.0 - v)))
        }
    }

    /// Largest distance from the polygonal corner, `δ|d1 - d2|/4`.
    pub fn max_deviation(&self) -> f64 {
        self.delta * (self.d1 - self.d2).norm() / 4.0
    }
}

/// Half-width keeping the corner deviation below `budget`.
pub fn choose_delta(budget: f64, d1: Complex64, d2: Complex64) -> Result<f64, SmoothingError> {
    if !(budget > 0.0) {
        return Err(SmoothingError::Budget(budget));
    }
    Ok(MAX_HALF_WIDTH.min(budget / (d1.norm() + d2.norm())))
}

/// Per-corner error budget `1/(|n| + 1)`.
pub fn corner_budget(n: i64) -> f64 {
    1.0 / (n.unsigned_abs() as f64 + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCurve {
    base: PolygonalCurve,
    blends: Vec<CornerBlend>,
}

impl SmoothCurve {
    pub fn base(&self) -> &PolygonalCurve {
        &self.base
    }

    /// One blend per interior node, in increasing order.
    pub fn blends(&self) -> &[CornerBlend] {
        &self.blends
    }

    pub fn blend_at(&self, n: i64) -> Option<&CornerBlend> {
        let k = n - self.base.first_index() - 1;
        (k >= 0).then(|| self.blends.get(k as usize)).flatten()
    }
}

pub fn smooth_curve(base: &PolygonalCurve) -> SmoothCurve {
    let blends = (base.first_index() + 1..base.last_index())
        .map(|n| {
            let d1 = base.step(n - 1).expect("interior node");
            let d2 = base.step(n).expect("interior node");
            let delta = choose_delta(corner_budget(n), d1, d2).expect("budget is positive");
            CornerBlend {
                n,
                delta,
                d1,
                d2,
                z: base.node(n).expect("interior node"),
                prev: base.node(n - 1).expect("interior node"),
            }
        })
        .collect();
    SmoothCurve {
        base: base.clone(),
        blends,
    }
}

impl CurveSampler for SmoothCurve {
    fn domain(&self) -> (f64, f64) {
        self.base.domain()
    }

    fn eval(&self, t: f64) -> Result<(Complex64, Complex64), CurveError> {
        self.check_domain(t)?;
        let n = t.round() as i64;
        if let Some(b) = self.blend_at(n) {
            let (lo, hi) = b.window();
            if t >= lo && t <= hi {
                return Ok(b.eval(t).expect("inside window"));
            }
        }
        self.base.eval(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn corner_example() {
        let b = CornerBlend::new(0, 0.1, c(1.0, 1.0), c(1.0, -1.0), c(0.0, 0.0));
        let (v, d) = b.eval(-0.1).unwrap();
        assert!(close(v, c(-0.1, -0.1), 1e-15) && d == c(1.0, 1.0));
        let (v, d) = b.eval(0.0).unwrap();
        assert!(close(v, c(0.0, -0.05), 1e-15), "{v}");
        assert!(close(d, c(1.0, 0.0), 1e-15));
        let (v, d) = b.eval(0.1).unwrap();
        assert!(close(v, c(0.1, -0.1), 1e-15) && d == c(1.0, -1.0));
        assert!(b.eval(0.2).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(choose_delta(1.0, c(1.0, 0.0), c(0.0, 1.0)).unwrap(), 0.25);
        assert_eq!(choose_delta(0.01, c(1.0, 0.0), c(0.0, 1.0)).unwrap(), 0.005);
        assert_eq!(choose_delta(0.1, c(0.01, 0.0), c(0.0, 0.01)).unwrap(), 0.25);
        assert!(choose_delta(0.0, c(1.0, 0.0), c(0.0, 1.0)).is_err());
    }

    #[test]
    fn three_node_curve() {
        let base = PolygonalCurve::from_nodes(0, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)]).unwrap();
        let sigma = smooth_curve(&base);
        for s in [0.5, 1.5] {
            assert_eq!(sigma.eval(s).unwrap(), base.eval(s).unwrap());
        }
        let b = sigma.blend_at(1).unwrap();
        let (lo, hi) = b.window();
        for t in [lo, hi] {
            let (v, d) = sigma.eval(t).unwrap();
            let (w, e) = base.eval(t).unwrap();
            assert_eq!(v, w);
            assert!((d - e).norm() <= 1e-12);
        }
        let min = crate::curve::linspace(0.0, 2.0, 10_001)
            .into_iter()
            .map(|t| sigma.eval(t).unwrap().1.norm())
            .fold(f64::INFINITY, f64::min);
        assert!(min >= 0.5f64.sqrt() - 1e-12);
    }
}
