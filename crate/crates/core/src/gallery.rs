//! Closed-form maximal curves and the strip transfer.
//!
//! | id | curve | ends |
//! |----|-------|------|
//! | 1 | `e^{-t^2+it}` | 0, 0 |
//! | 2 | `η + i(η²-1) sin(exp(-(η²-1)^{-1}))`, `η = ψ^{-1}(t)` | -1, +1 |
//! | 3 | `e^{t+it}` | 0, ∞ |
//! | 4 | `e^{t^2+it}` | ∞, ∞ |

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::approx::PolynomialApproximant;
use crate::curve::{CurveError, CurveSampler};
use crate::sphere::SpherePoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GalleryError {
    #[error("unknown example {0}; expected 1, 2, 3 or 4")]
    UnknownExample(String),
    #[error("{0} lies on a slit of the doubly slit plane")]
    OnSlit(Complex64),
    #[error("strip half-width must be positive, got {0}")]
    Width(f64),
    #[error("h({u}) = {h} is outside the approximation interval [-{t}, {t}]")]
    OutOfInterval { u: f64, h: f64, t: f64 },
}

/// `ψ(s) = s exp(1/(1 - s²))` on `(-1, 1)`.
pub fn psi(s: f64) -> f64 {
    s * (1.0 / (1.0 - s * s)).exp()
}

pub fn psi_prime(s: f64) -> f64 {
    let q = 1.0 - s * s;
    (1.0 / q).exp() * (1.0 + 2.0 * s * s / (q * q))
}

/// Inverse of [`psi`] by bisection on `[0, 1)` (ψ is odd) and a Newton polish.
pub fn psi_inverse(x: f64) -> f64 {
    if x == 0.0 || x.is_nan() {
        return x;
    }
    if x < 0.0 {
        return -psi_inverse(-x);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = psi_prime(s);
        if !d.is_finite() || d == 0.0 {
            break;
        }
        let next = s - (psi(s) - x) / d;
        if next > lo && next < hi {
            s = next;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Example {
    One,
    Two,
    Three,
    Four,
}

impl Example {
    pub const ALL: [Example; 4] = [Example::One, Example::Two, Example::Three, Example::Four];

    pub fn id(self) -> u8 {
        match self {
            Example::One => 1,
            Example::Two => 2,
            Example::Three => 3,
            Example::Four => 4,
        }
    }
}

impl std::str::FromStr for Example {
    type Err = GalleryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(Example::One),
            "2" => Ok(Example::Two),
            "3" => Ok(Example::Three),
            "4" => Ok(Example::Four),
            other => Err(GalleryError::UnknownExample(other.to_string())),
        }
    }
}

/// A closed-form curve on the whole real line with its declared ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NamedCurve {
    pub example: Example,
    pub name: &'static str,
    pub initial_end: SpherePoint,
    pub terminal_end: SpherePoint,
}

pub fn example_curve(example: Example) -> NamedCurve {
    let zero = SpherePoint::Finite(Complex64::new(0.0, 0.0));
    let (name, initial_end, terminal_end) = match example {
        Example::One => ("exp(-t^2 + it)", zero, zero),
        Example::Two => (
            "eta + i(eta^2 - 1) sin(exp(-1/(eta^2 - 1))), eta = psi^-1(t)",
            SpherePoint::Finite(Complex64::new(-1.0, 0.0)),
            SpherePoint::Finite(Complex64::new(1.0, 0.0)),
        ),
        Example::Three => ("exp(t + it)", zero, SpherePoint::Infinity),
        Example::Four => ("exp(t^2 + it)", SpherePoint::Infinity, SpherePoint::Infinity),
    };
    NamedCurve {
        example,
        name,
        initial_end,
        terminal_end,
    }
}

/// Example 2 in its inner parameter `η ∈ (-1, 1)`: value and `dγ/dη`.
pub fn example_two_inner(eta: f64) -> (Complex64, Complex64) {
    let u = eta * eta - 1.0;
    let w = (-1.0 / u).exp();
    let (sw, cw) = w.sin_cos();
    let value = Complex64::new(eta, u * sw);
    // d/dη [u sin w] = 2η sin w + u cos w · w · 2η/u²
    let deriv = Complex64::new(1.0, 2.0 * eta * sw + 2.0 * eta * w * cw / u);
    (value, deriv)
}

impl NamedCurve {
    /// Value and exact derivative at `t`.
    pub fn value_and_derivative(&self, t: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        match self.example {
            Example::One => {
                let z = Complex64::new(-t * t, t).exp();
                (z, Complex64::new(-2.0 * t, 1.0) * z)
            }
            Example::Two => {
                let eta = psi_inverse(t);
                let (z, dz) = example_two_inner(eta);
                (z, dz / psi_prime(eta))
            }
            Example::Three => {
                let z = Complex64::new(t, t).exp();
                (z, (1.0 + i) * z)
            }
            Example::Four => {
                let z = Complex64::new(t * t, t).exp();
                (z, Complex64::new(2.0 * t, 1.0) * z)
            }
        }
    }

    /// Closed form of `arg γ'(t)` on the continuous branch through `t = 0`,
    /// where one exists in elementary terms.
    pub fn tangent_argument(&self, t: f64) -> Option<f64> {
        match self.example {
            Example::One => Some(t + 1f64.atan2(-2.0 * t)),
            Example::Three => Some(t + PI / 4.0),
            Example::Four => Some(t + 1f64.atan2(2.0 * t)),
            Example::Two => None,
        }
    }
}

impl CurveSampler for NamedCurve {
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn eval(&self, t: f64) -> Result<(Complex64, Complex64), CurveError> {
        self.check_domain(t)?;
        Ok(self.value_and_derivative(t))
    }
}

/// Conformal map of `C \ ([i, i∞) ∪ [-i, -i∞))` onto the strip `|Im w| < c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripMap {
    pub c: f64,
}

fn asinh_principal(z: Complex64) -> Complex64 {
    // odd form avoids cancellation in z + sqrt(z² + 1) for Re z < 0
    if z.re < 0.0 {
        return -asinh_principal(-z);
    }
    (z + (z * z + 1.0).sqrt()).ln()
}

pub fn on_slit(z: Complex64) -> bool {
    z.re == 0.0 && z.im.abs() >= 1.0
}

impl StripMap {
    pub fn new(c: f64) -> Result<Self, GalleryError> {
        if c > 0.0 && c.is_finite() {
            Ok(Self { c })
        } else {
            Err(GalleryError::Width(c))
        }
    }

    /// `h(z) = (2c/π) asinh z`.
    pub fn forward(&self, z: Complex64) -> Result<Complex64, GalleryError> {
        if on_slit(z) {
            return Err(GalleryError::OnSlit(z));
        }
        Ok(asinh_principal(z) * (2.0 * self.c / PI))
    }

    /// `h^{-1}(w) = sinh(π w / (2c))`.
    pub fn inverse(&self, w: Complex64) -> Complex64 {
        (w * (PI / (2.0 * self.c))).sinh()
    }

    /// `h'(u)` for real `u`; real and positive.
    pub fn derivative_real(&self, u: f64) -> f64 {
        (2.0 * self.c / PI) / (1.0 + u * u).sqrt()
    }
}

/// `g(u) = f(h(u))` and `g'(u) = f'(h(u)) h'(u)` for real `u`.
pub fn transfer(f: &PolynomialApproximant, map: &StripMap, u: f64) -> Result<(Complex64, Complex64), GalleryError> {
    let h = map.forward(Complex64::new(u, 0.0))?.re;
    let t = f.half_width();
    let (value, deriv) = f.eval(h).map_err(|_| GalleryError::OutOfInterval { u, h, t })?;
    Ok((value, deriv * map.derivative_real(u)))
}

/// Largest `c = 2^{-k}`, `k = 0..7`, for which `f'` stays zero-free on a grid
/// of the rectangle `[-T, T] × [-c, c]`: along each vertical grid line
/// `|f'(u + iv) - f'(u)| < |f'(u)|`, so `f'` cannot vanish there.
pub fn strip_half_width(f: &PolynomialApproximant, columns: usize, rows: usize) -> Option<f64> {
    let t = f.half_width();
    let us = crate::curve::linspace(-t, t, columns.max(2));
    let base: Vec<Complex64> = us.iter().map(|&u| f.eval_complex(Complex64::new(u, 0.0)).1).collect();
    (0..8).map(|k| 0.5f64.powi(k)).find(|&c| {
        us.iter().zip(&base).all(|(&u, &d0)| {
            d0.norm() > 0.0
                && crate::curve::linspace(-c, c, rows.max(2)).into_iter().all(|v| {
                    let d = f.eval_complex(Complex64::new(u, v)).1;
                    (d - d0).norm() < d0.norm()
                })
        })
    })
}

/// Slit endpoint check `sinh(iπ/2) = i`.
pub fn slit_endpoint() -> Complex64 {
    Complex64::new(0.0, FRAC_PI_2).sinh()
}

/// Distance below which a declared end counts as verified.
pub const END_TOL: f64 = 1e-3;
/// Largest relative error allowed between the derivative and a central difference.
pub const FD_TOL: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndCheck {
    pub end: String,
    /// `t` for the curve parameter, `eta` for Example 2's inner parameter.
    pub parameter: &'static str,
    pub window: (f64, f64),
    pub distance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleReport {
    pub id: u8,
    pub name: &'static str,
    pub initial_end: String,
    pub terminal_end: String,
    pub ends: Vec<EndCheck>,
    pub fd_max_rel_err: f64,
    pub fd_pass: bool,
    /// Unwrapped growth of `arg γ'` over `[0, 10]`.
    pub profile_growth: Option<f64>,
    pub expected_growth: Option<f64>,
    /// Range of `arg dγ/dη` over `η ∈ [0.8, 0.9]` (Example 2 only).
    pub oscillation_spread: Option<f64>,
    pub profile_pass: bool,
    pub pass: bool,
}

fn end_check<S: CurveSampler>(
    curve: &S,
    end: SpherePoint,
    parameter: &'static str,
    window: (f64, f64),
) -> Result<EndCheck, crate::analysis::AnalysisError> {
    let target = crate::continuum::NetLevel::target(1, crate::sphere::PointSet::from_points([end]));
    let r = crate::analysis::cluster_estimate(curve, window, 1001, &target)?;
    Ok(EndCheck {
        end: end.to_string(),
        parameter,
        window,
        distance: r.hausdorff_to_target,
        pass: r.hausdorff_to_target < END_TOL,
    })
}

/// Example 2 near its ends, in the inner parameter. `exp(1/(1 - η²))`
/// overflows once `|η| > 0.9993`, so the check uses the closed-form envelope
/// `|γ ∓ 1| <= (1 - |η|) + (1 - η²)` and `chordal(z, ±1) <= √2 |z ∓ 1|`.
fn example_two_end_bound(end: SpherePoint, window: (f64, f64)) -> EndCheck {
    let distance = crate::curve::linspace(window.0, window.1, 1001)
        .into_iter()
        .map(|eta| std::f64::consts::SQRT_2 * ((1.0 - eta.abs()) + (1.0 - eta * eta)))
        .fold(0.0, f64::max);
    EndCheck {
        end: end.to_string(),
        parameter: "eta",
        window,
        distance,
        pass: distance < END_TOL,
    }
}

/// Largest relative error of the derivative against central differences at
/// 1,000 seeded random points of `[-5, 5]`.
pub fn finite_difference_error(curve: &NamedCurve, seed: u64) -> f64 {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 1000 {
        let t: f64 = rng.random_range(-5.0..5.0);
        if curve.example == Example::Two && psi_inverse(t).abs() > 0.99 {
            continue;
        }
        let d = curve.value_and_derivative(t).1;
        let fd =
            (curve.value_and_derivative(t + FD_STEP).0 - curve.value_and_derivative(t - FD_STEP).0) / (2.0 * FD_STEP);
        worst = worst.max((fd - d).norm() / d.norm());
        checked += 1;
    }
    worst
}

/// Ends, derivative and tangent-argument checks for one example.
pub fn verify_example(example: Example) -> Result<ExampleReport, crate::analysis::AnalysisError> {
    use crate::analysis::tangent_arg_profile;
    use crate::curve::linspace;

    let curve = example_curve(example);
    let ends = if example == Example::Two {
        vec![
            example_two_end_bound(curve.initial_end, (-0.9999, -0.9998)),
            example_two_end_bound(curve.terminal_end, (0.9998, 0.9999)),
        ]
    } else {
        vec![
            end_check(&curve, curve.initial_end, "t", (-20.0, -10.0))?,
            end_check(&curve, curve.terminal_end, "t", (10.0, 20.0))?,
        ]
    };
    let fd_max_rel_err = finite_difference_error(&curve, 0);
    let fd_pass = fd_max_rel_err < FD_TOL;

    let (profile_growth, expected_growth, oscillation_spread, profile_pass) = match example {
        Example::Two => {
            let args: Vec<f64> = linspace(0.8, 0.9, 10_001)
                .into_iter()
                .map(|eta| example_two_inner(eta).1.arg())
                .collect();
            let spread = args.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - args.iter().copied().fold(f64::INFINITY, f64::min);
            (None, None, Some(spread), spread >= FRAC_PI_2)
        }
        _ => {
            let prof = tangent_arg_profile(&curve, &linspace(0.0, 10.0, 10_001))?;
            let growth = prof[prof.len() - 1] - prof[0];
            let expected =
                curve.tangent_argument(10.0).expect("closed form") - curve.tangent_argument(0.0).expect("closed form");
            (Some(growth), Some(expected), None, (growth - expected).abs() < 1e-6)
        }
    };
    let pass = ends.iter().all(|e| e.pass) && fd_pass && profile_pass;
    Ok(ExampleReport {
        id: example.id(),
        name: curve.name,
        initial_end: curve.initial_end.to_string(),
        terminal_end: curve.terminal_end.to_string(),
        ends,
        fd_max_rel_err,
        fd_pass,
        profile_growth,
        expected_growth,
        oscillation_spread,
        profile_pass,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripReport {
    #[serde(rename = "T")]
    pub t: f64,
    pub degree: usize,
    pub c: f64,
    pub round_trip_max_err: f64,
    pub arg_identity_max_err: f64,
    pub slit_endpoint_exact: bool,
    pub origin_identity: bool,
    pub pass: bool,
}

/// Round-trip, argument-identity and slit checks for `g = f ∘ h`.
/// Round-trip samples have `|Re w| < 5c`, so `|sinh|` stays below about `e^8`.
const ROUND_TRIP_REACH: f64 = 5.0;

pub fn verify_strip(f: &PolynomialApproximant, map: &StripMap, seed: u64) -> Result<StripReport, GalleryError> {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut round_trip = 0.0f64;
    for _ in 0..1000 {
        let w = Complex64::new(
            map.c * rng.random_range(-ROUND_TRIP_REACH..ROUND_TRIP_REACH),
            map.c * rng.random_range(-0.99..0.99),
        );
        let back = map.forward(map.inverse(w))?;
        round_trip = round_trip.max((back - w).norm());
    }
    let mut arg_err = 0.0f64;
    for u in crate::curve::linspace(-10.0, 10.0, 1000) {
        let g = transfer(f, map, u)?.1;
        let h = map.forward(Complex64::new(u, 0.0))?.re;
        let fd = f
            .eval(h)
            .map_err(|_| GalleryError::OutOfInterval {
                u,
                h,
                t: f.half_width(),
            })?
            .1;
        arg_err = arg_err.max(crate::approx::wrap_angle(g.arg() - fd.arg()).abs());
    }
    let slit_endpoint_exact = slit_endpoint() == Complex64::i();
    let origin_identity = transfer(f, map, 0.0)?.0 == f.eval(0.0).expect("0 is inside").0;
    let pass = round_trip < 1e-12 && arg_err < 1e-12 && slit_endpoint_exact && origin_identity;
    Ok(StripReport {
        t: f.half_width(),
        degree: f.degree(),
        c: map.c,
        round_trip_max_err: round_trip,
        arg_identity_max_err: arg_err,
        slit_endpoint_exact,
        origin_identity,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::tangent_arg_profile;
    use crate::curve::linspace;

    #[test]
    fn example_values() {
        let one = example_curve(Example::One);
        let (z, d) = one.value_and_derivative(0.0);
        assert_eq!(z, Complex64::new(1.0, 0.0));
        assert_eq!(d, Complex64::new(0.0, 1.0));
        assert!((one.value_and_derivative(3.0).0.norm() - 1.2341e-4).abs() < 1e-8);
        let three = example_curve(Example::Three);
        assert!((three.value_and_derivative(-10.0).0.norm() - 4.54e-5).abs() < 1e-7);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0), 0.0);
        assert!((psi(0.5) - 1.896827).abs() < 1e-5);
        assert!((psi_inverse(1.896827) - 0.5).abs() < 1e-5);
        for s in [-0.95, -0.3, 0.1, 0.7, 0.9] {
            assert!((psi_inverse(psi(s)) - s).abs() < 1e-10);
        }
        for x in [-50.0, -1.0, 0.25, 3.0, 1e3] {
            let s = psi_inverse(x);
            assert!((psi(s) - x).abs() <= 1e-12 * f64::max(1.0, x.abs()), "{x}");
        }
    }

    #[test]
    fn psi_is_increasing() {
        let grid = linspace(-0.999, 0.999, 10_001);
        assert!(grid.iter().all(|&s| psi_prime(s) > 0.0));
        assert!(grid.windows(2).all(|w| psi(w[1]) > psi(w[0])));
    }

    #[test]
    fn strip_map_examples() {
        let h = StripMap::new(FRAC_PI_2).unwrap();
        assert_eq!(h.forward(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let v = h.forward(Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - 0.881374).abs() < 1e-6 && v.im == 0.0);
        assert_eq!(slit_endpoint(), Complex64::i());
        assert!(matches!(
            h.forward(Complex64::new(0.0, 1.0)),
            Err(GalleryError::OnSlit(_))
        ));
        assert!(h.forward(Complex64::new(0.0, 0.999)).is_ok());
        assert!(StripMap::new(0.0).is_err());
    }

    #[test]
    fn example_four_profile_growth() {
        let four = example_curve(Example::Four);
        let prof = tangent_arg_profile(&four, &linspace(0.0, 10.0, 10_001)).unwrap();
        let growth = prof[10_000] - prof[0];
        assert!((growth - (10.0 + 1f64.atan2(20.0) - FRAC_PI_2)).abs() < 1e-6);
        assert!(growth >= 8.0);
    }

    #[test]
    fn every_example_verifies() {
        for e in Example::ALL {
            let r = verify_example(e).unwrap();
            assert!(r.pass, "{r:#?}");
        }
    }

    #[test]
    fn unknown_example() {
        assert!("9".parse::<Example>().is_err());
        assert_eq!("3".parse::<Example>().unwrap(), Example::Three);
    }
}
