//! A single polynomial tracking a curve and its derivative under a weighted
//! error schedule on `[-T, T]`.
//!
//! The polynomial is stored in the Chebyshev basis of `x = t/T`. The
//! derivative is fitted by discrete least squares on `4(d+1)` Chebyshev–Gauss
//! nodes, which reduces to a discrete cosine sum, and then integrated term by
//! term. Fitting the value directly converges badly for the derivative near
//! `±T`, where `T_k'(±1) = k^2` amplifies the slowly decaying tail of a curve
//! that is only C¹. Certification uses a shifted cosine grid that never meets
//! the fitting nodes.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveError, CurveSampler, MarkerParam};

/// Degree of the first attempt; attempts double from here.
pub const MIN_DEGREE: usize = 8;
pub const DEFAULT_MAX_DEGREE: usize = 4096;

/// Factor applied to the schedule at a tightened marker.
pub const TIGHTEN_FACTOR: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("interval [-{t}, {t}] is not inside the curve domain [{lo}, {hi}]")]
    Interval { t: f64, lo: f64, hi: f64 },
    #[error("max_degree must be at least {MIN_DEGREE}, got {0}")]
    MaxDegree(usize),
    #[error(
        "no degree up to {max_degree} meets the schedule; best weighted errors: value {value_err:.3e}, derivative {deriv_err:.3e}"
    )]
    ScheduleNotMet {
        max_degree: usize,
        value_err: f64,
        deriv_err: f64,
        best: Box<PolynomialApproximant>,
    },
    #[error("parameter {t} is outside [-{bound}, {bound}]")]
    Extrapolation { t: f64, bound: f64 },
    #[error("marker at {s} is outside [-T + 1, T - 1] = [{lo}, {hi}]")]
    MarkerRange { s: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSchedule {
    /// `min(1, amplitude / (1 + (t/width)^2))`.
    InverseQuadratic {
        amplitude: f64,
        width: f64,
    },
    Uniform {
        eps: f64,
    },
}

/// Positive weight `ε(t)`, optionally tightened around marker parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSchedule {
    pub base: BaseSchedule,
    /// Centres where `ε` is scaled down to [`TIGHTEN_FACTOR`], recovering linearly within distance 1.
    pub tightened: Vec<f64>,
}

impl Default for ErrorSchedule {
    fn default() -> Self {
        Self::inverse_quadratic(1.0, 1.0)
    }
}

impl ErrorSchedule {
    pub fn inverse_quadratic(amplitude: f64, width: f64) -> Self {
        Self {
            base: BaseSchedule::InverseQuadratic { amplitude, width },
            tightened: Vec::new(),
        }
    }

    pub fn uniform(eps: f64) -> Self {
        Self {
            base: BaseSchedule::Uniform { eps },
            tightened: Vec::new(),
        }
    }

    pub fn eps(&self, t: f64) -> f64 {
        let base = match self.base {
            BaseSchedule::InverseQuadratic { amplitude, width } => {
                let x = t / width;
                (amplitude / (1.0 + x * x)).min(1.0)
            }
            BaseSchedule::Uniform { eps } => eps,
        };
        self.tightened.iter().fold(base, |e, &s| {
            let bump = (1.0 - (t - s).abs()).max(0.0);
            e * (1.0 - (1.0 - TIGHTEN_FACTOR) * bump)
        })
    }

    pub fn tighten(&mut self, s: f64) {
        self.tightened.push(s);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialApproximant {
    t: f64,
    coeffs: Vec<Complex64>,
    deriv: Vec<Complex64>,
    /// Largest `|f - σ| / ε` on the certification grid.
    pub cert_value_err: f64,
    /// Largest `|f' - σ'| / ε` on the certification grid.
    pub cert_deriv_err: f64,
}

/// Serialized form of an approximant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximantJson {
    #[serde(rename = "T")]
    pub t: f64,
    pub degree: usize,
    pub coeff_re: Vec<f64>,
    pub coeff_im: Vec<f64>,
    pub cert_value_err: f64,
    pub cert_deriv_err: f64,
}

fn chebyshev_derivative(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    if n <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let mut d = vec![Complex64::new(0.0, 0.0); n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + c[k] * (2.0 * k as f64);
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Clenshaw summation of `Σ c_k T_k(x)` for real `x`.
fn clenshaw(c: &[Complex64], x: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + b1 * (2.0 * x) - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + b1 * x - b2
}

fn clenshaw_complex(c: &[Complex64], x: Complex64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + b1 * (x * 2.0) - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + b1 * x - b2
}

impl PolynomialApproximant {
    pub fn from_coefficients(t: f64, mut coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        let deriv = chebyshev_derivative(&coeffs).into_iter().map(|d| d / t).collect();
        Self {
            t,
            coeffs,
            deriv,
            cert_value_err: f64::NAN,
            cert_deriv_err: f64::NAN,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.t
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Chebyshev coefficients in `x = t/T`.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> Result<(Complex64, Complex64), ApproxError> {
        if !(t.abs() <= self.t) {
            return Err(ApproxError::Extrapolation { t, bound: self.t });
        }
        let x = t / self.t;
        Ok((clenshaw(&self.coeffs, x), clenshaw(&self.deriv, x)))
    }

    /// Value and derivative at a complex parameter (the polynomial is entire).
    pub fn eval_complex(&self, w: Complex64) -> (Complex64, Complex64) {
        let x = w / self.t;
        (clenshaw_complex(&self.coeffs, x), clenshaw_complex(&self.deriv, x))
    }

    pub fn to_json(&self) -> ApproximantJson {
        ApproximantJson {
            t: self.t,
            degree: self.degree(),
            coeff_re: self.coeffs.iter().map(|c| c.re).collect(),
            coeff_im: self.coeffs.iter().map(|c| c.im).collect(),
            cert_value_err: self.cert_value_err,
            cert_deriv_err: self.cert_deriv_err,
        }
    }

    pub fn from_json(json: &ApproximantJson) -> Self {
        let coeffs = json
            .coeff_re
            .iter()
            .zip(&json.coeff_im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        let mut f = Self::from_coefficients(json.t, coeffs);
        f.cert_value_err = json.cert_value_err;
        f.cert_deriv_err = json.cert_deriv_err;
        f
    }

    fn trimmed(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = 4.0 * f64::EPSILON * scale;
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() <= cut) {
            coeffs.pop();
        }
        Self::from_coefficients(self.t, coeffs)
    }
}

impl CurveSampler for PolynomialApproximant {
    fn domain(&self) -> (f64, f64) {
        (-self.t, self.t)
    }

    fn eval(&self, t: f64) -> Result<(Complex64, Complex64), CurveError> {
        self.check_domain(t)?;
        let x = t / self.t;
        Ok((clenshaw(&self.coeffs, x), clenshaw(&self.deriv, x)))
    }
}

/// Degree-`degree` fit built from the derivative: `σ'` is fitted by the same
/// discrete least squares at degree `degree - 1`, integrated term by term, and
/// the constant is the zeroth coefficient of the remaining value residual.
fn fit_degree<S: CurveSampler>(curve: &S, t: f64, degree: usize) -> Result<Vec<Complex64>, CurveError> {
    let nodes = fitting_nodes(degree);
    let m = nodes.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut b = vec![zero; degree + 1];
    let mut samples = Vec::with_capacity(m);
    for x in nodes {
        let (z, dz) = curve.eval(t * x)?;
        samples.push((x, z));
        let (mut prev, mut cur) = (1.0, x);
        b[0] += dz;
        if degree >= 1 {
            b[1] += dz * x;
        }
        for bk in b.iter_mut().skip(2) {
            let next = 2.0 * x * cur - prev;
            prev = cur;
            cur = next;
            *bk += dz * next;
        }
    }
    let scale = 2.0 / m as f64;
    for bk in b.iter_mut() {
        *bk *= scale;
    }
    b[0] *= 0.5;
    b[degree] = zero;
    // ∫ Σ b_k T_k dx, scaled by dt/dx = T
    let mut a = vec![zero; degree + 1];
    for k in 1..=degree {
        let lower = if k == 1 { b[0] * 2.0 } else { b[k - 1] };
        let upper = if k < degree { b[k + 1] } else { zero };
        a[k] = (lower - upper) * (t / (2.0 * k as f64));
    }
    let mut offset = zero;
    for (x, z) in &samples {
        offset += *z - clenshaw(&a, *x);
    }
    a[0] = offset / m as f64;
    Ok(a)
}

/// Chebyshev–Gauss nodes in `x = t/T` used by the degree-`degree` fit.
pub fn fitting_nodes(degree: usize) -> Vec<f64> {
    let m = 4 * (degree + 1);
    (0..m).map(|i| (PI * (i as f64 + 0.5) / m as f64).cos()).collect()
}

/// Parameters `T cos(π(i + 1/4)/count)`; never a fitting node for even degrees.
pub fn certification_grid(t: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| t * (PI * (i as f64 + 0.25) / count as f64).cos())
        .collect()
}

/// Largest weighted value and derivative errors of `f` against `curve` on `ts`.
pub fn weighted_errors<S: CurveSampler>(
    f: &PolynomialApproximant,
    curve: &S,
    schedule: &ErrorSchedule,
    ts: &[f64],
) -> Result<(f64, f64), ApproxError> {
    let mut worst = (0.0f64, 0.0f64);
    for &t in ts {
        let (z, dz) = curve.eval(t)?;
        let (w, dw) = f.eval(t)?;
        let e = schedule.eps(t);
        worst.0 = worst.0.max((w - z).norm() / e);
        worst.1 = worst.1.max((dw - dz).norm() / e);
    }
    Ok(worst)
}

/// Lowest degree in the doubling sequence `8, 16, ...` (capped at `max_degree`)
/// whose weighted errors on a `4d`-point certification grid are at most 1.
pub fn fit<S: CurveSampler>(
    curve: &S,
    t: f64,
    schedule: &ErrorSchedule,
    max_degree: usize,
) -> Result<PolynomialApproximant, ApproxError> {
    if max_degree < MIN_DEGREE {
        return Err(ApproxError::MaxDegree(max_degree));
    }
    let (lo, hi) = curve.domain();
    if !(t > 0.0 && -t >= lo && t <= hi) {
        return Err(ApproxError::Interval { t, lo, hi });
    }
    let mut best: Option<PolynomialApproximant> = None;
    let mut degree = MIN_DEGREE;
    loop {
        let mut f = PolynomialApproximant::from_coefficients(t, fit_degree(curve, t, degree)?);
        let grid = certification_grid(t, 4 * degree);
        let (ve, de) = weighted_errors(&f, curve, schedule, &grid)?;
        f.cert_value_err = ve;
        f.cert_deriv_err = de;
        if ve <= 1.0 && de <= 1.0 {
            let mut g = f.trimmed();
            let (gv, gd) = weighted_errors(&g, curve, schedule, &grid)?;
            if gv <= 1.0 && gd <= 1.0 {
                g.cert_value_err = gv;
                g.cert_deriv_err = gd;
                return Ok(g);
            }
            return Ok(f);
        }
        if best
            .as_ref()
            .is_none_or(|b| ve.max(de) < b.cert_value_err.max(b.cert_deriv_err))
        {
            best = Some(f);
        }
        if degree >= max_degree {
            let best = best.expect("at least one attempt");
            return Err(ApproxError::ScheduleNotMet {
                max_degree,
                value_err: best.cert_value_err,
                deriv_err: best.cert_deriv_err,
                best: Box::new(best),
            });
        }
        degree = (degree * 2).min(max_degree);
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerCheck {
    pub s: f64,
    pub expected_angle: f64,
    pub angle: f64,
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerReport {
    pub tol: f64,
    pub checks: Vec<MarkerCheck>,
}

impl MarkerReport {
    pub fn failures(&self) -> Vec<&MarkerCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Compares `arg f'(s)` with each marker's expected angle.
pub fn marker_angle_certify<S: CurveSampler>(
    f: &S,
    markers: &[MarkerParam],
    tol: f64,
) -> Result<MarkerReport, ApproxError> {
    let (lo, hi) = f.domain();
    let (lo, hi) = (lo + 1.0, hi - 1.0);
    let mut checks = Vec::with_capacity(markers.len());
    for m in markers {
        if !(m.s >= lo && m.s <= hi) {
            return Err(ApproxError::MarkerRange { s: m.s, lo, hi });
        }
        let angle = f.eval(m.s)?.1.arg();
        let deviation = wrap_angle(angle - m.expected_angle).abs();
        checks.push(MarkerCheck {
            s: m.s,
            expected_angle: m.expected_angle,
            angle,
            deviation,
            pass: deviation <= tol,
        });
    }
    Ok(MarkerReport { tol, checks })
}
