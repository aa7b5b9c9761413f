//! Verification surface: window images against target nets, tangent-argument
//! profiles and the marker-angle divergence diagnostic.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;
use thiserror::Error;

use crate::approx::wrap_angle;
use crate::continuum::NetLevel;
use crate::curve::{linspace, CurveError, CurveSampler, MarkerParam};
use crate::sequence::Side;
use crate::sphere::{hausdorff_points, SphereError, SpherePoint};

pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error("need at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("window [{0}, {1}] is empty or outside the curve domain")]
    Window(f64, f64),
    #[error("parameters must be increasing (at position {0})")]
    Unordered(usize),
    #[error("argument jumps by about pi between {0} and {1}; refine the parameter grid")]
    Spacing(f64, f64),
    #[error("the {side} side has {count} {kind} markers in range, need 2")]
    InsufficientMarkers {
        side: Side,
        kind: &'static str,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub window: (f64, f64),
    pub samples: usize,
    pub level: u32,
    pub hausdorff_to_target: f64,
    /// Sampled image of the window.
    pub points: Vec<(f64, f64)>,
}

/// Samples `curve` uniformly on `window` and measures the chordal Hausdorff
/// distance from the image to `target`.
pub fn cluster_estimate<S: CurveSampler + ?Sized>(
    curve: &S,
    window: (f64, f64),
    samples: usize,
    target: &NetLevel,
) -> Result<ClusterReport, AnalysisError> {
    if samples < MIN_SAMPLES {
        return Err(AnalysisError::TooFewSamples(samples));
    }
    let (lo, hi) = curve.domain();
    if !(window.0 <= window.1 && window.0 >= lo && window.1 <= hi) {
        return Err(AnalysisError::Window(window.0, window.1));
    }
    let mut image = Vec::with_capacity(samples);
    for t in linspace(window.0, window.1, samples) {
        image.push(curve.eval(t)?.0);
    }
    let cloud: Vec<SpherePoint> = image.iter().map(|&z| SpherePoint::from(z)).collect();
    let targets: Vec<SpherePoint> = target.points.iter().copied().collect();
    let hausdorff_to_target = hausdorff_points(&cloud, &targets)?;
    Ok(ClusterReport {
        window,
        samples,
        level: target.level,
        hausdorff_to_target,
        points: image.iter().map(|z| (z.re, z.im)).collect(),
    })
}

/// Continuous branch of `arg curve'(t)` along the ordered parameters `ts`.
///
/// Every step is cross-checked through the midpoint; a disagreement means the
/// argument may have turned by π or more and the grid is rejected.
pub fn tangent_arg_profile<S: CurveSampler + ?Sized>(curve: &S, ts: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let mut out = Vec::with_capacity(ts.len());
    let arg_at = |t: f64| -> Result<f64, AnalysisError> { Ok(curve.eval(t)?.1.arg()) };
    let Some(&t0) = ts.first() else {
        return Ok(out);
    };
    let mut prev_raw = arg_at(t0)?;
    out.push(prev_raw);
    for i in 1..ts.len() {
        if !(ts[i] > ts[i - 1]) {
            return Err(AnalysisError::Unordered(i));
        }
        let raw = arg_at(ts[i])?;
        let mid = arg_at(0.5 * (ts[i - 1] + ts[i]))?;
        let step = wrap_angle(raw - prev_raw);
        let via_mid = wrap_angle(mid - prev_raw) + wrap_angle(raw - mid);
        if (step - via_mid).abs() > 1e-9 || step.abs() >= PI * (1.0 - 1e-12) {
            return Err(AnalysisError::Spacing(ts[i - 1], ts[i]));
        }
        let guess = out[i - 1] + step;
        let k = ((guess - raw) / (2.0 * PI)).round();
        out.push(raw + 2.0 * PI * k);
        prev_raw = raw;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerAngle {
    pub s: f64,
    pub side: Side,
    pub expected_angle: f64,
    pub angle: f64,
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideDivergence {
    pub side: Side,
    pub markers: usize,
    /// Largest minus smallest marker angle.
    pub spread: f64,
    /// Changes between near-0 and near-π/2 classes along increasing `s`.
    pub oscillations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub tol: f64,
    pub angles: Vec<MarkerAngle>,
    pub sides: Vec<SideDivergence>,
    pub pass: bool,
}

/// Marker-angle alternation test for the divergence of `arg curve'`.
pub fn tangent_divergence_report<S: CurveSampler + ?Sized>(
    curve: &S,
    markers: &[MarkerParam],
    tol: f64,
) -> Result<DivergenceReport, AnalysisError> {
    let (lo, hi) = curve.domain();
    let mut in_range: Vec<&MarkerParam> = markers.iter().filter(|m| m.s >= lo && m.s <= hi).collect();
    in_range.sort_by(|a, b| a.s.total_cmp(&b.s));
    for side in [Side::Minus, Side::Plus] {
        for (kind, angle) in [("horizontal", 0.0), ("vertical", FRAC_PI_2)] {
            let count = in_range
                .iter()
                .filter(|m| m.side == side && m.expected_angle == angle)
                .count();
            if count < 2 {
                return Err(AnalysisError::InsufficientMarkers { side, kind, count });
            }
        }
    }
    let mut angles = Vec::with_capacity(in_range.len());
    for m in &in_range {
        let angle = curve.eval(m.s)?.1.arg();
        let deviation = wrap_angle(angle - m.expected_angle).abs();
        angles.push(MarkerAngle {
            s: m.s,
            side: m.side,
            expected_angle: m.expected_angle,
            angle,
            deviation,
            pass: deviation <= tol,
        });
    }
    let sides: Vec<SideDivergence> = [Side::Minus, Side::Plus]
        .into_iter()
        .map(|side| {
            let own: Vec<&MarkerAngle> = angles.iter().filter(|a| a.side == side).collect();
            let spread = own.iter().map(|a| a.angle).fold(f64::NEG_INFINITY, f64::max)
                - own.iter().map(|a| a.angle).fold(f64::INFINITY, f64::min);
            let classes: Vec<u8> = own
                .iter()
                .filter_map(|a| {
                    if wrap_angle(a.angle).abs() <= tol {
                        Some(0)
                    } else if wrap_angle(a.angle - FRAC_PI_2).abs() <= tol {
                        Some(1)
                    } else {
                        None
                    }
                })
                .collect();
            let oscillations = classes.windows(2).filter(|w| w[0] != w[1]).count();
            SideDivergence {
                side,
                markers: own.len(),
                spread,
                oscillations,
            }
        })
        .collect();
    let pass = angles.iter().all(|a| a.pass) && sides.iter().all(|s| s.oscillations >= 2);
    Ok(DivergenceReport {
        tol,
        angles,
        sides,
        pass,
    })
}
