//! End-to-end construction: sequence, polygonal curve, smoothing, polynomial
//! fit and certification, plus the artifact writers used by the CLI.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{cluster_estimate, tangent_divergence_report, AnalysisError, ClusterReport, DivergenceReport};
use crate::approx::{
    fit, marker_angle_certify, ApproxError, ErrorSchedule, MarkerReport, PolynomialApproximant, DEFAULT_MAX_DEGREE,
};
use crate::continuum::{net_at, ContinuumError, ContinuumSpec};
use crate::curve::{build_polygonal, linspace, sample_rows, CurveError, CurveSampler, MarkerParam};
use crate::export::{write_csv, write_json};
use crate::gallery::{
    example_curve, strip_half_width, transfer, verify_example, verify_strip, Example, GalleryError, StripMap,
};
use crate::sequence::{build_double_sequence, DoubleSequence, SequenceError, Side, ValidationReport};
use crate::smoothing::{corner_budget, smooth_curve, SmoothCurve};
use crate::sphere::SpherePoint;

/// Marker-angle tolerance for the polynomial.
pub const MARKER_TOL: f64 = 0.2;
/// Marker-angle tolerance for the exact smooth curve.
pub const SMOOTH_MARKER_TOL: f64 = 1e-9;
pub const TIGHTENING_ROUNDS: usize = 3;
/// Curve samples per unit parameter in the CSV artifacts.
pub const SAMPLES_PER_UNIT: usize = 8;
pub const CLUSTER_SAMPLES: usize = 257;

pub const CSV_HEADER: [&str; 5] = ["t", "re", "im", "d_re", "d_im"];
pub const SEQUENCE_HEADER: [&str; 4] = ["n", "re", "im", "marker"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Gallery(#[from] GalleryError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// 2 for bad input, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Continuum(_)
            | PipelineError::Gallery(GalleryError::UnknownExample(_))
            | PipelineError::Sequence(
                SequenceError::Continuum(_) | SequenceError::TooShort(_) | SequenceError::MissingMarker { .. },
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Emit {
    pub csv: bool,
    pub svg: bool,
    pub report: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            csv: true,
            svg: false,
            report: true,
        }
    }
}

impl std::str::FromStr for Emit {
    type Err = PipelineError;

    /// Comma-separated subset of `csv`, `svg`, `report`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut emit = Emit {
            csv: false,
            svg: false,
            report: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => emit.csv = true,
                "svg" => emit.svg = true,
                "report" => emit.report = true,
                other => return Err(PipelineError::Config(format!("unknown emit flag `{other}`"))),
            }
        }
        Ok(emit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kminus: ContinuumSpec,
    pub kplus: ContinuumSpec,
    pub n: usize,
    pub seed: u64,
    /// Approximation half-width; `N - 1` when absent.
    pub t: Option<f64>,
    pub schedule: ErrorSchedule,
    pub max_degree: usize,
    pub out: PathBuf,
    pub emit: Emit,
}

impl RunConfig {
    pub fn new(kminus: ContinuumSpec, kplus: ContinuumSpec, n: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            kminus,
            kplus,
            n,
            seed: 0,
            t: None,
            schedule: ErrorSchedule::default(),
            max_degree: DEFAULT_MAX_DEGREE,
            out: out.into(),
            emit: Emit::default(),
        }
    }

    pub fn half_width(&self) -> f64 {
        self.t.unwrap_or(self.n as f64 - 1.0)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n < 8 {
            return Err(SequenceError::TooShort(self.n).into());
        }
        let t = self.half_width();
        if !(t >= 1.0 && t <= self.n as f64 - 1.0) {
            return Err(PipelineError::Config(format!(
                "field `t` must lie in [1, N - 1] = [1, {}], got {t}",
                self.n - 1
            )));
        }
        self.kminus
            .validate()
            .map_err(|e| PipelineError::Config(format!("kminus: {e}")))?;
        self.kplus
            .validate()
            .map_err(|e| PipelineError::Config(format!("kplus: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCluster {
    pub side: Side,
    pub level: u32,
    /// Curve the window was sampled on: `smooth` or `polynomial`.
    pub curve: &'static str,
    pub bound: f64,
    pub pass: bool,
    pub report: ClusterReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub degree: usize,
    pub max_degree: usize,
    pub schedule_met: bool,
    pub cert_value_err: f64,
    pub cert_deriv_err: f64,
    pub rounds: usize,
    pub tightened: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "T")]
    pub t: f64,
    pub sequence: ValidationReport,
    pub certification: Certification,
    pub markers: MarkerReport,
    /// Absent when `[-T, T]` holds too few markers; `divergence_note` says why.
    pub divergence: Option<DivergenceReport>,
    pub divergence_note: Option<String>,
    pub divergence_smooth: DivergenceReport,
    pub clusters: Vec<BlockCluster>,
    pub certified: bool,
}

/// Everything produced by one run.
pub struct RunOutput {
    pub sequence: DoubleSequence,
    pub markers: Vec<MarkerParam>,
    pub smooth: SmoothCurve,
    pub approximant: PolynomialApproximant,
    pub schedule: ErrorSchedule,
    pub verification: Verification,
}

impl Verification {
    /// Human-readable reasons the run is not certified; empty when it is.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.sequence.is_ok() {
            out.push(format!(
                "sequence has {} invariant violations",
                self.sequence.violations.len()
            ));
        }
        let c = &self.certification;
        if !c.schedule_met {
            out.push(format!(
                "error schedule not met at degree {} (weighted value error {:.3e}, derivative error {:.3e})",
                c.degree, c.cert_value_err, c.cert_deriv_err
            ));
        }
        let bad = self.markers.failures().len();
        if bad > 0 {
            out.push(format!("{bad} marker angles outside {} rad", self.markers.tol));
        }
        match (&self.divergence, &self.divergence_note) {
            (Some(d), _) if !d.pass => out.push("divergence report failed".into()),
            (None, Some(note)) => out.push(format!("divergence report unavailable: {note}")),
            _ => {}
        }
        out
    }
}

impl RunOutput {
    pub fn certified(&self) -> bool {
        self.verification.certified
    }
}

fn fit_or_best(
    curve: &SmoothCurve,
    t: f64,
    schedule: &ErrorSchedule,
    max_degree: usize,
) -> Result<(PolynomialApproximant, bool), PipelineError> {
    match fit(curve, t, schedule, max_degree) {
        Ok(f) => Ok((f, true)),
        Err(ApproxError::ScheduleNotMet { best, .. }) => Ok((*best, false)),
        Err(e) => Err(e.into()),
    }
}

/// Cluster estimates for every complete block, on `σ` and, inside `[-T, T]`, on `f`.
fn block_clusters(
    seq: &DoubleSequence,
    config: &RunConfig,
    sigma: &SmoothCurve,
    f: &PolynomialApproximant,
    schedule: &ErrorSchedule,
) -> Result<Vec<BlockCluster>, PipelineError> {
    let t = f.half_width();
    let mut out = Vec::new();
    for side in [Side::Minus, Side::Plus] {
        let spec = match side {
            Side::Minus => &config.kminus,
            Side::Plus => &config.kplus,
        };
        for b in seq.blocks(side).into_iter().filter(|b| b.complete) {
            let net = net_at(spec, b.level)?;
            let (lo, hi) = (b.lo as f64, b.hi as f64);
            let inner = b.lo.unsigned_abs().min(b.hi.unsigned_abs()) as i64;
            let base = 3.0 / b.level as f64 + 2.0 * corner_budget(inner);
            let report = cluster_estimate(sigma, (lo, hi), CLUSTER_SAMPLES, &net)?;
            out.push(BlockCluster {
                side,
                level: b.level,
                curve: "smooth",
                bound: base,
                pass: report.hausdorff_to_target < base,
                report,
            });
            let (wlo, whi) = (lo.max(-t), hi.min(t));
            if wlo < whi {
                let slack = linspace(wlo, whi, CLUSTER_SAMPLES)
                    .into_iter()
                    .map(|s| schedule.eps(s))
                    .fold(0.0, f64::max);
                let bound = base + 2.0 * slack;
                let report = cluster_estimate(f, (wlo, whi), CLUSTER_SAMPLES, &net)?;
                out.push(BlockCluster {
                    side,
                    level: b.level,
                    curve: "polynomial",
                    bound,
                    pass: report.hausdorff_to_target < bound,
                    report,
                });
            }
        }
    }
    Ok(out)
}

/// Runs the construction without touching the file system.
pub fn run(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let t = config.half_width();
    let sequence = build_double_sequence(&config.kminus, &config.kplus, config.n, config.seed)?;
    let validation = sequence.validate();
    let (eta, markers) = build_polygonal(&sequence)?;
    let sigma = smooth_curve(&eta);

    let certifiable: Vec<MarkerParam> = markers
        .iter()
        .filter(|m| m.s >= -t + 1.0 && m.s <= t - 1.0)
        .copied()
        .collect();
    let mut schedule = config.schedule.clone();
    let (mut f, mut met) = fit_or_best(&sigma, t, &schedule, config.max_degree)?;
    let mut marker_report = marker_angle_certify(&f, &certifiable, MARKER_TOL)?;
    let mut rounds = 0;
    while rounds < TIGHTENING_ROUNDS && !marker_report.all_pass() {
        for c in marker_report.failures() {
            schedule.tighten(c.s);
        }
        rounds += 1;
        (f, met) = fit_or_best(&sigma, t, &schedule, config.max_degree)?;
        marker_report = marker_angle_certify(&f, &certifiable, MARKER_TOL)?;
    }

    let (divergence, divergence_note) = match tangent_divergence_report(&f, &certifiable, MARKER_TOL) {
        Ok(r) => (Some(r), None),
        Err(e @ AnalysisError::InsufficientMarkers { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let divergence_pass = divergence.as_ref().is_some_and(|d| d.pass);
    let divergence_smooth = tangent_divergence_report(&sigma, &markers, SMOOTH_MARKER_TOL)?;
    let clusters = block_clusters(&sequence, config, &sigma, &f, &schedule)?;
    let certified = validation.is_ok() && met && marker_report.all_pass() && divergence_pass;
    let verification = Verification {
        n: config.n,
        seed: config.seed,
        t,
        sequence: validation,
        certification: Certification {
            degree: f.degree(),
            max_degree: config.max_degree,
            schedule_met: met,
            cert_value_err: f.cert_value_err,
            cert_deriv_err: f.cert_deriv_err,
            rounds,
            tightened: schedule.tightened.clone(),
        },
        markers: marker_report,
        divergence,
        divergence_note,
        divergence_smooth,
        clusters,
        certified,
    };
    Ok(RunOutput {
        sequence,
        markers,
        smooth: sigma,
        approximant: f,
        schedule,
        verification,
    })
}

fn curve_csv<S: CurveSampler>(path: &Path, curve: &S, lo: f64, hi: f64) -> Result<(), PipelineError> {
    let count = ((hi - lo) * SAMPLES_PER_UNIT as f64).round() as usize + 1;
    let rows = sample_rows(curve, &linspace(lo, hi, count))?;
    write_csv(path, &CSV_HEADER, rows)?;
    Ok(())
}

/// Writes the artifacts selected by `config.emit`; returns the written paths.
pub fn write_artifacts(config: &RunConfig, output: &RunOutput) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(&config.out)?;
    let mut written = Vec::new();
    let path = |name: &str| config.out.join(name);
    if config.emit.csv {
        write_csv(&path("sequence.csv"), &SEQUENCE_HEADER, output.sequence.csv_rows())?;
        written.push(path("sequence.csv"));
        let (lo, hi) = output.smooth.domain();
        curve_csv(&path("polygonal.csv"), output.smooth.base(), lo, hi)?;
        written.push(path("polygonal.csv"));
        curve_csv(&path("smooth.csv"), &output.smooth, lo, hi)?;
        written.push(path("smooth.csv"));
        let t = output.approximant.half_width();
        curve_csv(&path("polynomial.csv"), &output.approximant, -t, t)?;
        written.push(path("polynomial.csv"));
    }
    if config.emit.report {
        write_json(&path("approximant.json"), &output.approximant.to_json())?;
        written.push(path("approximant.json"));
        write_json(&path("verification.json"), &output.verification)?;
        written.push(path("verification.json"));
    }
    if config.emit.svg {
        std::fs::write(path("plot.svg"), svg_plot(config, output)?)?;
        written.push(path("plot.svg"));
    }
    Ok(written)
}

const PLOT_RADIUS: f64 = 10.0;
const PLOT_SIZE: f64 = 800.0;

fn to_canvas(z: Complex64) -> (f64, f64) {
    let scale = PLOT_SIZE / (2.0 * PLOT_RADIUS);
    ((z.re + PLOT_RADIUS) * scale, (PLOT_RADIUS - z.im) * scale)
}

/// Overlay of the smooth curve, the polynomial and the final target nets,
/// clipped to modulus at most 10.
pub fn svg_plot(config: &RunConfig, output: &RunOutput) -> Result<String, PipelineError> {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_SIZE}" height="{PLOT_SIZE}" viewBox="0 0 {PLOT_SIZE} {PLOT_SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let polyline = |svg: &mut String, pts: &[Complex64], colour: &str| {
        let mut run: Vec<String> = Vec::new();
        let flush = |svg: &mut String, run: &mut Vec<String>| {
            if run.len() > 1 {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{colour}" stroke-width="1" points="{}"/>"#,
                    run.join(" ")
                );
            }
            run.clear();
        };
        for z in pts {
            if z.norm() <= PLOT_RADIUS {
                let (x, y) = to_canvas(*z);
                run.push(format!("{x:.3},{y:.3}"));
            } else {
                flush(svg, &mut run);
            }
        }
        flush(svg, &mut run);
    };
    let (lo, hi) = output.smooth.domain();
    let count = ((hi - lo) * SAMPLES_PER_UNIT as f64) as usize + 1;
    let smooth: Vec<Complex64> = linspace(lo, hi, count)
        .into_iter()
        .map(|t| output.smooth.eval(t).map(|v| v.0))
        .collect::<Result<_, _>>()?;
    polyline(&mut svg, &smooth, "black");
    let t = output.approximant.half_width();
    let poly: Vec<Complex64> = linspace(-t, t, count)
        .into_iter()
        .map(|s| output.approximant.eval(s).map(|v| v.0))
        .collect::<Result<_, _>>()?;
    polyline(&mut svg, &poly, "steelblue");
    let mut y = 20.0;
    for (side, spec, colour) in [
        (Side::Minus, &config.kminus, "crimson"),
        (Side::Plus, &config.kplus, "seagreen"),
    ] {
        let level = output.sequence.blocks(side).len().max(1) as u32;
        let net = net_at(spec, level)?;
        for p in net.points.iter() {
            match p {
                SpherePoint::Finite(z) if z.norm() <= PLOT_RADIUS => {
                    let (x, y) = to_canvas(*z);
                    let _ = writeln!(svg, r#"<circle cx="{x:.3}" cy="{y:.3}" r="2" fill="{colour}"/>"#);
                }
                _ => {}
            }
        }
        if matches!(spec, ContinuumSpec::Singleton(SpherePoint::Infinity)) {
            let _ = writeln!(
                svg,
                r#"<text x="10" y="{y}" font-size="14" fill="{colour}">{side} target: infinity</text>"#
            );
            y += 18.0;
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Samples for the gallery CSVs.
pub const GALLERY_SAMPLES: usize = 2001;
pub const GALLERY_RANGE: (f64, f64) = (-10.0, 10.0);

/// Fit interval for the strip transfer; beyond `|t| = 3` the derivative of
/// Example 1 is below the fit error and `f'` picks up zeros near the real axis.
pub const STRIP_HALF_WIDTH: f64 = 3.0;
pub const STRIP_EPS: f64 = 1e-6;

/// Which gallery item to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalleryItem {
    Example(Example),
    Strip,
}

impl std::str::FromStr for GalleryItem {
    type Err = GalleryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "strip" {
            Ok(GalleryItem::Strip)
        } else {
            s.parse().map(GalleryItem::Example)
        }
    }
}

/// Writes a gallery item's CSV and JSON report into `out`; returns whether all checks pass.
pub fn run_gallery(item: GalleryItem, out: &Path, max_degree: usize) -> Result<bool, PipelineError> {
    std::fs::create_dir_all(out)?;
    let ts = linspace(GALLERY_RANGE.0, GALLERY_RANGE.1, GALLERY_SAMPLES);
    match item {
        GalleryItem::Example(e) => {
            let curve = example_curve(e);
            let id = e.id();
            write_csv(
                &out.join(format!("example{id}.csv")),
                &CSV_HEADER,
                sample_rows(&curve, &ts)?,
            )?;
            let report = verify_example(e)?;
            write_json(&out.join(format!("example{id}.json")), &report)?;
            Ok(report.pass)
        }
        GalleryItem::Strip => {
            let curve = example_curve(Example::One);
            let (f, certified) = match fit(&curve, STRIP_HALF_WIDTH, &ErrorSchedule::uniform(STRIP_EPS), max_degree) {
                Ok(f) => (f, true),
                Err(ApproxError::ScheduleNotMet { best, .. }) => (*best, false),
                Err(e) => return Err(e.into()),
            };
            let c = strip_half_width(&f, 401, 17);
            let map = StripMap::new(c.unwrap_or(0.5f64.powi(7)))?;
            let rows: Vec<[String; 5]> = ts
                .iter()
                .map(|&u| {
                    let (g, dg) = transfer(&f, &map, u)?;
                    use crate::export::fmt_f64;
                    Ok([fmt_f64(u), fmt_f64(g.re), fmt_f64(g.im), fmt_f64(dg.re), fmt_f64(dg.im)])
                })
                .collect::<Result<_, GalleryError>>()?;
            write_csv(&out.join("strip.csv"), &CSV_HEADER, rows)?;
            let report = verify_strip(&f, &map, 0)?;
            write_json(&out.join("strip.json"), &report)?;
            Ok(report.pass && certified && c.is_some())
        }
    }
}
