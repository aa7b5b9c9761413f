//! One test per acceptance criterion. Each prints a single `acceptance NN PASS|FAIL` line
//! to stderr (bypassing output capture) and then asserts the verdict.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use cluster_curves::analysis::{cluster_estimate, tangent_divergence_report};
use cluster_curves::approx::{certification_grid, fit, fitting_nodes, ErrorSchedule, MIN_DEGREE};
use cluster_curves::continuum::{epsilon_chain, level_radius, net_at, safe_edge, ContinuumSpec, ProximityGraph};
use cluster_curves::curve::{build_polygonal, linspace, CurveSampler, FnCurve, MarkerParam};
use cluster_curves::gallery::{
    example_curve, slit_endpoint, strip_half_width, verify_example, verify_strip, Example, StripMap,
};
use cluster_curves::pipeline::{
    run, run_gallery, write_artifacts, Emit, GalleryItem, RunConfig, RunOutput, STRIP_EPS, STRIP_HALF_WIDTH,
};
use cluster_curves::sequence::{
    build_double_sequence, collinearity_residual, DoubleSequence, Orientation, Side, COLLINEAR_TOL,
};
use cluster_curves::smoothing::{corner_budget, smooth_curve};
use cluster_curves::sphere::{chordal, chordal_distance, SpherePoint};
use cluster_curves::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr().lock(), "acceptance {id:02} {verdict}: {detail}");
    assert!(pass, "acceptance {id:02}: {detail}");
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single(re: f64) -> ContinuumSpec {
    ContinuumSpec::Singleton(SpherePoint::Finite(c(re, 0.0)))
}

fn infinity() -> ContinuumSpec {
    ContinuumSpec::Singleton(SpherePoint::Infinity)
}

fn unit_segment() -> ContinuumSpec {
    ContinuumSpec::Segment(c(0.0, 0.0), c(1.0, 0.0))
}

fn unit_circle() -> ContinuumSpec {
    ContinuumSpec::Circle {
        center: c(0.0, 0.0),
        radius: 1.0,
    }
}

fn polyline() -> ContinuumSpec {
    ContinuumSpec::Polyline(vec![c(0.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)])
}

/// The default schedule written out independently of the library.
fn eps_default(t: f64) -> f64 {
    f64::min(1.0, 1.0 / (1.0 + t * t))
}

fn combos() -> Vec<(&'static str, ContinuumSpec, ContinuumSpec, usize, u64)> {
    vec![
        ("point/point", single(-1.0), single(1.0), 8, 1),
        ("point/point", single(-1.0), single(1.0), 32, 7),
        ("circle/circle", unit_circle(), unit_circle(), 32, 42),
        ("segment/inf", unit_segment(), infinity(), 32, 1),
        ("segment/inf", unit_segment(), infinity(), 128, 7),
        ("segment/circle", unit_segment(), unit_circle(), 8, 7),
        ("segment/circle", unit_segment(), unit_circle(), 128, 42),
        ("polyline/point", polyline(), single(0.0), 128, 1),
        ("circle/circle", unit_circle(), unit_circle(), 128, 7),
    ]
}

#[test]
fn criterion_01_metric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let point = |rng: &mut ChaCha8Rng| -> SpherePoint {
        match rng.random_range(0..10) {
            0 => SpherePoint::Infinity,
            1..=3 => SpherePoint::Finite(c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))),
            _ => {
                let r = 10f64.powf(rng.random_range(-6.0..6.0));
                SpherePoint::Finite(Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI)))
            }
        }
    };
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (p, q, r) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let pq = chordal_distance(p, q);
        worst.0 = worst.0.max((pq - chordal_distance(q, p)).abs());
        worst.1 = worst.1.max(chordal_distance(p, p));
        worst.2 = worst.2.max(pq - chordal_distance(p, r) - chordal_distance(r, q));
    }
    let pass = worst.0 <= 1e-12 && worst.1 <= 1e-12 && worst.2 <= 1e-12;
    report(
        1,
        pass,
        format!(
            "10000 triples; symmetry {:.1e}, identity {:.1e}, triangle excess {:.1e} (tol 1e-12)",
            worst.0, worst.1, worst.2
        ),
    );
}

fn oracle(points: &[Complex64], delta: f64) -> (Vec<usize>, usize) {
    let n = points.len();
    let adjacent = |i: usize, k: usize| i != k && safe_edge(points[i], points[k], delta);
    let mut edges = 0;
    for i in 0..n {
        for k in i + 1..n {
            edges += usize::from(adjacent(i, k));
        }
    }
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for w in 0..n {
            if dist[w] == usize::MAX && adjacent(v, w) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (dist, edges)
}

#[test]
fn criterion_02_epsilon_chains() {
    let specs = [single(0.5), unit_segment(), unit_circle(), polyline(), infinity()];
    let mut problems = Vec::new();
    let mut chains = 0;
    for spec in &specs {
        for j in 1..=8 {
            let net = net_at(spec, j).unwrap();
            let graph = ProximityGraph::new(&net).unwrap();
            let delta = level_radius(j);
            let (hops, oracle_edges) = oracle(graph.points(), delta);
            let edges = (0..graph.len()).map(|i| graph.neighbors(i).len()).sum::<usize>() / 2;
            if edges != oracle_edges {
                problems.push(format!("{spec:?} level {j}: {edges} edges vs oracle {oracle_edges}"));
            }
            let first = net.points.points()[0];
            for (k, &q) in net.points.points().iter().enumerate() {
                let chain = if k % 16 == 0 {
                    epsilon_chain(&net, first, q).unwrap()
                } else {
                    graph.chain(0, k, j).unwrap()
                };
                chains += 1;
                let steps_ok = chain
                    .points
                    .windows(2)
                    .all(|w| chordal(w[0], w[1]) < delta && safe_edge(w[0], w[1], delta));
                if !steps_ok || chain.points.len() - 1 != hops[k] {
                    problems.push(format!("{spec:?} level {j} target {k}"));
                }
            }
        }
    }
    report(
        2,
        problems.is_empty(),
        format!("{chains} chains at levels 1..=8 checked against a brute-force BFS; problems: {problems:?}"),
    );
}

/// Independent re-check of the sequence invariants; returns violations.
fn sequence_violations(seq: &DoubleSequence) -> Vec<String> {
    let mut out = seq.validate().violations;
    let pts: Vec<(i64, Complex64)> = seq.iter().collect();
    for w in pts.windows(2) {
        let j = seq.block_of(w[0].0);
        if !(chordal(w[0].1, w[1].1) < 1.0 / j as f64) {
            out.push(format!("step at {} exceeds 1/{j}", w[0].0));
        }
    }
    for w in pts.windows(3) {
        if !(collinearity_residual(w[0].1, w[1].1, w[2].1) > COLLINEAR_TOL) {
            out.push(format!("collinear at {}", w[1].0));
        }
    }
    for m in seq.markers() {
        let d = seq.point(m.index + 1).unwrap() - seq.point(m.index).unwrap();
        let exact = match m.orientation {
            Orientation::Horizontal => d.im == 0.0 && d.re > 0.0,
            Orientation::Vertical => d.re == 0.0 && d.im > 0.0,
        };
        if !exact {
            out.push(format!("marker at {} not exact", m.index));
        }
    }
    for side in [Side::Minus, Side::Plus] {
        let need = seq.blocks(side).len() / 2;
        for o in [Orientation::Horizontal, Orientation::Vertical] {
            if seq.markers_of(side, o).len() < need {
                out.push(format!("{side} {o} markers below {need}"));
            }
        }
    }
    out
}

#[test]
fn criterion_03_double_sequence_invariants() {
    let start = Instant::now();
    let mut problems = Vec::new();
    for (name, km, kp, n, seed) in combos() {
        match build_double_sequence(&km, &kp, n, seed) {
            Ok(seq) => {
                let v = sequence_violations(&seq);
                if !v.is_empty() {
                    problems.push(format!("{name} N={n} seed={seed}: {v:?}"));
                }
            }
            Err(e) => problems.push(format!("{name} N={n} seed={seed}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        problems.is_empty() && secs < 10.0,
        format!("9 spec-pair/N/seed combinations in {secs:.2} s (limit 10 s); problems: {problems:?}"),
    );
}

#[test]
fn criterion_04_polygonal_curve() {
    let mut problems = Vec::new();
    let mut markers = 0;
    for (name, km, kp, n, seed) in combos() {
        let seq = build_double_sequence(&km, &kp, n, seed).unwrap();
        let (eta, params) = build_polygonal(&seq).unwrap();
        let sigma = smooth_curve(&eta);
        for (k, p) in seq.iter() {
            if eta.eval(k as f64).unwrap().0 != p {
                problems.push(format!("{name} N={n}: node {k}"));
            }
        }
        for m in &params {
            markers += 1;
            for (label, d) in [("eta", eta.eval(m.s).unwrap().1), ("sigma", sigma.eval(m.s).unwrap().1)] {
                let expected = if m.expected_angle == 0.0 { 0.0 } else { FRAC_PI_2 };
                if d.arg() != expected {
                    problems.push(format!("{name} N={n}: {label} angle {} at {}", d.arg(), m.s));
                }
            }
        }
    }
    report(
        4,
        problems.is_empty(),
        format!(
            "nodes reproduced exactly; {markers} marker midpoints with exact angle 0 or pi/2; problems: {problems:?}"
        ),
    );
}

#[test]
fn criterion_05_smoothing() {
    let mut worst_value = 0.0f64;
    let mut worst_deriv = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut min_speed = f64::INFINITY;
    for (_, km, kp, n, seed) in combos() {
        let seq = build_double_sequence(&km, &kp, n, seed).unwrap();
        let (eta, _) = build_polygonal(&seq).unwrap();
        let sigma = smooth_curve(&eta);
        for b in sigma.blends() {
            let (lo, hi) = b.window();
            for t in [lo, hi] {
                let (s, ds) = sigma.eval(t).unwrap();
                let (e, de) = eta.eval(t).unwrap();
                worst_value = worst_value.max((s - e).norm());
                worst_deriv = worst_deriv.max((ds - de).norm());
            }
            for t in linspace(lo, hi, 101) {
                let d = sigma.eval(t).unwrap().1;
                // d on the segment [d1, d2]: collinear and between the ends
                let scale = (b.d1 - b.d2).norm().max(f64::MIN_POSITIVE);
                let cross = ((d - b.d1).conj() * (b.d2 - b.d1)).im / (scale * scale);
                let along = ((d - b.d1).conj() * (b.d2 - b.d1)).re / (scale * scale);
                let off = if (-1e-12..=1.0 + 1e-12).contains(&along) {
                    0.0
                } else {
                    1.0
                };
                worst_residual = worst_residual.max(cross.abs() + off);
            }
        }
        let (lo, hi) = eta.domain();
        for k in lo as i64..hi as i64 {
            let bound = corner_budget(k);
            let a = (k as f64 - 0.5).max(lo);
            let b = (k as f64 + 0.5).min(hi);
            for t in linspace(a, b, 1001) {
                let gap = (sigma.eval(t).unwrap().0 - eta.eval(t).unwrap().0).norm();
                worst_ratio = worst_ratio.max(gap / bound);
            }
        }
        for t in linspace(lo, hi, 100_001) {
            min_speed = min_speed.min(sigma.eval(t).unwrap().1.norm());
        }
    }
    let pass =
        worst_value == 0.0 && worst_deriv <= 1e-12 && worst_residual < 1e-12 && worst_ratio < 1.0 && min_speed > 0.0;
    report(
        5,
        pass,
        format!(
            "boundary value mismatch {worst_value:.1e} (need 0), derivative mismatch {worst_deriv:.1e} (tol 1e-12), \
             segment residual {worst_residual:.1e} (tol 1e-12), max |sigma-eta|*(|n|+1) {worst_ratio:.3} (need < 1), \
             min |sigma'| {min_speed:.3e}"
        ),
    );
}

struct SurrogateCheck {
    label: &'static str,
    secs: f64,
    degree: usize,
    schedule_met: bool,
    disjoint: bool,
    fine_value: f64,
    fine_deriv: f64,
    schedule_below_default: bool,
    markers_ok: bool,
}

impl SurrogateCheck {
    fn pass(&self) -> bool {
        self.secs < 60.0
            && self.degree <= 4096
            && self.schedule_met
            && self.disjoint
            && self.fine_value <= 1.0
            && self.fine_deriv <= 1.0
            && self.schedule_below_default
            && self.markers_ok
    }

    fn summary(&self) -> String {
        format!(
            "{} [{}]: {:.1} s, degree {}, grid met {}, disjoint {}, 10x grid weighted value {:.2e} deriv {:.2e}, markers {}",
            self.label,
            if self.pass() { "ok" } else { "failed" },
            self.secs,
            self.degree,
            self.schedule_met,
            self.disjoint,
            self.fine_value,
            self.fine_deriv,
            if self.markers_ok { "ok" } else { "failed" }
        )
    }
}

fn surrogate_check(label: &'static str, km: ContinuumSpec, kp: ContinuumSpec) -> SurrogateCheck {
    let mut config = RunConfig::new(km, kp, 128, std::env::temp_dir());
    config.seed = 42;
    let start = Instant::now();
    let out = run(&config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let f = &out.approximant;
    let t = f.half_width();
    let degree = f.degree();

    // the certification grid never touches a fitting node at any degree in the doubling sequence
    let mut disjoint = true;
    let mut fit_degree = MIN_DEGREE;
    while fit_degree <= config.max_degree {
        let nodes: Vec<f64> = fitting_nodes(fit_degree).into_iter().map(|x| t * x).collect();
        let grid = certification_grid(t, 4 * fit_degree);
        disjoint &= grid.iter().all(|g| nodes.iter().all(|x| x != g));
        fit_degree *= 2;
    }

    let count = 10 * 4 * degree.max(MIN_DEGREE) + 1;
    let (mut fine_value, mut fine_deriv) = (0.0f64, 0.0f64);
    let mut schedule_below_default = true;
    for s in linspace(-t, t, count) {
        let (z, dz) = out.smooth.eval(s).unwrap();
        let (w, dw) = f.eval(s).unwrap();
        let e = out.schedule.eps(s);
        schedule_below_default &= e <= eps_default(s);
        fine_value = fine_value.max((w - z).norm() / e);
        fine_deriv = fine_deriv.max((dw - dz).norm() / e);
    }
    SurrogateCheck {
        label,
        secs,
        degree,
        schedule_met: out.verification.certification.schedule_met,
        disjoint,
        fine_value,
        fine_deriv,
        schedule_below_default,
        markers_ok: out.verification.markers.all_pass(),
    }
}

#[test]
fn criterion_06_approximation_surrogate() {
    let checks = [
        surrogate_check("points -1/1", single(-1.0), single(1.0)),
        surrogate_check("segment/circle", unit_segment(), unit_circle()),
    ];
    let pass = checks.iter().all(SurrogateCheck::pass);
    let lines: Vec<String> = checks.iter().map(SurrogateCheck::summary).collect();
    report(6, pass, format!("N=128, T=127, max degree 4096; {}", lines.join("; ")));
}

fn pipeline(km: ContinuumSpec, kp: ContinuumSpec, n: usize, seed: u64) -> (RunConfig, RunOutput) {
    let mut config = RunConfig::new(km, kp, n, std::env::temp_dir());
    config.seed = seed;
    let out = run(&config).unwrap();
    (config, out)
}

#[test]
fn criterion_07_cluster_convergence() {
    let n = 128;
    let (config, out) = pipeline(unit_segment(), unit_circle(), n, 42);
    let f = &out.approximant;
    let t = f.half_width();
    let mut lines = Vec::new();
    let mut pass = true;
    for (side, spec) in [(Side::Plus, &config.kplus), (Side::Minus, &config.kminus)] {
        let block = out.sequence.last_complete_block(side).expect("a complete block");
        let j = block.level;
        let window = ((block.lo as f64).max(-t), (block.hi as f64).min(t));
        let net = net_at(spec, j).unwrap();
        let r = cluster_estimate(f, window, 2049, &net).unwrap();
        let bound = 3.0 / j as f64 + 2.0 / n as f64 + 2.0 * eps_default(n as f64 - 2.0);
        let ok = r.hausdorff_to_target < bound;
        pass &= ok;
        lines.push(format!(
            "{side} block j={j} window [{}, {}]: {:.4} < {:.4} {}",
            window.0,
            window.1,
            r.hausdorff_to_target,
            bound,
            if ok { "ok" } else { "failed" }
        ));
    }
    report(
        7,
        pass,
        format!("segment/circle N=128 on the polynomial; {}", lines.join("; ")),
    );
}

#[test]
fn criterion_08_divergence_diagnostic() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (label, km, kp, n) in [
        ("points -1/1 N=32", single(-1.0), single(1.0), 32),
        ("segment/circle N=128", unit_segment(), unit_circle(), 128),
    ] {
        let (_, out) = pipeline(km, kp, n, 42);
        let ok = out.verification.divergence.as_ref().is_some_and(|d| d.pass);
        pass &= ok;
        let osc: Vec<usize> = out
            .verification
            .divergence
            .iter()
            .flat_map(|d| d.sides.iter().map(|s| s.oscillations))
            .collect();
        lines.push(format!(
            "{label}: {} (oscillations {osc:?})",
            if ok { "passes" } else { "fails" }
        ));
    }
    let line = FnCurve::new((-10.0, 10.0), |t: f64| (c(t, 0.0), c(1.0, 0.0)));
    let markers: Vec<MarkerParam> = (0..8)
        .map(|k| MarkerParam {
            s: -9.5 + 2.5 * k as f64,
            expected_angle: if k % 2 == 0 { 0.0 } else { FRAC_PI_2 },
            side: if k < 4 { Side::Minus } else { Side::Plus },
        })
        .collect();
    let control_fails = !tangent_divergence_report(&line, &markers, 0.2).unwrap().pass;
    pass &= control_fails;
    lines.push(format!(
        "straight-line control {}",
        if control_fails { "fails" } else { "passes" }
    ));
    report(8, pass, lines.join("; "));
}

#[test]
fn criterion_09_gallery() {
    let mut lines = Vec::new();
    let mut pass = true;
    for e in Example::ALL {
        let r = verify_example(e).unwrap();
        pass &= r.pass && r.fd_max_rel_err < 1e-6 && r.ends.iter().all(|x| x.distance < 1e-3);
        lines.push(format!(
            "example {}: fd {:.1e}, ends {:?}",
            r.id,
            r.fd_max_rel_err,
            r.ends.iter().map(|x| format!("{:.1e}", x.distance)).collect::<Vec<_>>()
        ));
    }
    let one = verify_example(Example::One).unwrap();
    let terminal = one.ends[1].distance;
    let closed = 2.0 * (-100.0f64).exp();
    let one_ok = terminal <= closed * (1.0 + 1e-9);
    pass &= one_ok;
    lines.push(format!(
        "example 1 terminal window {terminal:.3e} <= 2e^-100 = {closed:.3e}"
    ));
    let four = verify_example(Example::Four).unwrap();
    let growth = four.profile_growth.unwrap();
    let expected = 10.0 + 1f64.atan2(20.0) - FRAC_PI_2;
    let four_ok = (growth - expected).abs() < 1e-6;
    pass &= four_ok;
    lines.push(format!("example 4 growth {growth:.9} vs {expected:.9}"));
    report(9, pass, lines.join("; "));
}

#[test]
fn criterion_10_strip_transfer() {
    let curve = example_curve(Example::One);
    let f = fit(&curve, STRIP_HALF_WIDTH, &ErrorSchedule::uniform(STRIP_EPS), 4096).unwrap();
    let c_width = strip_half_width(&f, 401, 17);
    let map = StripMap::new(c_width.unwrap_or(0.5f64.powi(7))).unwrap();
    let r = verify_strip(&f, &map, 3).unwrap();
    let pass = r.round_trip_max_err < 1e-12
        && r.arg_identity_max_err < 1e-12
        && r.slit_endpoint_exact
        && slit_endpoint() == c(0.0, 1.0)
        && c_width.is_some();
    report(
        10,
        pass,
        format!(
            "c = {:?}, round trip {:.1e}, arg identity {:.1e} (tol 1e-12), slit endpoint exact {}",
            c_width, r.round_trip_max_err, r.arg_identity_max_err, r.slit_endpoint_exact
        ),
    );
}

fn read_all(dir: &PathBuf) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_11_determinism() {
    let base = std::env::temp_dir().join(format!("cluster-curves-acceptance-{}", std::process::id()));
    let mut runs = Vec::new();
    for k in 0..2 {
        let dir = base.join(format!("run{k}"));
        let _ = std::fs::remove_dir_all(&dir);
        let mut config = RunConfig::new(unit_circle(), unit_circle(), 32, &dir);
        config.seed = 5;
        config.emit = Emit {
            csv: true,
            svg: true,
            report: true,
        };
        let out = run(&config).unwrap();
        write_artifacts(&config, &out).unwrap();
        run_gallery(GalleryItem::Example(Example::Two), &dir, 4096).unwrap();
        runs.push(read_all(&dir));
    }
    let same = runs[0] == runs[1];
    let count = runs[0].len();
    let _ = std::fs::remove_dir_all(&base);
    report(
        11,
        same && count == 9,
        format!("{count} artifacts compared byte for byte across two runs"),
    );
}
