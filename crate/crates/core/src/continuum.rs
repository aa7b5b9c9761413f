//! Machine descriptions of continua and ε-chains through their nets.
//!
//! A continuum is never handled as a point set directly. Instead
//! [`net_at`] produces, for every level `j >= 1`, a finite net whose covering
//! radius and connectivity radius are both at most `1/(2j)` in the chordal
//! metric. Nets of the built-in kinds are nested: every point of level `j`
//! reappears bit-for-bit at level `j + 1`.
//!
//! Two net points are joined in the proximity graph only when the step is a
//! [`safe_edge`]: both the chordal distance of the endpoints and the chordal
//! diameter of the Euclidean segment between them stay below the radius.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sphere::{chordal, segment_diameter_below, PointSet, SphereError, SpherePoint, DEFAULT_SEGMENT_SAMPLES};

/// Largest number of subdivisions of a single edge or circle.
const MAX_SUBDIVISIONS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuumError {
    #[error("invalid continuum: {0}")]
    InvalidSpec(String),
    #[error("level must be at least 1")]
    ZeroLevel,
    #[error("custom continuum has no net for level {0}")]
    LevelUnavailable(u32),
    #[error(
        "net level {level} is disconnected at radius {radius}: point #{first} ({first_point}) \
         and point #{second} ({second_point}) lie in different components"
    )]
    Disconnected {
        level: u32,
        radius: f64,
        first: usize,
        first_point: SpherePoint,
        second: usize,
        second_point: SpherePoint,
    },
    #[error("point {0} is not in the net")]
    NotInNet(SpherePoint),
    #[error("net level {0} needs more than {MAX_SUBDIVISIONS} subdivisions")]
    TooFine(u32),
    #[error(transparent)]
    Point(#[from] SphereError),
    #[error("malformed continuum JSON: {0}")]
    Json(String),
}

/// One level of a continuum's net.
#[derive(Debug, Clone, PartialEq)]
pub struct NetLevel {
    pub level: u32,
    pub points: PointSet,
    /// Covering radius: the continuum lies within chordal `mesh` of the net.
    pub mesh: f64,
    /// Radius at which the proximity graph of the net is connected.
    pub connectivity: f64,
}

impl NetLevel {
    /// A bare target set for cluster estimation. No connectivity is claimed.
    pub fn target(level: u32, points: PointSet) -> Self {
        NetLevel {
            level,
            points,
            mesh: 0.0,
            connectivity: 0.0,
        }
    }

    pub fn finite_points(&self) -> Result<Vec<Complex64>, ContinuumError> {
        self.points
            .iter()
            .map(|p| p.finite().ok_or(SphereError::InfiniteEndpoint.into()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContinuumSpec {
    Singleton(SpherePoint),
    Segment(Complex64, Complex64),
    Circle { center: Complex64, radius: f64 },
    Polyline(Vec<Complex64>),
    Custom(Vec<NetLevel>),
}

impl ContinuumSpec {
    pub fn validate(&self) -> Result<(), ContinuumError> {
        let invalid = |m: &str| Err(ContinuumError::InvalidSpec(m.to_string()));
        match self {
            ContinuumSpec::Singleton(p) => {
                if let SpherePoint::Finite(z) = p {
                    SpherePoint::from_complex(*z)?;
                }
                Ok(())
            }
            ContinuumSpec::Segment(a, b) => {
                SpherePoint::from_complex(*a)?;
                SpherePoint::from_complex(*b)?;
                if a == b {
                    return invalid("segment endpoints coincide; use a singleton");
                }
                Ok(())
            }
            ContinuumSpec::Circle { center, radius } => {
                SpherePoint::from_complex(*center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return invalid("circle radius must be a positive finite number");
                }
                SpherePoint::from_complex(*center + *radius)?;
                Ok(())
            }
            ContinuumSpec::Polyline(nodes) => {
                if nodes.len() < 2 {
                    return invalid("polyline needs at least 2 nodes");
                }
                for (i, z) in nodes.iter().enumerate() {
                    SpherePoint::from_complex(*z)?;
                    if nodes[..i].contains(z) {
                        return invalid("polyline nodes must be pairwise distinct");
                    }
                }
                Ok(())
            }
            ContinuumSpec::Custom(levels) => {
                if levels.is_empty() {
                    return invalid("custom continuum needs at least one level");
                }
                for (i, l) in levels.iter().enumerate() {
                    let j = i as u32 + 1;
                    if l.level != j {
                        return Err(ContinuumError::InvalidSpec(format!(
                            "custom levels must be numbered 1, 2, ...; found {} at position {}",
                            l.level, j
                        )));
                    }
                    if l.points.is_empty() {
                        return Err(ContinuumError::InvalidSpec(format!("custom level {j} has no points")));
                    }
                    for p in l.points.iter() {
                        match p {
                            SpherePoint::Infinity => {
                                return Err(ContinuumError::InvalidSpec(format!(
                                    "custom level {j} contains inf; nets must be finite"
                                )))
                            }
                            SpherePoint::Finite(z) => {
                                SpherePoint::from_complex(*z)?;
                            }
                        }
                    }
                    let cap = level_radius(j);
                    if !(l.mesh >= 0.0 && l.mesh <= cap) {
                        return Err(ContinuumError::InvalidSpec(format!(
                            "custom level {j} mesh {} exceeds 1/(2j) = {cap}",
                            l.mesh
                        )));
                    }
                    if !(l.connectivity > 0.0 && l.connectivity <= cap) {
                        return Err(ContinuumError::InvalidSpec(format!(
                            "custom level {j} connectivity {} must lie in (0, 1/(2j)]",
                            l.connectivity
                        )));
                    }
                    if i > 0 && l.mesh >= levels[i - 1].mesh && levels[i - 1].mesh > 0.0 {
                        return Err(ContinuumError::InvalidSpec(format!(
                            "custom level {j} mesh is not strictly smaller than level {}",
                            j - 1
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, ContinuumSpec::Singleton(_))
    }

    pub fn from_json(text: &str) -> Result<Self, ContinuumError> {
        let raw: json::RawSpec = serde_json::from_str(text).map_err(|e| ContinuumError::Json(e.to_string()))?;
        let spec = raw.into_spec()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&json::RawSpec::from_spec(self)).expect("spec serializes")
    }
}

/// `1/(2j)`: the mesh and connectivity allowance of level `j`.
pub fn level_radius(j: u32) -> f64 {
    1.0 / (2.0 * j as f64)
}

/// Chordal step `a -> b` that is safe to traverse along the Euclidean segment.
pub fn safe_edge(a: Complex64, b: Complex64, delta: f64) -> bool {
    chordal(a, b) < delta && segment_diameter_below(a, b, DEFAULT_SEGMENT_SAMPLES, delta)
}

/// Smallest power of two `m >= min` with `length / m < spacing`.
fn dyadic_count(length: f64, spacing: f64, min: usize, level: u32) -> Result<usize, ContinuumError> {
    let mut m = min.max(1);
    while length / m as f64 >= spacing {
        m *= 2;
        if m > MAX_SUBDIVISIONS {
            return Err(ContinuumError::TooFine(level));
        }
    }
    Ok(m)
}

/// Net of `spec` at level `j`.
pub fn net_at(spec: &ContinuumSpec, j: u32) -> Result<NetLevel, ContinuumError> {
    if j == 0 {
        return Err(ContinuumError::ZeroLevel);
    }
    let radius = level_radius(j);
    // Euclidean spacing `h` gives consecutive chordal steps and segment
    // diameters of at most 2h, and a covering radius of at most h.
    let spacing = radius / 2.0;
    let net = match spec {
        ContinuumSpec::Singleton(SpherePoint::Finite(p)) => NetLevel {
            level: j,
            points: PointSet::from_points([SpherePoint::Finite(*p)]),
            mesh: 0.0,
            connectivity: radius,
        },
        ContinuumSpec::Singleton(SpherePoint::Infinity) => NetLevel {
            level: j,
            points: PointSet::from_points([SpherePoint::Finite(infinity_surrogate(j))]),
            mesh: radius,
            connectivity: radius,
        },
        ContinuumSpec::Segment(a, b) => {
            let m = dyadic_count((b - a).norm(), spacing, 2, j)?;
            let points = (0..=m).map(|i| SpherePoint::Finite(lerp(*a, *b, i, m)));
            NetLevel {
                level: j,
                points: PointSet::from_points(points),
                mesh: (b - a).norm() / m as f64,
                connectivity: radius,
            }
        }
        ContinuumSpec::Circle { center, radius: rho } => {
            let mut m = 8usize;
            // consecutive chord 2 rho sin(pi/m) must stay below the spacing
            while 2.0 * rho * (PI / m as f64).sin() >= spacing {
                m *= 2;
                if m > MAX_SUBDIVISIONS {
                    return Err(ContinuumError::TooFine(j));
                }
            }
            let points = (0..m).map(|i| SpherePoint::Finite(circle_point(*center, *rho, i, m)));
            NetLevel {
                level: j,
                points: PointSet::from_points(points),
                mesh: 4.0 * rho * (PI / (2 * m) as f64).sin(),
                connectivity: radius,
            }
        }
        ContinuumSpec::Polyline(nodes) => {
            let mut points = PointSet::new();
            let mut mesh = 0.0f64;
            for w in nodes.windows(2) {
                let len = (w[1] - w[0]).norm();
                let m = dyadic_count(len, spacing, 1, j)?;
                mesh = mesh.max(len / m as f64);
                for i in 0..=m {
                    points.insert(SpherePoint::Finite(lerp(w[0], w[1], i, m)));
                }
            }
            NetLevel {
                level: j,
                points,
                mesh,
                connectivity: radius,
            }
        }
        ContinuumSpec::Custom(levels) => levels
            .get(j as usize - 1)
            .cloned()
            .ok_or(ContinuumError::LevelUnavailable(j))?,
    };
    ProximityGraph::new(&net)?.ensure_connected(j)?;
    Ok(net)
}

/// Finite stand-in for infinity at level `j`: modulus `2 / r_j` with `r_j = 1/(2j)`.
pub fn infinity_surrogate(j: u32) -> Complex64 {
    let r = level_radius(j);
    Complex64::from_polar(2.0 / r, j as f64)
}

fn lerp(a: Complex64, b: Complex64, i: usize, m: usize) -> Complex64 {
    if i == 0 {
        a
    } else if i == m {
        b
    } else {
        // i/m is a dyadic rational, so refined levels reproduce these values exactly
        a + (b - a) * (i as f64 / m as f64)
    }
}

fn circle_point(center: Complex64, rho: f64, i: usize, m: usize) -> Complex64 {
    center + Complex64::from_polar(rho, 2.0 * PI * (i as f64 / m as f64))
}

/// Safe-edge proximity graph of a net.
#[derive(Debug, Clone)]
pub struct ProximityGraph {
    points: Vec<Complex64>,
    delta: f64,
    adjacency: Vec<Vec<usize>>,
}

impl ProximityGraph {
    pub fn new(net: &NetLevel) -> Result<Self, ContinuumError> {
        Ok(Self::from_points(net.finite_points()?, net.connectivity))
    }

    pub fn from_points(points: Vec<Complex64>, delta: f64) -> Self {
        let n = points.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for k in i + 1..n {
                if safe_edge(points[i], points[k], delta) {
                    adjacency[i].push(k);
                    adjacency[k].push(i);
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        ProximityGraph {
            points,
            delta,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn point(&self, i: usize) -> Complex64 {
        self.points[i]
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn index_of(&self, z: Complex64) -> Option<usize> {
        self.points.iter().position(|&p| p == z)
    }

    /// Hop counts from `source`; `usize::MAX` marks unreachable nodes.
    pub fn hops_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components as sorted index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let dist = self.hops_from(start);
            let comp: Vec<usize> = (0..self.len()).filter(|&i| dist[i] != usize::MAX).collect();
            for &i in &comp {
                seen[i] = true;
            }
            out.push(comp);
        }
        out
    }

    fn disconnected(&self, level: u32, a: usize, b: usize) -> ContinuumError {
        ContinuumError::Disconnected {
            level,
            radius: self.delta,
            first: a,
            first_point: self.points[a].into(),
            second: b,
            second_point: self.points[b].into(),
        }
    }

    pub fn ensure_connected(&self, level: u32) -> Result<(), ContinuumError> {
        if self.is_empty() {
            return Err(ContinuumError::InvalidSpec(format!("net level {level} is empty")));
        }
        let comps = self.components();
        if comps.len() > 1 {
            return Err(self.disconnected(level, comps[0][0], comps[1][0]));
        }
        Ok(())
    }

    /// Shortest path in edge count from `from` to `to`; among shortest paths the
    /// lexicographically smallest index sequence.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let dist = self.hops_from(to);
        if dist[from] == usize::MAX {
            return None;
        }
        let mut path = vec![from];
        let mut v = from;
        while v != to {
            v = *self.adjacency[v]
                .iter()
                .find(|&&w| dist[w] + 1 == dist[v])
                .expect("BFS layers are consistent");
            path.push(v);
        }
        Some(path)
    }

    pub fn chain(&self, from: usize, to: usize, level: u32) -> Result<Chain, ContinuumError> {
        let path = self
            .shortest_path(from, to)
            .ok_or_else(|| self.disconnected(level, from, to))?;
        Ok(Chain {
            points: path.into_iter().map(|i| self.points[i]).collect(),
            delta: self.delta,
        })
    }
}

/// Finite point sequence with consecutive chordal steps below `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub points: Vec<Complex64>,
    pub delta: f64,
}

impl Chain {
    /// Checks the endpoints and that every step is a safe edge.
    pub fn validate(&self, from: Complex64, to: Complex64) -> Result<(), String> {
        match (self.points.first(), self.points.last()) {
            (Some(&a), Some(&b)) if a == from && b == to => {}
            _ => return Err("chain endpoints do not match the request".into()),
        }
        for (k, w) in self.points.windows(2).enumerate() {
            if !safe_edge(w[0], w[1], self.delta) {
                return Err(format!("step {k} is not a safe edge at radius {}", self.delta));
            }
        }
        Ok(())
    }

    /// Joins `self` (ending at q) with `next` (starting at q).
    pub fn concat(&self, next: &Chain) -> Option<Chain> {
        if self.points.last() != next.points.first() || self.delta != next.delta {
            return None;
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&next.points[1..]);
        Some(Chain {
            points,
            delta: self.delta,
        })
    }
}

/// Chain from `p` to `q` through the net at its connectivity radius.
pub fn epsilon_chain(net: &NetLevel, p: SpherePoint, q: SpherePoint) -> Result<Chain, ContinuumError> {
    let from = net.points.index_of(&p).ok_or(ContinuumError::NotInNet(p))?;
    let to = net.points.index_of(&q).ok_or(ContinuumError::NotInNet(q))?;
    ProximityGraph::new(net)?.chain(from, to, net.level)
}

mod json {
    //! Serde mirror of the ContinuumSpec JSON schema.

    use super::*;

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum RawPoint {
        Text(String),
        Real(f64),
        Pair([f64; 2]),
    }

    impl RawPoint {
        pub fn to_point(&self, field: &str) -> Result<SpherePoint, ContinuumError> {
            let parsed = match self {
                RawPoint::Text(s) => s.parse::<SpherePoint>(),
                RawPoint::Real(x) => SpherePoint::new(*x, 0.0),
                RawPoint::Pair([re, im]) => SpherePoint::new(*re, *im),
            };
            parsed.map_err(|e| ContinuumError::InvalidSpec(format!("field `{field}`: {e}")))
        }

        pub fn to_finite(&self, field: &str) -> Result<Complex64, ContinuumError> {
            self.to_point(field)?
                .finite()
                .ok_or_else(|| ContinuumError::InvalidSpec(format!("field `{field}` must be a finite point")))
        }

        pub fn from_point(p: SpherePoint) -> Self {
            match p {
                SpherePoint::Infinity => RawPoint::Text("inf".into()),
                SpherePoint::Finite(z) => RawPoint::Pair([z.re, z.im]),
            }
        }
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct RawLevel {
        pub level: u32,
        pub points: Vec<RawPoint>,
        pub mesh: f64,
        pub connectivity: f64,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
    pub enum RawSpec {
        Singleton { p: RawPoint },
        Segment { a: RawPoint, b: RawPoint },
        Circle { center: RawPoint, radius: f64 },
        Polyline { nodes: Vec<RawPoint> },
        Custom { levels: Vec<RawLevel> },
    }

    impl RawSpec {
        pub fn into_spec(self) -> Result<ContinuumSpec, ContinuumError> {
            Ok(match self {
                RawSpec::Singleton { p } => ContinuumSpec::Singleton(p.to_point("p")?),
                RawSpec::Segment { a, b } => ContinuumSpec::Segment(a.to_finite("a")?, b.to_finite("b")?),
                RawSpec::Circle { center, radius } => ContinuumSpec::Circle {
                    center: center.to_finite("center")?,
                    radius,
                },
                RawSpec::Polyline { nodes } => ContinuumSpec::Polyline(
                    nodes
                        .iter()
                        .enumerate()
                        .map(|(i, p)| p.to_finite(&format!("nodes[{i}]")))
                        .collect::<Result<_, _>>()?,
                ),
                RawSpec::Custom { levels } => {
                    let mut out = Vec::with_capacity(levels.len());
                    for (li, l) in levels.into_iter().enumerate() {
                        let mut points = PointSet::new();
                        for (pi, p) in l.points.iter().enumerate() {
                            points.insert(p.to_point(&format!("levels[{li}].points[{pi}]"))?);
                        }
                        out.push(NetLevel {
                            level: l.level,
                            points,
                            mesh: l.mesh,
                            connectivity: l.connectivity,
                        });
                    }
                    ContinuumSpec::Custom(out)
                }
            })
        }

        pub fn from_spec(spec: &ContinuumSpec) -> Self {
            let fin = |z: &Complex64| RawPoint::from_point(SpherePoint::Finite(*z));
            match spec {
                ContinuumSpec::Singleton(p) => RawSpec::Singleton {
                    p: RawPoint::from_point(*p),
                },
                ContinuumSpec::Segment(a, b) => RawSpec::Segment { a: fin(a), b: fin(b) },
                ContinuumSpec::Circle { center, radius } => RawSpec::Circle {
                    center: fin(center),
                    radius: *radius,
                },
                ContinuumSpec::Polyline(nodes) => RawSpec::Polyline {
                    nodes: nodes.iter().map(fin).collect(),
                },
                ContinuumSpec::Custom(levels) => RawSpec::Custom {
                    levels: levels
                        .iter()
                        .map(|l| RawLevel {
                            level: l.level,
                            points: l.points.iter().map(|p| RawPoint::from_point(*p)).collect(),
                            mesh: l.mesh,
                            connectivity: l.connectivity,
                        })
                        .collect(),
                },
            }
        }
    }
}
