//! The random metric d_ω, ω-geodesics, and distances on the metric
//! realization, where every edge is a real interval of length ω(e).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, GraphError, VertexId};
use crate::percolation::WeightAssignment;

/// Offsets within this much of an edge end snap to the vertex.
const OFFSET_TOL: f64 = 1e-9;
/// Relative slack used when matching floating sums along geodesics.
const TIE_EPS: f64 = 1e-12;
/// Largest sample accepted by [`four_point_delta`].
pub const FOUR_POINT_MAX: usize = 120;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no path between {0} and {1}")]
    NoPath(VertexId, VertexId),
    #[error("offset {offset} outside edge {edge} of length {length}")]
    StaleOffset { edge: EdgeId, offset: f64, length: f64 },
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(VertexId, VertexId),
    #[error("weights cover {weights} edges, graph has {edges}")]
    WeightMismatch { weights: usize, edges: usize },
    #[error("inconsistent input: {0}")]
    Consistency(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    v: VertexId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    // Reversed so the max-heap pops the smallest (dist, id).
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path tree from one source (or a set of sources).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceField {
    pub source: VertexId,
    /// `f64::INFINITY` marks unreachable vertices.
    pub dist: Vec<f64>,
    /// Predecessor on the chosen geodesic; among equal candidates the
    /// smallest predecessor id wins.
    pub parent: Vec<Option<(VertexId, EdgeId)>>,
}

impl DistanceField {
    pub fn reachable(&self, v: VertexId) -> bool {
        self.dist[v].is_finite()
    }

    /// Vertex sequence from the source to `v` along parent links.
    pub fn path_to(&self, v: VertexId) -> Option<Vec<VertexId>> {
        if !self.reachable(v) {
            return None;
        }
        let mut out = vec![v];
        let mut x = v;
        while let Some((p, _)) = self.parent[x] {
            out.push(p);
            x = p;
        }
        out.reverse();
        Some(out)
    }
}

fn check_weights(g: &Graph, w: &WeightAssignment) -> Result<(), MetricError> {
    if w.len() != g.edge_count() {
        return Err(MetricError::WeightMismatch { weights: w.len(), edges: g.edge_count() });
    }
    Ok(())
}

/// Dijkstra from every vertex of `sources` at once.
pub fn multi_source(g: &Graph, w: &WeightAssignment, sources: &[VertexId]) -> Result<DistanceField, MetricError> {
    check_weights(g, w)?;
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<(VertexId, EdgeId)>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        g.check_vertex(s)?;
        dist[s] = 0.0;
        heap.push(HeapItem { dist: 0.0, v: s });
    }
    while let Some(HeapItem { dist: d, v: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, e) in g.neighbors(u) {
            if done[v] {
                continue;
            }
            let nd = d + w.get(e);
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some((u, e));
                heap.push(HeapItem { dist: nd, v });
            } else if nd == dist[v] && parent[v].is_some_and(|(p, _)| u < p) {
                parent[v] = Some((u, e));
            }
        }
    }
    Ok(DistanceField { source: sources.first().copied().unwrap_or(0), dist, parent })
}

pub fn single_source(g: &Graph, w: &WeightAssignment, o: VertexId) -> Result<DistanceField, MetricError> {
    multi_source(g, w, &[o])
}

/// A path together with its ω-length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
    pub omega_length: f64,
}

impl GeodesicPath {
    pub fn start(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn end(&self) -> VertexId {
        self.vertices[self.vertices.len() - 1]
    }
}

/// |γ|_ω for a vertex sequence. A closed cycle is passed with its first
/// vertex repeated at the end.
pub fn path_omega_length(g: &Graph, w: &WeightAssignment, path: &[VertexId]) -> Result<f64, MetricError> {
    check_weights(g, w)?;
    let mut total = 0.0;
    for pair in path.windows(2) {
        let e = g.find_edge(pair[0], pair[1]).ok_or(MetricError::NotAdjacent(pair[0], pair[1]))?;
        total += w.get(e);
    }
    Ok(total)
}

/// Sum of ω over explicit edge ids.
pub fn edges_omega_length(w: &WeightAssignment, edges: &[EdgeId]) -> Result<f64, MetricError> {
    edges
        .iter()
        .map(|&e| if e < w.len() { Ok(w.get(e)) } else { Err(MetricError::UnknownEdge(e)) })
        .sum()
}

/// Lexicographically smallest geodesic from `x`, walking down the distance
/// field of the target.
fn greedy_geodesic(
    g: &Graph,
    w: &WeightAssignment,
    to_target: &DistanceField,
    x: VertexId,
) -> Result<GeodesicPath, MetricError> {
    let y = to_target.source;
    if !to_target.reachable(x) {
        return Err(MetricError::NoPath(x, y));
    }
    let mut vertices = vec![x];
    let mut edges = Vec::new();
    let mut u = x;
    while u != y {
        let du = to_target.dist[u];
        let slack = TIE_EPS * du;
        let step = g
            .neighbors(u)
            .iter()
            .find(|&&(v, e)| to_target.dist[v] < du && to_target.dist[v] + w.get(e) <= du + slack)
            .copied();
        let Some((v, e)) = step else {
            return Err(MetricError::Consistency(format!("no tight edge out of vertex {u}")));
        };
        vertices.push(v);
        edges.push(e);
        u = v;
    }
    let omega_length = edges.iter().map(|&e| w.get(e)).sum();
    Ok(GeodesicPath { vertices, edges, omega_length })
}

pub fn omega_distance(g: &Graph, w: &WeightAssignment, x: VertexId, y: VertexId) -> Result<f64, MetricError> {
    g.check_vertex(y)?;
    let f = single_source(g, w, x)?;
    if f.reachable(y) {
        Ok(f.dist[y])
    } else {
        Err(MetricError::NoPath(x, y))
    }
}

/// Among geodesics from `x` to `y`, the one with the lexicographically
/// smallest vertex sequence.
pub fn omega_geodesic(g: &Graph, w: &WeightAssignment, x: VertexId, y: VertexId) -> Result<GeodesicPath, MetricError> {
    g.check_vertex(x)?;
    let f = single_source(g, w, y)?;
    greedy_geodesic(g, w, &f, x)
}

/// A point of the metric realization: a vertex, or a point inside an edge
/// at `offset` from the edge's smaller-id endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum RealizationPoint {
    Vertex { vertex: VertexId },
    Edge { edge: EdgeId, offset: f64 },
}

impl RealizationPoint {
    pub fn vertex(v: VertexId) -> Self {
        RealizationPoint::Vertex { vertex: v }
    }

    pub fn on_edge(edge: EdgeId, offset: f64) -> Self {
        RealizationPoint::Edge { edge, offset }
    }

    /// Checks the offset and snaps edge ends to the vertex form.
    pub fn normalize(self, g: &Graph, w: &WeightAssignment) -> Result<Self, MetricError> {
        match self {
            RealizationPoint::Vertex { vertex } => {
                g.check_vertex(vertex)?;
                Ok(self)
            }
            RealizationPoint::Edge { edge, offset } => {
                if edge >= g.edge_count() || edge >= w.len() {
                    return Err(MetricError::UnknownEdge(edge));
                }
                let length = w.get(edge);
                let tol = OFFSET_TOL * length.max(1.0);
                if !(offset >= -tol && offset <= length + tol) {
                    return Err(MetricError::StaleOffset { edge, offset, length });
                }
                let e = g.edge(edge);
                Ok(if offset <= 0.0 {
                    RealizationPoint::vertex(e.u)
                } else if offset >= length {
                    RealizationPoint::vertex(e.v)
                } else {
                    self
                })
            }
        }
    }

    /// (vertex, distance) pairs through which a path leaves the point.
    fn exits(self, g: &Graph, w: &WeightAssignment) -> Vec<(VertexId, f64)> {
        match self {
            RealizationPoint::Vertex { vertex } => vec![(vertex, 0.0)],
            RealizationPoint::Edge { edge, offset } => {
                let e = g.edge(edge);
                vec![(e.u, offset), (e.v, w.get(edge) - offset)]
            }
        }
    }

    fn sort_key(self) -> (usize, usize, f64) {
        match self {
            RealizationPoint::Vertex { vertex } => (0, vertex, 0.0),
            RealizationPoint::Edge { edge, offset } => (1, edge, offset),
        }
    }
}

/// A sub-interval of one edge, in offsets from the edge's smaller endpoint.
/// `from > to` means the piece is traversed towards the smaller endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Piece {
    pub edge: EdgeId,
    pub from: f64,
    pub to: f64,
}

impl Piece {
    pub fn length(&self) -> f64 {
        (self.to - self.from).abs()
    }

    fn reversed(self) -> Self {
        Piece { edge: self.edge, from: self.to, to: self.from }
    }

    fn contains(&self, g: &Graph, w: &WeightAssignment, p: RealizationPoint) -> bool {
        let (lo, hi) = (self.from.min(self.to), self.from.max(self.to));
        let tol = TIE_EPS * w.get(self.edge).max(1.0);
        match p {
            RealizationPoint::Edge { edge, offset } => edge == self.edge && offset >= lo - tol && offset <= hi + tol,
            RealizationPoint::Vertex { vertex } => {
                let e = g.edge(self.edge);
                (vertex == e.u && lo <= tol) || (vertex == e.v && hi >= w.get(self.edge) - tol)
            }
        }
    }

    fn point_at(&self, t: f64) -> RealizationPoint {
        RealizationPoint::on_edge(self.edge, self.from + (self.to - self.from) * t)
    }
}

/// A geodesic between two realization points, as a chain of edge pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedGeodesic {
    pub start: RealizationPoint,
    pub end: RealizationPoint,
    pub pieces: Vec<Piece>,
    pub length: f64,
}

impl RealizedGeodesic {
    fn reversed(&self) -> Self {
        RealizedGeodesic {
            start: self.end,
            end: self.start,
            pieces: self.pieces.iter().rev().map(|p| p.reversed()).collect(),
            length: self.length,
        }
    }

    /// The point at arc length `s` from the start.
    pub fn point_at(&self, g: &Graph, w: &WeightAssignment, s: f64) -> Result<RealizationPoint, MetricError> {
        let mut left = s.clamp(0.0, self.length);
        for p in &self.pieces {
            let len = p.length();
            if left <= len {
                let t = if len > 0.0 { left / len } else { 0.0 };
                return p.point_at(t).normalize(g, w);
            }
            left -= len;
        }
        Ok(self.end)
    }

    /// Arc-length samples at step ≤ h, including every piece endpoint.
    pub fn samples(&self, g: &Graph, w: &WeightAssignment, h: f64) -> Result<Vec<RealizationPoint>, MetricError> {
        let mut out = vec![self.start];
        for p in &self.pieces {
            let k = (p.length() / h).ceil().max(1.0) as usize;
            for i in 1..=k {
                out.push(p.point_at(i as f64 / k as f64).normalize(g, w)?);
            }
        }
        if self.pieces.is_empty() {
            out.push(self.end);
        }
        Ok(out)
    }

    /// Vertices the geodesic passes through, in order.
    pub fn vertices(&self, g: &Graph, w: &WeightAssignment) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = Vec::new();
        let mut push = |p: RealizationPoint| {
            if let Ok(RealizationPoint::Vertex { vertex }) = p.normalize(g, w) {
                if out.last() != Some(&vertex) {
                    out.push(vertex);
                }
            }
        };
        push(self.start);
        for p in &self.pieces {
            push(RealizationPoint::on_edge(p.edge, p.from));
            push(RealizationPoint::on_edge(p.edge, p.to));
        }
        out
    }
}

/// d_ω with per-source distance fields memoised. Not `Sync`: each task owns
/// its own cache.
pub struct Metric<'a> {
    g: &'a Graph,
    w: &'a WeightAssignment,
    fields: RefCell<HashMap<VertexId, Rc<DistanceField>>>,
}

impl<'a> Metric<'a> {
    pub fn new(g: &'a Graph, w: &'a WeightAssignment) -> Result<Self, MetricError> {
        check_weights(g, w)?;
        Ok(Metric { g, w, fields: RefCell::new(HashMap::new()) })
    }

    pub fn graph(&self) -> &'a Graph {
        self.g
    }

    pub fn weights(&self) -> &'a WeightAssignment {
        self.w
    }

    pub fn field(&self, v: VertexId) -> Result<Rc<DistanceField>, MetricError> {
        if let Some(f) = self.fields.borrow().get(&v) {
            return Ok(Rc::clone(f));
        }
        let f = Rc::new(single_source(self.g, self.w, v)?);
        self.fields.borrow_mut().insert(v, Rc::clone(&f));
        Ok(f)
    }

    pub fn distance(&self, x: VertexId, y: VertexId) -> Result<f64, MetricError> {
        self.g.check_vertex(x)?;
        let d = self.field(y)?.dist[x];
        if d.is_finite() {
            Ok(d)
        } else {
            Err(MetricError::NoPath(x, y))
        }
    }

    pub fn geodesic(&self, x: VertexId, y: VertexId) -> Result<GeodesicPath, MetricError> {
        self.g.check_vertex(x)?;
        let f = self.field(y)?;
        greedy_geodesic(self.g, self.w, &f, x)
    }

    fn point_to_vertex(&self, p: RealizationPoint, x: VertexId) -> Result<f64, MetricError> {
        let f = self.field(x)?;
        let d = p
            .exits(self.g, self.w)
            .into_iter()
            .map(|(v, c)| c + f.dist[v])
            .fold(f64::INFINITY, f64::min);
        Ok(d)
    }

    /// Exact distance on the metric realization.
    pub fn point_distance(&self, p: RealizationPoint, q: RealizationPoint) -> Result<f64, MetricError> {
        let p = p.normalize(self.g, self.w)?;
        let q = q.normalize(self.g, self.w)?;
        let mut best = f64::INFINITY;
        if let (RealizationPoint::Edge { edge: a, offset: s }, RealizationPoint::Edge { edge: b, offset: t }) = (p, q) {
            if a == b {
                best = (s - t).abs();
            }
        }
        for (v, c) in q.exits(self.g, self.w) {
            best = best.min(self.point_to_vertex(p, v)? + c);
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(MetricError::Consistency("points lie in different components".into()))
        }
    }

    /// Geodesic between realization points. The route is computed from the
    /// smaller endpoint so that both orientations give the same curve.
    pub fn realized_geodesic(&self, p: RealizationPoint, q: RealizationPoint) -> Result<RealizedGeodesic, MetricError> {
        let p = p.normalize(self.g, self.w)?;
        let q = q.normalize(self.g, self.w)?;
        let flip = p.sort_key().partial_cmp(&q.sort_key()) == Some(Ordering::Greater);
        let (a, b) = if flip { (q, p) } else { (p, q) };
        let forward = self.route(a, b)?;
        Ok(if flip { forward.reversed() } else { forward })
    }

    fn route(&self, p: RealizationPoint, q: RealizationPoint) -> Result<RealizedGeodesic, MetricError> {
        if p == q {
            return Ok(RealizedGeodesic { start: p, end: q, pieces: Vec::new(), length: 0.0 });
        }
        enum Choice {
            Direct,
            Via(usize, usize),
        }
        let (pe, qe) = (p.exits(self.g, self.w), q.exits(self.g, self.w));
        let mut best = (f64::INFINITY, Choice::Direct);
        if let (RealizationPoint::Edge { edge: a, offset: s }, RealizationPoint::Edge { edge: b, offset: t }) = (p, q) {
            if a == b {
                best.0 = (s - t).abs();
            }
        }
        for (i, &(u, cu)) in pe.iter().enumerate() {
            for (j, &(v, cv)) in qe.iter().enumerate() {
                let total = cu + self.field(v)?.dist[u] + cv;
                if total < best.0 - TIE_EPS * best.0.min(1e300) {
                    best = (total, Choice::Via(i, j));
                }
            }
        }
        if !best.0.is_finite() {
            return Err(MetricError::Consistency("points lie in different components".into()));
        }
        let mut pieces = Vec::new();
        match best.1 {
            Choice::Direct => {
                if let (RealizationPoint::Edge { edge, offset: s }, RealizationPoint::Edge { offset: t, .. }) = (p, q) {
                    pieces.push(Piece { edge, from: s, to: t });
                }
            }
            Choice::Via(i, j) => {
                let (u, v) = (pe[i].0, qe[j].0);
                if let RealizationPoint::Edge { edge, offset } = p {
                    let end = if u == self.g.edge(edge).u { 0.0 } else { self.w.get(edge) };
                    pieces.push(Piece { edge, from: offset, to: end });
                }
                let path = self.geodesic(u, v)?;
                for (k, &e) in path.edges.iter().enumerate() {
                    let forward = path.vertices[k] == self.g.edge(e).u;
                    let len = self.w.get(e);
                    pieces.push(if forward {
                        Piece { edge: e, from: 0.0, to: len }
                    } else {
                        Piece { edge: e, from: len, to: 0.0 }
                    });
                }
                if let RealizationPoint::Edge { edge, offset } = q {
                    let start = if v == self.g.edge(edge).u { 0.0 } else { self.w.get(edge) };
                    pieces.push(Piece { edge, from: start, to: offset });
                }
            }
        }
        let length = pieces.iter().map(Piece::length).sum();
        Ok(RealizedGeodesic { start: p, end: q, pieces, length })
    }

    /// Exact distance from a point to the union of a geodesic's pieces.
    pub fn distance_to_curve(&self, p: RealizationPoint, curve: &RealizedGeodesic) -> Result<f64, MetricError> {
        let p = p.normalize(self.g, self.w)?;
        if curve.pieces.iter().any(|pc| pc.contains(self.g, self.w, p)) {
            return Ok(0.0);
        }
        // From outside, an interval is first reached at one of its ends.
        let mut best = self.point_distance(p, curve.start)?.min(self.point_distance(p, curve.end)?);
        for pc in &curve.pieces {
            for end in [pc.from, pc.to] {
                best = best.min(self.point_distance(p, RealizationPoint::on_edge(pc.edge, end))?);
            }
        }
        Ok(best)
    }

    pub fn triangle(
        &self,
        a: RealizationPoint,
        b: RealizationPoint,
        c: RealizationPoint,
        h: Option<f64>,
    ) -> Result<TriangleReport, MetricError> {
        let corners = [
            a.normalize(self.g, self.w)?,
            b.normalize(self.g, self.w)?,
            c.normalize(self.g, self.w)?,
        ];
        let sides = [
            self.realized_geodesic(corners[0], corners[1])?,
            self.realized_geodesic(corners[1], corners[2])?,
            self.realized_geodesic(corners[2], corners[0])?,
        ];
        let resolution = match h {
            Some(h) if h > 0.0 && h.is_finite() => h,
            Some(h) => return Err(MetricError::Parameter(format!("resolution must be positive, got {h}"))),
            None => default_resolution(self.w, &sides),
        };
        let mut side_slimness = [0.0f64; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let mut worst: f64 = 0.0;
            for s in sides[i].samples(self.g, self.w, resolution)? {
                let d = self.distance_to_curve(s, &sides[j])?.min(self.distance_to_curve(s, &sides[k])?);
                worst = worst.max(d);
            }
            side_slimness[i] = worst;
        }
        let slimness = side_slimness.iter().copied().fold(0.0, f64::max);
        let degenerate = corners[0] == corners[1] || corners[1] == corners[2] || corners[0] == corners[2];
        Ok(TriangleReport {
            kind: "triangle",
            corners,
            sides: sides.to_vec(),
            side_slimness,
            slimness,
            resolution,
            degenerate,
        })
    }
}

/// 0.05 × the smallest edge weight on the sides, but never below 1e-3.
fn default_resolution(w: &WeightAssignment, sides: &[RealizedGeodesic]) -> f64 {
    let min_edge = sides
        .iter()
        .flat_map(|s| s.pieces.iter().map(|p| w.get(p.edge)))
        .fold(f64::INFINITY, f64::min);
    if min_edge.is_finite() {
        (0.05 * min_edge).max(1e-3)
    } else {
        1e-3
    }
}

/// Sides are `[a,b]`, `[b,c]`, `[c,a]`; `side_slimness[i]` is the largest
/// sampled distance from side i to the union of the other two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleReport {
    pub kind: &'static str,
    pub corners: [RealizationPoint; 3],
    pub sides: Vec<RealizedGeodesic>,
    pub side_slimness: [f64; 3],
    pub slimness: f64,
    pub resolution: f64,
    pub degenerate: bool,
}

pub fn realization_distance(
    g: &Graph,
    w: &WeightAssignment,
    p: RealizationPoint,
    q: RealizationPoint,
) -> Result<f64, MetricError> {
    Metric::new(g, w)?.point_distance(p, q)
}

/// Slimness of the geodesic triangle with the given corners. `h = None`
/// picks the default resolution.
pub fn triangle_slimness(
    g: &Graph,
    w: &WeightAssignment,
    a: RealizationPoint,
    b: RealizationPoint,
    c: RealizationPoint,
    h: Option<f64>,
) -> Result<TriangleReport, MetricError> {
    Metric::new(g, w)?.triangle(a, b, c, h)
}

/// Checks symmetry, zero diagonal and the triangle inequality.
pub fn validate_distance_matrix(dist: &[Vec<f64>]) -> Result<(), MetricError> {
    let n = dist.len();
    let scale = dist.iter().flatten().copied().fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(MetricError::Consistency(format!("row {i} has {} entries, expected {n}", row.len())));
        }
        if row[i].abs() > tol {
            return Err(MetricError::Consistency(format!("nonzero diagonal at {i}")));
        }
        for j in 0..n {
            if !(row[j] >= 0.0 && row[j].is_finite()) || (row[j] - dist[j][i]).abs() > tol {
                return Err(MetricError::Consistency(format!("entry ({i},{j}) negative or asymmetric")));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if dist[i][k] > dist[i][j] + dist[j][k] + tol {
                    return Err(MetricError::Consistency(format!("triangle inequality fails at ({i},{j},{k})")));
                }
            }
        }
    }
    Ok(())
}

/// Gromov four-point constant: max over quadruples of (L₁ − L₂)/2 where
/// L₁ ≥ L₂ are the two largest of the three pair sums.
pub fn four_point_delta(dist: &[Vec<f64>]) -> Result<f64, MetricError> {
    let n = dist.len();
    if n > FOUR_POINT_MAX {
        return Err(MetricError::Parameter(format!("sample of {n} exceeds {FOUR_POINT_MAX} points")));
    }
    validate_distance_matrix(dist)?;
    let mut delta: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            for z in y + 1..n {
                for t in z + 1..n {
                    let mut s = [
                        dist[x][y] + dist[z][t],
                        dist[x][z] + dist[y][t],
                        dist[x][t] + dist[y][z],
                    ];
                    s.sort_by(|a, b| b.total_cmp(a));
                    delta = delta.max((s[0] - s[1]) / 2.0);
                }
            }
        }
    }
    Ok(delta)
}

/// d_ω restricted to `sample`, as a dense matrix.
pub fn distance_matrix(g: &Graph, w: &WeightAssignment, sample: &[VertexId]) -> Result<Vec<Vec<f64>>, MetricError> {
    let mut out = Vec::with_capacity(sample.len());
    for &x in sample {
        let f = single_source(g, w, x)?;
        out.push(
            sample
                .iter()
                .map(|&y| if f.reachable(y) { Ok(f.dist[y]) } else { Err(MetricError::NoPath(x, y)) })
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    // Dijkstra sums in different orders from each end; force exact symmetry.
    for i in 0..out.len() {
        for j in 0..i {
            let m = out[i][j].min(out[j][i]);
            out[i][j] = m;
            out[j][i] = m;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_cycle_gadget, build_free_group, build_lattice, Family, GadgetPlan};

    fn path_graph(weights: &[f64]) -> (Graph, WeightAssignment) {
        let n = weights.len() + 1;
        let labels = (0..n).map(|i| format!("v{i}")).collect();
        let edges: Vec<_> = (0..weights.len()).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges("path", Family::Gadget, labels, &edges, 0).unwrap();
        let w = WeightAssignment::from_values(&g, weights.to_vec()).unwrap();
        (g, w)
    }

    fn cycle(weights: &[f64]) -> (Graph, WeightAssignment) {
        let g = build_cycle_gadget(GadgetPlan::Cycle(weights.len())).unwrap();
        // edge i joins i and i+1; the last joins 0 and n-1
        let w = WeightAssignment::from_values(&g, weights.to_vec()).unwrap();
        (g, w)
    }

    #[test]
    fn path_distances() {
        let (g, w) = path_graph(&[2.0, 3.0]);
        assert_eq!(single_source(&g, &w, 0).unwrap().dist, vec![0.0, 2.0, 5.0]);
    }

    #[test]
    fn heavy_edge_is_avoided() {
        let (g, w) = cycle(&[1.0, 1.0, 1.0, 10.0]);
        assert_eq!(omega_distance(&g, &w, 0, 3).unwrap(), 3.0);
        assert_eq!(omega_geodesic(&g, &w, 3, 0).unwrap().vertices, vec![3, 2, 1, 0]);
    }

    #[test]
    fn lexicographic_tie_break() {
        let (g, w) = cycle(&[1.0; 4]);
        assert_eq!(omega_geodesic(&g, &w, 0, 2).unwrap().vertices, vec![0, 1, 2]);
        assert_eq!(omega_geodesic(&g, &w, 2, 0).unwrap().vertices, vec![2, 1, 0]);
        let x = omega_geodesic(&g, &w, 1, 1).unwrap();
        assert_eq!((x.vertices, x.omega_length), (vec![1], 0.0));
    }

    #[test]
    fn unreachable_is_reported() {
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let g = Graph::from_edges("split", Family::Gadget, labels, &[(0, 1)], 0).unwrap();
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        assert!(single_source(&g, &w, 0).unwrap().dist[2].is_infinite());
        assert_eq!(omega_distance(&g, &w, 0, 2), Err(MetricError::NoPath(0, 2)));
        assert!(omega_geodesic(&g, &w, 0, 2).is_err());
    }

    #[test]
    fn path_lengths() {
        let (g, w) = cycle(&[1.0, 2.0, 3.0]);
        assert_eq!(path_omega_length(&g, &w, &[0, 1, 2, 0]).unwrap(), 6.0);
        assert_eq!(path_omega_length(&g, &w, &[]).unwrap(), 0.0);
        let (p, pw) = path_graph(&[1.0, 1.0]);
        assert_eq!(path_omega_length(&p, &pw, &[0, 2]), Err(MetricError::NotAdjacent(0, 2)));
    }

    #[test]
    fn realization_on_unit_square() {
        let (g, w) = cycle(&[1.0; 4]);
        let e01 = g.find_edge(0, 1).unwrap();
        let e23 = g.find_edge(2, 3).unwrap();
        let p = RealizationPoint::on_edge(e01, 0.25);
        let q = RealizationPoint::on_edge(e23, 0.5);
        // Four candidates: 0.25+1+0.5, 0.25+2+0.5, 0.75+1+0.5, 0.75+2+0.5... via
        // 1→2 costs 1: 0.75 + 1 + 0.5 = 2.25; via 0→3: 0.25 + 1 + 0.5 = 1.75.
        assert!((realization_distance(&g, &w, p, q).unwrap() - 1.75).abs() < 1e-12);
        assert_eq!(realization_distance(&g, &w, p, q), realization_distance(&g, &w, q, p));
        let v = RealizationPoint::vertex(2);
        assert_eq!(realization_distance(&g, &w, v, v).unwrap(), 0.0);
    }

    #[test]
    fn realization_same_edge() {
        // Heavy edge of weight 5 closing a cycle whose other side costs 3.
        let (g, w) = cycle(&[1.0, 1.0, 1.0, 5.0]);
        let e = g.find_edge(0, 3).unwrap();
        let p = RealizationPoint::on_edge(e, 1.0);
        let q = RealizationPoint::on_edge(e, 4.0);
        assert_eq!(realization_distance(&g, &w, p, q).unwrap(), 3.0);
        let q = RealizationPoint::on_edge(e, 4.5);
        // 1 + 3 + 0.5 beats 3.5 along the edge? no: 4.5 > 3.5
        assert_eq!(realization_distance(&g, &w, p, q).unwrap(), 3.5);
    }

    #[test]
    fn stale_offset_rejected() {
        let (g, w) = cycle(&[1.0; 4]);
        let p = RealizationPoint::on_edge(0, 1.5);
        assert!(matches!(
            realization_distance(&g, &w, p, RealizationPoint::vertex(0)),
            Err(MetricError::StaleOffset { .. })
        ));
        assert_eq!(RealizationPoint::on_edge(0, 0.0).normalize(&g, &w).unwrap(), RealizationPoint::vertex(0));
        assert_eq!(RealizationPoint::on_edge(0, 1.0).normalize(&g, &w).unwrap(), RealizationPoint::vertex(1));
    }

    #[test]
    fn circle_triangle_slimness() {
        let g = build_cycle_gadget(GadgetPlan::Cycle(12)).unwrap();
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        let v = RealizationPoint::vertex;
        let r = triangle_slimness(&g, &w, v(0), v(4), v(8), Some(0.01)).unwrap();
        assert!((r.slimness - 2.0).abs() <= 0.01, "{}", r.slimness);
        assert!(!r.degenerate);
        for s in &r.sides {
            assert!((s.length - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_triangle() {
        let g = build_lattice(2, 3).unwrap();
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        let v = RealizationPoint::vertex;
        let r = triangle_slimness(&g, &w, v(0), v(0), v(5), None).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.slimness, 0.0);
    }

    #[test]
    fn tree_triangles_are_thin() {
        let g = build_free_group(2, 3).unwrap();
        let w = WeightAssignment::from_values(
            &g,
            (0..g.edge_count()).map(|i| 0.5 + (i % 7) as f64 * 0.25).collect(),
        )
        .unwrap();
        let e = g.edge(3).id;
        let a = RealizationPoint::on_edge(e, 0.3);
        let r = triangle_slimness(&g, &w, a, RealizationPoint::vertex(20), RealizationPoint::vertex(40), None).unwrap();
        assert!(r.slimness <= r.resolution, "{}", r.slimness);
    }

    #[test]
    fn sides_do_not_depend_on_orientation() {
        let g = build_lattice(2, 3).unwrap();
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        let m = Metric::new(&g, &w).unwrap();
        let (p, q) = (RealizationPoint::vertex(3), RealizationPoint::on_edge(10, 0.4));
        let ab = m.realized_geodesic(p, q).unwrap();
        let ba = m.realized_geodesic(q, p).unwrap();
        assert_eq!(ab.reversed(), ba);
        assert!((ab.length - m.point_distance(p, q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn four_point_examples() {
        let sq = vec![
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 2.0, 1.0, 0.0],
        ];
        assert_eq!(four_point_delta(&sq).unwrap(), 1.0);
        assert_eq!(four_point_delta(&sq[..3].iter().map(|r| r[..3].to_vec()).collect::<Vec<_>>()).unwrap(), 0.0);
        let mut bad = sq.clone();
        bad[0][2] = 5.0;
        bad[2][0] = 5.0;
        assert!(matches!(four_point_delta(&bad), Err(MetricError::Consistency(_))));
        let mut asym = sq;
        asym[0][1] = 1.5;
        assert!(four_point_delta(&asym).is_err());
        let big = vec![vec![0.0; 121]; 121];
        assert!(matches!(four_point_delta(&big), Err(MetricError::Parameter(_))));
    }

    #[test]
    fn tree_metric_four_point_is_zero() {
        let g = build_free_group(2, 3).unwrap();
        let w = WeightAssignment::from_values(&g, (0..g.edge_count()).map(|i| 1.0 + (i % 5) as f64).collect()).unwrap();
        let sample: Vec<_> = (0..g.vertex_count()).step_by(3).collect();
        let d = distance_matrix(&g, &w, &sample).unwrap();
        assert!(four_point_delta(&d).unwrap() <= 1e-9);
    }
}
