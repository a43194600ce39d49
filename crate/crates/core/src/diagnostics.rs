//! Finite-scale audits of the random metric: non-slim triangle witnesses on
//! cycles with a long edge, hyperbolicity scans, CAT(0) threshold audits,
//! Morse detour events, radial fits, ω-velocities, shrink probabilities and
//! lateral-shift comparisons.
//!
//! Every report is a deterministic function of its inputs and serializes
//! with a `kind` field.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::words::Group;
use crate::graph::{
    cycle_edges, find_disjoint_cycles, parse_coord_label, CycleSet, EdgeId, Family, Graph, GraphError, MarkedRay,
    VertexId,
};
use crate::metric::{
    distance_matrix, four_point_delta, multi_source, single_source, Metric, MetricError, Piece, RealizationPoint,
    RealizedGeodesic,
};
use crate::percolation::{sample_weights, DistributionSpec, PercolationError, WeightAssignment};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Percolation(#[from] PercolationError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("fit failed: {0}")]
    Fit(String),
}

type Result<T> = std::result::Result<T, DiagnosticsError>;

fn param(msg: impl Into<String>) -> DiagnosticsError {
    DiagnosticsError::Parameter(msg.into())
}

/// Vertices within unit distance `radius` of the base, in id order.
pub fn core_vertices(g: &Graph, radius: Option<usize>) -> Vec<VertexId> {
    match radius {
        None => g.vertices().collect(),
        Some(r) => {
            let d = g.bfs(g.base());
            g.vertices().filter(|&v| d[v].is_some_and(|x| x <= r)).collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Non-slim witnesses

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WitnessCase {
    /// The long edge is not an ω-geodesic between its endpoints.
    Case1,
    /// The long edge is itself an ω-geodesic.
    Case2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonSlimWitness {
    pub kind: &'static str,
    pub cycle: Vec<VertexId>,
    pub edge: EdgeId,
    pub edge_weight: f64,
    pub case_tag: WitnessCase,
    pub a: RealizationPoint,
    pub b: RealizationPoint,
    pub c: RealizationPoint,
    /// Slimness of side [b, c]: its sampled distance to [c, a] ∪ [a, b].
    pub measured_slimness: f64,
    /// Slimness of the whole triangle (max over the three sides).
    pub triangle_slimness: f64,
    pub target_delta: f64,
    pub resolution: f64,
}

fn check_cycle(g: &Graph, cycle: &[VertexId]) -> Result<Vec<EdgeId>> {
    if cycle.len() < 3 {
        return Err(DiagnosticsError::Precondition("a cycle needs at least 3 vertices".into()));
    }
    for &v in cycle {
        if !g.contains(v) {
            return Err(GraphError::UnknownVertex(v).into());
        }
    }
    let mut sorted = cycle.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != cycle.len() {
        return Err(DiagnosticsError::Precondition("cycle repeats a vertex".into()));
    }
    cycle_edges(g, cycle).ok_or_else(|| MetricError::Consistency("cycle is not present in the graph".into()).into())
}

/// The path `cycle[from], cycle[from+1], …` for `steps` edges, as pieces.
fn cycle_arc(g: &Graph, w: &WeightAssignment, cycle: &[VertexId], edges: &[EdgeId], from: usize, steps: usize) -> RealizedGeodesic {
    let k = cycle.len();
    let pieces: Vec<Piece> = (0..steps)
        .map(|s| {
            let i = (from + s) % k;
            let e = edges[i];
            let len = w.get(e);
            if cycle[i] == g.edge(e).u {
                Piece { edge: e, from: 0.0, to: len }
            } else {
                Piece { edge: e, from: len, to: 0.0 }
            }
        })
        .collect();
    let length = pieces.iter().map(Piece::length).sum();
    RealizedGeodesic {
        start: RealizationPoint::vertex(cycle[from % k]),
        end: RealizationPoint::vertex(cycle[(from + steps) % k]),
        pieces,
        length,
    }
}

/// Point of `path` equidistant from `p` and `q`, assuming it starts closer
/// to `q` and ends closer to `p`.
fn equidistant_point(m: &Metric, path: &RealizedGeodesic, p: VertexId, q: VertexId) -> Result<RealizationPoint> {
    let (g, w) = (m.graph(), m.weights());
    let gap = |s: f64| -> Result<f64> {
        let x = path.point_at(g, w, s)?;
        Ok(m.point_distance(x, RealizationPoint::vertex(p))? - m.point_distance(x, RealizationPoint::vertex(q))?)
    };
    let (mut lo, mut hi) = (0.0, path.length);
    for _ in 0..200 {
        if hi - lo <= 1e-13 * path.length {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(path.point_at(g, w, 0.5 * (lo + hi))?)
}

/// Builds the triangle for cycle edge `i` and returns it if it verifies.
fn witness_for_edge(
    m: &Metric,
    cycle: &[VertexId],
    edges: &[EdgeId],
    i: usize,
    delta: f64,
    h: f64,
) -> Result<Option<NonSlimWitness>> {
    let (g, w) = (m.graph(), m.weights());
    let k = cycle.len();
    let (vi, vj) = (cycle[i], cycle[(i + 1) % k]);
    let e = edges[i];
    let len = w.get(e);
    let from_vi = |s: f64| if vi == g.edge(e).u { s } else { len - s };
    let d_ends = m.distance(vi, vj)?;
    let (case_tag, a, b, c) = if d_ends < len - 1e-9 * len.max(1.0) {
        let p = m.realized_geodesic(RealizationPoint::vertex(vi), RealizationPoint::vertex(vj))?;
        let a = p.point_at(g, w, 0.5 * p.length)?;
        let b = RealizationPoint::on_edge(e, from_vi(len / 4.0)).normalize(g, w)?;
        let c = RealizationPoint::on_edge(e, from_vi(3.0 * len / 4.0)).normalize(g, w)?;
        (WitnessCase::Case1, a, b, c)
    } else {
        let rest = cycle_arc(g, w, cycle, edges, i + 1, k - 1);
        let q = equidistant_point(m, &rest, vi, vj)?;
        (WitnessCase::Case2, q, RealizationPoint::vertex(vi), RealizationPoint::vertex(vj))
    };
    let report = m.triangle(a, b, c, Some(h))?;
    let measured = report.side_slimness[1];
    if measured > delta + 1e-9 {
        Ok(Some(NonSlimWitness {
            kind: "non_slim_witness",
            cycle: cycle.to_vec(),
            edge: e,
            edge_weight: len,
            case_tag,
            a,
            b,
            c,
            measured_slimness: measured,
            triangle_slimness: report.slimness,
            target_delta: delta,
            resolution: h,
        }))
    } else {
        Ok(None)
    }
}

/// Looks for a triangle that is not δ-slim on a cycle with an edge of
/// ω-length ≥ 4δ. Edges are tried heaviest first.
pub fn witness_nonslim(g: &Graph, w: &WeightAssignment, cycle: &[VertexId], delta: f64) -> Result<Option<NonSlimWitness>> {
    witness_nonslim_in(&Metric::new(g, w)?, cycle, delta)
}

pub fn witness_nonslim_in(m: &Metric, cycle: &[VertexId], delta: f64) -> Result<Option<NonSlimWitness>> {
    witness_nonslim_at(m, cycle, delta, None)
}

/// As [`witness_nonslim_in`], verifying at resolution `min(h, δ/100)`.
pub fn witness_nonslim_at(m: &Metric, cycle: &[VertexId], delta: f64, h: Option<f64>) -> Result<Option<NonSlimWitness>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(param(format!("delta must be positive, got {delta}")));
    }
    let h = match h {
        Some(h) if h > 0.0 && h.is_finite() => h.min(delta / 100.0),
        Some(h) => return Err(param(format!("resolution must be positive, got {h}"))),
        None => delta / 100.0,
    };
    let (g, w) = (m.graph(), m.weights());
    let edges = check_cycle(g, cycle)?;
    let mut order: Vec<usize> = (0..edges.len()).filter(|&i| w.get(edges[i]) >= 4.0 * delta).collect();
    order.sort_by(|&x, &y| w.get(edges[y]).total_cmp(&w.get(edges[x])).then(edges[x].cmp(&edges[y])));
    for i in order {
        if let Some(found) = witness_for_edge(m, cycle, &edges, i, delta, h)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Hyperbolicity scan

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityParams {
    pub sample_size: usize,
    pub delta_grid: Vec<f64>,
    /// Cycles and the four-point sample are restricted to this ball.
    pub core_radius: Option<usize>,
    pub max_cycles: usize,
    /// Upper bound on the witness verification resolution; δ/100 is
    /// always applied as well.
    pub resolution: Option<f64>,
}

impl Default for HyperbolicityParams {
    fn default() -> Self {
        HyperbolicityParams {
            sample_size: 60,
            delta_grid: vec![1.0],
            core_radius: None,
            max_cycles: usize::MAX,
            resolution: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub delta: f64,
    /// Cycles with max edge ω-length ≥ 4δ.
    pub qualifying: usize,
    pub witnesses: usize,
    pub max_witness_slimness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    pub kind: &'static str,
    pub sample_size: usize,
    pub four_point_delta: f64,
    pub cycle_count: usize,
    pub cycle_lengths: Vec<usize>,
    pub cycle_max_edge: Vec<f64>,
    pub rows: Vec<DeltaRow>,
}

/// Deterministic sample: evenly spaced picks from `vertices`.
pub fn spread_sample(vertices: &[VertexId], size: usize) -> Vec<VertexId> {
    if vertices.len() <= size {
        return vertices.to_vec();
    }
    (0..size).map(|i| vertices[i * vertices.len() / size]).collect()
}

/// Disjoint cycles meeting the ball of the given radius.
pub fn core_cycles(g: &Graph, core_radius: Option<usize>, max_cycles: usize) -> CycleSet {
    let all = find_disjoint_cycles(g, usize::MAX);
    let Some(r) = core_radius else {
        let mut all = all;
        all.cycles.truncate(max_cycles);
        return all;
    };
    let d = g.bfs(g.base());
    let cycles = all
        .cycles
        .into_iter()
        .filter(|c| c.iter().any(|&v| d[v].is_some_and(|x| x <= r)))
        .take(max_cycles)
        .collect();
    CycleSet { cycles, pairwise_disjoint: true }
}

pub fn hyperbolicity_scan(g: &Graph, w: &WeightAssignment, params: &HyperbolicityParams) -> Result<HyperbolicityReport> {
    let cycles = core_cycles(g, params.core_radius, params.max_cycles);
    hyperbolicity_scan_cycles(g, w, &cycles, params)
}

/// As [`hyperbolicity_scan`] with the cycle family supplied by the caller.
pub fn hyperbolicity_scan_cycles(
    g: &Graph,
    w: &WeightAssignment,
    cycles: &CycleSet,
    params: &HyperbolicityParams,
) -> Result<HyperbolicityReport> {
    if params.sample_size > crate::metric::FOUR_POINT_MAX {
        return Err(param(format!("sample_size {} exceeds {}", params.sample_size, crate::metric::FOUR_POINT_MAX)));
    }
    if let Some(bad) = params.delta_grid.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(param(format!("delta grid entries must be positive, got {bad}")));
    }
    let sample = spread_sample(&core_vertices(g, params.core_radius), params.sample_size);
    let fp = four_point_delta(&distance_matrix(g, w, &sample)?)?;

    let m = Metric::new(g, w)?;
    let mut cycle_max_edge = Vec::with_capacity(cycles.len());
    for c in &cycles.cycles {
        let edges = check_cycle(g, c)?;
        cycle_max_edge.push(edges.iter().map(|&e| w.get(e)).fold(0.0, f64::max));
    }
    let mut rows = Vec::with_capacity(params.delta_grid.len());
    for &delta in &params.delta_grid {
        let mut row = DeltaRow { delta, qualifying: 0, witnesses: 0, max_witness_slimness: None };
        for (c, &mx) in cycles.cycles.iter().zip(&cycle_max_edge) {
            if mx < 4.0 * delta {
                continue;
            }
            row.qualifying += 1;
            if let Some(wit) = witness_nonslim_at(&m, c, delta, params.resolution)? {
                row.witnesses += 1;
                let s = row.max_witness_slimness.map_or(wit.measured_slimness, |x| x.max(wit.measured_slimness));
                row.max_witness_slimness = Some(s);
            }
        }
        rows.push(row);
    }
    Ok(HyperbolicityReport {
        kind: "hyperbolicity",
        sample_size: sample.len(),
        four_point_delta: fp,
        cycle_count: cycles.len(),
        cycle_lengths: cycles.cycles.iter().map(Vec::len).collect(),
        cycle_max_edge,
        rows,
    })
}

/// Four-point δ of an evenly spread sample of each ball B(base, r).
pub fn four_point_by_radius(
    g: &Graph,
    w: &WeightAssignment,
    radii: &[usize],
    sample_size: usize,
) -> Result<Vec<(usize, f64)>> {
    if sample_size > crate::metric::FOUR_POINT_MAX {
        return Err(param(format!("sample_size {sample_size} exceeds {}", crate::metric::FOUR_POINT_MAX)));
    }
    radii
        .iter()
        .map(|&r| {
            let sample = spread_sample(&core_vertices(g, Some(r)), sample_size);
            Ok((r, four_point_delta(&distance_matrix(g, w, &sample)?)?))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CAT(0) cycle audit

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cat0Violation {
    pub cycle_index: usize,
    pub edge: EdgeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cat0Report {
    pub kind: &'static str,
    pub q: f64,
    pub big_q: f64,
    /// 2q + Q.
    pub threshold: f64,
    pub cycles_checked: usize,
    pub violations: Vec<Cat0Violation>,
    pub violating_cycles: Vec<usize>,
}

impl Cat0Report {
    pub fn violation_count(&self) -> usize {
        self.violations.len()
    }
}

pub fn cat0_cycle_audit(g: &Graph, w: &WeightAssignment, q: f64, big_q: f64) -> Result<Cat0Report> {
    cat0_audit_cycles(g, w, &find_disjoint_cycles(g, usize::MAX), q, big_q)
}

/// Lists cycle edges with ω(e) ≥ 2q + Q.
pub fn cat0_audit_cycles(g: &Graph, w: &WeightAssignment, cycles: &CycleSet, q: f64, big_q: f64) -> Result<Cat0Report> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(param(format!("q must be >= 1, got {q}")));
    }
    if !(big_q >= 0.0 && big_q.is_finite()) {
        return Err(param(format!("Q must be >= 0, got {big_q}")));
    }
    let threshold = 2.0 * q + big_q;
    let mut violations = Vec::new();
    let mut violating_cycles = Vec::new();
    for (idx, c) in cycles.cycles.iter().enumerate() {
        let edges = check_cycle(g, c)?;
        let before = violations.len();
        for &e in &edges {
            if w.get(e) >= threshold {
                violations.push(Cat0Violation { cycle_index: idx, edge: e, weight: w.get(e) });
            }
        }
        if violations.len() > before {
            violating_cycles.push(idx);
        }
    }
    Ok(Cat0Report {
        kind: "cat0",
        q,
        big_q,
        threshold,
        cycles_checked: cycles.len(),
        violations,
        violating_cycles,
    })
}

// ---------------------------------------------------------------------------
// Morse detour scan

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseRecord {
    pub j: usize,
    pub x: VertexId,
    pub y: VertexId,
    pub segment_omega_length: f64,
    pub detour_omega_length: f64,
    pub event: bool,
    /// Largest distance from a vertex of the ω-geodesic x→y to the ray.
    pub excursion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseEventLog {
    pub kind: &'static str,
    pub gauge: f64,
    pub records: Vec<MorseRecord>,
    pub event_count: usize,
    /// Records with excursion > 3·gauge.
    pub excursions_over_3d: usize,
}

pub fn morse_detour_scan(g: &Graph, ray: &MarkedRay, w: &WeightAssignment, gauge: f64) -> Result<MorseEventLog> {
    if !(gauge > 0.0 && gauge.is_finite()) {
        return Err(param(format!("gauge D must be positive, got {gauge}")));
    }
    if ray.detours.is_empty() {
        return Err(DiagnosticsError::Precondition("ray has no detours".into()));
    }
    ray.validate(g)?;
    let to_ray = multi_source(g, w, &ray.ray)?;
    let m = Metric::new(g, w)?;
    let mut records = Vec::with_capacity(ray.detours.len());
    for (j, d) in ray.detours.iter().enumerate() {
        let segment = ray
            .segment(d.x, d.y)
            .ok_or_else(|| DiagnosticsError::Precondition(format!("detour {j} endpoints not on the ray")))?;
        let seg_len = crate::metric::path_omega_length(g, w, segment)?;
        let det_len = crate::metric::path_omega_length(g, w, &d.path)?;
        let geo = m.geodesic(d.x, d.y)?;
        let excursion = geo.vertices.iter().map(|&v| to_ray.dist[v]).fold(0.0, f64::max);
        records.push(MorseRecord {
            j,
            x: d.x,
            y: d.y,
            segment_omega_length: seg_len,
            detour_omega_length: det_len,
            event: seg_len >= det_len,
            excursion,
        });
    }
    Ok(MorseEventLog {
        kind: "morse",
        gauge,
        event_count: records.iter().filter(|r| r.event).count(),
        excursions_over_3d: records.iter().filter(|r| r.excursion > 3.0 * gauge).count(),
        records,
    })
}

// ---------------------------------------------------------------------------
// Radial audit

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialParams {
    /// Unit radius of the audited core ball.
    pub radius: usize,
    /// Pairs with d ≥ n_min count as "long" for c_hat.
    pub n_min: usize,
    pub max_geodesics: usize,
    /// b = 𝔼ω_e.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialFit {
    pub kind: &'static str,
    pub b: f64,
    pub r0_hat: f64,
    pub r1_hat: f64,
    pub c_hat: f64,
    pub r2_hat: f64,
    pub n_min: usize,
    pub geodesics: usize,
    pub pairs_audited: usize,
    pub post_check_passed: bool,
}

/// Unit-metric geodesics from `o` to every vertex at distance `radius`,
/// at most `cap` per target, in lexicographic order of vertex sequences.
pub fn radial_geodesics(g: &Graph, o: VertexId, radius: usize, cap: usize) -> Result<Vec<Vec<VertexId>>> {
    g.check_vertex(o)?;
    let from_o = g.bfs(o);
    let targets: Vec<VertexId> = g.vertices().filter(|&v| from_o[v] == Some(radius)).collect();
    let per_target: Vec<Vec<Vec<VertexId>>> = targets
        .par_iter()
        .map(|&t| {
            let to_t = g.bfs(t);
            let mut found = Vec::new();
            let mut path = vec![o];
            lex_geodesics(g, &from_o, &to_t, radius, &mut path, &mut found, cap);
            found
        })
        .collect();
    Ok(per_target.into_iter().flatten().collect())
}

fn lex_geodesics(
    g: &Graph,
    from_o: &[Option<usize>],
    to_t: &[Option<usize>],
    radius: usize,
    path: &mut Vec<VertexId>,
    found: &mut Vec<Vec<VertexId>>,
    cap: usize,
) {
    if found.len() >= cap {
        return;
    }
    let u = *path.last().expect("path starts at o");
    let depth = path.len() - 1;
    if depth == radius {
        found.push(path.clone());
        return;
    }
    for &(v, _) in g.neighbors(u) {
        if from_o[v] == Some(depth + 1) && to_t[v] == Some(radius - depth - 1) {
            path.push(v);
            lex_geodesics(g, from_o, to_t, radius, path, found, cap);
            path.pop();
            if found.len() >= cap {
                return;
            }
        }
    }
}

pub fn radial_audit(g: &Graph, w: &WeightAssignment, o: VertexId, params: &RadialParams) -> Result<RadialFit> {
    let geodesics = radial_geodesics(g, o, params.radius, params.max_geodesics)?;
    radial_audit_geodesics(g, w, &geodesics, params)
}

/// As [`radial_audit`] with precomputed geodesics (they depend only on the
/// graph, so ensembles compute them once).
pub fn radial_audit_geodesics(
    g: &Graph,
    w: &WeightAssignment,
    geodesics: &[Vec<VertexId>],
    params: &RadialParams,
) -> Result<RadialFit> {
    if params.n_min == 0 {
        return Err(param("n_min must be >= 1"));
    }
    if params.max_geodesics == 0 {
        return Err(param("max_geodesics must be >= 1"));
    }
    if !(params.mean > 0.0 && params.mean.is_finite()) {
        return Err(param(format!("mean must be positive, got {}", params.mean)));
    }
    if geodesics.is_empty() {
        return Err(DiagnosticsError::Fit(format!("no geodesics of length {}; increase the radius", params.radius)));
    }
    let mut sources: Vec<VertexId> = geodesics.iter().flat_map(|p| p[..p.len() - 1].iter().copied()).collect();
    sources.sort_unstable();
    sources.dedup();
    let rows: HashMap<VertexId, Vec<f64>> = sources
        .par_iter()
        .map(|&s| single_source(g, w, s).map(|f| (s, f.dist)))
        .collect::<std::result::Result<_, _>>()?;

    let b = params.mean;
    let mut r0: f64 = 0.0;
    let mut c_hat = f64::INFINITY;
    let mut pairs = 0usize;
    for p in geodesics {
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let d = (j - i) as f64;
                let dw = rows[&p[i]][p[j]];
                r0 = r0.max(dw - 2.0 * b * d);
                if j - i >= params.n_min {
                    c_hat = c_hat.min(dw / d);
                }
                pairs += 1;
            }
        }
    }
    if !c_hat.is_finite() {
        return Err(DiagnosticsError::Fit(format!(
            "no audited pair with d >= {}; increase the radius",
            params.n_min
        )));
    }
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    let mut prefix = Vec::new();
    for p in geodesics {
        prefix.clear();
        prefix.push(0.0);
        for k in 1..p.len() {
            let e = g.find_edge(p[k - 1], p[k]).ok_or(MetricError::NotAdjacent(p[k - 1], p[k]))?;
            prefix.push(prefix[k - 1] + w.get(e));
        }
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let d = (j - i) as f64;
                r2 = r2.max(c_hat * d - rows[&p[i]][p[j]]);
                // subpaths no farther from o than they are long
                if i <= j - i {
                    r1 = r1.max(c_hat * d - (prefix[j] - prefix[i]));
                }
            }
        }
    }
    let tol = 1e-9;
    let post_check_passed = geodesics.iter().all(|p| {
        (0..p.len()).all(|i| {
            (i + 1..p.len()).all(|j| {
                let d = (j - i) as f64;
                let dw = rows[&p[i]][p[j]];
                dw <= 2.0 * b * d + r0 + tol && c_hat * d - r2 <= dw + tol
            })
        })
    });
    Ok(RadialFit {
        kind: "radial",
        b,
        r0_hat: r0,
        r1_hat: r1,
        c_hat,
        r2_hat: r2,
        n_min: params.n_min,
        geodesics: geodesics.len(),
        pairs_audited: pairs,
        post_check_passed,
    })
}

// ---------------------------------------------------------------------------
// Velocity profile

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityEntry {
    pub vertex: VertexId,
    pub n: usize,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityBand {
    pub n: usize,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityProfile {
    pub kind: &'static str,
    pub origin: VertexId,
    pub entries: Vec<VelocityEntry>,
    pub bands: Vec<VelocityBand>,
}

impl VelocityProfile {
    /// Fraction of vertices at unit distance `n` with v in (lo, hi].
    pub fn fraction_within(&self, n: usize, lo: f64, hi: f64) -> Option<f64> {
        let at: Vec<f64> = self.entries.iter().filter(|e| e.n == n).map(|e| e.v).collect();
        if at.is_empty() {
            return None;
        }
        Some(at.iter().filter(|&&v| v > lo && v <= hi).count() as f64 / at.len() as f64)
    }

    pub fn band(&self, n: usize) -> Option<&VelocityBand> {
        self.bands.iter().find(|b| b.n == n)
    }
}

/// v(x) = d_ω(o, x) / d(o, x) for every x with 1 ≤ d(o, x) ≤ `radius`.
pub fn velocity_profile(g: &Graph, w: &WeightAssignment, o: VertexId, radius: Option<usize>) -> Result<VelocityProfile> {
    let unit = g.bfs(o);
    let field = single_source(g, w, o)?;
    let mut entries: Vec<VelocityEntry> = g
        .vertices()
        .filter_map(|x| {
            let n = unit[x]?;
            (n >= 1 && radius.map_or(true, |r| n <= r)).then(|| VelocityEntry { vertex: x, n, v: field.dist[x] / n as f64 })
        })
        .collect();
    entries.sort_by_key(|e| (e.n, e.vertex));
    let mut bands: Vec<VelocityBand> = Vec::new();
    for e in &entries {
        match bands.last_mut() {
            Some(b) if b.n == e.n => {
                b.count += 1;
                b.min = b.min.min(e.v);
                b.max = b.max.max(e.v);
                b.mean += e.v;
            }
            _ => bands.push(VelocityBand { n: e.n, count: 1, min: e.v, max: e.v, mean: e.v }),
        }
    }
    for b in &mut bands {
        b.mean /= b.count as f64;
    }
    Ok(VelocityProfile { kind: "velocity", origin: o, entries, bands })
}

// ---------------------------------------------------------------------------
// Shrink probabilities

#[derive(Debug, Clone, Copy)]
pub enum ShrinkMode<'a> {
    /// Σ of n i.i.d. weights along a fixed path.
    FixedPath { n: usize },
    /// d_ω(x, y) on a given graph.
    VertexPair { graph: &'a Graph, x: VertexId, y: VertexId },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkEstimate {
    pub kind: &'static str,
    pub mode: &'static str,
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub hits: usize,
    pub p_hat: f64,
    pub std_err: f64,
    pub decay_rate: f64,
    /// The event is impossible on the support of ν; p_hat = 0 is exact.
    pub exact: bool,
}

pub const MIN_SHRINK_TRIALS: usize = 1000;

/// Monte Carlo estimate of P(|γ|_ω ≤ ε|γ|) or P(d_ω(x,y) ≤ ε d(x,y)).
pub fn shrink_probability(
    mode: ShrinkMode,
    d: &DistributionSpec,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<ShrinkEstimate> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(param(format!("epsilon must be positive, got {epsilon}")));
    }
    if trials < MIN_SHRINK_TRIALS {
        return Err(param(format!("trials must be >= {MIN_SHRINK_TRIALS}, got {trials}")));
    }
    let (label, n) = match mode {
        ShrinkMode::FixedPath { n } => ("fixed_path", n),
        ShrinkMode::VertexPair { graph, x, y } => ("vertex_pair", crate::graph::graph_distance(graph, x, y)?),
    };
    if n == 0 {
        return Err(param("path length n must be >= 1"));
    }
    let threshold = epsilon * n as f64;
    let exact = d.support_min() > epsilon;
    let hits = if exact {
        0
    } else {
        match mode {
            ShrinkMode::FixedPath { n } => (0..trials as u64)
                .into_par_iter()
                .filter(|&t| {
                    let s = rng::derive_seed(seed, t);
                    let total: f64 = (0..n as u64).map(|i| d.quantile(rng::stream_uniform(s, i))).sum();
                    total <= threshold
                })
                .count(),
            ShrinkMode::VertexPair { graph, x, y } => (0..trials as u64)
                .into_par_iter()
                .map(|t| -> Result<bool> {
                    let w = sample_weights(graph, d, rng::derive_seed(seed, t));
                    Ok(single_source(graph, &w, x)?.dist[y] <= threshold)
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&hit| hit)
                .count(),
        }
    };
    let p_hat = hits as f64 / trials as f64;
    Ok(ShrinkEstimate {
        kind: "shrink",
        mode: label,
        n,
        epsilon,
        trials,
        hits,
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        decay_rate: p_hat.powf(1.0 / n as f64),
        exact,
    })
}

// ---------------------------------------------------------------------------
// Lateral shift

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LateralShiftReport {
    pub kind: &'static str,
    pub trials: usize,
    pub mean_1: f64,
    pub mean_2: f64,
    pub var_1: f64,
    pub var_2: f64,
    pub pooled_se: f64,
    /// sup |F̂₁ − F̂₂|.
    pub ecdf_gap: f64,
}

impl LateralShiftReport {
    pub fn means_agree(&self, k: f64) -> bool {
        (self.mean_1 - self.mean_2).abs() <= k * self.pooled_se
    }
}

/// Checks that some label-level automorphism maps x1 ↦ x2 and y1 ↦ y2.
pub fn check_automorphism(g: &Graph, p1: (VertexId, VertexId), p2: (VertexId, VertexId)) -> Result<()> {
    for v in [p1.0, p1.1, p2.0, p2.1] {
        g.check_vertex(v)?;
    }
    let fail = |why: &str| Err(DiagnosticsError::Precondition(format!("pairs are not automorphism-related: {why}")));
    match g.family() {
        Family::Lattice { .. } => {
            let c = |v: VertexId| parse_coord_label(g.label(v)).expect("lattice labels are coordinates");
            let (a1, b1, a2, b2) = (c(p1.0), c(p1.1), c(p2.0), c(p2.1));
            let shift1: Vec<i64> = a1.iter().zip(&a2).map(|(x, y)| y - x).collect();
            let shift2: Vec<i64> = b1.iter().zip(&b2).map(|(x, y)| y - x).collect();
            if shift1 == shift2 {
                Ok(())
            } else {
                fail("different translations")
            }
        }
        Family::FreeGroup { rank } => group_related(g, Group::Free { rank: *rank }, p1, p2),
        Family::FreeProduct23 => group_related(g, Group::FreeProduct23, p1, p2),
        _ => fail("graph family has no known automorphisms"),
    }
}

fn group_related(g: &Graph, group: Group, p1: (VertexId, VertexId), p2: (VertexId, VertexId)) -> Result<()> {
    let word = |v: VertexId| group.parse(g.label(v));
    let (x1, y1, x2, y2) = (word(p1.0)?, word(p1.1)?, word(p2.0)?, word(p2.1)?);
    let h = group.multiply(&x2, &group.inverse(&x1));
    if group.multiply(&h, &y1) == y2 {
        Ok(())
    } else {
        Err(DiagnosticsError::Precondition(
            "pairs are not automorphism-related: no left multiplication maps one to the other".into(),
        ))
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut gap: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        gap = gap.max((i as f64 / na - j as f64 / nb).abs());
    }
    gap
}

/// Compares T(x₁, y₁) and T(x₂, y₂) over independent weight samples.
pub fn lateral_shift_check(
    g: &Graph,
    p1: (VertexId, VertexId),
    p2: (VertexId, VertexId),
    d: &DistributionSpec,
    trials: usize,
    seed: u64,
) -> Result<LateralShiftReport> {
    check_automorphism(g, p1, p2)?;
    if trials < 2 {
        return Err(param("trials must be >= 2"));
    }
    let pairs: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64)> {
            let w1 = sample_weights(g, d, rng::derive_seed(seed, 2 * t));
            let w2 = sample_weights(g, d, rng::derive_seed(seed, 2 * t + 1));
            Ok((single_source(g, &w1, p1.0)?.dist[p1.1], single_source(g, &w2, p2.0)?.dist[p2.1]))
        })
        .collect::<Result<_>>()?;
    let (t1, t2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (m1, v1) = mean_var(&t1);
    let (m2, v2) = mean_var(&t2);
    let n = trials as f64;
    Ok(LateralShiftReport {
        kind: "lateral_shift",
        trials,
        mean_1: m1,
        mean_2: m2,
        var_1: v1,
        var_2: v2,
        pooled_se: (v1 / n + v2 / n).sqrt(),
        ecdf_gap: ks_two_sample(&t1, &t2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_caterpillar, build_cycle_gadget, build_free_group, build_lattice, GadgetPlan};
    use crate::percolation::make_distribution;

    fn cycle8(heavy: f64, rest: f64) -> (Graph, WeightAssignment) {
        let g = build_cycle_gadget(GadgetPlan::Cycle(8)).unwrap();
        let e = g.find_edge(0, 7).unwrap();
        let ws = (0..g.edge_count()).map(|i| if i == e { heavy } else { rest }).collect();
        let w = WeightAssignment::from_values(&g, ws).unwrap();
        (g, w)
    }

    #[test]
    fn case_one_fixture() {
        let (g, w) = cycle8(4.5, 0.5);
        let cyc: Vec<_> = (0..8).collect();
        let wit = witness_nonslim(&g, &w, &cyc, 1.0).unwrap().unwrap();
        assert_eq!(wit.case_tag, WitnessCase::Case1);
        assert!((wit.measured_slimness - 1.125).abs() <= 0.01, "{}", wit.measured_slimness);
        assert!((wit.triangle_slimness - 1.4375).abs() <= 0.01, "{}", wit.triangle_slimness);
    }

    #[test]
    fn case_two_fixture() {
        let (g, w) = cycle8(4.5, 1.0);
        let cyc: Vec<_> = (0..8).collect();
        let wit = witness_nonslim(&g, &w, &cyc, 1.0).unwrap().unwrap();
        assert_eq!(wit.case_tag, WitnessCase::Case2);
        assert!((wit.measured_slimness - 2.25).abs() <= 0.01);
        assert_eq!((wit.b, wit.c), (RealizationPoint::vertex(7), RealizationPoint::vertex(0)));
    }

    #[test]
    fn no_long_edge_no_witness() {
        let (g, w) = cycle8(1.0, 1.0);
        let cyc: Vec<_> = (0..8).collect();
        assert!(witness_nonslim(&g, &w, &cyc, 1.0).unwrap().is_none());
    }

    #[test]
    fn boundary_edge_gives_no_witness() {
        // L = 4δ exactly with a shorter way round: slimness L/4 = δ, not above it.
        let (g, w) = cycle8(4.0, 0.5);
        let cyc: Vec<_> = (0..8).collect();
        assert!(witness_nonslim(&g, &w, &cyc, 1.0).unwrap().is_none());
    }

    #[test]
    fn foreign_cycle_rejected() {
        let (g, w) = cycle8(4.5, 0.5);
        assert!(witness_nonslim(&g, &w, &[0, 2, 4], 1.0).is_err());
        assert!(witness_nonslim(&g, &w, &[0, 1], 1.0).is_err());
    }

    #[test]
    fn cat0_thresholds() {
        let (g, w) = cycle8(4.5, 0.5);
        let r = cat0_cycle_audit(&g, &w, 1.0, 2.0).unwrap();
        assert_eq!((r.threshold, r.violation_count()), (4.0, 1));
        assert_eq!(r.violating_cycles, vec![0]);
        let (g, w) = cycle8(1.0, 1.0);
        assert_eq!(cat0_cycle_audit(&g, &w, 1.0, 2.0).unwrap().violation_count(), 0);
        assert!(cat0_cycle_audit(&g, &w, 0.5, 2.0).is_err());
    }

    #[test]
    fn morse_unit_weights() {
        let (g, ray) = build_caterpillar(10, 5, 2, 3).unwrap();
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        let log = morse_detour_scan(&g, &ray, &w, 1.0).unwrap();
        assert_eq!(log.records.len(), 2);
        for r in &log.records {
            assert!(!r.event);
            assert_eq!((r.segment_omega_length, r.detour_omega_length, r.excursion), (2.0, 3.0, 0.0));
        }
    }

    #[test]
    fn morse_heavy_segment() {
        let (g, ray) = build_caterpillar(10, 5, 2, 3).unwrap();
        let mut w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        for (a, b) in [(0, 1), (1, 2)] {
            w.set(g.find_edge(a, b).unwrap(), 5.0).unwrap();
        }
        let log = morse_detour_scan(&g, &ray, &w, 1.0).unwrap();
        let r = &log.records[0];
        assert!(r.event);
        assert_eq!((r.segment_omega_length, r.detour_omega_length, r.excursion), (10.0, 3.0, 1.0));
        assert!(!log.records[1].event);
    }

    #[test]
    fn radial_unit_weights() {
        let g = build_lattice(2, 6).unwrap();
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        let params = RadialParams { radius: 4, n_min: 2, max_geodesics: 200, mean: 1.0 };
        let fit = radial_audit(&g, &w, g.base(), &params).unwrap();
        assert_eq!((fit.c_hat, fit.r0_hat, fit.r2_hat, fit.r1_hat), (1.0, 0.0, 0.0, 0.0));
        assert!(fit.post_check_passed);
    }

    #[test]
    fn radial_geodesic_counts() {
        let g = build_lattice(2, 3).unwrap();
        // Geodesics from 0 to the 8 vertices at radius 2: 1 + 2 + 1 + 2 + 1 + 2 + 1 + 2.
        assert_eq!(radial_geodesics(&g, g.base(), 2, 200).unwrap().len(), 12);
        assert_eq!(radial_geodesics(&g, g.base(), 2, 1).unwrap().len(), 8);
    }

    #[test]
    fn radial_fit_needs_long_pairs() {
        let g = build_lattice(2, 3).unwrap();
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        let params = RadialParams { radius: 2, n_min: 5, max_geodesics: 10, mean: 1.0 };
        assert!(matches!(radial_audit(&g, &w, g.base(), &params), Err(DiagnosticsError::Fit(_))));
    }

    #[test]
    fn velocity_constant_weights() {
        let g = build_lattice(2, 5).unwrap();
        let w = WeightAssignment::uniform_value(&g, 2.5).unwrap();
        let p = velocity_profile(&g, &w, g.base(), None).unwrap();
        assert!(p.entries.iter().all(|e| e.v == 2.5));
        assert_eq!(p.bands.len(), 5);
        assert_eq!(p.band(5).unwrap().count, 20);
    }

    #[test]
    fn shrink_impossible_is_exact_zero() {
        let d = make_distribution("uniform(0.5,1.5)").unwrap();
        let est = shrink_probability(ShrinkMode::FixedPath { n: 6 }, &d, 0.4, 1000, 1).unwrap();
        assert!(est.exact);
        assert_eq!(est.p_hat, 0.0);
        assert!(shrink_probability(ShrinkMode::FixedPath { n: 6 }, &d, 0.4, 999, 1).is_err());
    }

    #[test]
    fn automorphism_checks() {
        let g = build_lattice(2, 8).unwrap();
        let v = |l: &str| g.vertex_by_label(l).unwrap();
        assert!(check_automorphism(&g, (v("(0,0)"), v("(1,0)")), (v("(3,3)"), v("(4,3)"))).is_ok());
        assert!(check_automorphism(&g, (v("(0,0)"), v("(1,0)")), (v("(3,3)"), v("(3,4)"))).is_err());
        let f = build_free_group(2, 3).unwrap();
        let u = |l: &str| f.vertex_by_label(l).unwrap();
        assert!(check_automorphism(&f, (u("e"), u("a")), (u("b"), u("ba"))).is_ok());
        assert!(check_automorphism(&f, (u("e"), u("a")), (u("b"), u("ab"))).is_err());
    }

    #[test]
    fn ks_statistic() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spread_sample_is_even() {
        let v: Vec<usize> = (0..10).collect();
        assert_eq!(spread_sample(&v, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(spread_sample(&v, 20), v);
    }
}
