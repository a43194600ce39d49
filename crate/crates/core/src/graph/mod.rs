//! Finite bounded-degree graphs with canonical vertex labels and edge keys.

mod build;
mod cycles;
mod io;
pub mod words;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use build::{
    build_caterpillar, build_cycle_gadget, build_free_group, build_free_product_2_3,
    build_lattice, GadgetPlan,
};
pub(crate) use build::parse_coord_label;
pub use cycles::{cycle_edges, find_disjoint_cycles, CycleSet};
pub use io::{export_graph, import_graph};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("vertices {0} and {1} are not connected")]
    Unreachable(VertexId, VertexId),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The family a graph was generated from. Group and lattice families carry
/// enough structure to map labels through translations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Lattice { dim: usize },
    FreeGroup { rank: usize },
    FreeProduct23,
    Gadget,
    Caterpillar,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub u: VertexId,
    pub v: VertexId,
    pub key: String,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Immutable undirected simple graph.
///
/// Endpoints of every edge are stored sorted (`u < v`), adjacency lists are
/// sorted by neighbour id, and the edge key is the two endpoint labels in
/// lexicographic order joined by `|`.
#[derive(Debug, Clone)]
pub struct Graph {
    name: String,
    family: Family,
    labels: Vec<String>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
    edge_index: HashMap<(VertexId, VertexId), EdgeId>,
    degree_bound: usize,
    base: VertexId,
    id: std::sync::OnceLock<String>,
}

pub fn edge_key(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}|{b}")
    } else {
        format!("{b}|{a}")
    }
}

impl Graph {
    /// Assembles a graph from labels and an edge list. Edge ids follow the
    /// order of `edges`.
    pub fn from_edges(
        name: impl Into<String>,
        family: Family,
        labels: Vec<String>,
        edges: &[(VertexId, VertexId)],
        base: VertexId,
    ) -> Result<Self, GraphError> {
        let n = labels.len();
        if n == 0 {
            return Err(GraphError::Invalid("graph has no vertices".into()));
        }
        if base >= n {
            return Err(GraphError::UnknownVertex(base));
        }
        {
            let mut seen = std::collections::HashSet::with_capacity(n);
            for l in &labels {
                if l.is_empty() || l.chars().any(char::is_whitespace) || l.contains('|') {
                    return Err(GraphError::Invalid(format!("bad label {l:?}")));
                }
                if !seen.insert(l.as_str()) {
                    return Err(GraphError::Invalid(format!("duplicate label {l}")));
                }
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut out = Vec::with_capacity(edges.len());
        for (id, &(a, b)) in edges.iter().enumerate() {
            if a >= n {
                return Err(GraphError::UnknownVertex(a));
            }
            if b >= n {
                return Err(GraphError::UnknownVertex(b));
            }
            if a == b {
                return Err(GraphError::Invalid(format!("loop at vertex {a}")));
            }
            let (u, v) = (a.min(b), a.max(b));
            if edge_index.insert((u, v), id).is_some() {
                return Err(GraphError::Invalid(format!("parallel edge {u}-{v}")));
            }
            adjacency[u].push((v, id));
            adjacency[v].push((u, id));
            out.push(Edge {
                id,
                u,
                v,
                key: edge_key(&labels[u], &labels[v]),
            });
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let degree_bound = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph {
            name: name.into(),
            family,
            labels,
            edges: out,
            adjacency,
            edge_index,
            degree_bound,
            base,
            id: std::sync::OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.labels.len()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<VertexId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    /// Sorted `(neighbour, edge)` pairs.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    /// Maximum vertex degree, computed at construction.
    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn base(&self) -> VertexId {
        self.base
    }

    pub fn find_edge(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.labels.len()
    }

    pub(crate) fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v))
        }
    }

    /// 16 hex digits of FNV-1a over the exported text; stable across
    /// export/import.
    pub fn id(&self) -> &str {
        self.id
            .get_or_init(|| format!("{:016x}", crate::rng::key_hash(&export_graph(self))))
    }

    /// Unit-weight BFS distances from `source`; `None` for unreachable vertices.
    pub fn bfs(&self, source: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &(v, _) in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(self.base).iter().all(Option::is_some)
    }
}

/// The standard graph metric d.
pub fn graph_distance(g: &Graph, x: VertexId, y: VertexId) -> Result<usize, GraphError> {
    g.check_vertex(x)?;
    g.check_vertex(y)?;
    if x == y {
        return Ok(0);
    }
    g.bfs(x)[y].ok_or(GraphError::Unreachable(x, y))
}

/// A geodesic ray of the unit metric together with the disjoint detours
/// hanging off it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkedRay {
    pub ray: Vec<VertexId>,
    pub detours: Vec<Detour>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detour {
    pub x: VertexId,
    pub y: VertexId,
    /// Vertex sequence from `x` to `y`, endpoints included.
    pub path: Vec<VertexId>,
    /// d(x, y) along the ray.
    pub span: usize,
    /// Number of edges of `path`.
    pub length: usize,
}

impl MarkedRay {
    /// Checks adjacency along the ray, ray geodesicity, and that every
    /// detour meets the ray only at its endpoints.
    pub fn validate(&self, g: &Graph) -> Result<(), GraphError> {
        let Some(&start) = self.ray.first() else {
            return Err(GraphError::Invalid("empty ray".into()));
        };
        for w in self.ray.windows(2) {
            if g.find_edge(w[0], w[1]).is_none() {
                return Err(GraphError::Invalid(format!("ray not adjacent at {}-{}", w[0], w[1])));
            }
        }
        let dist = g.bfs(start);
        for (i, &v) in self.ray.iter().enumerate() {
            if dist[v] != Some(i) {
                return Err(GraphError::Invalid(format!("ray is not geodesic at index {i}")));
            }
        }
        let on_ray: std::collections::HashSet<_> = self.ray.iter().copied().collect();
        for d in &self.detours {
            if d.path.first() != Some(&d.x) || d.path.last() != Some(&d.y) {
                return Err(GraphError::Invalid("detour endpoints mismatch".into()));
            }
            if d.path.len() != d.length + 1 || d.length < d.span {
                return Err(GraphError::Invalid("detour length mismatch".into()));
            }
            for w in d.path.windows(2) {
                if g.find_edge(w[0], w[1]).is_none() {
                    return Err(GraphError::Invalid("detour not a path".into()));
                }
            }
            if d.path[1..d.path.len() - 1].iter().any(|v| on_ray.contains(v)) {
                return Err(GraphError::Invalid("detour touches the ray".into()));
            }
        }
        Ok(())
    }

    /// Ray vertices from `x` to `y` inclusive.
    pub fn segment(&self, x: VertexId, y: VertexId) -> Option<&[VertexId]> {
        let i = self.ray.iter().position(|&v| v == x)?;
        let j = self.ray.iter().position(|&v| v == y)?;
        let (i, j) = (i.min(j), i.max(j));
        Some(&self.ray[i..=j])
    }
}

/// Parsed graph family description, e.g. `lattice(2,6)` or `cycle(8)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSpec {
    Lattice { dim: usize, radius: usize },
    FreeGroup { rank: usize, radius: usize },
    FreeProduct23 { radius: usize },
    Cycle { n: usize },
    Theta { p: usize, q: usize },
    Caterpillar { length: usize, period: usize, span: usize, detour: usize },
}

impl GraphSpec {
    /// Core radius for ball families.
    pub fn radius(&self) -> Option<usize> {
        match *self {
            GraphSpec::Lattice { radius, .. }
            | GraphSpec::FreeGroup { radius, .. }
            | GraphSpec::FreeProduct23 { radius } => Some(radius),
            _ => None,
        }
    }

    /// Default halo margin: ⌈R/2⌉ for balls, 0 for gadgets.
    pub fn default_margin(&self) -> usize {
        self.radius().map_or(0, |r| r.div_ceil(2))
    }

    /// Builds the graph with the ball radius enlarged by `margin`.
    /// The marked ray is returned for caterpillars.
    pub fn build(&self, margin: usize) -> Result<(Graph, Option<MarkedRay>), GraphError> {
        Ok(match *self {
            GraphSpec::Lattice { dim, radius } => (build_lattice(dim, radius + margin)?, None),
            GraphSpec::FreeGroup { rank, radius } => (build_free_group(rank, radius + margin)?, None),
            GraphSpec::FreeProduct23 { radius } => (build_free_product_2_3(radius + margin)?, None),
            GraphSpec::Cycle { n } => (build_cycle_gadget(GadgetPlan::Cycle(n))?, None),
            GraphSpec::Theta { p, q } => (build_cycle_gadget(GadgetPlan::Theta(p, q))?, None),
            GraphSpec::Caterpillar { length, period, span, detour } => {
                let (g, ray) = build_caterpillar(length, period, span, detour)?;
                (g, Some(ray))
            }
        })
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphSpec::Lattice { dim, radius } => write!(f, "lattice({dim},{radius})"),
            GraphSpec::FreeGroup { rank, radius } => write!(f, "free_group({rank},{radius})"),
            GraphSpec::FreeProduct23 { radius } => write!(f, "free_product_2_3({radius})"),
            GraphSpec::Cycle { n } => write!(f, "cycle({n})"),
            GraphSpec::Theta { p, q } => write!(f, "theta({p},{q})"),
            GraphSpec::Caterpillar { length, period, span, detour } => {
                write!(f, "caterpillar({length},{period},{span},{detour})")
            }
        }
    }
}

/// Splits `name(a, b, ...)` into the name and its comma-separated arguments.
pub(crate) fn split_call(s: &str) -> Option<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(')?;
    let inner = s[open + 1..].strip_suffix(')')?;
    let name = s[..open].trim();
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Some((name, args))
}

impl FromStr for GraphSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| GraphError::Config(format!("{msg}: {s:?}"));
        let (name, args) = split_call(s).ok_or_else(|| bad("expected family(args)"))?;
        let nums = args
            .iter()
            .map(|a| a.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("arguments must be nonnegative integers"))?;
        let arity = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(bad(&format!("{name} takes {k} arguments")))
            }
        };
        match name {
            "lattice" => {
                arity(2)?;
                Ok(GraphSpec::Lattice { dim: nums[0], radius: nums[1] })
            }
            "free_group" => {
                arity(2)?;
                Ok(GraphSpec::FreeGroup { rank: nums[0], radius: nums[1] })
            }
            "free_product_2_3" => {
                arity(1)?;
                Ok(GraphSpec::FreeProduct23 { radius: nums[0] })
            }
            "cycle" => {
                arity(1)?;
                Ok(GraphSpec::Cycle { n: nums[0] })
            }
            "theta" => {
                arity(2)?;
                Ok(GraphSpec::Theta { p: nums[0], q: nums[1] })
            }
            "caterpillar" => {
                arity(4)?;
                Ok(GraphSpec::Caterpillar {
                    length: nums[0],
                    period: nums[1],
                    span: nums[2],
                    detour: nums[3],
                })
            }
            _ => Err(bad("unknown graph family")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_basics() {
        let g = build_lattice(1, 3).unwrap();
        let ends: Vec<_> = g
            .vertices()
            .filter(|&v| g.degree(v) == 1)
            .collect();
        assert_eq!(graph_distance(&g, ends[0], ends[1]).unwrap(), 6);
        assert_eq!(graph_distance(&g, 2, 2).unwrap(), 0);
        assert_eq!(graph_distance(&g, 0, 99), Err(GraphError::UnknownVertex(99)));
    }

    #[test]
    fn free_product_distance_e_ab() {
        let g = build_free_product_2_3(2).unwrap();
        let e = g.vertex_by_label("e").unwrap();
        let ab = g.vertex_by_label("ab").unwrap();
        assert_eq!(graph_distance(&g, e, ab).unwrap(), 2);
    }

    #[test]
    fn rejects_parallel_edges_and_loops() {
        let labels = vec!["x".to_string(), "y".to_string()];
        assert!(Graph::from_edges("t", Family::Gadget, labels.clone(), &[(0, 1), (1, 0)], 0).is_err());
        assert!(Graph::from_edges("t", Family::Gadget, labels, &[(0, 0)], 0).is_err());
    }

    #[test]
    fn spec_round_trip() {
        for s in [
            "lattice(2,6)",
            "free_group(2,5)",
            "free_product_2_3(6)",
            "cycle(8)",
            "theta(1,5)",
            "caterpillar(10,5,2,3)",
        ] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("lattice(2)".parse::<GraphSpec>().is_err());
        assert!("torus(2,2)".parse::<GraphSpec>().is_err());
        assert_eq!(" lattice( 2 , 6 ) ".parse::<GraphSpec>().unwrap().to_string(), "lattice(2,6)");
    }

    #[test]
    fn caterpillar_ray_validates() {
        let (g, ray) = build_caterpillar(10, 5, 2, 3).unwrap();
        ray.validate(&g).unwrap();
        assert_eq!(ray.segment(5, 7).unwrap(), &[5, 6, 7]);
    }
}
