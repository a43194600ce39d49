//! Graph generators. Ball generators assign vertex ids in BFS discovery order
//! from the base, exploring generators in a fixed order.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::words::Group;
use super::{Detour, Family, Graph, GraphError, MarkedRay, VertexId};

const MAX_VERTICES: usize = 1_000_000;

fn config(msg: impl Into<String>) -> GraphError {
    GraphError::Config(msg.into())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// |B_R| in ℤ^d for the L¹ metric: Σ_i 2^i C(d,i) C(R,i).
pub(crate) fn lattice_ball_size(dim: usize, radius: usize) -> f64 {
    (0..=dim.min(radius))
        .map(|i| 2f64.powi(i as i32) * binomial(dim, i) * binomial(radius, i))
        .sum()
}

/// Ball of radius `radius` about the origin in ℤ^`dim`.
pub fn build_lattice(dim: usize, radius: usize) -> Result<Graph, GraphError> {
    if !(1..=4).contains(&dim) {
        return Err(config(format!("lattice dimension must be in 1..=4, got {dim}")));
    }
    if lattice_ball_size(dim, radius) > MAX_VERTICES as f64 {
        return Err(config(format!("lattice({dim},{radius}) exceeds {MAX_VERTICES} vertices")));
    }
    let origin = vec![0i64; dim];
    let mut ids: HashMap<Vec<i64>, VertexId> = HashMap::new();
    let mut coords = vec![origin.clone()];
    ids.insert(origin, 0);
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let cu = coords[u].clone();
        for axis in 0..dim {
            for step in [1i64, -1] {
                let mut cw = cu.clone();
                cw[axis] += step;
                let norm: u64 = cw.iter().map(|c| c.unsigned_abs()).sum();
                if norm as usize > radius {
                    continue;
                }
                let w = match ids.get(&cw) {
                    Some(&w) => w,
                    None => {
                        let w = coords.len();
                        ids.insert(cw.clone(), w);
                        coords.push(cw);
                        queue.push_back(w);
                        w
                    }
                };
                edges.insert((u.min(w), u.max(w)));
            }
        }
    }
    let labels = coords.iter().map(|c| coord_label(c)).collect();
    let edges: Vec<_> = edges.into_iter().collect();
    Graph::from_edges(
        format!("lattice({dim},{radius})"),
        Family::Lattice { dim },
        labels,
        &edges,
        0,
    )
}

pub(crate) fn coord_label(c: &[i64]) -> String {
    let parts: Vec<String> = c.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

pub(crate) fn parse_coord_label(label: &str) -> Option<Vec<i64>> {
    let inner = label.strip_prefix('(')?.strip_suffix(')')?;
    inner.split(',').map(|p| p.parse().ok()).collect()
}

fn group_ball(group: Group, radius: usize, name: String, family: Family) -> Result<Graph, GraphError> {
    let gens = group.generators();
    let mut ids: HashMap<Vec<u8>, VertexId> = HashMap::new();
    let mut words: Vec<Vec<u8>> = vec![Vec::new()];
    ids.insert(Vec::new(), 0);
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &s in &gens {
            let mut w = words[u].clone();
            group.push(&mut w, s);
            // Normal forms are geodesic words, so length is the word metric.
            if w.len() > radius {
                continue;
            }
            let v = match ids.get(&w) {
                Some(&v) => v,
                None => {
                    let v = words.len();
                    ids.insert(w.clone(), v);
                    words.push(w);
                    queue.push_back(v);
                    v
                }
            };
            edges.insert((u.min(v), u.max(v)));
        }
    }
    let labels = words.iter().map(|w| Group::label(w)).collect();
    let edges: Vec<_> = edges.into_iter().collect();
    Graph::from_edges(name, family, labels, &edges, 0)
}

/// Ball of radius `radius` in the 2k-regular tree (Cayley graph of F_k).
pub fn build_free_group(rank: usize, radius: usize) -> Result<Graph, GraphError> {
    if rank == 0 || 2 * rank > 8 {
        return Err(config(format!("free group rank must be in 1..=4, got {rank}")));
    }
    let branching = (2 * rank - 1) as f64;
    let size = 1.0 + (0..radius).map(|i| 2.0 * rank as f64 * branching.powi(i as i32)).sum::<f64>();
    if size > MAX_VERTICES as f64 {
        return Err(config(format!("free_group({rank},{radius}) exceeds {MAX_VERTICES} vertices")));
    }
    group_ball(
        Group::Free { rank },
        radius,
        format!("free_group({rank},{radius})"),
        Family::FreeGroup { rank },
    )
}

/// Ball of radius `radius` in Cay(ℤ/2∗ℤ/3, {a, b, b²}).
pub fn build_free_product_2_3(radius: usize) -> Result<Graph, GraphError> {
    if radius > 14 {
        return Err(config(format!("free_product_2_3 radius must be <= 14, got {radius}")));
    }
    group_ball(
        Group::FreeProduct23,
        radius,
        format!("free_product_2_3({radius})"),
        Family::FreeProduct23,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetPlan {
    /// Single n-cycle on ids 0..n in cyclic order.
    Cycle(usize),
    /// Two vertices joined by internally disjoint paths of p and q edges.
    /// Vertex 0 is `s`, vertex p is `t`.
    Theta(usize, usize),
}

pub fn build_cycle_gadget(plan: GadgetPlan) -> Result<Graph, GraphError> {
    match plan {
        GadgetPlan::Cycle(n) => {
            if n < 3 {
                return Err(config(format!("cycle needs n >= 3, got {n}")));
            }
            let labels = (0..n).map(|i| format!("v{i}")).collect();
            let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            edges.push((0, n - 1));
            Graph::from_edges(format!("cycle({n})"), Family::Gadget, labels, &edges, 0)
        }
        GadgetPlan::Theta(p, q) => {
            if p == 0 || q == 0 || p + q < 3 {
                return Err(config(format!("theta needs p, q >= 1 and p + q >= 3, got ({p},{q})")));
            }
            let n = p + q;
            let labels = (0..n)
                .map(|i| match i {
                    0 => "s".to_string(),
                    i if i == p => "t".to_string(),
                    i if i < p => format!("p{i}"),
                    i => format!("q{}", i - p),
                })
                .collect();
            let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            edges.push((0, n - 1));
            Graph::from_edges(format!("theta({p},{q})"), Family::Gadget, labels, &edges, 0)
        }
    }
}

/// A path `0..=length` with a fresh detour of `detour` edges from `j·period`
/// to `j·period + span` for every `j` that fits.
pub fn build_caterpillar(
    length: usize,
    period: usize,
    span: usize,
    detour: usize,
) -> Result<(Graph, MarkedRay), GraphError> {
    if span == 0 {
        return Err(config("caterpillar detour span must be >= 1"));
    }
    if detour < span {
        return Err(config(format!("detour length {detour} shorter than span {span}")));
    }
    if detour < 2 {
        return Err(config("a detour of one edge would duplicate a ray edge"));
    }
    if period < span {
        return Err(config(format!("period {period} < span {span}: detours overlap")));
    }
    if length < span {
        return Err(config(format!("ray length {length} < span {span}")));
    }
    let mut labels: Vec<String> = (0..=length).map(|i| format!("r{i}")).collect();
    let mut edges: Vec<(VertexId, VertexId)> = (0..length).map(|i| (i, i + 1)).collect();
    let mut detours = Vec::new();
    let mut j = 0;
    while j * period + span <= length {
        let x = j * period;
        let y = x + span;
        let mut path = vec![x];
        for i in 1..detour {
            labels.push(format!("d{j}_{i}"));
            path.push(labels.len() - 1);
        }
        path.push(y);
        edges.extend(path.windows(2).map(|w| (w[0], w[1])));
        detours.push(Detour { x, y, path, span, length: detour });
        j += 1;
    }
    let g = Graph::from_edges(
        format!("caterpillar({length},{period},{span},{detour})"),
        Family::Caterpillar,
        labels,
        &edges,
        0,
    )?;
    let ray = MarkedRay { ray: (0..=length).collect(), detours };
    Ok((g, ray))
}
