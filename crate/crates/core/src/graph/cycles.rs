use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use super::{EdgeId, Graph, VertexId};

/// Vertex-disjoint simple cycles. Each cycle is stored without repeating
/// its first vertex; the last vertex is adjacent to the first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleSet {
    pub cycles: Vec<Vec<VertexId>>,
    pub pairwise_disjoint: bool,
}

impl CycleSet {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

/// Edge ids of a closed cycle, in cycle order: edge i joins `cycle[i]` and
/// `cycle[i + 1 mod k]`. `None` if two consecutive vertices are not adjacent.
pub fn cycle_edges(g: &Graph, cycle: &[VertexId]) -> Option<Vec<EdgeId>> {
    let k = cycle.len();
    (0..k)
        .map(|i| g.find_edge(cycle[i], cycle[(i + 1) % k]))
        .collect()
}

/// Rotates to the smallest vertex and picks the direction whose second
/// element is smaller.
fn canonical(mut cycle: Vec<VertexId>) -> Vec<VertexId> {
    let k = cycle.len();
    let start = (0..k).min_by_key(|&i| cycle[i]).unwrap_or(0);
    cycle.rotate_left(start);
    if k > 2 && cycle[k - 1] < cycle[1] {
        cycle[1..].reverse();
    }
    cycle
}

/// Shortest cycle through `s` using only `allowed` vertices, ties broken by
/// canonical vertex sequence.
fn shortest_cycle_through(g: &Graph, s: VertexId, allowed: &[bool]) -> Option<Vec<VertexId>> {
    let n = g.vertex_count();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut branch = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[s] = 0;
    queue.push_back(s);
    let mut best_len = usize::MAX;
    let mut best: Option<Vec<VertexId>> = None;
    while let Some(u) = queue.pop_front() {
        // Any cycle found from here on has length >= 2·dist[u] + 1.
        if best_len != usize::MAX && 2 * dist[u] + 1 > best_len {
            break;
        }
        for &(v, _) in g.neighbors(u) {
            if !allowed[v] {
                continue;
            }
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                parent[v] = u;
                branch[v] = if u == s { v } else { branch[u] };
                queue.push_back(v);
            } else if v != s && u != s && parent[u] != v && branch[u] != branch[v] {
                let len = dist[u] + dist[v] + 1;
                if len > best_len {
                    continue;
                }
                let mut cyc = Vec::with_capacity(len);
                let mut x = u;
                while x != s {
                    cyc.push(x);
                    x = parent[x];
                }
                cyc.push(s);
                cyc.reverse();
                let mut y = v;
                while y != s {
                    cyc.push(y);
                    y = parent[y];
                }
                let cyc = canonical(cyc);
                if len < best_len || best.as_ref().is_some_and(|b| cyc < *b) {
                    best_len = len;
                    best = Some(cyc);
                }
            }
        }
    }
    best
}

/// Greedy vertex-disjoint cycles, shortest first with lexicographic
/// tie-breaking on the canonical vertex sequence. Deterministic for a fixed
/// graph; no claim of maximality.
pub fn find_disjoint_cycles(g: &Graph, max_count: usize) -> CycleSet {
    let n = g.vertex_count();
    let mut allowed = vec![true; n];
    let mut heap = BinaryHeap::new();
    for s in g.vertices() {
        if let Some(c) = shortest_cycle_through(g, s, &allowed) {
            heap.push(Reverse((c.len(), c, s)));
        }
    }
    let mut cycles = Vec::new();
    while cycles.len() < max_count {
        let Some(Reverse((_, cyc, s))) = heap.pop() else {
            break;
        };
        if cyc.iter().all(|&v| allowed[v]) {
            for &v in &cyc {
                allowed[v] = false;
            }
            cycles.push(cyc);
        } else if allowed[s] {
            // Removing vertices only lengthens cycles, so the refreshed key is
            // never smaller than the stale one.
            if let Some(c) = shortest_cycle_through(g, s, &allowed) {
                heap.push(Reverse((c.len(), c, s)));
            }
        }
    }
    CycleSet { cycles, pairwise_disjoint: true }
}
