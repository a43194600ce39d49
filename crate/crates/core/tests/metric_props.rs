//! Metric-engine properties: exactness against exhaustive path search,
//! metric axioms, unit-weight degeneracy, monotonicity, scale equivariance
//! and resolution stability of triangle slimness.

use fpp_core::graph::{
    build_caterpillar, build_cycle_gadget, build_free_group, build_free_product_2_3, build_lattice, graph_distance,
    Family, GadgetPlan,
};
use fpp_core::metric::{
    distance_matrix, four_point_delta, omega_distance, omega_geodesic, path_omega_length, realization_distance,
    single_source, triangle_slimness, Metric,
};
use fpp_core::percolation::{make_distribution, sample_weights};
use fpp_core::{Graph, RealizationPoint, WeightAssignment};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graph on `n` vertices: a random tree plus extra edges.
fn random_connected(n: usize, extra: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&(a, b)) && rng.gen_bool(extra) {
                edges.push((a, b));
            }
        }
    }
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    Graph::from_edges("random", Family::Imported, labels, &edges, 0).unwrap()
}

/// Minimum ω-length over every simple path, by depth-first enumeration.
fn brute_force(g: &Graph, w: &WeightAssignment, x: usize, y: usize) -> f64 {
    fn go(g: &Graph, w: &WeightAssignment, u: usize, y: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if u == y {
            *best = best.min(acc);
            return;
        }
        for &(v, e) in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                go(g, w, v, y, seen, acc + w.get(e), best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; g.vertex_count()];
    seen[x] = true;
    let mut best = f64::INFINITY;
    go(g, w, x, y, &mut seen, 0.0, &mut best);
    best
}

#[test]
fn dijkstra_matches_exhaustive_paths() {
    let d = make_distribution("exponential(1)").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100u64 {
        let g = random_connected(8, 0.3, &mut rng);
        let w = sample_weights(&g, &d, seed);
        for x in g.vertices() {
            let f = single_source(&g, &w, x).unwrap();
            for y in g.vertices() {
                let want = brute_force(&g, &w, x, y);
                assert!((f.dist[y] - want).abs() <= 1e-12, "seed {seed}: d({x},{y}) = {} vs {want}", f.dist[y]);
            }
        }
    }
}

#[test]
fn relaxation_fixpoint() {
    let g = build_lattice(2, 5).unwrap();
    let w = sample_weights(&g, &make_distribution("lognormal(0,1)").unwrap(), 3);
    let f = single_source(&g, &w, g.base()).unwrap();
    assert_eq!(f.dist[g.base()], 0.0);
    for e in g.edges() {
        assert!((f.dist[e.u] - f.dist[e.v]).abs() <= w.get(e.id) + 1e-12);
    }
    for v in g.vertices() {
        let p = f.path_to(v).unwrap();
        assert!((path_omega_length(&g, &w, &p).unwrap() - f.dist[v]).abs() <= 1e-12);
    }
}

#[test]
fn reversed_accumulation_agrees() {
    let g = build_cycle_gadget(GadgetPlan::Cycle(8)).unwrap();
    let w = sample_weights(&g, &make_distribution("exponential(1)").unwrap(), 41);
    let mut cycle: Vec<usize> = (0..8).collect();
    cycle.push(0);
    let forward = path_omega_length(&g, &w, &cycle).unwrap();
    let backward: f64 = w.values().iter().rev().sum();
    assert!((forward - backward).abs() <= 1e-12);
    assert_eq!(cycle.len(), 9);
}

fn instances() -> Vec<Graph> {
    vec![
        build_lattice(2, 3).unwrap(),
        build_free_product_2_3(4).unwrap(),
        build_free_group(2, 3).unwrap(),
        build_cycle_gadget(GadgetPlan::Cycle(9)).unwrap(),
        build_cycle_gadget(GadgetPlan::Theta(2, 5)).unwrap(),
        build_caterpillar(10, 5, 2, 3).unwrap().0,
    ]
}

fn distributions() -> Vec<&'static str> {
    vec!["exponential(1)", "uniform(0.5,1.5)", "lognormal(0,0.75)", "constant(1)"]
}

fn all_pairs(g: &Graph, w: &WeightAssignment) -> Vec<Vec<f64>> {
    g.vertices().map(|x| single_source(g, w, x).unwrap().dist).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_axioms(gi in 0usize..6, di in 0usize..4, seed in any::<u64>()) {
        let g = &instances()[gi];
        let w = sample_weights(g, &make_distribution(distributions()[di]).unwrap(), seed);
        let d = all_pairs(g, &w);
        let n = g.vertex_count();
        for x in 0..n {
            prop_assert_eq!(d[x][x], 0.0);
            for y in 0..n {
                prop_assert!((d[x][y] - d[y][x]).abs() <= 1e-12 * d[x][y].max(1.0));
                if x != y {
                    prop_assert!(d[x][y] > 0.0);
                }
                for z in 0..n {
                    prop_assert!(d[x][z] <= d[x][y] + d[y][z] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn geodesic_is_shortest(gi in 0usize..6, seed in any::<u64>(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let g = &instances()[gi];
        let w = sample_weights(g, &make_distribution("exponential(1)").unwrap(), seed);
        let (x, y) = (a.index(g.vertex_count()), b.index(g.vertex_count()));
        let dist = omega_distance(g, &w, x, y).unwrap();
        let geo = omega_geodesic(g, &w, x, y).unwrap();
        prop_assert_eq!(geo.start(), x);
        prop_assert_eq!(geo.end(), y);
        prop_assert!((geo.omega_length - dist).abs() <= 1e-12 * dist.max(1.0));
        let mut sorted = geo.vertices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), geo.vertices.len());
        // any BFS path is a competitor
        let unit = fpp_core::graph::Graph::bfs(g, y);
        let mut path = vec![x];
        let mut u = x;
        while u != y {
            let next = g.neighbors(u).iter().find(|&&(v, _)| unit[v] < unit[u]).unwrap().0;
            path.push(next);
            u = next;
        }
        prop_assert!(dist <= path_omega_length(g, &w, &path).unwrap() + 1e-12);
    }

    #[test]
    fn monotone_in_each_weight(gi in 0usize..6, seed in any::<u64>(), e in any::<prop::sample::Index>(), bump in 0.01f64..5.0) {
        let g = &instances()[gi];
        let w = sample_weights(g, &make_distribution("exponential(1)").unwrap(), seed);
        let e = e.index(g.edge_count());
        let mut heavier = w.clone();
        heavier.set(e, w.get(e) + bump).unwrap();
        let (before, after) = (all_pairs(g, &w), all_pairs(g, &heavier));
        for (r0, r1) in before.iter().zip(&after) {
            for (a, b) in r0.iter().zip(r1) {
                prop_assert!(b >= a);
            }
        }
    }

    #[test]
    fn scale_equivariance(gi in 0usize..6, seed in any::<u64>(), lambda in 0.01f64..100.0) {
        let g = &instances()[gi];
        let w = sample_weights(g, &make_distribution("lognormal(0,1)").unwrap(), seed);
        let scaled = w.scaled(lambda);
        let (d0, d1) = (all_pairs(g, &w), all_pairs(g, &scaled));
        for (r0, r1) in d0.iter().zip(&d1) {
            for (a, b) in r0.iter().zip(r1) {
                prop_assert!((a * lambda - b).abs() <= 1e-12 * b.max(1.0));
            }
        }
        for x in (0..g.vertex_count()).step_by(3) {
            let y = g.vertex_count() - 1 - x;
            prop_assert_eq!(
                omega_geodesic(g, &w, x, y).unwrap().vertices,
                omega_geodesic(g, &scaled, x, y).unwrap().vertices
            );
        }
    }

    #[test]
    fn realization_distance_is_a_metric(seed in any::<u64>(), pts in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..1.0), 3)) {
        let g = build_lattice(2, 3).unwrap();
        let w = sample_weights(&g, &make_distribution("exponential(1)").unwrap(), seed);
        let p: Vec<RealizationPoint> = pts
            .iter()
            .map(|(e, t)| {
                let e = e.index(g.edge_count());
                RealizationPoint::on_edge(e, t * w.get(e))
            })
            .collect();
        let m = Metric::new(&g, &w).unwrap();
        let d = |a: RealizationPoint, b: RealizationPoint| m.point_distance(a, b).unwrap();
        prop_assert_eq!(d(p[0], p[0]), 0.0);
        prop_assert!((d(p[0], p[1]) - d(p[1], p[0])).abs() <= 1e-12);
        prop_assert!(d(p[0], p[2]) <= d(p[0], p[1]) + d(p[1], p[2]) + 1e-12);
        let geo = m.realized_geodesic(p[0], p[1]).unwrap();
        prop_assert!((geo.length - d(p[0], p[1])).abs() <= 1e-12);
    }

    #[test]
    fn slimness_stable_under_refinement(seed in any::<u64>(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>(), c in any::<prop::sample::Index>()) {
        let g = build_free_product_2_3(3).unwrap();
        let w = sample_weights(&g, &make_distribution("exponential(1)").unwrap(), seed);
        let n = g.vertex_count();
        let v = |i: &prop::sample::Index| RealizationPoint::vertex(i.index(n));
        let h = 0.05;
        let coarse = triangle_slimness(&g, &w, v(&a), v(&b), v(&c), Some(h)).unwrap();
        let fine = triangle_slimness(&g, &w, v(&a), v(&b), v(&c), Some(h / 2.0)).unwrap();
        prop_assert!((coarse.slimness - fine.slimness).abs() <= h);
        for (side, pair) in coarse.sides.iter().zip([(&a, &b), (&b, &c), (&c, &a)]) {
            let want = omega_distance(&g, &w, pair.0.index(n), pair.1.index(n)).unwrap();
            prop_assert!((side.length - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn four_point_invariances(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let g = build_lattice(2, 3).unwrap();
        let w = sample_weights(&g, &make_distribution("exponential(1)").unwrap(), seed);
        let sample: Vec<usize> = (0..g.vertex_count()).step_by(2).collect();
        let d = distance_matrix(&g, &w, &sample).unwrap();
        let delta = four_point_delta(&d).unwrap();
        prop_assert!(delta >= 0.0);
        let scaled: Vec<Vec<f64>> = d.iter().map(|r| r.iter().map(|x| x * lambda).collect()).collect();
        prop_assert!((four_point_delta(&scaled).unwrap() - lambda * delta).abs() <= 1e-9 * lambda.max(1.0));
        let rev: Vec<Vec<f64>> = d.iter().rev().map(|r| r.iter().rev().copied().collect()).collect();
        prop_assert!((four_point_delta(&rev).unwrap() - delta).abs() <= 1e-12);
    }
}

#[test]
fn constant_weights_reproduce_graph_distance() {
    for g in [build_lattice(2, 6).unwrap(), build_free_product_2_3(4).unwrap()] {
        for c in [1.0, 0.5, 2.0, 4.0] {
            let w = sample_weights(&g, &make_distribution(&format!("constant({c})")).unwrap(), 0);
            for x in g.vertices() {
                let f = single_source(&g, &w, x).unwrap();
                let unit = g.bfs(x);
                for y in g.vertices() {
                    assert_eq!(f.dist[y], c * unit[y].unwrap() as f64);
                }
            }
        }
        let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
        for x in (0..g.vertex_count()).step_by(5) {
            for y in (0..g.vertex_count()).step_by(7) {
                let geo = omega_geodesic(&g, &w, x, y).unwrap();
                let d = graph_distance(&g, x, y).unwrap();
                assert_eq!(geo.vertices.len(), d + 1);
                let to_y = g.bfs(y);
                for (i, v) in geo.vertices.iter().enumerate() {
                    assert_eq!(to_y[*v], Some(d - i));
                }
            }
        }
    }
}

#[test]
fn constant_weights_scale_distances() {
    let g = build_lattice(2, 4).unwrap();
    let w = sample_weights(&g, &make_distribution("constant(0.3)").unwrap(), 9);
    for y in g.vertices() {
        let d = omega_distance(&g, &w, 0, y).unwrap();
        assert!((d - 0.3 * graph_distance(&g, 0, y).unwrap() as f64).abs() <= 1e-12);
    }
}

#[test]
fn realization_distance_examples() {
    let g = build_cycle_gadget(GadgetPlan::Cycle(4)).unwrap();
    let w = WeightAssignment::uniform_value(&g, 1.0).unwrap();
    let p = RealizationPoint::on_edge(g.find_edge(0, 1).unwrap(), 0.25);
    let q = RealizationPoint::on_edge(g.find_edge(2, 3).unwrap(), 0.5);
    // Enumerate the four endpoint routes by hand.
    let routes = [0.25 + 1.0 + 0.5, 0.25 + 2.0 + 0.5, 0.75 + 2.0 + 0.5, 0.75 + 1.0 + 0.5];
    let want = routes.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((realization_distance(&g, &w, p, q).unwrap() - want).abs() < 1e-12);
    assert!((want - 1.75).abs() < 1e-15);
}
