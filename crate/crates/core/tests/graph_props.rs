use fpp_core::graph::words::Group;
use fpp_core::graph::{
    build_caterpillar, build_cycle_gadget, build_free_group, build_free_product_2_3, build_lattice, export_graph,
    find_disjoint_cycles, graph_distance, import_graph, GadgetPlan,
};
use fpp_core::{Graph, GraphSpec};
use proptest::prelude::*;

fn word_length(group: Group, label: &str) -> usize {
    group.parse(label).unwrap().len()
}

fn check_structure(g: &Graph) {
    let mut keys = std::collections::HashSet::new();
    for e in g.edges() {
        assert!(e.u < e.v);
        assert!(keys.insert(e.key.clone()), "duplicate key {}", e.key);
        let (a, b) = (g.label(e.u), g.label(e.v));
        let want = if a <= b { format!("{a}|{b}") } else { format!("{b}|{a}") };
        assert_eq!(e.key, want);
        assert!(g.neighbors(e.u).contains(&(e.v, e.id)));
        assert!(g.neighbors(e.v).contains(&(e.u, e.id)));
    }
    let mut adjacency_total = 0;
    for v in g.vertices() {
        let nbrs = g.neighbors(v);
        assert!(nbrs.windows(2).all(|p| p[0].0 < p[1].0));
        assert!(nbrs.len() <= g.degree_bound());
        adjacency_total += nbrs.len();
    }
    assert_eq!(adjacency_total, 2 * g.edge_count());
}

#[test]
fn cayley_balls_match_word_length() {
    for (group, g) in [
        (Group::Free { rank: 2 }, build_free_group(2, 5).unwrap()),
        (Group::Free { rank: 3 }, build_free_group(3, 3).unwrap()),
        (Group::FreeProduct23, build_free_product_2_3(7).unwrap()),
    ] {
        check_structure(&g);
        let d = g.bfs(g.base());
        for v in g.vertices() {
            assert_eq!(d[v], Some(word_length(group, g.label(v))), "{}", g.label(v));
        }
    }
}

#[test]
fn lattice_balls_are_l1_balls() {
    for (dim, r) in [(1, 4), (2, 6), (3, 3), (4, 2)] {
        let g = build_lattice(dim, r).unwrap();
        check_structure(&g);
        assert_eq!(g.degree_bound(), 2 * dim);
        let d = g.bfs(g.base());
        for v in g.vertices() {
            let l1: i64 = g
                .label(v)
                .trim_matches(|c| c == '(' || c == ')')
                .split(',')
                .map(|x| x.parse::<i64>().unwrap().abs())
                .sum();
            assert_eq!(d[v], Some(l1 as usize));
        }
    }
}

#[test]
fn graph_distance_is_a_metric() {
    for g in [
        build_lattice(2, 4).unwrap(),
        build_free_product_2_3(5).unwrap(),
        build_cycle_gadget(GadgetPlan::Theta(3, 4)).unwrap(),
        build_caterpillar(12, 4, 2, 4).unwrap().0,
    ] {
        let n = g.vertex_count();
        assert!(n <= 200);
        let d: Vec<Vec<usize>> = (0..n).map(|x| g.bfs(x).into_iter().map(Option::unwrap).collect()).collect();
        for x in 0..n {
            assert_eq!(d[x][x], 0);
            for y in 0..n {
                assert_eq!(d[x][y], d[y][x]);
                for z in 0..n {
                    assert!(d[x][z] <= d[x][y] + d[y][z]);
                }
            }
        }
    }
    let fp = build_free_product_2_3(2).unwrap();
    let (e, ab) = (fp.vertex_by_label("e").unwrap(), fp.vertex_by_label("ab").unwrap());
    assert_eq!(graph_distance(&fp, e, ab).unwrap(), 2);
    let line = build_lattice(1, 3).unwrap();
    let ends = (line.vertex_by_label("(-3)").unwrap(), line.vertex_by_label("(3)").unwrap());
    assert_eq!(graph_distance(&line, ends.0, ends.1).unwrap(), 6);
    assert!(graph_distance(&line, 0, 99).is_err());
}

#[test]
fn free_product_cycles() {
    let mut previous = 0;
    for r in 2..=8 {
        let g = build_free_product_2_3(r).unwrap();
        let cs = find_disjoint_cycles(&g, usize::MAX);
        assert!(cs.len() >= previous, "R = {r}");
        previous = cs.len();
        for c in &cs.cycles {
            assert_eq!(c.len(), 3);
            // a b-orbit: {x, xb, xB}
            let words: Vec<&str> = c.iter().map(|&v| g.label(v)).collect();
            let group = Group::FreeProduct23;
            let x = group.parse(words[0]).unwrap();
            let mut orbit = vec![x.clone(), group.multiply(&x, b"b"), group.multiply(&x, b"B")];
            orbit.sort();
            let mut got: Vec<Vec<u8>> = words.iter().map(|w| group.parse(w).unwrap()).collect();
            got.sort();
            assert_eq!(got, orbit);
        }
    }
}

#[test]
fn cycles_are_simple_disjoint_and_stable() {
    for g in [
        build_lattice(2, 5).unwrap(),
        build_free_product_2_3(6).unwrap(),
        build_cycle_gadget(GadgetPlan::Theta(3, 5)).unwrap(),
        build_caterpillar(20, 5, 2, 3).unwrap().0,
    ] {
        let cs = find_disjoint_cycles(&g, usize::MAX);
        assert!(cs.pairwise_disjoint);
        let mut used = vec![false; g.vertex_count()];
        for c in &cs.cycles {
            assert!(c.len() >= 3);
            assert!(fpp_core::graph::cycle_edges(&g, c).is_some());
            for &v in c {
                assert!(!used[v], "vertex {v} in two cycles");
                used[v] = true;
            }
        }
        assert_eq!(find_disjoint_cycles(&g, usize::MAX), cs);
    }
}

#[test]
fn caterpillar_rays_validate() {
    let (g, ray) = build_caterpillar(40, 5, 2, 3).unwrap();
    ray.validate(&g).unwrap();
    assert_eq!(ray.detours.len(), 8);
    let (_, ray) = build_caterpillar(10, 5, 2, 2).unwrap();
    assert_eq!(ray.detours.len(), 2);
    assert!(ray.detours.iter().all(|d| d.length == 2 && d.path.len() == 3));
    let (_, ray) = build_caterpillar(4, 5, 2, 3).unwrap();
    assert_eq!(ray.detours.len(), 1);
    assert_eq!((ray.detours[0].x, ray.detours[0].y), (0, 2));
    assert!(build_caterpillar(10, 1, 2, 3).is_err());
}

proptest! {
    #[test]
    fn export_round_trip(family in 0usize..5, r in 0usize..5) {
        let g = match family {
            0 => build_lattice(2, r).unwrap(),
            1 => build_lattice(3, r.min(3)).unwrap(),
            2 => build_free_group(2, r).unwrap(),
            3 => build_free_product_2_3(r + 1).unwrap(),
            _ => build_cycle_gadget(GadgetPlan::Theta(1 + r, 2 + r)).unwrap(),
        };
        let text = export_graph(&g);
        let back = import_graph(&text).unwrap();
        prop_assert_eq!(export_graph(&back), text);
        prop_assert_eq!(back.id(), g.id());
    }

    #[test]
    fn spec_text_round_trip(kind in 0usize..6, a in 1usize..6, b in 1usize..6) {
        let spec = match kind {
            0 => GraphSpec::Lattice { dim: a.min(4), radius: b },
            1 => GraphSpec::FreeGroup { rank: a.min(4), radius: b },
            2 => GraphSpec::FreeProduct23 { radius: b },
            3 => GraphSpec::Cycle { n: a + 2 },
            4 => GraphSpec::Theta { p: a, q: b + 1 },
            _ => GraphSpec::Caterpillar { length: 10 * a, period: b + 1, span: 1, detour: 2 },
        };
        prop_assert_eq!(spec.to_string().parse::<GraphSpec>().unwrap(), spec);
    }
}
