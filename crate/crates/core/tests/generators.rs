//! Generator invariants over many seeds.

use emitseq::bench::{degrees, generate_graph, is_connected, GraphKind, GraphSpec};

#[test]
fn families_satisfy_edge_arithmetic() {
    for seed in 0..25 {
        for n in [3usize, 8, 17, 30] {
            let cases = [
                (GraphKind::Path, Some(n - 1)),
                (GraphKind::Star, Some(n - 1)),
                (GraphKind::Cycle, Some(n)),
                (GraphKind::RandomTree, Some(n - 1)),
                (GraphKind::ErdosRenyi { p: 0.4 }, None),
            ];
            for (kind, edges) in cases {
                let g = generate_graph(&GraphSpec::new(kind, n, seed)).unwrap();
                g.validate().unwrap();
                assert_eq!(g.vertex_count(), n);
                assert!(is_connected(&g), "{kind} n={n} seed={seed}");
                if let Some(e) = edges {
                    assert_eq!(g.edge_count(), e, "{kind} n={n}");
                }
            }
        }
    }
}

#[test]
fn regular_graphs_are_regular() {
    for seed in 0..25 {
        for (n, d) in [(10usize, 3usize), (12, 4), (42, 3), (9, 2)] {
            let g = generate_graph(&GraphSpec::new(GraphKind::RandomRegular { degree: d }, n, seed)).unwrap();
            assert_eq!(g.edge_count(), n * d / 2);
            assert!(degrees(&g).iter().all(|&x| x == d));
            assert!(is_connected(&g));
        }
    }
}

#[test]
fn grids_match_their_shape() {
    for (r, c) in [(1usize, 5usize), (2, 2), (3, 4), (5, 5)] {
        let g = generate_graph(&GraphSpec::new(GraphKind::Grid { rows: r, cols: c }, r * c, 0)).unwrap();
        assert_eq!(g.edge_count(), r * (c - 1) + c * (r - 1));
    }
}

#[test]
fn edge_lists_round_trip() {
    let g = generate_graph(&GraphSpec::new(GraphKind::ErdosRenyi { p: 0.3 }, 20, 11)).unwrap();
    let text = g.to_edge_list().unwrap();
    assert_eq!(emitseq::graph::GraphState::from_edge_list(&text).unwrap(), g);
}
