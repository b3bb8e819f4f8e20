mod common;

use common::*;
use linkbias::fixture::{Fixture, FixtureConfig};
use linkbias::stats::{
    across_link_node_fraction, across_weight_distribution, block_fractions, bootstrap_welch_test,
    degree_preserving_rewire, expected_random_fractions, pearson, stats_report, StatsOptions,
};
use linkbias::{build_matrix, CwpKind, Edge, NetworkBuilder, NodeId, NodeLabel, TopicInfo, TopicNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(seed: u64) -> TopicNetwork {
    let cfg = FixtureConfig {
        p_nodes: 40,
        pbar_nodes: 30,
        neighbor_nodes: 80,
        rest_nodes: 80,
        seed,
        ..FixtureConfig::default()
    };
    Fixture::generate(&cfg).unwrap().network().unwrap().0
}

#[test]
fn block_fractions_match_tally() {
    let g = fixture(1);
    let mut c = [[0u32; 2]; 2];
    for e in g.edges() {
        let slot = |l| match l {
            NodeLabel::P => Some(0),
            NodeLabel::PBar => Some(1),
            _ => None,
        };
        if let (Some(i), Some(j)) = (slot(g.label(e.src)), slot(g.label(e.dst))) {
            c[i][j] += 1;
        }
    }
    let f = block_fractions(&g);
    let p = f64::from(c[0][0] + c[0][1]);
    let q = f64::from(c[1][0] + c[1][1]);
    assert_eq!(f.p.within, Some(f64::from(c[0][0]) / p));
    assert_eq!(f.p.across, Some(f64::from(c[0][1]) / p));
    assert_eq!(f.pbar.within, Some(f64::from(c[1][1]) / q));
    assert_eq!(f.pbar.across, Some(f64::from(c[1][0]) / q));
}

#[test]
fn random_fractions_agree_with_ten_times_more_samples() {
    let g = fixture(2);
    let swaps = 5 * g.edge_count();
    let small = expected_random_fractions(&g, 30, swaps, 1).unwrap();
    let large = expected_random_fractions(&g, 300, swaps, 2).unwrap();
    for (a, b) in [(small.p.across, large.p.across), (small.pbar.across, large.pbar.across)] {
        let sd = b.sd.unwrap();
        let tol = 4.0 * sd * (1.0 / 30.0f64 + 1.0 / 300.0).sqrt();
        assert!((a.mean.unwrap() - b.mean.unwrap()).abs() <= tol, "{a:?} vs {b:?}");
    }
    let again = expected_random_fractions(&g, 30, swaps, 1).unwrap();
    assert_eq!(again, small);
}

/// P links only among itself; P̄ links only outward to a neighbor, and
/// optionally also receives links from itself.
fn inward_p(pbar_receives: bool) -> TopicNetwork {
    let mut b = NetworkBuilder::new(TopicInfo::default());
    let p: Vec<NodeId> = (0..8).map(|i| b.add_node(&format!("p{i}"), NodeLabel::P).unwrap()).collect();
    let q: Vec<NodeId> = (0..8).map(|i| b.add_node(&format!("q{i}"), NodeLabel::PBar).unwrap()).collect();
    let n: Vec<NodeId> = (0..4).map(|i| b.add_node(&format!("n{i}"), NodeLabel::Neighbor).unwrap()).collect();
    b.add_node("s", NodeLabel::Super).unwrap();
    for i in 0..8 {
        for k in 1..=3 {
            b.add_edge(Edge::new(p[i], p[(i + k) % 8])).unwrap();
        }
        b.add_edge(Edge::new(q[i], n[i % 4])).unwrap();
        if pbar_receives {
            b.add_edge(Edge::new(q[i], q[(i + 1) % 8])).unwrap();
        }
    }
    for i in 0..4 {
        b.add_edge(Edge::new(n[i], n[(i + 1) % 4])).unwrap();
    }
    b.build().unwrap()
}

#[test]
fn inward_partition_stays_inward_only_without_capacity_elsewhere() {
    let g = inward_p(false);
    let est = expected_random_fractions(&g, 20, 2000, 3).unwrap();
    assert_eq!(est.p.within.mean, Some(1.0));
    assert!(est.per_sample.iter().all(|f| f.p.within == Some(1.0)));

    let g = inward_p(true);
    let est = expected_random_fractions(&g, 20, 2000, 3).unwrap();
    assert!(est.p.within.mean.unwrap() < 1.0);
}

#[test]
fn unswappable_graph_is_returned_unchanged() {
    // a->b and c->d: the swap would give a->d, c->b, which already exist.
    let mut b = NetworkBuilder::new(TopicInfo::default());
    let ids: Vec<NodeId> = ["a", "b", "c", "d"]
        .iter()
        .enumerate()
        .map(|(i, n)| b.add_node(n, if i % 2 == 0 { NodeLabel::P } else { NodeLabel::PBar }).unwrap())
        .collect();
    b.add_node("s", NodeLabel::Super).unwrap();
    for (u, v) in [(0, 1), (2, 3), (0, 3), (2, 1)] {
        b.add_edge(Edge::new(ids[u], ids[v])).unwrap();
    }
    let g = b.build().unwrap();
    let r = degree_preserving_rewire(&g, 1000, 9).unwrap();
    assert_eq!(r.swaps_performed, 0);
    assert_eq!(r.network.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
}

#[test]
fn across_links_match_tally() {
    let g = fixture(4);
    for (src, dst) in [(NodeLabel::P, NodeLabel::PBar), (NodeLabel::PBar, NodeLabel::P)] {
        let nodes = g.nodes_in(src);
        let counts: Vec<usize> = nodes
            .iter()
            .map(|&v| g.edges().filter(|e| e.src == v && g.label(e.dst) == dst).count())
            .collect();
        let linked: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
        let a = across_link_node_fraction(&g, src).unwrap();
        assert_eq!(a.node_fraction, linked.len() as f64 / nodes.len() as f64);
        assert_eq!(a.mean_links, Some(linked.iter().sum::<usize>() as f64 / linked.len() as f64));
    }
}

#[test]
fn across_weights_match_row_sums() {
    let g = fixture(5);
    for kind in CwpKind::all() {
        let m = build_matrix(&g, kind).unwrap();
        let dense = dense_matrix(&g, kind);
        let got = across_weight_distribution(&g, &m, NodeLabel::P).unwrap();
        let want: Vec<f64> = g
            .nodes_in(NodeLabel::P)
            .iter()
            .map(|v| g.nodes_in(NodeLabel::PBar).iter().map(|u| dense[v.index()][u.index()]).sum())
            .collect();
        assert!(max_abs_diff(&got, &want) <= 1e-12);
    }
}

fn textbook_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn pearson_matches_textbook_formula() {
    let g = fixture(6);
    let x: Vec<f64> = g.nodes().map(|v| g.out_degree(v).unwrap() as f64).collect();
    let y: Vec<f64> = g.nodes().map(|v| g.in_degree(v).unwrap() as f64).collect();
    let r = pearson(&x, &y).unwrap().unwrap();
    assert!((r - textbook_pearson(&x, &y)).abs() <= 1e-10);
    assert_eq!(pearson(&x, &vec![1.0; x.len()]).unwrap(), None);
    assert!(pearson(&x, &y[1..]).is_err());
}

#[test]
fn welch_p_value_is_stable_against_large_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(435);
    let a: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
    let b: Vec<f64> = (0..30).map(|_| rng.random::<f64>() + 0.06).collect();
    let reference = bootstrap_welch_test(&a, &b, 100_000, 1).unwrap();
    let run = bootstrap_welch_test(&a, &b, 10_000, 2).unwrap();
    assert!(reference.p_value > 0.01 && reference.p_value < 0.9, "{reference:?}");
    assert!((run.p_value - reference.p_value).abs() <= 0.02, "{} vs {}", run.p_value, reference.p_value);
}

#[test]
fn fixture_across_fraction_is_binomial() {
    let cfg = FixtureConfig {
        p_nodes: 500,
        pbar_nodes: 500,
        neighbor_nodes: 200,
        rest_nodes: 0,
        across_fraction: 0.5,
        seed: 486,
        ..FixtureConfig::default()
    };
    let g = Fixture::generate(&cfg).unwrap().network().unwrap().0;
    let f = block_fractions(&g);
    for side in [f.p, f.pbar] {
        let n = side.links as f64;
        let sigma = (0.25 / n).sqrt();
        assert!((side.across.unwrap() - 0.5).abs() <= 3.0 * sigma, "{side:?}");
    }
}

#[test]
fn report_serializes_deterministically() {
    let g = fixture(7);
    let opts = StatsOptions {
        samples: 5,
        welch_replicates: 200,
        ..StatsOptions::default()
    };
    let a = stats_report(&g, &opts).unwrap().to_json();
    let b = stats_report(&g, &opts).unwrap().to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["nodes"]["p"], 40);
}
