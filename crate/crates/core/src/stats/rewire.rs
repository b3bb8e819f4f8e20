//! Degree-preserving randomization by double edge swaps.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::structure::{BlockFractions, SideFractions};
use crate::error::{Error, Result};
use crate::exposure::replicate_rng;
use crate::graph::{Edge, NodeLabel, TopicNetwork};

#[derive(Clone, Debug)]
pub struct RewiredSample {
    pub network: TopicNetwork,
    /// Swaps that were carried out; rejected attempts are not counted.
    pub swaps_performed: usize,
    pub seed: u64,
}

/// Default attempt budget: ten per swappable edge.
pub fn default_swaps(g: &TopicNetwork) -> usize {
    10 * swappable(g).count()
}

fn swappable(g: &TopicNetwork) -> impl Iterator<Item = Edge> + '_ {
    let s = g.super_node();
    g.edges().filter(move |e| e.src != s && e.dst != s)
}

fn key(src: u32, dst: u32) -> u64 {
    (u64::from(src) << 32) | u64::from(dst)
}

/// Runs `attempts` double-swap attempts over the links that avoid the super
/// node. Link attributes stay with the source page. Returns the full edge
/// list and the number of swaps performed.
fn rewire_edges(g: &TopicNetwork, attempts: usize, rng: &mut ChaCha8Rng) -> (Vec<Edge>, usize) {
    let s = g.super_node();
    let (mut pool, fixed): (Vec<Edge>, Vec<Edge>) = g.edges().partition(|e| e.src != s && e.dst != s);
    let mut present: HashSet<u64> = pool
        .iter()
        .map(|e| key(e.src.index() as u32, e.dst.index() as u32))
        .collect();
    let m = pool.len();
    let mut done = 0;
    if m >= 2 {
        for _ in 0..attempts {
            let i = rng.random_range(0..m);
            let j = rng.random_range(0..m);
            if i == j {
                continue;
            }
            let (a, b) = (pool[i].src, pool[i].dst);
            let (c, d) = (pool[j].src, pool[j].dst);
            if a == c || b == d || a == d || c == b {
                continue;
            }
            let (ad, cb) = (key(a.index() as u32, d.index() as u32), key(c.index() as u32, b.index() as u32));
            if present.contains(&ad) || present.contains(&cb) {
                continue;
            }
            present.remove(&key(a.index() as u32, b.index() as u32));
            present.remove(&key(c.index() as u32, d.index() as u32));
            present.insert(ad);
            present.insert(cb);
            pool[i].dst = d;
            pool[j].dst = b;
            done += 1;
        }
    }
    pool.extend(fixed);
    (pool, done)
}

pub fn degree_preserving_rewire(g: &TopicNetwork, swaps: usize, seed: u64) -> Result<RewiredSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (edges, swaps_performed) = rewire_edges(g, swaps, &mut rng);
    Ok(RewiredSample {
        network: g.with_edges(edges)?,
        swaps_performed,
        seed,
    })
}

/// Mean and sample standard deviation of one fraction over the samples in
/// which it is defined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FractionEstimate {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl FractionEstimate {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return FractionEstimate::default();
        }
        let mean = values.iter().sum::<f64>() / n;
        let sd = (values.len() > 1)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        FractionEstimate { mean: Some(mean), sd }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SideEstimate {
    pub within: FractionEstimate,
    pub across: FractionEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomFractions {
    pub p: SideEstimate,
    pub pbar: SideEstimate,
    pub samples: usize,
    pub swaps: usize,
    pub seed: u64,
    /// Per-sample fractions, in sample order.
    #[serde(skip)]
    pub per_sample: Vec<BlockFractions>,
}

fn summarize(per_sample: &[BlockFractions], pick: impl Fn(&BlockFractions) -> SideFractions) -> SideEstimate {
    let within: Vec<f64> = per_sample.iter().filter_map(|f| pick(f).within).collect();
    let across: Vec<f64> = per_sample.iter().filter_map(|f| pick(f).across).collect();
    SideEstimate {
        within: FractionEstimate::from_values(&within),
        across: FractionEstimate::from_values(&across),
    }
}

/// Block fractions averaged over `samples` rewired copies. Sample `k` uses
/// its own stream of `seed`, so results do not depend on thread count.
pub fn expected_random_fractions(g: &TopicNetwork, samples: usize, swaps: usize, seed: u64) -> Result<RandomFractions> {
    if samples == 0 {
        return Err(Error::InvalidConfig("expected fractions need at least one sample".into()));
    }
    let labels = g.labels();
    let per_sample: Vec<BlockFractions> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let (edges, _) = rewire_edges(g, swaps, &mut replicate_rng(seed, k));
            BlockFractions::from_pairs(edges.iter().map(|e| (labels[e.src.index()], labels[e.dst.index()])))
        })
        .collect();
    Ok(RandomFractions {
        p: summarize(&per_sample, |f| f.p),
        pbar: summarize(&per_sample, |f| f.pbar),
        samples,
        swaps,
        seed,
        per_sample,
    })
}

/// Closed-form configuration-model expectation: a link that lands in the
/// topic pages picks its end proportionally to in-degree, regardless of the
/// source partition. Self-loops and multi-links are not excluded.
pub fn analytic_random_fractions(g: &TopicNetwork) -> BlockFractions {
    let mut indeg = [0u64; 2];
    let mut out_to_topic = [0u64; 2];
    for e in swappable(g) {
        let (ls, ld) = (g.label(e.src), g.label(e.dst));
        if let Some(j) = slot(ld) {
            indeg[j] += 1;
            if let Some(i) = slot(ls) {
                out_to_topic[i] += 1;
            }
        }
    }
    let total = indeg[0] + indeg[1];
    let side = |own: usize, links: u64| {
        if total == 0 || links == 0 {
            return SideFractions::default();
        }
        let within = indeg[own] as f64 / total as f64;
        SideFractions {
            within: Some(within),
            across: Some(1.0 - within),
            links,
        }
    };
    BlockFractions {
        p: side(0, out_to_topic[0]),
        pbar: side(1, out_to_topic[1]),
    }
}

fn slot(l: NodeLabel) -> Option<usize> {
    match l {
        NodeLabel::P => Some(0),
        NodeLabel::PBar => Some(1),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NetworkBuilder, NodeId, TopicInfo};

    fn build(labels: &[NodeLabel], edges: &[(usize, usize)]) -> TopicNetwork {
        let mut b = NetworkBuilder::new(TopicInfo::default());
        for (i, &l) in labels.iter().enumerate() {
            b.add_node(&format!("v{i}"), l).unwrap();
        }
        b.add_node("s", NodeLabel::Super).unwrap();
        for &(a, c) in edges {
            b.add_edge(Edge::new(NodeId::new(a), NodeId::new(c))).unwrap();
        }
        b.build().unwrap()
    }

    fn degrees(g: &TopicNetwork) -> Vec<(usize, usize)> {
        g.nodes().map(|v| (g.out_degree(v).unwrap(), g.in_degree(v).unwrap())).collect()
    }

    #[test]
    fn blocked_swaps_leave_graph_unchanged() {
        use NodeLabel::*;
        // Swapping 0->1 and 1->0 would create self-loops.
        let g = build(&[P, PBar], &[(0, 1), (1, 0)]);
        let r = degree_preserving_rewire(&g, 1000, 3).unwrap();
        assert_eq!(r.swaps_performed, 0);
        assert_eq!(r.network, g);
    }

    #[test]
    fn degrees_survive_rewiring() {
        use NodeLabel::*;
        let labels = [P, P, P, PBar, PBar, PBar];
        let edges = [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 5), (5, 3), (5, 1), (2, 4)];
        let g = build(&labels, &edges);
        let r = degree_preserving_rewire(&g, 500, 11).unwrap();
        assert!(r.swaps_performed > 0);
        assert_eq!(degrees(&r.network), degrees(&g));
        assert_eq!(r.network.edge_count(), g.edge_count());
        let again = degree_preserving_rewire(&g, 500, 11).unwrap();
        assert_eq!(again.network, r.network);
    }

    #[test]
    fn samples_required() {
        use NodeLabel::*;
        let g = build(&[P, PBar], &[(0, 1)]);
        assert!(expected_random_fractions(&g, 0, 10, 0).is_err());
        let one = expected_random_fractions(&g, 1, 10, 5).unwrap();
        assert_eq!(one.p.across.mean, Some(1.0));
        assert_eq!(one.p.across.sd, None);
    }

    #[test]
    fn analytic_uses_in_degree_shares() {
        use NodeLabel::*;
        // In-degree into P: 1 (v1), into PBAR: 4.
        let g = build(&[P, P, PBar, PBar], &[(0, 1), (0, 2), (1, 3), (3, 2), (2, 3)]);
        let f = analytic_random_fractions(&g);
        assert_eq!(f.p.within, Some(0.2));
        assert_eq!(f.pbar.within, Some(0.8));
    }
}
