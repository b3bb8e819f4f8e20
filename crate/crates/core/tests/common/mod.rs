//! Shared helpers: random networks and a dense reference implementation of
//! the transition models and the navigation recursion.
#![allow(dead_code)]

use linkbias::graph::{Edge, NetworkBuilder, NodeId, NodeLabel, TopicInfo, TopicNetwork};
use linkbias::CwpKind;
use std::collections::HashSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random topic network on `n` pages plus the super node: roughly a third
/// each of P, P̄ and neighbors, about `m` links (at most `n(n-1)`) with
/// ranks and partial click counts, and no dangling page.
pub fn random_network(seed: u64, n: usize, m: usize) -> TopicNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetworkBuilder::new(TopicInfo {
        name: format!("random{seed}"),
        label_p: "left".into(),
        label_pbar: "right".into(),
    });
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let l = match i * 3 / n {
            0 => NodeLabel::P,
            1 => NodeLabel::PBar,
            _ => NodeLabel::Neighbor,
        };
        labels.push(l);
        b.add_node(&format!("v{i}"), l).unwrap();
    }
    let s = b.add_node("s", NodeLabel::Super).unwrap();
    let mut present = HashSet::new();
    // Every page gets at least one link.
    for i in 0..n {
        let j = (i + 1 + rng.random_range(0..n - 1)) % n;
        add(&mut b, &mut rng, &mut present, NodeId::new(i), NodeId::new(j));
    }
    let m = m.min(n * (n - 1));
    while present.len() < m {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        add(&mut b, &mut rng, &mut present, NodeId::new(i), NodeId::new(j));
    }
    // Neighbors exchange links with the super node.
    for (i, &l) in labels.iter().enumerate() {
        if l == NodeLabel::Neighbor && rng.random_bool(0.5) {
            add(&mut b, &mut rng, &mut present, NodeId::new(i), s);
            add(&mut b, &mut rng, &mut present, s, NodeId::new(i));
        }
    }
    if !present.iter().any(|&(src, _)| src == s) {
        let first_n = labels.iter().position(|&l| l == NodeLabel::Neighbor).unwrap();
        add(&mut b, &mut rng, &mut present, s, NodeId::new(first_n));
    }
    b.build().unwrap()
}

fn add(b: &mut NetworkBuilder, rng: &mut ChaCha8Rng, present: &mut HashSet<(NodeId, NodeId)>, src: NodeId, dst: NodeId) {
    if src != dst && present.insert((src, dst)) {
        let mut e = Edge::new(src, dst).with_position(rng.random_range(0..1000));
        if rng.random_bool(0.6) {
            e = e.with_clicks(f64::from(rng.random_range(10..500u32)));
        }
        b.add_edge(e).unwrap();
    }
}

pub type Dense = Vec<Vec<f64>>;

/// Dense transition matrix computed straight from the edge list.
pub fn dense_matrix(g: &TopicNetwork, kind: CwpKind) -> Dense {
    let n = g.node_count();
    let mut m = vec![vec![0.0; n]; n];
    for v in g.nodes() {
        let mut out: Vec<Edge> = g.edges().filter(|e| e.src == v).collect();
        if out.is_empty() {
            continue;
        }
        let deg = out.len();
        let weights: Vec<f64> = match kind {
            CwpKind::Uniform => vec![1.0; deg],
            CwpKind::Position => {
                out.sort_by_key(|e| (e.position_rank.unwrap(), e.dst));
                (0..deg).map(|pos| ((deg - pos) as f64).tanh()).collect()
            }
            CwpKind::Clicks { smoothing } => out.iter().map(|e| e.click_count.unwrap_or(smoothing)).collect(),
        };
        let total: f64 = weights.iter().sum();
        for (e, w) in out.iter().zip(weights) {
            m[v.index()][e.dst.index()] = w / total;
        }
    }
    m
}

pub fn vec_mat(x: &[f64], m: &Dense) -> Vec<f64> {
    let n = m.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            y[j] += x[i] * m[i][j];
        }
    }
    y
}

/// `norm(M · diag(1 + pi)^-1)`.
pub fn dense_deflate(m: &Dense, pi: &[f64]) -> Dense {
    m.iter()
        .map(|row| {
            let scaled: Vec<f64> = row.iter().zip(pi).map(|(v, p)| v / (1.0 + p)).collect();
            let s: f64 = scaled.iter().sum();
            if s == 0.0 {
                scaled
            } else {
                scaled.iter().map(|v| v / s).collect()
            }
        })
        .collect()
}

/// `π¹ = π⁰M₀`, then `π^{ℓ+1} = (1-α) π^ℓ M_ℓ + α (π⁰ M_ℓ)` with
/// `M_ℓ = norm(M_{ℓ-1} diag(1 + π^{ℓ-1})^-1)`. Returns `π⁰..π^L` and `M₀..M_{L-1}`.
pub fn dense_evolve(m0: &Dense, pi0: &[f64], alpha: f64, clicks: usize) -> (Vec<Vec<f64>>, Vec<Dense>) {
    let mut pis = vec![pi0.to_vec(), vec_mat(pi0, m0)];
    let mut ms = vec![m0.clone()];
    for l in 1..clicks {
        let m = dense_deflate(&ms[l - 1], &pis[l - 1]);
        let a = vec_mat(&pis[l], &m);
        let b = vec_mat(pi0, &m);
        pis.push(a.iter().zip(&b).map(|(x, y)| (1.0 - alpha) * x + alpha * y).collect());
        ms.push(m);
    }
    (pis, ms)
}

pub fn uniform_over(n: usize, nodes: &[NodeId]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for u in nodes {
        v[u.index()] = 1.0 / nodes.len() as f64;
    }
    v
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Balanced two-block graph: `half` pages per partition, each with
/// `out_degree` links, a share `across` of which cross partitions.
pub fn planted_balanced(seed: u64, half: usize, out_degree: usize, across: f64) -> TopicNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetworkBuilder::new(TopicInfo::default());
    for i in 0..2 * half {
        let l = if i < half { NodeLabel::P } else { NodeLabel::PBar };
        b.add_node(&format!("v{i}"), l).unwrap();
    }
    b.add_node("s", NodeLabel::Super).unwrap();
    for i in 0..2 * half {
        let own = i / half;
        let mut targets = std::collections::BTreeSet::new();
        while targets.len() < out_degree {
            let side = if rng.random_bool(across) { 1 - own } else { own };
            let j = side * half + rng.random_range(0..half);
            if j != i {
                targets.insert(j);
            }
        }
        for (rank, j) in targets.into_iter().enumerate() {
            b.add_edge(Edge::new(NodeId::new(i), NodeId::new(j)).with_position(rank as u32))
                .unwrap();
        }
    }
    b.build().unwrap()
}
