//! Link-structure tallies between and within partitions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeLabel, TopicNetwork};
use crate::matrix::TransitionMatrix;

/// Share of a partition's topic-directed links that stay inside it or cross
/// over. `None` when the partition has no link into the topic pages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SideFractions {
    pub within: Option<f64>,
    pub across: Option<f64>,
    /// Links from this partition into `P ∪ P̄`.
    pub links: u64,
}

impl SideFractions {
    pub(crate) fn from_counts(within: u64, across: u64) -> Self {
        let links = within + across;
        if links == 0 {
            return SideFractions::default();
        }
        SideFractions {
            within: Some(within as f64 / links as f64),
            across: Some(across as f64 / links as f64),
            links,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BlockFractions {
    pub p: SideFractions,
    pub pbar: SideFractions,
}

impl BlockFractions {
    pub fn side(&self, label: NodeLabel) -> Option<&SideFractions> {
        match label {
            NodeLabel::P => Some(&self.p),
            NodeLabel::PBar => Some(&self.pbar),
            _ => None,
        }
    }

    /// Tallies `(src label, dst label)` pairs.
    pub(crate) fn from_pairs(pairs: impl Iterator<Item = (NodeLabel, NodeLabel)>) -> Self {
        let mut c = [[0u64; 2]; 2];
        for (ls, ld) in pairs {
            if let (Some(i), Some(j)) = (topic_slot(ls), topic_slot(ld)) {
                c[i][j] += 1;
            }
        }
        BlockFractions {
            p: SideFractions::from_counts(c[0][0], c[0][1]),
            pbar: SideFractions::from_counts(c[1][1], c[1][0]),
        }
    }
}

fn topic_slot(l: NodeLabel) -> Option<usize> {
    match l {
        NodeLabel::P => Some(0),
        NodeLabel::PBar => Some(1),
        _ => None,
    }
}

pub fn block_fractions(g: &TopicNetwork) -> BlockFractions {
    BlockFractions::from_pairs(g.edges().map(|e| (g.label(e.src), g.label(e.dst))))
}

pub(crate) fn topic_side(label: NodeLabel) -> Result<NodeLabel> {
    label
        .opposite()
        .ok_or_else(|| Error::InvalidConfig(format!("{label} is not a partition")))
}

fn partition_nodes(g: &TopicNetwork, source: NodeLabel) -> Result<Vec<NodeId>> {
    topic_side(source)?;
    let nodes = g.nodes_in(source);
    if nodes.is_empty() {
        return Err(Error::EmptyPartition(source.to_string()));
    }
    Ok(nodes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AcrossLinks {
    /// Fraction of the partition's pages with at least one across link.
    pub node_fraction: f64,
    /// Mean across links per page that has any; `None` if no page does.
    pub mean_links: Option<f64>,
    pub nodes: usize,
}

pub fn across_link_node_fraction(g: &TopicNetwork, source: NodeLabel) -> Result<AcrossLinks> {
    let other = topic_side(source)?;
    let nodes = partition_nodes(g, source)?;
    let (mut linked, mut links) = (0usize, 0usize);
    for &v in &nodes {
        let k = g.out_neighbors(v).iter().filter(|&&d| g.label(d) == other).count();
        if k > 0 {
            linked += 1;
            links += k;
        }
    }
    Ok(AcrossLinks {
        node_fraction: linked as f64 / nodes.len() as f64,
        mean_links: (linked > 0).then(|| links as f64 / linked as f64),
        nodes: nodes.len(),
    })
}

/// Per page of `source` (in id order), the total transition probability on
/// links into the opposite partition.
pub fn across_weight_distribution(g: &TopicNetwork, m: &TransitionMatrix, source: NodeLabel) -> Result<Vec<f64>> {
    if m.dim() != g.node_count() {
        return Err(Error::Dimension {
            expected: g.node_count(),
            actual: m.dim(),
        });
    }
    let other = topic_side(source)?;
    Ok(partition_nodes(g, source)?
        .into_iter()
        .map(|v| {
            let (cols, vals) = m.row(v.index());
            cols.iter()
                .zip(vals)
                .filter(|(&c, _)| g.label(NodeId::new(c as usize)) == other)
                .map(|(_, &p)| p)
                .fold(0.0, |acc, p| acc + p)
        })
        .collect())
}

/// EI index of `v` over its out-links to non-super pages: external links
/// leave `v`'s partition, internal ones stay. `None` without such links.
pub fn ei_homophily(g: &TopicNetwork, v: NodeId) -> Result<Option<f64>> {
    if !g.contains(v) {
        return Err(Error::UnknownNode(v.to_string()));
    }
    let own = g.label(v);
    if own == NodeLabel::Super {
        return Err(Error::InvalidConfig("homophily is undefined for the super node".into()));
    }
    let (mut ext, mut int) = (0i64, 0i64);
    for &d in g.out_neighbors(v) {
        match g.label(d) {
            NodeLabel::Super => {}
            l if l == own => int += 1,
            _ => ext += 1,
        }
    }
    Ok((ext + int > 0).then(|| (ext - int) as f64 / (ext + int) as f64))
}

/// Per-page link counts compared in the neighbor connectivity tests.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConnectivitySamples {
    /// For every neighbor page, its links into P.
    pub n_to_p: Vec<f64>,
    /// For every neighbor page, its links into P̄.
    pub n_to_pbar: Vec<f64>,
    /// For every page of P, its links into N.
    pub p_to_n: Vec<f64>,
    /// For every page of P̄, its links into N.
    pub pbar_to_n: Vec<f64>,
}

pub fn connectivity_samples(g: &TopicNetwork) -> ConnectivitySamples {
    let count = |v: NodeId, l: NodeLabel| g.out_neighbors(v).iter().filter(|&&d| g.label(d) == l).count() as f64;
    let mut s = ConnectivitySamples::default();
    for v in g.nodes() {
        match g.label(v) {
            NodeLabel::Neighbor => {
                s.n_to_p.push(count(v, NodeLabel::P));
                s.n_to_pbar.push(count(v, NodeLabel::PBar));
            }
            NodeLabel::P => s.p_to_n.push(count(v, NodeLabel::Neighbor)),
            NodeLabel::PBar => s.pbar_to_n.push(count(v, NodeLabel::Neighbor)),
            NodeLabel::Super => {}
        }
    }
    s
}
