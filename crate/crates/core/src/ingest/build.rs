//! Topic-induced network construction with super-node contraction.

use std::collections::BTreeMap;

use log::warn;

use super::parse::{ClickCounts, PartitionSpec, RawGraph, Side};
use crate::error::{Error, Result};
use crate::graph::{Edge, NetworkBuilder, NodeId, NodeLabel, TopicNetwork};

pub const SUPER_NODE_NAME: &str = "*rest*";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildReport {
    /// Partition names absent from the edge list.
    pub missing: Vec<String>,
    /// Names assigned to both sides, relabeled as neighbors.
    pub overlap: Vec<String>,
    /// Raw pages folded into the super node.
    pub contracted: usize,
    /// Nodes that received a synthetic exit edge.
    pub dangling_fixed: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Topic(NodeLabel),
    Neighbor,
    Rest,
}

/// Effective position of every raw edge: explicit ranks are kept and links
/// without one are placed after the last ranked link of the page, in file
/// order.
fn effective_positions(raw: &RawGraph) -> Vec<u32> {
    let mut next_free: Vec<u32> = vec![0; raw.node_count()];
    for e in raw.edges() {
        if let Some(p) = e.position {
            let slot = &mut next_free[e.src as usize];
            *slot = (*slot).max(p.saturating_add(1));
        }
    }
    raw.edges()
        .iter()
        .map(|e| match e.position {
            Some(p) => p,
            None => {
                let slot = &mut next_free[e.src as usize];
                let p = *slot;
                *slot += 1;
                p
            }
        })
        .collect()
}

/// Builds the network for one topic. Neighbors are the in- and out-neighbors
/// of the topic pages; every other page is contracted into one super node and
/// parallel links to or from it are merged (clicks summed, minimum rank).
pub fn build_topic_network(
    raw: &RawGraph,
    spec: &PartitionSpec,
    clicks: Option<&ClickCounts>,
) -> Result<(TopicNetwork, BuildReport)> {
    let mut report = BuildReport::default();
    let mut role = vec![Role::Rest; raw.node_count()];

    for (name, side) in spec.assignments() {
        match raw.id(name) {
            Some(id) => {
                role[id as usize] = Role::Topic(match side {
                    Side::P => NodeLabel::P,
                    Side::PBar => NodeLabel::PBar,
                })
            }
            None => report.missing.push(name.to_string()),
        }
    }
    for name in spec.overlap() {
        match raw.id(name) {
            Some(id) => {
                role[id as usize] = Role::Neighbor;
                report.overlap.push(name.clone());
            }
            None => report.missing.push(name.clone()),
        }
    }
    if !report.missing.is_empty() {
        warn!(
            "{} partition page(s) absent from the edge list, skipped (first: {})",
            report.missing.len(),
            report.missing[0]
        );
    }
    for (label, side_name) in [(NodeLabel::P, "P"), (NodeLabel::PBar, "PBAR")] {
        if !role.contains(&Role::Topic(label)) {
            return Err(Error::EmptyPartition(side_name.to_string()));
        }
    }

    for e in raw.edges() {
        let (s, d) = (e.src as usize, e.dst as usize);
        match (role[s], role[d]) {
            (Role::Topic(_), Role::Rest) => role[d] = Role::Neighbor,
            (Role::Rest, Role::Topic(_)) => role[s] = Role::Neighbor,
            _ => {}
        }
    }

    let mut b = NetworkBuilder::new(spec.topic.clone());
    let mut id_of: Vec<Option<NodeId>> = vec![None; raw.node_count()];
    for (raw_id, r) in role.iter().enumerate() {
        let label = match *r {
            Role::Topic(l) => l,
            Role::Neighbor => NodeLabel::Neighbor,
            Role::Rest => {
                report.contracted += 1;
                continue;
            }
        };
        id_of[raw_id] = Some(b.add_node(raw.name(raw_id as u32), label)?);
    }
    let mut super_name = SUPER_NODE_NAME.to_string();
    while raw.id(&super_name).is_some() {
        super_name.push('*');
    }
    let super_node = b.add_node(&super_name, NodeLabel::Super)?;

    let positions = effective_positions(raw);
    // Merged edges keyed by (src, dst) in node-id order for determinism.
    let mut merged: BTreeMap<(NodeId, NodeId), (u32, Option<f64>)> = BTreeMap::new();
    for (e, &pos) in raw.edges().iter().zip(&positions) {
        let s = id_of[e.src as usize].unwrap_or(super_node);
        let d = id_of[e.dst as usize].unwrap_or(super_node);
        if s == d {
            continue;
        }
        let c = clicks.and_then(|c| c.get(raw.name(e.src), raw.name(e.dst)));
        merged
            .entry((s, d))
            .and_modify(|(p, acc)| {
                *p = (*p).min(pos);
                if let Some(c) = c {
                    *acc = Some(acc.unwrap_or(0.0) + c);
                }
            })
            .or_insert((pos, c));
    }

    let node_count = super_node.index() + 1;
    let mut out_deg = vec![0usize; node_count];
    for &(s, _) in merged.keys() {
        out_deg[s.index()] += 1;
    }
    let mut into_super: Vec<NodeId> = Vec::new();
    for ((s, d), (pos, c)) in merged {
        if d == super_node {
            into_super.push(s);
        }
        b.add_edge(Edge {
            src: s,
            dst: d,
            position_rank: Some(pos),
            click_count: c,
            synthetic: false,
        })?;
    }
    for (v, &d) in out_deg.iter().enumerate().take(super_node.index()) {
        if d == 0 {
            let v = NodeId::new(v);
            into_super.push(v);
            report.dangling_fixed += 1;
            b.add_edge(Edge {
                src: v,
                dst: super_node,
                position_rank: Some(0),
                click_count: None,
                synthetic: true,
            })?;
        }
    }
    // A super node that is entered but never left sends its mass back to the
    // neighbors that point into it, or failing that to every neighbor, or to
    // every page when there are no neighbors at all.
    if out_deg[super_node.index()] == 0 && !into_super.is_empty() {
        let mut back: Vec<NodeId> = into_super;
        back.retain(|&v| is_neighbor(&b, v));
        if back.is_empty() {
            back = (0..super_node.index()).map(NodeId::new).filter(|&v| is_neighbor(&b, v)).collect();
        }
        if back.is_empty() {
            back = (0..super_node.index()).map(NodeId::new).collect();
        }
        back.sort_unstable();
        back.dedup();
        report.dangling_fixed += 1;
        for (rank, v) in back.into_iter().enumerate() {
            b.add_edge(Edge {
                src: super_node,
                dst: v,
                position_rank: Some(rank as u32),
                click_count: None,
                synthetic: true,
            })?;
        }
    }
    let g = b.build()?;
    Ok((g, report))
}

fn is_neighbor(b: &NetworkBuilder, v: NodeId) -> bool {
    b.label_of(v) == Some(NodeLabel::Neighbor)
}
