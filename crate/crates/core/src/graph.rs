//! Topic-induced network: a labeled directed graph over the two partitions,
//! their one-hop neighborhood and a single super node standing for the rest
//! of the hyperlink graph.
//!
//! Adjacency is stored in CSR form in both directions. Out-rows are sorted by
//! destination id so that every derived matrix has a deterministic layout.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense node identifier, valid for one network instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("node index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    P,
    PBar,
    Neighbor,
    Super,
}

impl NodeLabel {
    pub const ALL: [NodeLabel; 4] = [
        NodeLabel::P,
        NodeLabel::PBar,
        NodeLabel::Neighbor,
        NodeLabel::Super,
    ];

    #[inline]
    pub fn slot(self) -> usize {
        self as usize
    }

    /// True for the two topic partitions.
    pub fn is_topic(self) -> bool {
        matches!(self, NodeLabel::P | NodeLabel::PBar)
    }

    /// The opposing partition, if this is a topic label.
    pub fn opposite(self) -> Option<NodeLabel> {
        match self {
            NodeLabel::P => Some(NodeLabel::PBar),
            NodeLabel::PBar => Some(NodeLabel::P),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::P => "P",
            NodeLabel::PBar => "PBAR",
            NodeLabel::Neighbor => "NEIGHBOR",
            NodeLabel::Super => "SUPER",
        }
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "P" => Ok(NodeLabel::P),
            "PBAR" => Ok(NodeLabel::PBar),
            "NEIGHBOR" | "N" => Ok(NodeLabel::Neighbor),
            "SUPER" | "S" => Ok(NodeLabel::Super),
            other => Err(format!("unknown node label {other:?}")),
        }
    }
}

/// A directed link with its optional page attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    /// Rank of the link within the source page, 0 = topmost.
    pub position_rank: Option<u32>,
    /// Average observed clicks on this link.
    pub click_count: Option<f64>,
    /// Added during construction to route mass out of a dangling node.
    pub synthetic: bool,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId) -> Self {
        Edge {
            src,
            dst,
            position_rank: None,
            click_count: None,
            synthetic: false,
        }
    }

    pub fn with_position(mut self, rank: u32) -> Self {
        self.position_rank = Some(rank);
        self
    }

    pub fn with_clicks(mut self, clicks: f64) -> Self {
        self.click_count = Some(clicks);
        self
    }
}

/// Borrowed view of one out-edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutEdge {
    pub dst: NodeId,
    pub position_rank: Option<u32>,
    pub click_count: Option<f64>,
    pub synthetic: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicInfo {
    pub name: String,
    pub label_p: String,
    pub label_pbar: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopicNetwork {
    topic: TopicInfo,
    names: Vec<String>,
    labels: Vec<NodeLabel>,
    super_node: NodeId,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    positions: Vec<Option<u32>>,
    clicks: Vec<Option<f64>>,
    synthetic: Vec<bool>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    name_index: HashMap<String, NodeId>,
}

impl TopicNetwork {
    pub fn topic(&self) -> &TopicInfo {
        &self.topic
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn super_node(&self) -> NodeId {
        self.super_node
    }

    pub fn label(&self, v: NodeId) -> NodeLabel {
        self.labels[v.index()]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v.index()]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.name_index.get(name).copied()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.index() < self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId::new)
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownNode(v.to_string()))
        }
    }

    pub fn out_degree(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.out_offsets[v.index() + 1] - self.out_offsets[v.index()])
    }

    pub fn in_degree(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.in_offsets[v.index() + 1] - self.in_offsets[v.index()])
    }

    /// Out-neighbors of `v`, sorted by id.
    pub fn out_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.out_targets[self.out_offsets[v.index()]..self.out_offsets[v.index() + 1]]
    }

    /// In-neighbors of `v`, sorted by id.
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.in_sources[self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]]
    }

    pub fn out_edges(&self, v: NodeId) -> impl ExactSizeIterator<Item = OutEdge> + '_ {
        let range = self.out_offsets[v.index()]..self.out_offsets[v.index() + 1];
        range.map(move |k| OutEdge {
            dst: self.out_targets[k],
            position_rank: self.positions[k],
            click_count: self.clicks[k],
            synthetic: self.synthetic[k],
        })
    }

    /// All edges in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.nodes().flat_map(move |src| {
            self.out_edges(src).map(move |e| Edge {
                src,
                dst: e.dst,
                position_rank: e.position_rank,
                click_count: e.click_count,
                synthetic: e.synthetic,
            })
        })
    }

    /// CSR row offsets; row `i` spans `offsets[i]..offsets[i + 1]`.
    pub(crate) fn out_offsets(&self) -> &[usize] {
        &self.out_offsets
    }

    pub(crate) fn out_targets(&self) -> &[NodeId] {
        &self.out_targets
    }

    pub fn nodes_in(&self, label: NodeLabel) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.label(v) == label).collect()
    }

    pub fn count_label(&self, label: NodeLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn block_edge_counts(&self) -> BlockEdgeCounts {
        let mut counts = BlockEdgeCounts::default();
        for src in self.nodes() {
            let ls = self.label(src);
            for &dst in self.out_neighbors(src) {
                counts.counts[ls.slot()][self.label(dst).slot()] += 1;
            }
        }
        counts
    }

    /// Returns a copy with the edge set replaced, keeping labels and names.
    pub(crate) fn with_edges(&self, edges: Vec<Edge>) -> Result<TopicNetwork> {
        let mut b = NetworkBuilder::new(self.topic.clone());
        for v in self.nodes() {
            b.add_node(self.name(v), self.label(v))?;
        }
        for e in edges {
            b.add_edge(e)?;
        }
        b.build()
    }

    /// Writes the network in the line-oriented artifact format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#linkbias-network\t1")?;
        writeln!(
            w,
            "topic\t{}\t{}\t{}",
            self.topic.name, self.topic.label_p, self.topic.label_pbar
        )?;
        writeln!(w, "nodes\t{}", self.node_count())?;
        for v in self.nodes() {
            writeln!(w, "{}\t{}\t{}", v, self.label(v), self.name(v))?;
        }
        writeln!(w, "edges\t{}", self.edge_count())?;
        for e in self.edges() {
            let pos = e.position_rank.map_or_else(|| "-".to_string(), |p| p.to_string());
            let clicks = e.click_count.map_or_else(|| "-".to_string(), |c| c.to_string());
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                e.src,
                e.dst,
                pos,
                clicks,
                u8::from(e.synthetic)
            )?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Hex SHA-256 of the serialized form.
    pub fn digest(&self) -> String {
        hex_digest(&self.to_bytes())
    }

    pub fn read_from<R: BufRead>(reader: R, source_name: &str) -> Result<TopicNetwork> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::parse(source_name, 0, format!("unexpected end of file, expected {what}"))),
            }
        };
        let (ln, header) = next("header")?;
        if header != "#linkbias-network\t1" {
            return Err(Error::parse(source_name, ln, "not a linkbias network file"));
        }
        let (ln, topic_line) = next("topic line")?;
        let f: Vec<&str> = topic_line.split('\t').collect();
        if f.len() != 4 || f[0] != "topic" {
            return Err(Error::parse(source_name, ln, "malformed topic line"));
        }
        let topic = TopicInfo {
            name: f[1].to_string(),
            label_p: f[2].to_string(),
            label_pbar: f[3].to_string(),
        };
        let count = |line: &str, key: &str, ln: usize| -> Result<usize> {
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix('\t'))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| Error::parse(source_name, ln, format!("expected `{key}\\t<count>`")))
        };
        let (ln, l) = next("node count")?;
        let n = count(&l, "nodes", ln)?;
        let mut b = NetworkBuilder::new(topic);
        for _ in 0..n {
            let (ln, l) = next("node line")?;
            let f: Vec<&str> = l.splitn(3, '\t').collect();
            if f.len() != 3 {
                return Err(Error::parse(source_name, ln, "malformed node line"));
            }
            let label: NodeLabel = f[1].parse().map_err(|e: String| Error::parse(source_name, ln, e))?;
            let id = b.add_node(f[2], label).map_err(|e| Error::parse(source_name, ln, e.to_string()))?;
            if f[0] != id.to_string() {
                return Err(Error::parse(source_name, ln, "node ids must be dense and in order"));
            }
        }
        let (ln, l) = next("edge count")?;
        let m = count(&l, "edges", ln)?;
        for _ in 0..m {
            let (ln, l) = next("edge line")?;
            let f: Vec<&str> = l.split('\t').collect();
            let bad = || Error::parse(source_name, ln, "malformed edge line");
            if f.len() != 5 {
                return Err(bad());
            }
            let src: usize = f[0].parse().map_err(|_| bad())?;
            let dst: usize = f[1].parse().map_err(|_| bad())?;
            let position_rank = match f[2] {
                "-" => None,
                s => Some(s.parse().map_err(|_| bad())?),
            };
            let click_count = match f[3] {
                "-" => None,
                s => Some(s.parse().map_err(|_| bad())?),
            };
            let synthetic = match f[4] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            if src >= n || dst >= n {
                return Err(bad());
            }
            b.add_edge(Edge {
                src: NodeId::new(src),
                dst: NodeId::new(dst),
                position_rank,
                click_count,
                synthetic,
            })
            .map_err(|e| Error::parse(source_name, ln, e.to_string()))?;
        }
        b.build()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Edge counts for every ordered pair of node labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockEdgeCounts {
    counts: [[u64; 4]; 4],
}

impl BlockEdgeCounts {
    pub fn get(&self, src: NodeLabel, dst: NodeLabel) -> u64 {
        self.counts[src.slot()][dst.slot()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeLabel, NodeLabel, u64)> + '_ {
        NodeLabel::ALL.into_iter().flat_map(move |s| {
            NodeLabel::ALL
                .into_iter()
                .map(move |d| (s, d, self.get(s, d)))
        })
    }
}

impl Serialize for BlockEdgeCounts {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, u64> = self
            .pairs()
            .map(|(s, d, c)| (format!("{s}->{d}"), c))
            .collect();
        map.serialize(serializer)
    }
}

/// Incremental constructor; `build` validates every structural invariant.
#[derive(Debug)]
pub struct NetworkBuilder {
    topic: TopicInfo,
    names: Vec<String>,
    labels: Vec<NodeLabel>,
    name_index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
}

impl NetworkBuilder {
    pub fn new(topic: TopicInfo) -> Self {
        NetworkBuilder {
            topic,
            names: Vec::new(),
            labels: Vec::new(),
            name_index: HashMap::new(),
            edges: Vec::new(),
        }
    }

    pub fn add_node(&mut self, name: &str, label: NodeLabel) -> Result<NodeId> {
        if name.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidNetwork(format!("node name {name:?} contains a control separator")));
        }
        if self.name_index.contains_key(name) {
            return Err(Error::InvalidNetwork(format!("duplicate node name {name:?}")));
        }
        let id = NodeId::new(self.labels.len());
        self.names.push(name.to_string());
        self.labels.push(label);
        self.name_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn label_of(&self, v: NodeId) -> Option<NodeLabel> {
        self.labels.get(v.index()).copied()
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<()> {
        let n = self.labels.len();
        if edge.src.index() >= n || edge.dst.index() >= n {
            return Err(Error::UnknownNode(format!("{} -> {}", edge.src, edge.dst)));
        }
        if edge.src == edge.dst {
            return Err(Error::InvalidNetwork(format!("self-loop on node {}", edge.src)));
        }
        if let Some(c) = edge.click_count {
            if c.is_nan() || c < 0.0 {
                return Err(Error::NegativeClicks {
                    src: self.names[edge.src.index()].clone(),
                    dst: self.names[edge.dst.index()].clone(),
                    count: c,
                });
            }
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn build(mut self) -> Result<TopicNetwork> {
        let n = self.labels.len();
        let supers: Vec<usize> = (0..n)
            .filter(|&i| self.labels[i] == NodeLabel::Super)
            .collect();
        if supers.len() != 1 {
            return Err(Error::InvalidNetwork(format!(
                "expected exactly one SUPER node, found {}",
                supers.len()
            )));
        }
        let super_node = NodeId::new(supers[0]);

        self.edges.sort_by_key(|e| (e.src, e.dst));
        for w in self.edges.windows(2) {
            if w[0].src == w[1].src && w[0].dst == w[1].dst {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate edge {} -> {}",
                    w[0].src, w[0].dst
                )));
            }
        }
        for e in &self.edges {
            let (ls, ld) = (self.labels[e.src.index()], self.labels[e.dst.index()]);
            // Synthetic exits may connect any node with the super node.
            let ok = match (ls, ld) {
                (NodeLabel::Super, l) => l == NodeLabel::Neighbor || e.synthetic,
                (_, NodeLabel::Super) => ls == NodeLabel::Neighbor || e.synthetic,
                _ => true,
            };
            if !ok {
                return Err(Error::InvalidNetwork(format!(
                    "super node may only connect to NEIGHBOR nodes, found {} ({ls}) -> {} ({ld})",
                    e.src, e.dst
                )));
            }
        }

        let m = self.edges.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_counts = vec![0usize; n + 1];
        for e in &self.edges {
            out_offsets[e.src.index() + 1] += 1;
            in_counts[e.dst.index() + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_counts[i + 1] += in_counts[i];
        }
        let in_offsets = in_counts.clone();
        let mut cursor = in_counts;
        let mut in_sources = vec![NodeId(0); m];
        // Edges are sorted by source, so each in-row comes out sorted too.
        for e in &self.edges {
            let slot = &mut cursor[e.dst.index()];
            in_sources[*slot] = e.src;
            *slot += 1;
        }

        let mut out_targets = Vec::with_capacity(m);
        let mut positions = Vec::with_capacity(m);
        let mut clicks = Vec::with_capacity(m);
        let mut synthetic = Vec::with_capacity(m);
        for e in self.edges {
            out_targets.push(e.dst);
            positions.push(e.position_rank);
            clicks.push(e.click_count);
            synthetic.push(e.synthetic);
        }

        Ok(TopicNetwork {
            topic: self.topic,
            names: self.names,
            labels: self.labels,
            super_node,
            out_offsets,
            out_targets,
            positions,
            clicks,
            synthetic,
            in_offsets,
            in_sources,
            name_index: self.name_index,
        })
    }
}
