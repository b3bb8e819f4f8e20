//! Planted two-block synthetic datasets in the ingestion formats.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::TopicInfo;
use crate::ingest::{build_topic_network, BuildReport, ClickCounts, PartitionSpec, RawGraph, Side};
use crate::TopicNetwork;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureConfig {
    pub topic: String,
    pub p_nodes: usize,
    pub pbar_nodes: usize,
    pub neighbor_nodes: usize,
    /// Pages two hops from the topic; they end up in the super node.
    pub rest_nodes: usize,
    /// Mean out-degree; each page draws uniformly from `[d/2, 3d/2]`.
    pub out_degree: usize,
    /// Share of a topic page's topic-directed links that cross partitions.
    pub across_fraction: f64,
    /// Share of a topic page's links that go to neighbor pages.
    pub neighbor_fraction: f64,
    /// Share of links that appear in the clickstream.
    pub click_coverage: f64,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            topic: "synthetic".into(),
            p_nodes: 60,
            pbar_nodes: 40,
            neighbor_nodes: 120,
            rest_nodes: 200,
            out_degree: 12,
            across_fraction: 0.15,
            neighbor_fraction: 0.3,
            click_coverage: 0.6,
            seed: 0,
        }
    }
}

impl FixtureConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("across fraction", self.across_fraction)?;
        unit("neighbor fraction", self.neighbor_fraction)?;
        unit("click coverage", self.click_coverage)?;
        if self.p_nodes < 2 || self.pbar_nodes < 2 {
            return Err(Error::InvalidConfig("each partition needs at least two pages".into()));
        }
        if self.out_degree == 0 {
            return Err(Error::InvalidConfig("out-degree must be positive".into()));
        }
        if self.topic.is_empty() || self.topic.contains(['\t', '\n']) {
            return Err(Error::InvalidConfig("topic name must be non-empty without tabs or newlines".into()));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.p_nodes + self.pbar_nodes + self.neighbor_nodes + self.rest_nodes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    P,
    PBar,
    Neighbor,
    Rest,
}

pub const P_KEYWORD: &str = "support";
pub const PBAR_KEYWORD: &str = "opposition";

/// A generated dataset. Links are `(src, dst, rank)` over node indices laid
/// out as P, P̄, neighbors, rest.
#[derive(Clone, Debug)]
pub struct Fixture {
    config: FixtureConfig,
    links: Vec<(u32, u32, u32)>,
    clicks: Vec<(u32, u32, u64)>,
}

impl Fixture {
    pub fn generate(config: &FixtureConfig) -> Result<Fixture> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let c = config;
        let ranges = [
            (Kind::P, 0, c.p_nodes),
            (Kind::PBar, c.p_nodes, c.p_nodes + c.pbar_nodes),
            (Kind::Neighbor, c.p_nodes + c.pbar_nodes, c.p_nodes + c.pbar_nodes + c.neighbor_nodes),
            (Kind::Rest, c.p_nodes + c.pbar_nodes + c.neighbor_nodes, c.node_count()),
        ];
        let span = |k: Kind| {
            let (_, a, b) = ranges[k as usize];
            (a, b)
        };
        let pick = |rng: &mut ChaCha8Rng, k: Kind| {
            let (a, b) = span(k);
            (b > a).then(|| rng.random_range(a..b) as u32)
        };

        let mut links = Vec::new();
        let mut clicks = Vec::new();
        let mut seen: HashSet<u32> = HashSet::new();
        let d = c.out_degree;
        for &(kind, a, b) in &ranges {
            for src in a..b {
                let src = src as u32;
                let k = rng.random_range((d / 2).max(1)..=d + d / 2);
                seen.clear();
                let mut targets = Vec::with_capacity(k);
                for attempt in 0..4 * k {
                    if targets.len() == k {
                        break;
                    }
                    let dst = match kind {
                        Kind::P | Kind::PBar => {
                            if rng.random_bool(c.neighbor_fraction) && c.neighbor_nodes > 0 {
                                pick(&mut rng, Kind::Neighbor)
                            } else {
                                let other = if kind == Kind::P { Kind::PBar } else { Kind::P };
                                let side = if rng.random_bool(c.across_fraction) { other } else { kind };
                                pick(&mut rng, side)
                            }
                        }
                        Kind::Neighbor => {
                            // The first link always touches the topic so
                            // every neighbor stays one hop away.
                            if attempt == 0 || c.rest_nodes == 0 || rng.random_bool(0.5) {
                                let n_topic = c.p_nodes + c.pbar_nodes;
                                Some(rng.random_range(0..n_topic) as u32)
                            } else {
                                pick(&mut rng, Kind::Rest)
                            }
                        }
                        Kind::Rest => {
                            if c.neighbor_nodes > 0 && rng.random_bool(0.2) {
                                pick(&mut rng, Kind::Neighbor)
                            } else {
                                pick(&mut rng, Kind::Rest)
                            }
                        }
                    };
                    if let Some(dst) = dst {
                        if dst != src && seen.insert(dst) {
                            targets.push(dst);
                        }
                    }
                }
                let mut ranks: Vec<u32> = (0..targets.len() as u32).collect();
                ranks.shuffle(&mut rng);
                let deg = targets.len() as f64;
                for (dst, rank) in targets.into_iter().zip(ranks) {
                    links.push((src, dst, rank));
                    if rng.random_bool(c.click_coverage) {
                        // Readers favor links near the top of the page.
                        let top = (deg - f64::from(rank)) / deg;
                        let n = 10 + (top * rng.random_range(0.0..200.0)).round() as u64;
                        clicks.push((src, dst, n));
                    }
                }
            }
        }
        Ok(Fixture {
            config: config.clone(),
            links,
            clicks,
        })
    }

    pub fn config(&self) -> &FixtureConfig {
        &self.config
    }

    fn kind(&self, v: u32) -> Kind {
        let c = &self.config;
        let v = v as usize;
        if v < c.p_nodes {
            Kind::P
        } else if v < c.p_nodes + c.pbar_nodes {
            Kind::PBar
        } else if v < c.p_nodes + c.pbar_nodes + c.neighbor_nodes {
            Kind::Neighbor
        } else {
            Kind::Rest
        }
    }

    pub fn name(&self, v: u32) -> String {
        match self.kind(v) {
            Kind::P => format!("pro_{v}"),
            Kind::PBar => format!("con_{v}"),
            Kind::Neighbor => format!("nbr_{v}"),
            Kind::Rest => format!("page_{v}"),
        }
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn topic_info(&self) -> TopicInfo {
        TopicInfo {
            name: self.config.topic.clone(),
            label_p: P_KEYWORD.into(),
            label_pbar: PBAR_KEYWORD.into(),
        }
    }

    /// `src \t dst \t rank` lines.
    pub fn edge_list_tsv(&self) -> String {
        let mut out = String::from("# synthetic planted two-block link graph\n");
        for &(s, d, r) in &self.links {
            let _ = writeln!(out, "{}\t{}\t{r}", self.name(s), self.name(d));
        }
        out
    }

    /// One clickstream period, including a few non-link rows that the
    /// parser must skip.
    pub fn clickstream_tsv(&self) -> String {
        let mut out = String::new();
        for (k, &(s, d, n)) in self.clicks.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\tlink\t{n}", self.name(s), self.name(d));
            if k % 7 == 0 {
                let _ = writeln!(out, "other-search\t{}\texternal\t{}", self.name(d), n * 3);
            }
        }
        out
    }

    pub fn partition_tsv(&self) -> String {
        let mut out = String::new();
        for v in 0..(self.config.p_nodes + self.config.pbar_nodes) as u32 {
            let side = if self.kind(v) == Kind::P { "P" } else { "PBAR" };
            let _ = writeln!(out, "{}\t{side}", self.name(v));
        }
        out
    }

    /// Category tree whose keyword-filtered closures equal the partitions:
    /// each seed has two keyword subcategories holding its pages and one
    /// off-topic subcategory holding rest pages.
    pub fn category_tsv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let sides = [
            (P_KEYWORD, 0, c.p_nodes),
            (PBAR_KEYWORD, c.p_nodes, c.p_nodes + c.pbar_nodes),
        ];
        for (kw, a, b) in sides {
            let seed = Self::seed_category(kw);
            let groups = [format!("{kw} groups"), format!("People in {kw}")];
            let misc = format!("Miscellaneous {}", if kw == P_KEYWORD { "A" } else { "B" });
            for g in groups.iter().chain([&misc]) {
                let _ = writeln!(out, "{seed}\tsubcat\t{g}");
            }
            // A cycle back to the seed.
            let _ = writeln!(out, "{}\tsubcat\t{seed}", groups[1]);
            for v in a..b {
                let _ = writeln!(out, "{}\tmember\t{}", groups[v % 2], self.name(v as u32));
            }
            let rest0 = c.p_nodes + c.pbar_nodes + c.neighbor_nodes;
            for v in rest0..(rest0 + 3).min(c.node_count()) {
                let _ = writeln!(out, "{misc}\tmember\t{}", self.name(v as u32));
            }
        }
        out
    }

    pub fn seed_category(keyword: &str) -> String {
        let mut s = keyword.to_string();
        s[..1].make_ascii_uppercase();
        format!("{s} movement")
    }

    pub fn raw_graph(&self) -> RawGraph {
        let mut g = RawGraph::new();
        for v in 0..self.config.node_count() as u32 {
            g.intern(&self.name(v));
        }
        for &(s, d, r) in &self.links {
            g.add_edge(&self.name(s), &self.name(d), Some(r));
        }
        g
    }

    pub fn partition_spec(&self) -> PartitionSpec {
        let mut spec = PartitionSpec::new(self.topic_info());
        for v in 0..(self.config.p_nodes + self.config.pbar_nodes) as u32 {
            let side = if self.kind(v) == Kind::P { Side::P } else { Side::PBar };
            spec.assign(&self.name(v), side);
        }
        spec
    }

    pub fn click_counts(&self) -> ClickCounts {
        let mut cc = ClickCounts::new();
        for &(s, d, n) in &self.clicks {
            cc.insert(&self.name(s), &self.name(d), n as f64).expect("counts are non-negative");
        }
        cc
    }

    /// Topic network of the fixture, with clicks attached.
    pub fn network(&self) -> Result<(TopicNetwork, BuildReport)> {
        build_topic_network(&self.raw_graph(), &self.partition_spec(), Some(&self.click_counts()))
    }
}
