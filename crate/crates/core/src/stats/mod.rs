//! Structural statistics, null models and hypothesis tests.

mod hypothesis;
mod rewire;
mod structure;

pub use hypothesis::{
    bootstrap_welch_test, bootstrap_welch_test_at, pearson, welch_t, Direction, TestResult, SIGNIFICANCE_LEVEL,
};
pub use rewire::{
    analytic_random_fractions, default_swaps, degree_preserving_rewire, expected_random_fractions, FractionEstimate,
    RandomFractions, RewiredSample, SideEstimate,
};
pub use structure::{
    across_link_node_fraction, across_weight_distribution, block_fractions, connectivity_samples, ei_homophily,
    AcrossLinks, BlockFractions, ConnectivitySamples, SideFractions,
};

use serde::Serialize;

use crate::cwp::{build_matrix, CwpKind};
use crate::error::{Error, Result};
use crate::exposure::{per_node_exposures, NodeSet};
use crate::graph::{BlockEdgeCounts, NodeId, NodeLabel, TopicNetwork};
use crate::navigation::NavigationConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct StatsOptions {
    /// Rewired samples for the random baseline.
    pub samples: usize,
    /// Swap attempts per sample; ten per link when unset.
    pub swaps: Option<usize>,
    pub seed: u64,
    pub welch_replicates: usize,
    /// Models whose across-partition weights are summarized.
    pub cwps: Vec<CwpKind>,
    /// Correlate per-page homophily with per-page exposure at this click.
    pub homophily: Option<(NavigationConfig, usize)>,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            samples: 30,
            swaps: None,
            seed: 0,
            welch_replicates: 1000,
            cwps: CwpKind::all().to_vec(),
            homophily: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeCounts {
    pub p: usize,
    pub pbar: usize,
    pub neighbor: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SideAcrossLinks {
    pub p: AcrossLinks,
    pub pbar: AcrossLinks,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSummary {
    pub cwp: CwpKind,
    pub source: NodeLabel,
    pub nodes: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

impl WeightSummary {
    fn new(cwp: CwpKind, source: NodeLabel, weights: Vec<f64>) -> Self {
        let mut sorted = weights.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        WeightSummary {
            cwp,
            source,
            nodes: n,
            mean: sorted.iter().sum::<f64>() / n as f64,
            median: crate::exposure::quantile(&sorted, 0.5),
            min: sorted[0],
            max: sorted[n - 1],
            weights,
        }
    }
}

/// A test that may be undefined on the given data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestOutcome {
    #[serde(skip_serializing_if = "Option::is_none", flatten)]
    pub result: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
}

impl TestOutcome {
    fn run(a: &[f64], b: &[f64], replicates: usize, seed: u64) -> Self {
        match bootstrap_welch_test(a, b, replicates, seed) {
            Ok(r) => TestOutcome {
                result: Some(r),
                undefined: None,
            },
            Err(e) => TestOutcome {
                result: None,
                undefined: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectivityTests {
    /// Links from neighbor pages into P (sample a) vs into P̄ (sample b).
    pub neighbor_links: TestOutcome,
    /// Links from P pages into N (sample a) vs from P̄ pages into N (sample b).
    pub partition_links: TestOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomophilyCorrelation {
    pub cwp: CwpKind,
    pub alpha: f64,
    pub l: usize,
    /// Pages with a defined homophily index.
    pub nodes: usize,
    /// Correlation of homophily with across-partition exposure.
    pub r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub topic: String,
    pub nodes: NodeCounts,
    pub edges: usize,
    pub block_edge_counts: BlockEdgeCounts,
    pub block_fractions: BlockFractions,
    pub expected_random: RandomFractions,
    pub analytic_random: BlockFractions,
    pub across_links: SideAcrossLinks,
    pub across_weights: Vec<WeightSummary>,
    pub connectivity: ConnectivityTests,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homophily: Option<HomophilyCorrelation>,
}

pub fn stats_report(g: &TopicNetwork, opts: &StatsOptions) -> Result<StatsReport> {
    let swaps = opts.swaps.unwrap_or_else(|| default_swaps(g));
    let mut across_weights = Vec::new();
    for &kind in &opts.cwps {
        let m = build_matrix(g, kind)?;
        for source in [NodeLabel::P, NodeLabel::PBar] {
            across_weights.push(WeightSummary::new(kind, source, across_weight_distribution(g, &m, source)?));
        }
    }
    let conn = connectivity_samples(g);
    let homophily = opts
        .homophily
        .as_ref()
        .map(|(cfg, l)| homophily_correlation(g, cfg, *l))
        .transpose()?;
    Ok(StatsReport {
        topic: g.topic().name.clone(),
        nodes: NodeCounts {
            p: g.count_label(NodeLabel::P),
            pbar: g.count_label(NodeLabel::PBar),
            neighbor: g.count_label(NodeLabel::Neighbor),
        },
        edges: g.edge_count(),
        block_edge_counts: g.block_edge_counts(),
        block_fractions: block_fractions(g),
        expected_random: expected_random_fractions(g, opts.samples, swaps, opts.seed)?,
        analytic_random: analytic_random_fractions(g),
        across_links: SideAcrossLinks {
            p: across_link_node_fraction(g, NodeLabel::P)?,
            pbar: across_link_node_fraction(g, NodeLabel::PBar)?,
        },
        across_weights,
        connectivity: ConnectivityTests {
            neighbor_links: TestOutcome::run(&conn.n_to_p, &conn.n_to_pbar, opts.welch_replicates, opts.seed),
            partition_links: TestOutcome::run(&conn.p_to_n, &conn.pbar_to_n, opts.welch_replicates, opts.seed),
        },
        homophily,
    })
}

/// Pearson correlation, over the pages of both partitions, between each
/// page's homophily and the probability that a session started there is in
/// the opposite partition at click `l`.
pub fn homophily_correlation(g: &TopicNetwork, cfg: &NavigationConfig, l: usize) -> Result<HomophilyCorrelation> {
    if l == 0 || l > cfg.max_clicks {
        return Err(Error::StepOutOfRange {
            step: l,
            max: cfg.max_clicks,
        });
    }
    let m0 = build_matrix(g, cfg.cwp)?;
    let (mut ei, mut exposure) = (Vec::new(), Vec::new());
    for source in [NodeLabel::P, NodeLabel::PBar] {
        let other = NodeSet::of_label(g, source.opposite().expect("partition"));
        let mut starts: Vec<NodeId> = Vec::new();
        for v in g.nodes_in(source) {
            if let Some(h) = ei_homophily(g, v)? {
                starts.push(v);
                ei.push(h);
            }
        }
        exposure.extend(per_node_exposures(&m0, cfg, &starts, &other)?.into_iter().map(|s| s[l - 1]));
    }
    let r = if ei.len() >= 2 { pearson(&ei, &exposure)? } else { None };
    Ok(HomophilyCorrelation {
        cwp: cfg.cwp,
        alpha: cfg.alpha,
        l,
        nodes: ei.len(),
        r,
    })
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Observed vs random block fractions.
    pub fn fractions_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let mut out = String::from("source,kind,observed,random_mean,random_sd,analytic\n");
        for (name, obs, rnd, ana) in [
            ("P", self.block_fractions.p, self.expected_random.p, self.analytic_random.p),
            ("PBAR", self.block_fractions.pbar, self.expected_random.pbar, self.analytic_random.pbar),
        ] {
            for (kind, o, r, a) in [
                ("within", obs.within, rnd.within, ana.within),
                ("across", obs.across, rnd.across, ana.across),
            ] {
                out.push_str(&format!(
                    "{name},{kind},{},{},{},{}\n",
                    opt(o),
                    opt(r.mean),
                    opt(r.sd),
                    opt(a)
                ));
            }
        }
        out
    }

    pub fn across_links_csv(&self) -> String {
        let mut out = String::from("source,nodes,node_fraction,mean_links\n");
        for (name, a) in [("P", self.across_links.p), ("PBAR", self.across_links.pbar)] {
            out.push_str(&format!(
                "{name},{},{},{}\n",
                a.nodes,
                a.node_fraction,
                a.mean_links.map_or_else(String::new, |x| x.to_string())
            ));
        }
        out
    }

    /// One row per page and model.
    pub fn across_weights_csv(&self) -> String {
        let mut out = String::from("cwp,source,index,weight\n");
        for w in &self.across_weights {
            for (i, v) in w.weights.iter().enumerate() {
                out.push_str(&format!("{},{},{i},{v}\n", w.cwp, w.source));
            }
        }
        out
    }
}
