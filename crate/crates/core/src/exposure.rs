//! Exposure to diverse information (ExDIN): the probability mass a reader
//! starting in one node set places on another set after `ℓ` clicks, plus the
//! mutual and size-adjusted variants built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cwp::CwpKind;
use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeLabel, TopicNetwork};
use crate::matrix::TransitionMatrix;
use crate::navigation::{
    evolve, evolve_to_convergence, ConvergenceStatus, NavigationConfig, StartDistribution, Trajectory,
};

/// A set of nodes, kept sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeSet(Vec<NodeId>);

impl NodeSet {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        let mut v: Vec<NodeId> = nodes.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        NodeSet(v)
    }

    pub fn of_label(g: &TopicNetwork, label: NodeLabel) -> Self {
        NodeSet(g.nodes_in(label))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }
}

/// Total probability of `set` under `pi`.
pub fn mass_on(pi: &[f64], set: &NodeSet) -> f64 {
    set.iter().map(|v| pi[v.index()]).fold(0.0, |acc, p| acc + p)
}

fn step_of(traj: &Trajectory, step: usize) -> Result<&[f64]> {
    if step == 0 || step > traj.clicks() {
        return Err(Error::StepOutOfRange {
            step,
            max: traj.clicks(),
        });
    }
    Ok(traj.step(step).expect("checked range"))
}

/// Probability that the reader sits in `target` at click `step` (1-based).
pub fn exdin(traj: &Trajectory, target: &NodeSet, step: usize) -> Result<f64> {
    Ok(mass_on(step_of(traj, step)?, target))
}

/// Per-set exposure for pairwise disjoint target sets.
pub fn exdin_multiset(traj: &Trajectory, targets: &[NodeSet], step: usize) -> Result<Vec<f64>> {
    let pi = step_of(traj, step)?;
    let mut owner = vec![false; pi.len()];
    for set in targets {
        for v in set.iter() {
            if std::mem::replace(&mut owner[v.index()], true) {
                return Err(Error::OverlappingTargets(v));
            }
        }
    }
    Ok(targets.iter().map(|t| mass_on(pi, t)).collect())
}

/// `min / max` of the two directed exposures; zero if either one is zero.
pub fn mutual_exposure(e_pq: f64, e_qp: f64) -> f64 {
    if e_pq <= 0.0 || e_qp <= 0.0 {
        return 0.0;
    }
    e_pq.min(e_qp) / e_pq.max(e_qp)
}

/// `e(own → other) / e(own → own)` at `step`; `None` when the denominator is zero.
pub fn exposure_ratio(traj: &Trajectory, own: &NodeSet, other: &NodeSet, step: usize) -> Result<Option<f64>> {
    let pi = step_of(traj, step)?;
    let within = mass_on(pi, own);
    Ok((within > 0.0).then(|| mass_on(pi, other) / within))
}

/// Exposure for one (source, target) pair across clicks `1..=L`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExposureSeries {
    pub source: NodeLabel,
    pub target: NodeLabel,
    pub cwp: CwpKind,
    pub alpha: f64,
    pub values: Vec<f64>,
}

pub fn exposure_series(g: &TopicNetwork, traj: &Trajectory, source: NodeLabel, target: NodeLabel) -> ExposureSeries {
    let set = NodeSet::of_label(g, target);
    ExposureSeries {
        source,
        target,
        cwp: traj.config().cwp,
        alpha: traj.config().alpha,
        values: traj.steps().skip(1).map(|pi| mass_on(pi, &set)).collect(),
    }
}

/// Exposure of a session that starts at a single page.
pub fn per_node_exposure(
    m0: &TransitionMatrix,
    cfg: &NavigationConfig,
    start: NodeId,
    target: &NodeSet,
    step: usize,
) -> Result<f64> {
    if start.index() >= m0.dim() {
        return Err(Error::UnknownNode(start.to_string()));
    }
    let pi0 = StartDistribution::indicator(m0.dim(), start)?;
    exdin(&evolve(m0, &pi0, cfg)?, target, step)
}

/// Per-start exposure series (clicks `1..=L`) for many single-page starts.
pub fn per_node_exposures(
    m0: &TransitionMatrix,
    cfg: &NavigationConfig,
    starts: &[NodeId],
    target: &NodeSet,
) -> Result<Vec<Vec<f64>>> {
    starts
        .par_iter()
        .map(|&v| {
            if v.index() >= m0.dim() {
                return Err(Error::UnknownNode(v.to_string()));
            }
            let pi0 = StartDistribution::indicator(m0.dim(), v)?;
            let t = evolve(m0, &pi0, cfg)?;
            Ok(t.steps().skip(1).map(|pi| mass_on(pi, target)).collect())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepExposure {
    pub l: usize,
    pub e_p_to_pbar: f64,
    pub e_pbar_to_p: f64,
    pub e_p_to_p: f64,
    pub e_pbar_to_pbar: f64,
    /// `e(P→P̄) / e(P→P)`, null when undefined.
    pub ratio_p: Option<f64>,
    /// `e(P̄→P) / e(P̄→P̄)`, null when undefined.
    pub ratio_pbar: Option<f64>,
    pub mutual: f64,
}

impl StepExposure {
    fn from_masses(l: usize, from_p: &[f64], from_pbar: &[f64], p: &NodeSet, pbar: &NodeSet) -> Self {
        let e_p_to_pbar = mass_on(from_p, pbar);
        let e_p_to_p = mass_on(from_p, p);
        let e_pbar_to_p = mass_on(from_pbar, p);
        let e_pbar_to_pbar = mass_on(from_pbar, pbar);
        StepExposure {
            l,
            e_p_to_pbar,
            e_pbar_to_p,
            e_p_to_p,
            e_pbar_to_pbar,
            ratio_p: (e_p_to_p > 0.0).then(|| e_p_to_pbar / e_p_to_p),
            ratio_pbar: (e_pbar_to_pbar > 0.0).then(|| e_pbar_to_p / e_pbar_to_pbar),
            mutual: mutual_exposure(e_p_to_pbar, e_pbar_to_p),
        }
    }
}

/// Long-session limit of both partitions' exposure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    #[serde(flatten)]
    pub exposure: StepExposure,
    pub steps_p: usize,
    pub steps_pbar: usize,
    pub status_p: ConvergenceStatus,
    pub status_pbar: ConvergenceStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapConfig {
    #[serde(rename = "B")]
    pub replicates: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            gamma: 0.90,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("bootstrap needs at least one replicate".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("confidence level must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Bootstrap point estimate with an equal-tailed percentile interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdjustedExposure {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Standard deviation of the replicates.
    pub std_error: f64,
}

impl AdjustedExposure {
    pub fn from_replicates(values: &[f64], gamma: f64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let tail = (1.0 - gamma) / 2.0;
        AdjustedExposure {
            mean,
            ci_low: quantile(&sorted, tail),
            ci_high: quantile(&sorted, 1.0 - tail),
            std_error: var.sqrt(),
        }
    }
}

/// Linearly interpolated quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdjustedStep {
    pub l: usize,
    pub p_to_pbar: AdjustedExposure,
    pub pbar_to_p: AdjustedExposure,
    pub p_to_p: AdjustedExposure,
    pub pbar_to_pbar: AdjustedExposure,
    /// Mutual exposure of the two across-partition means.
    pub mutual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdjustedReport {
    #[serde(flatten)]
    pub bootstrap: BootstrapConfig,
    /// Sample size drawn from each partition, `min(|P|, |P̄|)`.
    pub z: usize,
    pub steps: Vec<AdjustedStep>,
}

/// Per-replicate exposures, indexed `[step][flow]` with flows in the order
/// P→P̄, P̄→P, P→P, P̄→P̄.
type ReplicateValues = Vec<[f64; 4]>;

/// RNG for replicate `index`, independent of scheduling.
pub fn replicate_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Multiplicity of each node in a with-replacement sample of size `z`.
fn sample_counts(rng: &mut ChaCha8Rng, pool: &[NodeId], z: usize) -> Vec<(NodeId, u32)> {
    let mut picks: Vec<NodeId> = (0..z).map(|_| pool[rng.random_range(0..pool.len())]).collect();
    picks.sort_unstable();
    let mut out: Vec<(NodeId, u32)> = Vec::new();
    for v in picks {
        match out.last_mut() {
            Some((u, c)) if *u == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Multiplicity-weighted mass: each drawn copy of a page counts once.
fn sample_mass(pi: &[f64], sample: &[(NodeId, u32)]) -> f64 {
    sample.iter().map(|&(v, c)| f64::from(c) * pi[v.index()]).fold(0.0, |acc, p| acc + p)
}

fn sample_start(n: usize, sample: &[(NodeId, u32)], z: usize) -> StartDistribution {
    let mut probs = vec![0.0; n];
    for &(v, c) in sample {
        probs[v.index()] = f64::from(c) / z as f64;
    }
    StartDistribution::new(probs).expect("sample weights form a distribution")
}

fn run_replicate(
    m0: &TransitionMatrix,
    cfg: &NavigationConfig,
    p: &[NodeId],
    pbar: &[NodeId],
    z: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ReplicateValues> {
    let sp = sample_counts(rng, p, z);
    let sq = sample_counts(rng, pbar, z);
    let tp = evolve(m0, &sample_start(m0.dim(), &sp, z), cfg)?;
    let tq = evolve(m0, &sample_start(m0.dim(), &sq, z), cfg)?;
    Ok(tp
        .steps()
        .zip(tq.steps())
        .skip(1)
        .map(|(from_p, from_q)| {
            [
                sample_mass(from_p, &sq),
                sample_mass(from_q, &sp),
                sample_mass(from_p, &sp),
                sample_mass(from_q, &sq),
            ]
        })
        .collect())
}

/// Size-adjusted ExDIN. Each replicate draws `z = min(|P|, |P̄|)` pages with
/// replacement from both partitions, starts uniformly over the drawn
/// multiset and measures multiplicity-weighted mass on the other draw.
pub fn adjusted_exdin(
    g: &TopicNetwork,
    m0: &TransitionMatrix,
    cfg: &NavigationConfig,
    boot: &BootstrapConfig,
) -> Result<AdjustedReport> {
    boot.validate()?;
    cfg.validate()?;
    let p = g.nodes_in(NodeLabel::P);
    let pbar = g.nodes_in(NodeLabel::PBar);
    let z = p.len().min(pbar.len());
    if z == 0 {
        return Err(Error::EmptyPartition(if p.is_empty() { "P" } else { "PBAR" }.into()));
    }
    let replicates: Vec<ReplicateValues> = (0..boot.replicates)
        .into_par_iter()
        .map(|b| run_replicate(m0, cfg, &p, &pbar, z, &mut replicate_rng(boot.seed, b)))
        .collect::<Result<_>>()?;

    let steps = (0..cfg.max_clicks)
        .map(|k| {
            let flow = |f: usize| {
                let vals: Vec<f64> = replicates.iter().map(|r| r[k][f]).collect();
                AdjustedExposure::from_replicates(&vals, boot.gamma)
            };
            let (pq, qp) = (flow(0), flow(1));
            AdjustedStep {
                l: k + 1,
                p_to_pbar: pq,
                pbar_to_p: qp,
                p_to_p: flow(2),
                pbar_to_pbar: flow(3),
                mutual: mutual_exposure(pq.mean, qp.mean),
            }
        })
        .collect();
    Ok(AdjustedReport {
        bootstrap: *boot,
        z,
        steps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExposureReport {
    pub topic: String,
    pub alpha: f64,
    pub cwp: CwpKind,
    pub steps: Vec<StepExposure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjusted: Option<AdjustedReport>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReportOptions {
    pub convergence: bool,
    pub bootstrap: Option<BootstrapConfig>,
}

/// Runs the navigation process from both partitions and collects every
/// per-click exposure figure.
pub fn exposure_report(
    g: &TopicNetwork,
    m0: &TransitionMatrix,
    cfg: &NavigationConfig,
    options: &ReportOptions,
) -> Result<ExposureReport> {
    let p = NodeSet::of_label(g, NodeLabel::P);
    let pbar = NodeSet::of_label(g, NodeLabel::PBar);
    let start_p = crate::navigation::uniform_start(g, NodeLabel::P)?;
    let start_pbar = crate::navigation::uniform_start(g, NodeLabel::PBar)?;
    let tp = evolve(m0, &start_p, cfg)?;
    let tq = evolve(m0, &start_pbar, cfg)?;
    let steps = tp
        .steps()
        .zip(tq.steps())
        .enumerate()
        .skip(1)
        .map(|(l, (a, b))| StepExposure::from_masses(l, a, b, &p, &pbar))
        .collect();

    let convergence = if options.convergence {
        let cp = evolve_to_convergence(m0, &start_p, cfg)?;
        let cq = evolve_to_convergence(m0, &start_pbar, cfg)?;
        Some(ConvergenceSummary {
            exposure: StepExposure::from_masses(0, &cp.distribution, &cq.distribution, &p, &pbar),
            steps_p: cp.steps,
            steps_pbar: cq.steps,
            status_p: cp.status,
            status_pbar: cq.status,
        })
    } else {
        None
    };
    let adjusted = options
        .bootstrap
        .map(|b| adjusted_exdin(g, m0, cfg, &b))
        .transpose()?;

    Ok(ExposureReport {
        topic: g.topic().name.clone(),
        alpha: cfg.alpha,
        cwp: cfg.cwp,
        steps,
        convergence,
        adjusted,
    })
}

impl ExposureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per click with the point exposures.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        let mut out = String::from("l,e_p_to_pbar,e_pbar_to_p,e_p_to_p,e_pbar_to_pbar,ratio_p,ratio_pbar,mutual\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.l,
                s.e_p_to_pbar,
                s.e_pbar_to_p,
                s.e_p_to_p,
                s.e_pbar_to_pbar,
                opt(s.ratio_p),
                opt(s.ratio_pbar),
                s.mutual
            ));
        }
        out
    }
}
