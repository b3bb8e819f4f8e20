//! Reader navigation: a random walk with restart whose transition matrix is
//! deflated after every click so that destinations already reached with high
//! probability become less attractive.
//!
//! With `π⁰` the start distribution and `M₀` a click-within-page matrix:
//!
//! ```text
//! π¹     = π⁰ M₀
//! πˡ⁺¹   = (1 − α) πˡ Mₗ + α π⁰ Mₗ            (ℓ ≥ 1)
//! Mₗ     = norm(Mₗ₋₁ · diag(1 + πˡ⁻¹)⁻¹)
//! ```
//!
//! `norm` rescales each row to sum to one. The process is defined on
//! distributions: deflation depends on the aggregate `π`, so sampling
//! individual walkers does not reproduce it.

use rayon::prelude::*;
use serde::Serialize;

use crate::cwp::CwpKind;
use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeLabel, TopicNetwork};
use crate::matrix::{row_blocks_mut, TransitionMatrix};

const BLOCK_NNZ: usize = 1 << 15;

/// A probability vector over the nodes of one network.
#[derive(Clone, Debug, PartialEq)]
pub struct StartDistribution(Vec<f64>);

impl StartDistribution {
    /// Accepts a vector that is already a distribution (sum 1 within 1e-12).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidConfig("start distribution has a negative or non-finite entry".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("start distribution sums to {sum}, not 1")));
        }
        Ok(StartDistribution(probs))
    }

    /// Uniform over `nodes` counted with multiplicity.
    pub fn uniform_over(n: usize, nodes: &[NodeId]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidConfig("start set is empty".into()));
        }
        let mut probs = vec![0.0; n];
        let w = 1.0 / nodes.len() as f64;
        for v in nodes {
            if v.index() >= n {
                return Err(Error::UnknownNode(v.to_string()));
            }
            probs[v.index()] += w;
        }
        Ok(StartDistribution(probs))
    }

    pub fn indicator(n: usize, v: NodeId) -> Result<Self> {
        Self::uniform_over(n, &[v])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Uniform start over every node carrying `label`.
pub fn uniform_start(g: &TopicNetwork, label: NodeLabel) -> Result<StartDistribution> {
    let nodes = g.nodes_in(label);
    if nodes.is_empty() {
        return Err(Error::EmptyPartition(label.to_string()));
    }
    StartDistribution::uniform_over(g.node_count(), &nodes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NavigationConfig {
    /// Restart probability; 1 = star-like browsing, 0 = pure forward clicks.
    pub alpha: f64,
    /// Session length `L` in clicks.
    pub max_clicks: usize,
    pub cwp: CwpKind,
    pub convergence_tol: f64,
    pub max_convergence_iters: usize,
    /// Disabling deflation turns the process into a plain random walk with
    /// restart; used for cross-checks and baselines.
    pub deflate: bool,
}

impl Default for NavigationConfig {
    fn default() -> Self {
        NavigationConfig {
            alpha: 0.0,
            max_clicks: 10,
            cwp: CwpKind::Uniform,
            convergence_tol: 1e-8,
            max_convergence_iters: 10_000,
            deflate: true,
        }
    }
}

impl NavigationConfig {
    pub fn new(alpha: f64, max_clicks: usize, cwp: CwpKind) -> Self {
        NavigationConfig {
            alpha,
            max_clicks,
            cwp,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.max_clicks < 1 {
            return Err(Error::InvalidConfig("session length must be at least 1".into()));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= 0.0 {
            return Err(Error::InvalidConfig("convergence tolerance must be positive".into()));
        }
        self.cwp.validate()
    }
}

/// Distributions `π⁰ … π^L` of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    steps: Vec<Vec<f64>>,
    config: NavigationConfig,
}

impl Trajectory {
    pub fn config(&self) -> &NavigationConfig {
        &self.config
    }

    /// Number of clicks `L`.
    pub fn clicks(&self) -> usize {
        self.steps.len() - 1
    }

    /// `π^ℓ` for `ℓ` in `0..=L`.
    pub fn step(&self, l: usize) -> Option<&[f64]> {
        self.steps.get(l).map(Vec::as_slice)
    }

    pub fn steps(&self) -> impl Iterator<Item = &[f64]> {
        self.steps.iter().map(Vec::as_slice)
    }

    /// Writes `step \t node \t prob` rows, skipping probabilities below 1e-15.
    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for (l, pi) in self.steps.iter().enumerate() {
            for (v, &p) in pi.iter().enumerate() {
                if p >= 1e-15 {
                    writeln!(w, "{l}\t{v}\t{p:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Scales column `j` by `1 / (1 + pi_prev[j])`, then renormalizes rows.
pub fn deflate_in_place(m: &mut TransitionMatrix, pi_prev: &[f64]) {
    assert_eq!(pi_prev.len(), m.dim(), "deflation vector has wrong length");
    let (row_ptr, cols, vals) = m.parts_mut();
    row_blocks_mut(row_ptr, vals, BLOCK_NNZ)
        .into_par_iter()
        .for_each(|(first, block)| {
            let base = row_ptr[first];
            let mut row = first;
            let mut offset = 0;
            while offset < block.len() {
                let len = row_ptr[row + 1] - row_ptr[row];
                let vals = &mut block[offset..offset + len];
                let cols = &cols[base + offset..base + offset + len];
                let mut sum = 0.0;
                for (v, &c) in vals.iter_mut().zip(cols) {
                    *v /= 1.0 + pi_prev[c as usize];
                    sum += *v;
                }
                if sum > 0.0 {
                    vals.iter_mut().for_each(|v| *v /= sum);
                }
                offset += len;
                row += 1;
            }
        });
}

/// Deflated copy of `m`; the sparsity pattern is shared with the input.
pub fn deflate_update(m: &TransitionMatrix, pi_prev: &[f64]) -> TransitionMatrix {
    let mut out = m.with_values(m.values().to_vec());
    deflate_in_place(&mut out, pi_prev);
    out
}

/// Incremental runner holding `π⁰`, the current `π^ℓ`, `π^{ℓ-1}` and `M_{ℓ-1}`.
struct Walker<'a> {
    alpha: f64,
    deflate: bool,
    start: &'a [f64],
    prev: Vec<f64>,
    current: Vec<f64>,
    matrix: TransitionMatrix,
    mix: Vec<f64>,
    step: usize,
}

impl<'a> Walker<'a> {
    fn new(m0: &TransitionMatrix, pi0: &'a StartDistribution, cfg: &NavigationConfig) -> Result<Self> {
        cfg.validate()?;
        if pi0.len() != m0.dim() {
            return Err(Error::Dimension {
                expected: m0.dim(),
                actual: pi0.len(),
            });
        }
        let n = m0.dim();
        Ok(Walker {
            alpha: cfg.alpha,
            deflate: cfg.deflate,
            start: pi0.as_slice(),
            prev: vec![0.0; n],
            current: pi0.as_slice().to_vec(),
            matrix: m0.clone(),
            mix: vec![0.0; n],
            step: 0,
        })
    }

    /// Advances to the next click. On return `current` is `π^{ℓ+1}` and
    /// `matrix` is the `M_ℓ` that produced it.
    fn advance(&mut self) {
        if self.step == 0 {
            std::mem::swap(&mut self.prev, &mut self.current);
            self.matrix.left_multiply(&self.prev, &mut self.current);
        } else {
            if self.deflate {
                deflate_in_place(&mut self.matrix, &self.prev);
            }
            let a = self.alpha;
            for ((m, &c), &s) in self.mix.iter_mut().zip(&self.current).zip(self.start) {
                *m = (1.0 - a) * c + a * s;
            }
            std::mem::swap(&mut self.prev, &mut self.current);
            self.matrix.left_multiply(&self.mix, &mut self.current);
        }
        self.step += 1;
    }
}

/// Runs `cfg.max_clicks` clicks from `pi0`.
pub fn evolve(m0: &TransitionMatrix, pi0: &StartDistribution, cfg: &NavigationConfig) -> Result<Trajectory> {
    let mut w = Walker::new(m0, pi0, cfg)?;
    let mut steps = Vec::with_capacity(cfg.max_clicks + 1);
    steps.push(pi0.as_slice().to_vec());
    for _ in 0..cfg.max_clicks {
        w.advance();
        steps.push(w.current.clone());
    }
    Ok(Trajectory { steps, config: *cfg })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Converged,
    MaxIterations,
}

/// Long-session limit of the navigation process.
#[derive(Clone, Debug)]
pub struct Convergence {
    pub distribution: Vec<f64>,
    /// Matrix that produced `distribution` from the previous step.
    pub matrix: TransitionMatrix,
    pub steps: usize,
    /// L1 distance between the last two distributions.
    pub residual: f64,
    pub status: ConvergenceStatus,
}

/// Iterates until `‖π^{ℓ+1} − π^ℓ‖₁ < tol` or the iteration cap is hit.
pub fn evolve_to_convergence(
    m0: &TransitionMatrix,
    pi0: &StartDistribution,
    cfg: &NavigationConfig,
) -> Result<Convergence> {
    let mut w = Walker::new(m0, pi0, cfg)?;
    let mut residual = f64::INFINITY;
    let mut status = ConvergenceStatus::MaxIterations;
    for _ in 0..cfg.max_convergence_iters.max(1) {
        w.advance();
        residual = w
            .current
            .iter()
            .zip(&w.prev)
            .map(|(a, b)| (a - b).abs())
            .sum();
        if residual < cfg.convergence_tol {
            status = ConvergenceStatus::Converged;
            break;
        }
    }
    Ok(Convergence {
        distribution: w.current,
        matrix: w.matrix,
        steps: w.step,
        residual,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwp::uniform_matrix;
    use crate::graph::{Edge, NetworkBuilder, TopicInfo};

    fn mat(row_ptr: Vec<usize>, cols: Vec<u32>, vals: Vec<f64>) -> TransitionMatrix {
        TransitionMatrix::from_csr(row_ptr, cols, vals)
    }

    #[test]
    fn zero_vector_is_identity() {
        let m = mat(vec![0, 2, 3, 4], vec![1, 2, 0, 1], vec![0.3, 0.7, 1.0, 1.0]);
        let d = deflate_update(&m, &[0.0; 3]);
        for (a, b) in d.values().iter().zip(m.values()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn deflation_hand_example() {
        // Row (0.5, 0.5) into nodes with previous mass (1, 0):
        // scaled to (0.25, 0.5), normalized to (1/3, 2/3).
        let m = mat(vec![0, 2, 2, 2], vec![1, 2], vec![0.5, 0.5]);
        let d = deflate_update(&m, &[0.0, 1.0, 0.0]);
        assert!((d.values()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.values()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(d.shares_pattern(&m));
    }

    #[test]
    fn uniform_start_over_label() {
        let mut b = NetworkBuilder::new(TopicInfo::default());
        let ps: Vec<_> = (0..4).map(|i| b.add_node(&format!("p{i}"), NodeLabel::P).unwrap()).collect();
        let q = b.add_node("q", NodeLabel::PBar).unwrap();
        b.add_node("s", NodeLabel::Super).unwrap();
        b.add_edge(Edge::new(ps[0], q)).unwrap();
        let g = b.build().unwrap();
        let pi = uniform_start(&g, NodeLabel::P).unwrap();
        assert_eq!(pi.as_slice(), &[0.25, 0.25, 0.25, 0.25, 0.0, 0.0]);
        let pi = uniform_start(&g, NodeLabel::PBar).unwrap();
        assert_eq!(pi.as_slice()[q.index()], 1.0);
        assert!(uniform_start(&g, NodeLabel::Neighbor).is_err());
    }

    fn cycle3() -> TopicNetwork {
        let mut b = NetworkBuilder::new(TopicInfo::default());
        let a = b.add_node("a", NodeLabel::P).unwrap();
        let c = b.add_node("b", NodeLabel::PBar).unwrap();
        let d = b.add_node("c", NodeLabel::P).unwrap();
        b.add_node("s", NodeLabel::Super).unwrap();
        for (x, y) in [(a, c), (c, d), (d, a)] {
            b.add_edge(Edge::new(x, y)).unwrap();
            b.add_edge(Edge::new(y, x)).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn single_click_ignores_alpha() {
        let g = cycle3();
        let m = uniform_matrix(&g);
        let pi0 = uniform_start(&g, NodeLabel::P).unwrap();
        let t0 = evolve(&m, &pi0, &NavigationConfig::new(0.0, 1, CwpKind::Uniform)).unwrap();
        let t1 = evolve(&m, &pi0, &NavigationConfig::new(1.0, 1, CwpKind::Uniform)).unwrap();
        assert_eq!(t0.step(1), t1.step(1));
        assert_eq!(t0.step(1).unwrap(), &[0.25, 0.5, 0.25, 0.0]);
    }

    #[test]
    fn cycle_converges_to_fixed_point() {
        let g = cycle3();
        let m = uniform_matrix(&g);
        let pi0 = uniform_start(&g, NodeLabel::P).unwrap();
        let cfg = NavigationConfig::new(0.0, 1, CwpKind::Uniform);
        let c = evolve_to_convergence(&m, &pi0, &cfg).unwrap();
        assert_eq!(c.status, ConvergenceStatus::Converged);
        let mut next = vec![0.0; 4];
        c.matrix.left_multiply(&c.distribution, &mut next);
        let gap: f64 = next.iter().zip(&c.distribution).map(|(a, b)| (a - b).abs()).sum();
        assert!(gap < cfg.convergence_tol, "gap {gap}");
        let mass: f64 = c.distribution.iter().sum();
        assert!((mass - 1.0).abs() < 1e-9);
    }

    #[test]
    fn loose_tolerance_stops_after_one_step() {
        let g = cycle3();
        let m = uniform_matrix(&g);
        let pi0 = StartDistribution::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]).unwrap();
        let cfg = NavigationConfig {
            convergence_tol: 1.0,
            ..NavigationConfig::default()
        };
        let c = evolve_to_convergence(&m, &pi0, &cfg).unwrap();
        assert_eq!(c.steps, 1);
    }

    #[test]
    fn non_convergence_is_a_status() {
        // Two-cycle with a point start oscillates forever without restart.
        let mut b = NetworkBuilder::new(TopicInfo::default());
        let a = b.add_node("a", NodeLabel::P).unwrap();
        let c = b.add_node("b", NodeLabel::PBar).unwrap();
        b.add_node("s", NodeLabel::Super).unwrap();
        b.add_edge(Edge::new(a, c)).unwrap();
        b.add_edge(Edge::new(c, a)).unwrap();
        let g = b.build().unwrap();
        let m = uniform_matrix(&g);
        let pi0 = StartDistribution::indicator(3, a).unwrap();
        let cfg = NavigationConfig {
            max_convergence_iters: 50,
            ..NavigationConfig::default()
        };
        let c = evolve_to_convergence(&m, &pi0, &cfg).unwrap();
        assert_eq!(c.status, ConvergenceStatus::MaxIterations);
        assert_eq!(c.steps, 50);
    }

    #[test]
    fn config_validation() {
        assert!(NavigationConfig::new(1.5, 3, CwpKind::Uniform).validate().is_err());
        assert!(NavigationConfig::new(0.5, 0, CwpKind::Uniform).validate().is_err());
        assert!(NavigationConfig::new(0.5, 3, CwpKind::Clicks { smoothing: -1.0 }).validate().is_err());
        assert!(StartDistribution::new(vec![0.5, 0.6]).is_err());
    }
}
