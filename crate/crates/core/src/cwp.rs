//! Click-within-page models: per-link click probabilities for a page.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{NodeId, TopicNetwork};
use crate::matrix::{row_blocks_mut, TransitionMatrix};

/// Count assumed for links absent from the clickstream: the minimum number
/// of clicks a pair needs to be published.
pub const DEFAULT_CLICK_SMOOTHING: f64 = 10.0;

const BLOCK_NNZ: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CwpKind {
    Uniform,
    Position,
    Clicks { smoothing: f64 },
}

impl CwpKind {
    pub fn clicks() -> Self {
        CwpKind::Clicks {
            smoothing: DEFAULT_CLICK_SMOOTHING,
        }
    }

    pub fn all() -> [CwpKind; 3] {
        [CwpKind::Uniform, CwpKind::Position, CwpKind::clicks()]
    }

    pub fn name(&self) -> &'static str {
        match self {
            CwpKind::Uniform => "uniform",
            CwpKind::Position => "position",
            CwpKind::Clicks { .. } => "clicks",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CwpKind::Clicks { smoothing } if !(smoothing > 0.0 && smoothing.is_finite()) => {
                Err(Error::InvalidConfig(format!("click smoothing must be positive, got {smoothing}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CwpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CwpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "u" => Ok(CwpKind::Uniform),
            "position" | "p" => Ok(CwpKind::Position),
            "clicks" | "c" => Ok(CwpKind::clicks()),
            other => Err(Error::InvalidConfig(format!(
                "unknown CwP model {other:?} (expected uniform, position or clicks)"
            ))),
        }
    }
}

impl Serialize for CwpKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Builds the transition matrix of `g` under `kind`.
pub fn build_matrix(g: &TopicNetwork, kind: CwpKind) -> Result<TransitionMatrix> {
    match kind {
        CwpKind::Uniform => Ok(uniform_matrix(g)),
        CwpKind::Position => position_matrix(g),
        CwpKind::Clicks { smoothing } => clicks_matrix(g, smoothing),
    }
}

/// Fills values row by row with `fill(row, out)`, then normalizes each row.
fn build_rows<F>(g: &TopicNetwork, fill: F) -> Result<TransitionMatrix>
where
    F: Fn(NodeId, &mut [f64]) -> Result<()> + Sync,
{
    let row_ptr = g.out_offsets().to_vec();
    let cols: Vec<u32> = g.out_targets().iter().map(|v| v.index() as u32).collect();
    let mut vals = vec![0.0; cols.len()];
    row_blocks_mut(&row_ptr, &mut vals, BLOCK_NNZ)
        .into_par_iter()
        .try_for_each(|(first, block)| -> Result<()> {
            let mut row = first;
            let mut offset = 0;
            while offset < block.len() {
                let len = row_ptr[row + 1] - row_ptr[row];
                let out = &mut block[offset..offset + len];
                if len > 0 {
                    fill(NodeId::new(row), out)?;
                    let sum: f64 = out.iter().sum();
                    out.iter_mut().for_each(|v| *v /= sum);
                }
                offset += len;
                row += 1;
            }
            Ok(())
        })?;
    Ok(TransitionMatrix::from_csr(row_ptr, cols, vals))
}

/// Every link of a page is equally likely.
pub fn uniform_matrix(g: &TopicNetwork) -> TransitionMatrix {
    build_rows(g, |_, out| {
        let p = 1.0 / out.len() as f64;
        out.iter_mut().for_each(|v| *v = p);
        Ok(())
    })
    .expect("uniform rows cannot fail")
}

/// Links weighted by `tanh(deg - rank)` where `rank` is the 0-based order of
/// the link on its page, so the bottom link still gets `tanh(1)`.
pub fn position_matrix(g: &TopicNetwork) -> Result<TransitionMatrix> {
    build_rows(g, |v, out| {
        let deg = out.len();
        let mut order: Vec<(u32, usize)> = Vec::with_capacity(deg);
        for (k, e) in g.out_edges(v).enumerate() {
            let rank = e.position_rank.ok_or_else(|| Error::MissingPosition {
                node: v,
                name: g.name(v).to_string(),
            })?;
            order.push((rank, k));
        }
        // Ties keep CSR (destination id) order.
        order.sort_unstable();
        for (pos, &(_, k)) in order.iter().enumerate() {
            out[k] = ((deg - pos) as f64).tanh();
        }
        Ok(())
    })
}

/// Links weighted by observed clicks, `smoothing` for links never observed.
pub fn clicks_matrix(g: &TopicNetwork, smoothing: f64) -> Result<TransitionMatrix> {
    CwpKind::Clicks { smoothing }.validate()?;
    build_rows(g, |v, out| {
        for (slot, e) in out.iter_mut().zip(g.out_edges(v)) {
            *slot = match e.click_count {
                Some(c) if c < 0.0 => {
                    return Err(Error::NegativeClicks {
                        src: g.name(v).to_string(),
                        dst: g.name(e.dst).to_string(),
                        count: c,
                    })
                }
                Some(c) => c,
                None => smoothing,
            };
        }
        // A row of observed zeros falls back to uniform.
        if out.iter().all(|&c| c == 0.0) {
            out.iter_mut().for_each(|c| *c = 1.0);
        }
        Ok(())
    })
}
