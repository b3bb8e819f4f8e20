//! Correlation and two-sample tests.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exposure::replicate_rng;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Sample Pearson correlation; `None` when either input has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidConfig("correlation needs at least two pairs".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Welch's t statistic. Two constant samples give `±inf`, or 0 if equal.
pub fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let se = (va / a.len() as f64 + vb / b.len() as f64).sqrt();
    let diff = ma - mb;
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    A,
    B,
    Equal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub p_value: f64,
    /// Welch statistic of the observed samples.
    pub t_statistic: f64,
    /// Sample with the larger observed mean.
    pub direction: Direction,
    pub significant: bool,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// Bootstrapped Welch test at the 0.05 level.
pub fn bootstrap_welch_test(a: &[f64], b: &[f64], replicates: usize, seed: u64) -> Result<TestResult> {
    bootstrap_welch_test_at(a, b, replicates, seed, SIGNIFICANCE_LEVEL)
}

/// Both samples are resampled with replacement `replicates` times and the
/// Welch statistic is computed on each pair. The p-value is the two-sided
/// share of replicate statistics on the far side of zero,
/// `min(1, 2 * min(#{t* <= 0}, #{t* >= 0}) / B)`.
pub fn bootstrap_welch_test_at(a: &[f64], b: &[f64], replicates: usize, seed: u64, level: f64) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidConfig("each sample needs at least two values".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidConfig("bootstrap needs at least one replicate".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("significance level must lie in (0, 1), got {level}")));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 && vb == 0.0 {
        return Err(Error::Undefined("both samples have zero variance".into()));
    }
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut rng = replicate_rng(seed, k);
            let ra: Vec<f64> = (0..a.len()).map(|_| a[rng.random_range(0..a.len())]).collect();
            let rb: Vec<f64> = (0..b.len()).map(|_| b[rng.random_range(0..b.len())]).collect();
            welch_t(&ra, &rb)
        })
        .collect();
    let below = stats.iter().filter(|&&t| t <= 0.0).count();
    let above = stats.iter().filter(|&&t| t >= 0.0).count();
    let p_value = (2.0 * below.min(above) as f64 / replicates as f64).min(1.0);
    let direction = if ma > mb {
        Direction::A
    } else if mb > ma {
        Direction::B
    } else {
        Direction::Equal
    };
    Ok(TestResult {
        p_value,
        t_statistic: welch_t(a, b),
        direction,
        significant: p_value < level,
        level,
        replicates,
        seed,
    })
}
