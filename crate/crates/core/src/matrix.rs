//! Sparse row-stochastic transition matrices in CSR layout.

use std::io::Write;
use std::sync::Arc;

use crate::error::Result;
use crate::graph::NodeId;

#[derive(Debug, PartialEq)]
struct Pattern {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
}

/// Row-major sparse matrix whose nonzero pattern is shared between copies;
/// deflation only rewrites values.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    pattern: Arc<Pattern>,
    vals: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds from CSR arrays. Columns must be in range; values are taken as is.
    pub(crate) fn from_csr(row_ptr: Vec<usize>, cols: Vec<u32>, vals: Vec<f64>) -> Self {
        debug_assert_eq!(cols.len(), vals.len());
        debug_assert_eq!(*row_ptr.last().unwrap_or(&0), cols.len());
        TransitionMatrix {
            pattern: Arc::new(Pattern { row_ptr, cols }),
            vals,
        }
    }

    /// Same pattern, new values.
    pub(crate) fn with_values(&self, vals: Vec<f64>) -> Self {
        assert_eq!(vals.len(), self.vals.len());
        TransitionMatrix {
            pattern: Arc::clone(&self.pattern),
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.pattern.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.pattern.row_ptr
    }

    pub fn cols(&self) -> &[u32] {
        &self.pattern.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Row offsets and columns alongside mutable values.
    pub(crate) fn parts_mut(&mut self) -> (&[usize], &[u32], &mut [f64]) {
        (&self.pattern.row_ptr, &self.pattern.cols, &mut self.vals)
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1];
        (&self.pattern.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        let (cols, vals) = self.row(i.index());
        match cols.binary_search(&(j.index() as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    /// Largest `|row sum - 1|` over rows that have entries.
    pub fn max_row_deviation(&self) -> f64 {
        (0..self.dim())
            .filter(|&i| self.pattern.row_ptr[i + 1] > self.pattern.row_ptr[i])
            .map(|i| (self.row_sum(i) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn shares_pattern(&self, other: &TransitionMatrix) -> bool {
        Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern
    }

    /// Row-major dense copy, for small-matrix checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c as usize] = v;
            }
        }
        out
    }

    /// `y = x · M` for a dense row vector `x`.
    pub fn left_multiply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let row_ptr = &self.pattern.row_ptr;
        let cols = &self.pattern.cols;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in row_ptr[i]..row_ptr[i + 1] {
                y[cols[k] as usize] += xi * self.vals[k];
            }
        }
    }

    /// Writes `row \t col \t prob` lines with 17 significant digits.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.dim() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i}\t{c}\t{v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Splits `vals` into contiguous blocks of whole rows so rows can be
/// processed in parallel. Each entry is `(first_row, values_of_block)`.
pub(crate) fn row_blocks_mut<'a>(
    row_ptr: &[usize],
    mut vals: &'a mut [f64],
    target_nnz: usize,
) -> Vec<(usize, &'a mut [f64])> {
    let n = row_ptr.len() - 1;
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && row_ptr[end] - row_ptr[start] < target_nnz {
            end += 1;
        }
        let len = row_ptr[end] - row_ptr[start];
        let (head, tail) = std::mem::take(&mut vals).split_at_mut(len);
        blocks.push((start, head));
        vals = tail;
        start = end;
    }
    blocks
}
