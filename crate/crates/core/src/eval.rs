//! Segmentation quality against ground truth.

use serde::{Deserialize, Serialize};

use crate::costs::PartitionK;
use crate::error::{Error, Result};
use crate::graph::check_len;

/// Joint label counts of a segmentation (rows) against a ground truth (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    n: usize,
    rows: usize,
    cols: usize,
    counts: Vec<usize>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
}

impl ContingencyTable {
    pub fn new(seg: &PartitionK, gt: &PartitionK) -> Result<Self> {
        check_len(gt.n(), seg.n())?;
        let (rows, cols) = (seg.k(), gt.k());
        let mut counts = vec![0; rows * cols];
        let mut row_sums = vec![0; rows];
        let mut col_sums = vec![0; cols];
        for (&u, &v) in seg.labels().iter().zip(gt.labels()) {
            counts[u * cols + v] += 1;
            row_sums[u] += 1;
            col_sums[v] += 1;
        }
        Ok(ContingencyTable {
            n: seg.n(),
            rows,
            cols,
            counts,
            row_sums,
            col_sums,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn count(&self, u: usize, v: usize) -> usize {
        self.counts[u * self.cols + v]
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.rows).flat_map(move |u| {
            (0..self.cols).filter_map(move |v| {
                let c = self.count(u, v);
                (c > 0).then_some((u, v, c))
            })
        })
    }
}

fn pairs(m: usize) -> u128 {
    let m = m as u128;
    m * m.saturating_sub(1) / 2
}

/// Covering of `gt` by `seg`: ground-truth blocks weighted by size, each
/// scored by its best intersection-over-union with a segment.
pub fn covering(seg: &PartitionK, gt: &PartitionK) -> Result<f64> {
    let t = ContingencyTable::new(seg, gt)?;
    let mut best = vec![0.0f64; t.cols];
    for (u, v, c) in t.nonzero() {
        let union = t.row_sums[u] + t.col_sums[v] - c;
        best[v] = best[v].max(c as f64 / union as f64);
    }
    let total: f64 = best
        .iter()
        .zip(&t.col_sums)
        .map(|(b, &s)| s as f64 * b)
        .sum();
    Ok(total / t.n as f64)
}

/// Rand index: fraction of vertex pairs on which the two partitions agree.
pub fn rand_index(seg: &PartitionK, gt: &PartitionK) -> Result<f64> {
    let t = ContingencyTable::new(seg, gt)?;
    let all = pairs(t.n);
    if all == 0 {
        return Ok(1.0);
    }
    let joint: u128 = t.nonzero().map(|(_, _, c)| pairs(c)).sum();
    let a: u128 = t.row_sums.iter().map(|&s| pairs(s)).sum();
    let b: u128 = t.col_sums.iter().map(|&s| pairs(s)).sum();
    let agree = all + 2 * joint - a - b;
    Ok(agree as f64 / all as f64)
}

/// Probabilistic Rand index: the unweighted mean Rand index over `gts`.
pub fn pri(seg: &PartitionK, gts: &[PartitionK]) -> Result<f64> {
    if gts.is_empty() {
        return Err(Error::Empty("ground truths"));
    }
    let mut sum = 0.0;
    for gt in gts {
        sum += rand_index(seg, gt)?;
    }
    Ok(sum / gts.len() as f64)
}

/// Variation of information H(S) + H(G) − 2 I(S; G), natural log.
pub fn voi(seg: &PartitionK, gt: &PartitionK) -> Result<f64> {
    let t = ContingencyTable::new(seg, gt)?;
    let n = t.n as f64;
    let mut vi = 0.0;
    for (u, v, c) in t.nonzero() {
        let r = c as f64 / n;
        let to_row = (c as f64 / t.row_sums[u] as f64).ln();
        let to_col = (c as f64 / t.col_sums[v] as f64).ln();
        vi -= r * (to_row + to_col);
    }
    Ok(vi.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub covering: f64,
    pub pri: f64,
    pub voi: f64,
}

/// Covering and VI averaged over the ground truths; PRI as defined.
pub fn evaluate(seg: &PartitionK, gts: &[PartitionK]) -> Result<Metrics> {
    if gts.is_empty() {
        return Err(Error::Empty("ground truths"));
    }
    let m = gts.len() as f64;
    let mut cov = 0.0;
    let mut vi = 0.0;
    for gt in gts {
        cov += covering(seg, gt)?;
        vi += voi(seg, gt)?;
    }
    Ok(Metrics {
        covering: cov / m,
        pri: pri(seg, gts)?,
        voi: vi / m,
    })
}

/// One row of the metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub image: String,
    pub method: String,
    pub tau: f64,
    pub k: usize,
    pub covering: f64,
    pub pri: f64,
    pub voi: f64,
    pub degree_spread: f64,
    pub runtime_s: f64,
}

impl MetricsRow {
    pub const HEADER: &'static str = "image,method,tau,k,covering,pri,voi,degree_spread,runtime_s";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.3}",
            self.image,
            self.method,
            self.tau,
            self.k,
            self.covering,
            self.pri,
            self.voi,
            self.degree_spread,
            self.runtime_s
        )
    }
}
