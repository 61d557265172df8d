//! Rounding embeddings to discrete partitions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{CostKind, PartitionK};
use crate::error::{Error, Result};
use crate::graph::{BalanceMode, BalanceWeights, Graph};
use crate::irrq::{irrq_solve, IrrqConfig};

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: PartitionK,
    /// `k × d`.
    pub centers: DMatrix<f64>,
    pub inertia: f64,
    pub seed: u64,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    center
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            let d = points[(i, c)] - m;
            d * d
        })
        .sum()
}

/// Lloyd's algorithm on the rows of `points` with k-means++ seeding; the
/// best of [`KMEANS_RESTARTS`] runs by inertia. Deterministic for a seed.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (labels, centers, inertia) = lloyd(points, k, &mut rng);
        if best
            .as_ref()
            .is_none_or(|(_, _, b)| inertia < *b - 1e-12 * b.abs())
        {
            best = Some((labels, centers, inertia));
        }
    }
    let (labels, centers, inertia) = best.expect("at least one restart");
    let d = points.ncols();
    let centers = DMatrix::from_fn(k, d, |r, c| centers[r][c]);
    Ok(KMeansResult {
        labels: PartitionK::new(labels, k)?,
        centers,
        inertia,
        seed,
    })
}

fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let (n, d) = points.shape();
    let row = |i: usize| -> Vec<f64> { (0..d).map(|c| points[(i, c)]).collect() };

    // k-means++
    let mut centers = vec![row(rng.random_range(0..n))];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(row(pick));
        let c = centers.last().unwrap().clone();
        for (i, v) in nearest.iter_mut().enumerate() {
            *v = v.min(sq_dist(points, i, &c));
        }
    }

    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for i in 0..n {
            let (mut bl, mut bd) = (0, f64::INFINITY);
            for (l, c) in centers.iter().enumerate() {
                let dd = sq_dist(points, i, c);
                if dd < bd {
                    bl = l;
                    bd = dd;
                }
            }
            if labels[i] != bl {
                labels[i] = bl;
                changed = true;
            }
            dist[i] = bd;
        }
        repair_empty(points, k, &mut labels, &mut dist, &centers);
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for c in 0..d {
                sums[labels[i]][c] += points[(i, c)];
            }
        }
        for l in 0..k {
            for c in 0..d {
                centers[l][c] = sums[l][c] / counts[l] as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| sq_dist(points, i, &centers[labels[i]]))
        .sum();
    (labels, centers, inertia)
}

/// Moves the point farthest from its center into each empty cluster,
/// taking only from clusters that keep at least one member.
fn repair_empty(
    points: &DMatrix<f64>,
    k: usize,
    labels: &mut [usize],
    dist: &mut [f64],
    centers: &[Vec<f64>],
) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = donor {
            counts[labels[i]] -= 1;
            labels[i] = empty;
            counts[empty] += 1;
            dist[i] = sq_dist(points, i, &centers[empty]);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub partition: PartitionK,
    /// IRRQ passes summed over every solve.
    pub iterations: usize,
    pub diagnostics: Vec<String>,
}

/// `cfg.k` blocks: an IRRQ embedding with `cfg.k − 1` columns, then k-means
/// with `cfg.k` clusters. The balance constraint already removes the
/// constant direction, so `k − 1` columns span what `k` eigenvectors
/// including the trivial one would.
pub fn multiway_segment(
    g: &Graph,
    cfg: &IrrqConfig,
    w: &BalanceWeights,
    seed: u64,
) -> Result<Segmentation> {
    cfg.validate()?;
    if cfg.k > g.n() {
        return Err(Error::Config(format!(
            "cannot form {} blocks from {} vertices",
            cfg.k,
            g.n()
        )));
    }
    if cfg.k == 1 {
        return Ok(Segmentation {
            partition: PartitionK::new(vec![0; g.n()], 1)?,
            iterations: 0,
            diagnostics: Vec::new(),
        });
    }
    let embed_cfg = IrrqConfig {
        k: cfg.k - 1,
        ..cfg.clone()
    };
    let res = irrq_solve(g, &embed_cfg, w)?;
    let km = kmeans(res.embedding.matrix(), cfg.k, seed)?;
    Ok(Segmentation {
        partition: km.labels.canonical(),
        iterations: res.iterations(),
        diagnostics: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub region: usize,
    /// Values at or below this go to the first block.
    pub threshold: f64,
    pub cost: f64,
    pub column: usize,
    /// Vertex ids (of the graph the split was computed on) of the first
    /// block; the second block is the complement.
    pub first: Vec<usize>,
}

fn two_way_cost(kind: CostKind, cut: f64, m1: f64, m2: f64) -> Result<f64> {
    match kind {
        CostKind::Cut => Ok(cut),
        CostKind::Ccb { tau, .. } => {
            let h = 0.5 * tau;
            Ok(0.5 * (cut / m1.powf(h) + cut / m2.powf(h)) / 2f64.powf(h))
        }
        CostKind::Bh { p, .. } => Ok(cut / crate::costs::phi_p(m1 / (m1 + m2), p)?),
    }
}

/// Best of the `n − 1` prefix splits of the vertices sorted by `values`
/// (stable on ties). Ties in cost go to the smaller first block.
pub fn best_threshold_split(g: &Graph, values: &[f64], kind: CostKind) -> Result<SplitCandidate> {
    kind.validate()?;
    crate::graph::check_len(g.n(), values.len())?;
    let n = g.n();
    if n < 2 || values.iter().all(|&v| v == values[0]) {
        return Err(Error::ConstantValues);
    }
    let pi = match kind.mode() {
        Some(mode) => BalanceWeights::for_graph(g, mode)?.pi().to_vec(),
        None => vec![1.0; n],
    };
    let total: f64 = pi.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut in_first = vec![false; n];
    let mut cut = 0.0;
    let mut mass = 0.0;
    let mut best: Option<(usize, f64)> = None;
    for t in 0..n - 1 {
        let v = order[t];
        for &(u, idx) in g.neighbors(v) {
            let w = g.edges()[idx].w;
            if in_first[u] {
                cut -= w;
            } else {
                cut += w;
            }
        }
        in_first[v] = true;
        mass += pi[v];
        let cost = two_way_cost(kind, cut.max(0.0), mass, total - mass)?;
        if best.is_none_or(|(_, b)| cost < b - 1e-12 * b.abs().max(1.0)) {
            best = Some((t + 1, cost));
        }
    }
    let (size, cost) = best.expect("n >= 2");
    let mut first: Vec<usize> = order[..size].to_vec();
    let threshold = values[order[size - 1]];
    first.sort_unstable();
    Ok(SplitCandidate {
        region: 0,
        threshold,
        cost,
        column: 0,
        first,
    })
}

/// Order in which candidate region splits are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitOrder {
    /// Lowest 2-way cost first.
    #[default]
    Cost,
    /// Largest region first.
    Size,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedSplit {
    pub region: usize,
    pub cost: f64,
    /// Weight of the edges removed by this split.
    pub cut: f64,
}

#[derive(Debug, Clone)]
pub struct HierarchicalSegmentation {
    pub segmentation: Segmentation,
    pub splits: Vec<ExecutedSplit>,
}

/// Starts from one region and performs `cfg.k − 1` two-way splits. Each
/// region's split comes from a one-column IRRQ embedding of its induced
/// subgraph (with the subgraph's own balance weights) and the best
/// threshold under the matching CCB cost.
pub fn hierarchical_segment(
    g: &Graph,
    cfg: &IrrqConfig,
    mode: BalanceMode,
    order: SplitOrder,
) -> Result<HierarchicalSegmentation> {
    cfg.validate()?;
    let n = g.n();
    let kind = CostKind::Ccb { tau: cfg.tau, mode };
    let sub_cfg = IrrqConfig {
        k: 1,
        ..cfg.clone()
    };

    let mut labels = vec![0usize; n];
    let mut regions: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut candidates: Vec<Option<SplitCandidate>> = vec![None];
    let mut splits = Vec::new();
    let mut diagnostics = Vec::new();
    let mut iterations = 0usize;

    while regions.len() < cfg.k {
        for r in 0..regions.len() {
            if candidates[r].is_none() && regions[r].len() >= 2 {
                let (cand, iters) = region_split(g, &regions[r], kind, &sub_cfg)?;
                iterations += iters;
                candidates[r] = Some(SplitCandidate { region: r, ..cand });
            }
        }
        let pick = candidates
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.as_ref().map(|c| (r, c)))
            .min_by(|(ra, a), (rb, b)| match order {
                SplitOrder::Cost => a.cost.total_cmp(&b.cost).then(ra.cmp(rb)),
                SplitOrder::Size => regions[*rb].len().cmp(&regions[*ra].len()).then(ra.cmp(rb)),
            })
            .map(|(r, _)| r);
        let Some(r) = pick else {
            diagnostics.push(format!(
                "stopped at {} regions: every remaining region is a singleton",
                regions.len()
            ));
            break;
        };
        let cand = candidates[r].take().expect("picked a present candidate");
        let first: std::collections::HashSet<usize> = cand.first.iter().copied().collect();
        let (a, b): (Vec<usize>, Vec<usize>) = regions[r].iter().partition(|v| first.contains(v));
        let mut cut = 0.0;
        for &v in &a {
            for &(u, idx) in g.neighbors(v) {
                if labels[u] == labels[v] && !first.contains(&u) {
                    cut += g.edges()[idx].w;
                }
            }
        }
        let new_id = regions.len();
        for &v in &b {
            labels[v] = new_id;
        }
        regions[r] = a;
        regions.push(b);
        candidates.push(None);
        splits.push(ExecutedSplit {
            region: r,
            cost: cand.cost,
            cut,
        });
    }

    let k = regions.len();
    let partition = PartitionK::new(labels, k)?.canonical();
    Ok(HierarchicalSegmentation {
        segmentation: Segmentation {
            partition,
            iterations,
            diagnostics,
        },
        splits,
    })
}

/// Candidate split of one region, with vertex ids in the full graph.
fn region_split(
    g: &Graph,
    region: &[usize],
    kind: CostKind,
    cfg: &IrrqConfig,
) -> Result<(SplitCandidate, usize)> {
    let sub = g.induced_subgraph(region);
    let comps = sub.components();
    if comps.iter().any(|&c| c != 0) {
        // Disconnected region: split off the first component at zero cut.
        let first = comps
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(t, _)| region[t])
            .collect();
        return Ok((
            SplitCandidate {
                region: 0,
                threshold: 0.0,
                cost: 0.0,
                column: 0,
                first,
            },
            0,
        ));
    }
    let mode = kind.mode().unwrap_or(BalanceMode::Ratio);
    let w = BalanceWeights::for_graph(&sub, mode)?;
    let res = irrq_solve(&sub, cfg, &w)?;
    let values = res.embedding.column(0);
    let cand = best_threshold_split(&sub, values, kind)?;
    let first = cand.first.iter().map(|&t| region[t]).collect();
    Ok((SplitCandidate { first, ..cand }, res.iterations()))
}
