//! Cut-cost families and an exhaustive minimizer used as ground truth.
//!
//! All costs take a [`PartitionK`], a labeling of the vertices into `k`
//! nonempty blocks. The balanced families divide the cut by a symmetric
//! function of block masses, where the mass of a block is the sum of its
//! balance weights `π` (sizes for ratio costs, volumes for normalized ones).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BalanceMode, BalanceWeights, Graph};

/// Labels in `0..k` with every block nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionK {
    labels: Vec<usize>,
    k: usize,
}

impl PartitionK {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPartition("k must be positive".into()));
        }
        let mut seen = vec![false; k];
        for (v, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::InvalidPartition(format!(
                    "vertex {v} has label {l} but k = {k}"
                )));
            }
            seen[l] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::EmptyBlock(empty));
        }
        Ok(PartitionK { labels, k })
    }

    /// Infers `k` as one more than the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(labels, k)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &l) in self.labels.iter().enumerate() {
            out[l].push(v);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    /// Relabels blocks in order of first appearance, so that two labelings
    /// of the same set partition compare equal.
    pub fn canonical(&self) -> PartitionK {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        PartitionK { labels, k: self.k }
    }

    /// Arbitrary label values (gaps allowed, e.g. a ground-truth image),
    /// renumbered by first appearance.
    pub fn relabel(raw: &[usize]) -> Result<PartitionK> {
        if raw.is_empty() {
            return Err(Error::Empty("label list"));
        }
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Ok(PartitionK {
            labels,
            k: map.len(),
        })
    }

    pub(crate) fn check_n(&self, g: &Graph) -> Result<()> {
        crate::graph::check_len(g.n(), self.n())
    }

    /// Sum of `π` over each block.
    pub fn masses(&self, pi: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        for (&l, &p) in self.labels.iter().zip(pi) {
            m[l] += p;
        }
        m
    }
}

/// `Cut(V_ℓ, V \ V_ℓ)` for every block.
pub fn block_cuts(g: &Graph, part: &PartitionK) -> Result<Vec<f64>> {
    part.check_n(g)?;
    let labels = part.labels();
    let mut cuts = vec![0.0; part.k()];
    for e in g.edges() {
        let (a, b) = (labels[e.i], labels[e.j]);
        if a != b {
            cuts[a] += e.w;
            cuts[b] += e.w;
        }
    }
    Ok(cuts)
}

fn require_two_blocks(part: &PartitionK) -> Result<()> {
    if part.k() != 2 {
        return Err(Error::InvalidPartition(format!(
            "expected a 2-way partition, got k = {}",
            part.k()
        )));
    }
    Ok(())
}

/// Total weight of edges between the two blocks of a bipartition.
pub fn cut_cost(g: &Graph, part: &PartitionK) -> Result<f64> {
    require_two_blocks(part)?;
    Ok(block_cuts(g, part)?[0])
}

/// `½ Σ_ℓ Cut(V_ℓ, V \ V_ℓ)`, the total weight of crossing edges.
pub fn multiway_cut(g: &Graph, part: &PartitionK) -> Result<f64> {
    Ok(0.5 * block_cuts(g, part)?.iter().sum::<f64>())
}

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::domain(name, v, "(0, 1)"));
    }
    Ok(())
}

fn ln_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Bühler–Hein normalization `Φ_p(v)`, rescaled so that `Φ_p(½) = 1`.
pub fn phi_p(v: f64, p: f64) -> Result<f64> {
    check_unit_interval("v", v)?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::domain("p", p, "(1, inf)"));
    }
    let e = 1.0 / (p - 1.0);
    let ln_denominator = ln_sum_exp(-v.ln() * e, -(1.0 - v).ln() * e);
    Ok((p * std::f64::consts::LN_2 - (p - 1.0) * ln_denominator).exp())
}

/// `Ψ_τ(v) = 2^{1+τ/2} / (v^{-τ/2} + (1-v)^{-τ/2})`.
pub fn psi_tau(v: f64, tau: f64) -> Result<f64> {
    check_unit_interval("v", v)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain("tau", tau, "(0, inf)"));
    }
    let h = 0.5 * tau;
    let ln_denominator = ln_sum_exp(-h * v.ln(), -h * (1.0 - v).ln());
    Ok(((1.0 + h) * std::f64::consts::LN_2 - ln_denominator).exp())
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 2.0) {
        return Err(Error::domain("tau", tau, "(0, 2]"));
    }
    Ok(())
}

fn check_pi(g: &Graph, w: &BalanceWeights) -> Result<()> {
    crate::graph::check_len(g.n(), w.len())
}

/// Compassionately conservative balanced cut:
/// `½ Σ_ℓ Cut(V_ℓ, V \ V_ℓ) / (2^{τ/2} (Σ_{j ∈ V_ℓ} π_j)^{τ/2})`.
pub fn ccb_cost(g: &Graph, part: &PartitionK, tau: f64, w: &BalanceWeights) -> Result<f64> {
    check_tau(tau)?;
    check_pi(g, w)?;
    let cuts = block_cuts(g, part)?;
    let masses = part.masses(w.pi());
    ccb_from_parts(&cuts, &masses, tau)
}

fn ccb_from_parts(cuts: &[f64], masses: &[f64], tau: f64) -> Result<f64> {
    let h = 0.5 * tau;
    let scale = 2f64.powf(h);
    let mut total = 0.0;
    for (l, (&c, &m)) in cuts.iter().zip(masses).enumerate() {
        if !(m > 0.0) {
            return Err(Error::InvalidPartition(format!(
                "block {l} has nonpositive mass {m}"
            )));
        }
        total += c / (scale * m.powf(h));
    }
    Ok(0.5 * total)
}

/// Same value as [`ccb_cost`], computed from indicator quadratic forms
/// `x_ℓᵀ L x_ℓ` and `x_ℓᵀ Π x_ℓ`.
pub fn ccb_cost_matrix_form(
    g: &Graph,
    part: &PartitionK,
    tau: f64,
    w: &BalanceWeights,
) -> Result<f64> {
    check_tau(tau)?;
    check_pi(g, w)?;
    part.check_n(g)?;
    let scale = 2f64.powf(0.5 * tau);
    let mut total = 0.0;
    for l in 0..part.k() {
        let x: Vec<f64> = part
            .labels()
            .iter()
            .map(|&b| if b == l { 1.0 } else { 0.0 })
            .collect();
        let lx = g.laplacian_apply(&x)?;
        let numerator: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
        let mass: f64 = x.iter().zip(w.pi()).map(|(a, p)| a * p * a).sum();
        total += numerator / (scale * mass.powf(0.5 * tau));
    }
    Ok(0.5 * total)
}

/// `Cut / Φ_p(m_1 / m)` where `m_1` is the mass of block 0.
pub fn bh_cost(g: &Graph, part: &PartitionK, p: f64, w: &BalanceWeights) -> Result<f64> {
    require_two_blocks(part)?;
    check_pi(g, w)?;
    let cut = cut_cost(g, part)?;
    let masses = part.masses(w.pi());
    bh_from_parts(cut, &masses, p)
}

fn bh_from_parts(cut: f64, masses: &[f64], p: f64) -> Result<f64> {
    let v = masses[0] / (masses[0] + masses[1]);
    Ok(cut / phi_p(v, p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostKind {
    Cut,
    Ccb { tau: f64, mode: BalanceMode },
    Bh { p: f64, mode: BalanceMode },
}

impl CostKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostKind::Cut => Ok(()),
            CostKind::Ccb { tau, .. } => check_tau(tau),
            CostKind::Bh { p, .. } => {
                if !(p > 1.0) || !p.is_finite() {
                    return Err(Error::domain("p", p, "(1, inf)"));
                }
                Ok(())
            }
        }
    }

    pub fn mode(&self) -> Option<BalanceMode> {
        match *self {
            CostKind::Cut => None,
            CostKind::Ccb { mode, .. } | CostKind::Bh { mode, .. } => Some(mode),
        }
    }

    /// Cost of `part` on `g`; cut costs accept any `k`, Bühler–Hein costs
    /// need `k = 2`.
    pub fn evaluate(&self, g: &Graph, part: &PartitionK) -> Result<f64> {
        CostEvaluator::new(g, *self)?.evaluate(part)
    }
}

/// Caches `π` for repeated evaluation on one graph.
pub struct CostEvaluator<'g> {
    graph: &'g Graph,
    kind: CostKind,
    pi: Option<BalanceWeights>,
}

impl<'g> CostEvaluator<'g> {
    pub fn new(graph: &'g Graph, kind: CostKind) -> Result<Self> {
        kind.validate()?;
        let pi = kind
            .mode()
            .map(|mode| BalanceWeights::for_graph(graph, mode))
            .transpose()?;
        Ok(CostEvaluator { graph, kind, pi })
    }

    pub fn evaluate(&self, part: &PartitionK) -> Result<f64> {
        let cuts = block_cuts(self.graph, part)?;
        match (self.kind, &self.pi) {
            (CostKind::Cut, _) => Ok(0.5 * cuts.iter().sum::<f64>()),
            (CostKind::Ccb { tau, .. }, Some(w)) => {
                ccb_from_parts(&cuts, &part.masses(w.pi()), tau)
            }
            (CostKind::Bh { p, .. }, Some(w)) => {
                require_two_blocks(part)?;
                bh_from_parts(cuts[0], &part.masses(w.pi()), p)
            }
            _ => unreachable!("balanced costs always carry weights"),
        }
    }
}

/// Upper bound on `k^n` accepted by [`brute_force_min`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

fn better(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - 1e-12 * incumbent.abs().max(1.0)
}

/// Global minimizer over all partitions into exactly `k` nonempty blocks.
///
/// Partitions are enumerated as restricted growth strings (labels renumbered
/// by first occurrence) in lexicographic order; among costs equal to within
/// a relative `1e-12`, the lexicographically smallest labeling wins.
pub fn brute_force_min(g: &Graph, kind: CostKind, k: usize) -> Result<(PartitionK, f64)> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidPartition(format!(
            "cannot split {n} vertices into {k} nonempty blocks"
        )));
    }
    if (k as f64).powi(n as i32) > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!(
            "{k}^{n} labelings exceed the enumeration limit"
        )));
    }
    if matches!(kind, CostKind::Bh { .. }) && k != 2 {
        return Err(Error::InvalidPartition(
            "Bühler–Hein costs are only defined for k = 2".into(),
        ));
    }
    let eval = CostEvaluator::new(g, kind)?;

    // Shard on a fixed-length prefix; shards are merged in prefix order so
    // the tie rule is the same as a sequential scan.
    let prefix_len = n.min(6);
    let mut prefixes = Vec::new();
    let mut stack = vec![(vec![0usize], 1usize)];
    while let Some((prefix, used)) = stack.pop() {
        if prefix.len() == prefix_len {
            prefixes.push((prefix, used));
            continue;
        }
        for l in (0..=used.min(k - 1)).rev() {
            let mut next = prefix.clone();
            next.push(l);
            stack.push((next, used.max(l + 1)));
        }
    }

    let shard_best: Vec<Result<Option<(Vec<usize>, f64)>>> = prefixes
        .par_iter()
        .map(|(prefix, used)| {
            let mut best: Option<(Vec<usize>, f64)> = None;
            let mut labels = prefix.clone();
            labels.resize(n, 0);
            enumerate_suffix(&mut labels, prefix.len(), *used, k, &mut |labels| {
                let part = PartitionK {
                    labels: labels.to_vec(),
                    k,
                };
                let cost = eval.evaluate(&part)?;
                if best.as_ref().is_none_or(|(_, b)| better(cost, *b)) {
                    best = Some((labels.to_vec(), cost));
                }
                Ok(())
            })?;
            Ok(best)
        })
        .collect();

    let mut best: Option<(Vec<usize>, f64)> = None;
    for shard in shard_best {
        if let Some((labels, cost)) = shard? {
            if best.as_ref().is_none_or(|(_, b)| better(cost, *b)) {
                best = Some((labels, cost));
            }
        }
    }
    let (labels, cost) = best.expect("at least one surjective labeling exists");
    Ok((PartitionK { labels, k }, cost))
}

/// Visits every completion of `labels[pos..]` that uses exactly `k` blocks,
/// in lexicographic order.
fn enumerate_suffix(
    labels: &mut [usize],
    pos: usize,
    used: usize,
    k: usize,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    let n = labels.len();
    if n - pos < k.saturating_sub(used) {
        return Ok(());
    }
    if pos == n {
        return if used == k { visit(labels) } else { Ok(()) };
    }
    for l in 0..=used.min(k - 1) {
        labels[pos] = l;
        enumerate_suffix(labels, pos + 1, used.max(l + 1), k, visit)?;
    }
    Ok(())
}

/// Index of the weakly attached vertex in [`toy_graph`].
pub const TOY_WEAK_VERTEX: usize = 6;

/// Seven vertices: triangles `{0,1,2}` and `{3,4,5}` joined by the unit edge
/// `2–3`, plus vertex 6 tied to 0 and 3 by two edges of weight `α/2`.
pub fn toy_graph(alpha: f64) -> Result<Graph> {
    check_unit_interval("alpha", alpha)?;
    let h = 0.5 * alpha;
    Graph::new(
        7,
        [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (0, 2, 1.0),
            (3, 4, 1.0),
            (4, 5, 1.0),
            (3, 5, 1.0),
            (2, 3, 1.0),
            (0, 6, h),
            (3, 6, h),
        ],
    )
}

/// `{6} | rest`.
pub fn toy_singleton_partition() -> PartitionK {
    PartitionK {
        labels: vec![0, 0, 0, 0, 0, 0, 1],
        k: 2,
    }
}

/// `{0,1,2,6} | {3,4,5}`.
pub fn toy_balanced_partition() -> PartitionK {
    PartitionK {
        labels: vec![0, 0, 0, 1, 1, 1, 0],
        k: 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyClass {
    Singleton,
    Balanced,
    Other,
}

impl std::fmt::Display for ToyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ToyClass::Singleton => "singleton",
            ToyClass::Balanced => "balanced",
            ToyClass::Other => "other",
        })
    }
}

/// Classifies a bipartition of the toy graph. The weak vertex may sit on
/// either side of a balanced split.
pub fn classify_toy(part: &PartitionK) -> ToyClass {
    let c = part.canonical();
    let l = c.labels();
    if c.k() != 2 || l.len() != 7 {
        return ToyClass::Other;
    }
    if l[..6].iter().all(|&x| x == 0) && l[6] == 1 {
        return ToyClass::Singleton;
    }
    let left = l[0] == l[1] && l[1] == l[2];
    let right = l[3] == l[4] && l[4] == l[5];
    if left && right && l[0] != l[3] {
        ToyClass::Balanced
    } else {
        ToyClass::Other
    }
}

/// Which normalization family a sweep walks along its parameter axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFamily {
    /// Parameter is `τ`.
    Ccb(BalanceMode),
    /// Parameter is `p`.
    Bh(BalanceMode),
}

impl SweepFamily {
    pub fn cost(&self, param: f64) -> CostKind {
        match *self {
            SweepFamily::Ccb(mode) => CostKind::Ccb { tau: param, mode },
            SweepFamily::Bh(mode) => CostKind::Bh { p: param, mode },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub param: f64,
    pub class: ToyClass,
    pub cost_singleton: f64,
    pub cost_balanced: f64,
    pub cost_best: f64,
}

/// Brute-force 2-way argmin of the toy graph on every `(α, parameter)` cell.
pub fn bifurcation_sweep(
    alphas: &[f64],
    params: &[f64],
    family: SweepFamily,
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::Empty("alpha grid"));
    }
    if params.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| params.iter().map(move |&p| (a, p)))
        .collect();
    cells
        .par_iter()
        .map(|&(alpha, param)| {
            let g = toy_graph(alpha)?;
            let kind = family.cost(param);
            let eval = CostEvaluator::new(&g, kind)?;
            let (best, cost_best) = brute_force_min(&g, kind, 2)?;
            Ok(SweepRow {
                alpha,
                param,
                class: classify_toy(&best),
                cost_singleton: eval.evaluate(&toy_singleton_partition())?,
                cost_balanced: eval.evaluate(&toy_balanced_partition())?,
                cost_best,
            })
        })
        .collect()
}

/// Bisection for the `α` at which the singleton and balanced toy partitions
/// cost the same under `cost_of(α)`. Returns `None` when the difference does
/// not change sign on `[lo, hi]`.
pub fn toy_crossover(
    cost_of: impl Fn(f64) -> CostKind,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let gap = |alpha: f64| -> Result<f64> {
        let g = toy_graph(alpha)?;
        let eval = CostEvaluator::new(&g, cost_of(alpha))?;
        Ok(eval.evaluate(&toy_singleton_partition())? - eval.evaluate(&toy_balanced_partition())?)
    };
    let (mut f_lo, f_hi) = (gap(lo)?, gap(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Ok(None);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = gap(mid)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p3() -> Graph {
        Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn part(labels: &[usize]) -> PartitionK {
        PartitionK::from_labels(labels.to_vec()).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert_eq!(PartitionK::new(vec![0, 0, 2], 3), Err(Error::EmptyBlock(1)));
        assert!(PartitionK::new(vec![0, 3], 2).is_err());
        assert_eq!(part(&[2, 2, 0, 1]).canonical().labels(), &[0, 0, 1, 2]);
    }

    #[test]
    fn cut_examples() {
        assert_eq!(cut_cost(&p3(), &part(&[0, 1, 1])).unwrap(), 1.0);
        let alpha = 0.3;
        let toy = toy_graph(alpha).unwrap();
        assert_abs_diff_eq!(cut_cost(&toy, &toy_singleton_partition()).unwrap(), alpha);
        assert_abs_diff_eq!(
            cut_cost(&toy, &toy_balanced_partition()).unwrap(),
            1.0 + alpha / 2.0,
            epsilon = 1e-15
        );
        assert!(cut_cost(&p3(), &part(&[0, 1, 2])).is_err());
    }

    #[test]
    fn multiway_examples() {
        let tri = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert_eq!(multiway_cut(&tri, &part(&[0, 0, 0])).unwrap(), 0.0);
        assert_eq!(multiway_cut(&tri, &part(&[0, 1, 2])).unwrap(), 3.0);
    }

    #[test]
    fn toy_graph_shape() {
        let g = toy_graph(0.5).unwrap();
        assert_eq!((g.n(), g.edge_count()), (7, 9));
        assert_abs_diff_eq!(g.degrees()[TOY_WEAK_VERTEX], 0.5);
        assert!(toy_graph(1.0).is_err());
        assert!(toy_graph(0.0).is_err());
    }

    #[test]
    fn phi_and_psi_closed_forms() {
        assert_abs_diff_eq!(phi_p(0.25, 2.0).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(psi_tau(0.25, 2.0).unwrap(), 0.75, epsilon = 1e-15);
        for p in [1.1, 2.0, 7.0, 500.0] {
            assert_abs_diff_eq!(phi_p(0.5, p).unwrap(), 1.0, epsilon = 1e-13);
        }
        for tau in [1e-3, 0.5, 2.0, 9.0] {
            assert_abs_diff_eq!(psi_tau(0.5, tau).unwrap(), 1.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(phi_p(0.25, 1000.0).unwrap(), 0.75f64.sqrt(), epsilon = 1e-2);
        assert_abs_diff_eq!(psi_tau(0.3, 1e-6).unwrap(), 1.0, epsilon = 1e-5);
        assert!(phi_p(0.0, 2.0).is_err());
        assert!(phi_p(0.5, 1.0).is_err());
        assert!(psi_tau(1.0, 1.0).is_err());
        assert!(psi_tau(0.5, 0.0).is_err());
    }

    #[test]
    fn ccb_on_path() {
        // {0} | {1,2}, π = 1, τ = 2: ½ (1/(2·1) + 1/(2·2)) = 3/8
        let g = p3();
        let w = BalanceWeights::for_graph(&g, BalanceMode::Ratio).unwrap();
        let pt = part(&[0, 1, 1]);
        assert_abs_diff_eq!(ccb_cost(&g, &pt, 2.0, &w).unwrap(), 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(
            ccb_cost_matrix_form(&g, &pt, 2.0, &w).unwrap(),
            0.375,
            epsilon = 1e-15
        );
        assert_eq!(ccb_cost(&g, &part(&[0, 0, 0]), 1.0, &w).unwrap(), 0.0);
        assert_eq!(
            ccb_cost_matrix_form(&g, &part(&[0, 0, 0]), 1.0, &w).unwrap(),
            0.0
        );
        assert!(ccb_cost(&g, &pt, 2.5, &w).is_err());
        assert!(ccb_cost(&g, &pt, 0.0, &w).is_err());
    }

    #[test]
    fn ratio_cut_critical_value_on_toy_graph() {
        let tau2 = |alpha: f64| {
            let g = toy_graph(alpha).unwrap();
            let w = BalanceWeights::for_graph(&g, BalanceMode::Ratio).unwrap();
            (
                ccb_cost(&g, &toy_singleton_partition(), 2.0, &w).unwrap(),
                ccb_cost(&g, &toy_balanced_partition(), 2.0, &w).unwrap(),
            )
        };
        let (s, b) = tau2(2.0 / 3.0);
        assert_abs_diff_eq!(s, b, epsilon = 1e-14);
        let (s, b) = tau2(0.5);
        assert!(s < b);
        let (s, b) = tau2(0.8);
        assert!(s > b);
    }

    #[test]
    fn brute_force_examples() {
        let toy = toy_graph(0.1).unwrap();
        let (best, cost) = brute_force_min(&toy, CostKind::Cut, 2).unwrap();
        assert_eq!(classify_toy(&best), ToyClass::Singleton);
        assert_abs_diff_eq!(cost, 0.1, epsilon = 1e-15);

        let ncut = CostKind::Ccb {
            tau: 2.0,
            mode: BalanceMode::Normalized,
        };
        let (best, _) = brute_force_min(&toy, ncut, 2).unwrap();
        assert_eq!(classify_toy(&best), ToyClass::Balanced);

        let (best, cost) = brute_force_min(&p3(), CostKind::Cut, 2).unwrap();
        assert_eq!(cost, 1.0);
        // lexicographically smallest of {0,1}|{2} and {0}|{1,2}
        assert_eq!(best.labels(), &[0, 0, 1]);
    }

    #[test]
    fn brute_force_guards() {
        let big = Graph::new(30, (0..29).map(|i| (i, i + 1, 1.0))).unwrap();
        assert!(matches!(
            brute_force_min(&big, CostKind::Cut, 2),
            Err(Error::TooLarge(_))
        ));
        assert!(brute_force_min(&p3(), CostKind::Cut, 4).is_err());
        let bh = CostKind::Bh {
            p: 2.0,
            mode: BalanceMode::Ratio,
        };
        assert!(brute_force_min(&p3(), bh, 3).is_err());
    }

    #[test]
    fn brute_force_counts_set_partitions() {
        // Stirling numbers S(6, 3) = 90 partitions; count visits directly.
        let mut labels = vec![0; 6];
        let mut count = 0;
        enumerate_suffix(&mut labels, 1, 1, 3, &mut |_| {
            count += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(count, 90);
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        assert!(bifurcation_sweep(&[], &[1.0], SweepFamily::Ccb(BalanceMode::Ratio)).is_err());
        assert!(bifurcation_sweep(&[0.5], &[], SweepFamily::Ccb(BalanceMode::Ratio)).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(
            classify_toy(&toy_singleton_partition()),
            ToyClass::Singleton
        );
        assert_eq!(classify_toy(&toy_balanced_partition()), ToyClass::Balanced);
        assert_eq!(
            classify_toy(&part(&[1, 1, 1, 0, 0, 0, 0])),
            ToyClass::Balanced
        );
        assert_eq!(classify_toy(&part(&[0, 1, 1, 1, 1, 1, 1])), ToyClass::Other);
    }
}
