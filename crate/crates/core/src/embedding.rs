//! Constraint elimination and the reduced Rayleigh-quotient operator.
//!
//! Embeddings `Y` (n × k) must satisfy `YᵀΠY = I` and `YᵀΠ1 = 0`. With
//! `q = Π^{1/2}1 / ‖Π^{1/2}1‖` and the sparse choice
//! `Mᵀ = [q̂ | −q₁ I]`, the map `G ↦ Π^{−1/2} B G`, `B = M (MᵀM)^{−1/2}`,
//! carries orthonormal `(n−1) × k` matrices onto exactly those embeddings.
//! `B` is never formed: `Bᵀ = [q̂ | −I + q̂q̂ᵀ/(1+q₁)]`, so both `B x` and
//! `Bᵀ r` cost `O(n)`.

use nalgebra::DMatrix;

use crate::eigen::{column, column_mut, eigensolve_smallest, EigenOptions, SymmetricOperator};
use crate::error::{Error, Result};
use crate::graph::{check_len, BalanceWeights, Graph};
use crate::irrq::ReweightState;

/// Implicit factors of the constraint-eliminating bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEliminator {
    q: Vec<f64>,
    sqrt_pi: Vec<f64>,
}

impl ConstraintEliminator {
    pub fn new(w: &BalanceWeights) -> Result<Self> {
        let pi = w.pi();
        if pi.len() < 2 {
            return Err(Error::Config("need at least two vertices".into()));
        }
        if let Some(index) = pi.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::NonpositiveBalance {
                index,
                value: pi[index],
            });
        }
        let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
        let scale = w.total().sqrt();
        let q = sqrt_pi.iter().map(|s| s / scale).collect();
        Ok(ConstraintEliminator { q, sqrt_pi })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn q_hat(&self) -> &[f64] {
        &self.q[1..]
    }

    pub fn sqrt_pi(&self) -> &[f64] {
        &self.sqrt_pi
    }

    /// `B x` for `x` of length `n − 1`.
    pub fn expand_into(&self, x: &[f64], out: &mut [f64]) {
        let q_hat = self.q_hat();
        let c: f64 = q_hat.iter().zip(x).map(|(a, b)| a * b).sum();
        let s = c / (1.0 + self.q[0]);
        out[0] = c;
        for ((o, &xi), &qi) in out[1..].iter_mut().zip(x).zip(q_hat) {
            *o = -xi + s * qi;
        }
    }

    /// `Bᵀ r` for `r` of length `n`.
    pub fn contract_into(&self, r: &[f64], out: &mut [f64]) {
        let rq: f64 = r.iter().zip(&self.q).map(|(a, b)| a * b).sum();
        let s = (r[0] + rq) / (1.0 + self.q[0]);
        for ((o, &ri), &qi) in out.iter_mut().zip(&r[1..]).zip(self.q_hat()) {
            *o = s * qi - ri;
        }
    }

    /// `ℵ(G) = Π^{−1/2} B G`; `G` must have orthonormal columns.
    pub fn aleph(&self, g: &DMatrix<f64>) -> Result<Embedding> {
        let n = self.n();
        check_len(n - 1, g.nrows())?;
        let dev = orthonormality_error(g);
        if dev > 1e-8 {
            return Err(Error::NotOrthonormal(dev));
        }
        let mut y = DMatrix::zeros(n, g.ncols());
        for j in 0..g.ncols() {
            let out = column_mut(&mut y, j);
            self.expand_into(column(g, j), out);
            for (v, s) in out.iter_mut().zip(&self.sqrt_pi) {
                *v /= s;
            }
        }
        Ok(Embedding { y })
    }

    /// `ℶ(Y) = B^† Π^{1/2} Y`, the inverse of [`Self::aleph`]. Since
    /// `BᵀB = I`, the pseudo-inverse is `Bᵀ`.
    pub fn beth(&self, y: &Embedding) -> Result<DMatrix<f64>> {
        let n = self.n();
        check_len(n, y.n())?;
        let dev = y.constraint_error(&self.pi());
        if dev > 1e-6 {
            return Err(Error::ConstraintViolation(dev));
        }
        let mut g = DMatrix::zeros(n - 1, y.k());
        let mut scaled = vec![0.0; n];
        for j in 0..y.k() {
            for ((s, &v), &r) in scaled.iter_mut().zip(column(&y.y, j)).zip(&self.sqrt_pi) {
                *s = v * r;
            }
            self.contract_into(&scaled, column_mut(&mut g, j));
        }
        Ok(g)
    }

    fn pi(&self) -> Vec<f64> {
        self.sqrt_pi.iter().map(|s| s * s).collect()
    }
}

/// `max |GᵀG − I|`.
pub fn orthonormality_error(g: &DMatrix<f64>) -> f64 {
    let gram = g.transpose() * g;
    (gram - DMatrix::identity(g.ncols(), g.ncols())).amax()
}

/// Relaxed indicator matrix; row `i` holds the coordinates of vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    y: DMatrix<f64>,
}

impl Embedding {
    pub fn from_matrix(y: DMatrix<f64>) -> Self {
        Embedding { y }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.y
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn k(&self) -> usize {
        self.y.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        column(&self.y, j)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.y.row(i).iter().copied().collect()
    }

    /// Largest deviation in `YᵀΠY = I` and `YᵀΠ1 = 0`.
    pub fn constraint_error(&self, pi: &[f64]) -> f64 {
        let k = self.k();
        let mut worst = 0.0f64;
        for a in 0..k {
            let ya = column(&self.y, a);
            let balance: f64 = ya.iter().zip(pi).map(|(v, p)| v * p).sum();
            worst = worst.max(balance.abs());
            for b in a..k {
                let yb = column(&self.y, b);
                let g: f64 = ya.iter().zip(yb).zip(pi).map(|((u, v), p)| u * v * p).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// `Σ_{(i,j) ∈ E} w_{ij} γ_{ij} ‖ŷ_i − ŷ_j‖²`, which is `tr(Yᵀ L̂ Y)`.
    pub fn weighted_dirichlet(&self, g: &Graph, gamma: Option<&[f64]>) -> f64 {
        let mut total = 0.0;
        for (idx, e) in g.edges().iter().enumerate() {
            let gm = gamma.map_or(1.0, |gm| gm[idx]);
            total += e.w * gm * self.row_distance_sq(e.i, e.j);
        }
        total
    }

    pub fn row_distance_sq(&self, i: usize, j: usize) -> f64 {
        let n = self.n();
        let data = self.y.as_slice();
        (0..self.k())
            .map(|c| {
                let d = data[c * n + i] - data[c * n + j];
                d * d
            })
            .sum()
    }
}

/// `Bᵀ Π^{−1/2} L̂ Π^{−1/2} B` where `L̂` is the Laplacian of `W ⊙ Γ`.
pub struct ReducedOperator<'a> {
    elim: &'a ConstraintEliminator,
    graph: &'a Graph,
    gamma: Option<&'a [f64]>,
}

impl<'a> ReducedOperator<'a> {
    pub fn new(
        elim: &'a ConstraintEliminator,
        graph: &'a Graph,
        gamma: Option<&'a [f64]>,
    ) -> Result<Self> {
        check_len(graph.n(), elim.n())?;
        if let Some(g) = gamma {
            check_len(graph.edge_count(), g.len())?;
        }
        Ok(ReducedOperator { elim, graph, gamma })
    }
}

impl SymmetricOperator for ReducedOperator<'_> {
    fn dim(&self) -> usize {
        self.elim.n() - 1
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.elim.n();
        let mut p = vec![0.0; n];
        self.elim.expand_into(x, &mut p);
        for (v, s) in p.iter_mut().zip(self.elim.sqrt_pi()) {
            *v /= s;
        }
        let mut r = vec![0.0; n];
        self.graph
            .weighted_laplacian_apply_into(&p, self.gamma, &mut r)
            .expect("dimensions checked at construction");
        for (v, s) in r.iter_mut().zip(self.elim.sqrt_pi()) {
            *v /= s;
        }
        self.elim.contract_into(&r, out);
    }

    /// With `M = Π^{−1/2} L̂ Π^{−1/2}` and column `t` of `B` written as
    /// `−e_{t+1} + q_{t+1} c`, `c = (1, q̂/(1+q₁))`, the diagonal entry is
    /// `M_{t+1,t+1} − 2 q_{t+1} (Mc)_{t+1} + q_{t+1}² cᵀMc`.
    fn diagonal(&self) -> Option<Vec<f64>> {
        let n = self.elim.n();
        let q = self.elim.q();
        let sp = self.elim.sqrt_pi();
        let mut wdeg = vec![0.0; n];
        for (idx, e) in self.graph.edges().iter().enumerate() {
            let w = e.w * self.gamma.map_or(1.0, |g| g[idx]);
            wdeg[e.i] += w;
            wdeg[e.j] += w;
        }
        let mut c: Vec<f64> = q.iter().map(|v| v / (1.0 + q[0])).collect();
        c[0] = 1.0;
        let scaled: Vec<f64> = c.iter().zip(sp).map(|(v, s)| v / s).collect();
        let mut mc = vec![0.0; n];
        self.graph
            .weighted_laplacian_apply_into(&scaled, self.gamma, &mut mc)
            .expect("dimensions checked at construction");
        for (v, s) in mc.iter_mut().zip(sp) {
            *v /= s;
        }
        let cmc: f64 = c.iter().zip(&mc).map(|(a, b)| a * b).sum();
        Some(
            (1..n)
                .map(|i| wdeg[i] / (sp[i] * sp[i]) - 2.0 * q[i] * mc[i] + q[i] * q[i] * cmc)
                .collect(),
        )
    }
}

/// One product with the reduced operator for the reweighted graph.
pub fn apply_reduced_operator(
    e: &ConstraintEliminator,
    g: &Graph,
    gamma: &ReweightState,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_len(e.n() - 1, x.len())?;
    let op = ReducedOperator::new(e, g, Some(gamma.gamma()))?;
    let mut out = vec![0.0; e.n() - 1];
    op.apply(x, &mut out);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct WeightedStep {
    pub embedding: Embedding,
    /// Orthonormal `(n−1) × k` preimage of the embedding.
    pub reduced: DMatrix<f64>,
    /// The `k` smallest eigenvalues of the reduced operator.
    pub eigenvalues: Vec<f64>,
    pub eig_iterations: usize,
}

/// Minimizes `Σ w γ ‖ŷ_i − ŷ_j‖²` under both embedding constraints by taking
/// the `k` lowest eigenvectors of the reduced operator (rotation `H = I`).
pub fn solve_weighted_step(
    g: &Graph,
    gamma: Option<&[f64]>,
    k: usize,
    w: &BalanceWeights,
    opts: &EigenOptions,
    warm: Option<&DMatrix<f64>>,
) -> Result<WeightedStep> {
    let elim = ConstraintEliminator::new(w)?;
    solve_with_eliminator(&elim, g, gamma, k, opts, warm)
}

pub(crate) fn solve_with_eliminator(
    elim: &ConstraintEliminator,
    g: &Graph,
    gamma: Option<&[f64]>,
    k: usize,
    opts: &EigenOptions,
    warm: Option<&DMatrix<f64>>,
) -> Result<WeightedStep> {
    if k == 0 || k >= g.n() {
        return Err(Error::Config(format!(
            "embedding dimension k = {k} must be in 1..{}",
            g.n()
        )));
    }
    let op = ReducedOperator::new(elim, g, gamma)?;
    let eig = eigensolve_smallest(&op, k, opts, warm)?;
    let mut reduced = eig.vectors;
    let embedding = elim.aleph(&reduced)?;
    // sign convention applies to the embedding columns
    let mut y = embedding.into_matrix();
    for j in 0..k {
        let col = column(&y, j);
        let mut best = 0.0f64;
        for &v in col {
            if v.abs() > best.abs() + 1e-12 {
                best = v;
            }
        }
        if best < 0.0 {
            column_mut(&mut y, j).iter_mut().for_each(|v| *v = -*v);
            column_mut(&mut reduced, j)
                .iter_mut()
                .for_each(|v| *v = -*v);
        }
    }
    Ok(WeightedStep {
        embedding: Embedding::from_matrix(y),
        reduced,
        eigenvalues: eig.values,
        eig_iterations: eig.iterations,
    })
}
