//! Iteratively reweighted Rayleigh-quotient minimization.
//!
//! Approximates `min Σ_{i,j} w_{ij} ‖ŷ_i − ŷ_j‖_τ^τ` subject to `YᵀΠY = I` by
//! solving a sequence of reweighted quadratic problems. Each pass solves
//! the constrained weighted problem exactly (an eigenproblem on the reduced
//! operator), shrinks the regularizer `ε` from the `(κ+1)`-th largest
//! weighted residual, and recomputes the edge multipliers
//! `γ = [w ‖Δ‖² + ε²]^{τ/2 − 1}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::costs::check_tau;
use crate::eigen::EigenOptions;
use crate::embedding::{solve_with_eliminator, ConstraintEliminator, Embedding};
use crate::error::{Error, Result};
use crate::graph::{BalanceWeights, Graph};
use crate::partition::kmeans;

/// Floor applied to a zero reweighting base when `τ < 2`.
pub const GAMMA_BASE_FLOOR: f64 = 1e-300;

/// Per-edge multipliers `γ` (aligned with [`Graph::edges`]) and the
/// current regularizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightState {
    gamma: Vec<f64>,
    epsilon: f64,
    iteration: usize,
}

impl ReweightState {
    /// `γ ≡ 1`, `ε = 1`.
    pub fn unity(g: &Graph) -> Self {
        ReweightState {
            gamma: vec![1.0; g.edge_count()],
            epsilon: 1.0,
            iteration: 0,
        }
    }

    pub fn new(gamma: Vec<f64>, epsilon: f64, iteration: usize) -> Result<Self> {
        if let Some(i) = gamma.iter().position(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::domain("gamma", gamma[i], "(0, inf)"));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::domain("epsilon", epsilon, "[0, inf)"));
        }
        Ok(ReweightState {
            gamma,
            epsilon,
            iteration,
        })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrrqConfig {
    pub tau: f64,
    /// Embedding columns.
    pub k: usize,
    pub kappa_tilde: f64,
    pub max_iters: usize,
    pub rel_cost_tol: f64,
    pub eig_tol: f64,
    pub eig_max_iters: usize,
    pub seed: u64,
}

impl Default for IrrqConfig {
    fn default() -> Self {
        IrrqConfig {
            tau: 1.0,
            k: 1,
            kappa_tilde: 1e-4,
            max_iters: 50,
            rel_cost_tol: 0.01,
            eig_tol: 1e-8,
            eig_max_iters: 5000,
            seed: 0,
        }
    }
}

impl IrrqConfig {
    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if !(self.kappa_tilde > 0.0 && self.kappa_tilde < 1.0) {
            return Err(Error::domain("kappa_tilde", self.kappa_tilde, "(0, 1)"));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if !(self.rel_cost_tol >= 0.0) {
            return Err(Error::domain("rel_cost_tol", self.rel_cost_tol, "[0, inf)"));
        }
        if !(self.eig_tol > 0.0) {
            return Err(Error::domain("eig_tol", self.eig_tol, "(0, inf)"));
        }
        Ok(())
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            tol: self.eig_tol,
            max_iters: self.eig_max_iters,
            ..EigenOptions::default()
        }
    }
}

/// `J_τ(Y) = Σ_{i,j} w_{ij} ‖ŷ_i − ŷ_j‖_τ^τ` over ordered pairs, i.e. twice
/// the sum over stored edges.
pub fn j_tau(g: &Graph, y: &Embedding, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    crate::graph::check_len(g.n(), y.n())?;
    let n = y.n();
    let data = y.matrix().as_slice();
    let mut total = 0.0;
    for e in g.edges() {
        let mut s = 0.0;
        for c in 0..y.k() {
            let d = (data[c * n + e.i] - data[c * n + e.j]).abs();
            s += if tau == 2.0 { d * d } else { d.powf(tau) };
        }
        total += e.w * s;
    }
    Ok(2.0 * total)
}

/// `γ_{ij} = [w_{ij} ‖ŷ_i − ŷ_j‖² + ε²]^{τ/2 − 1}`.
pub fn update_gamma(g: &Graph, y: &Embedding, epsilon: f64, tau: f64) -> Result<Vec<f64>> {
    gamma_with(g, y, epsilon, tau, None)
}

fn gamma_with(
    g: &Graph,
    y: &Embedding,
    epsilon: f64,
    tau: f64,
    floor_hits: Option<&mut usize>,
) -> Result<Vec<f64>> {
    check_tau(tau)?;
    crate::graph::check_len(g.n(), y.n())?;
    if !(epsilon >= 0.0) {
        return Err(Error::domain("epsilon", epsilon, "[0, inf)"));
    }
    if tau == 2.0 {
        return Ok(vec![1.0; g.edge_count()]);
    }
    let exponent = 0.5 * tau - 1.0;
    let eps2 = epsilon * epsilon;
    let mut hits = 0usize;
    let mut out = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        let mut base = e.w * y.row_distance_sq(e.i, e.j) + eps2;
        if base <= 0.0 {
            if floor_hits.is_none() {
                return Err(Error::DegenerateGamma { i: e.i, j: e.j });
            }
            hits += 1;
            base = GAMMA_BASE_FLOOR;
        }
        out.push(base.powf(exponent));
    }
    if let Some(h) = floor_hits {
        *h += hits;
    }
    Ok(out)
}

/// `√w_{ij} ‖ŷ_i − ŷ_j‖₂` for every edge, each listed once per orientation,
/// sorted descending.
pub fn weighted_residuals(g: &Graph, y: &Embedding) -> Vec<f64> {
    let mut r = Vec::with_capacity(2 * g.edge_count());
    for e in g.edges() {
        let v = (e.w * y.row_distance_sq(e.i, e.j)).sqrt();
        r.push(v);
        r.push(v);
    }
    r.sort_by(|a, b| b.total_cmp(a));
    r
}

/// `ε ← min(ε, r(Y)_{κ+1} / n)`; `r` is zero past the end of the list.
pub fn update_epsilon(g: &Graph, y: &Embedding, epsilon: f64, kappa: usize) -> f64 {
    let r = weighted_residuals(g, y);
    let r_next = r.get(kappa).copied().unwrap_or(0.0);
    epsilon.min(r_next / g.n() as f64)
}

/// `θ̂`: twice the number of edges whose endpoints land in different
/// clusters when the rows of `y0` are clustered into `clusters` groups.
pub fn estimate_theta(g: &Graph, y0: &Embedding, clusters: usize, seed: u64) -> Result<usize> {
    if clusters <= 1 {
        return Ok(0);
    }
    let km = kmeans(y0.matrix(), clusters, seed)?;
    let labels = km.labels.labels();
    let crossing = g
        .edges()
        .iter()
        .filter(|e| labels[e.i] != labels[e.j])
        .count();
    Ok(2 * crossing)
}

/// `κ = θ̂ + κ̃ (2|E| − θ̂)`, rounded half away from zero and clamped to
/// `[θ̂, 2|E|]`.
pub fn kappa_from(theta_hat: usize, kappa_tilde: f64, edge_count: usize) -> usize {
    let top = 2 * edge_count;
    let theta = theta_hat.min(top);
    let raw = theta as f64 + kappa_tilde * (top - theta) as f64;
    (raw.round() as usize).clamp(theta, top)
}

/// How the first reweighting is chosen.
#[derive(Debug, Clone, Default)]
pub enum InitialWeights {
    /// `γ ≡ 1`: the first iterate is the Laplacian-eigenmap embedding.
    #[default]
    Unity,
    /// `γ = ‖Δ‖_τ^τ / ‖Δ‖₂²` from a supplied embedding (1 where `Δ = 0`);
    /// the first iterate solves with these weights.
    LpRatio(Embedding),
    /// The supplied embedding is taken as the first iterate, and the run
    /// continues with the regularized weights computed from it.
    Regularized(Embedding),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub j_tau: f64,
    pub epsilon: f64,
    pub eig_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `τ = 2`: weights never change.
    Quadratic,
    RelativeChange,
    EpsilonZero,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct IrrqResult {
    pub embedding: Embedding,
    pub trace: Vec<TraceRow>,
    pub theta_hat: usize,
    pub kappa: usize,
    pub stop: StopReason,
    /// Edges whose reweighting base had to be floored.
    pub floored_gammas: usize,
}

impl IrrqResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

pub fn irrq_solve(g: &Graph, cfg: &IrrqConfig, w: &BalanceWeights) -> Result<IrrqResult> {
    irrq_solve_with(g, cfg, w, InitialWeights::Unity)
}

pub fn irrq_solve_with(
    g: &Graph,
    cfg: &IrrqConfig,
    w: &BalanceWeights,
    init: InitialWeights,
) -> Result<IrrqResult> {
    cfg.validate()?;
    crate::graph::check_len(g.n(), w.len())?;
    if cfg.k >= g.n() {
        return Err(Error::Config(format!(
            "embedding dimension k = {} must be below n = {}",
            cfg.k,
            g.n()
        )));
    }
    let elim = ConstraintEliminator::new(w)?;
    let opts = cfg.eigen_options();
    let tau = cfg.tau;

    let mut trace = Vec::new();
    let (mut y, mut reduced, theta_source) = match init {
        InitialWeights::Unity => {
            let step = solve_with_eliminator(&elim, g, None, cfg.k, &opts, None)?;
            trace.push(TraceRow {
                iter: 1,
                j_tau: j_tau(g, &step.embedding, tau)?,
                epsilon: 1.0,
                eig_iters: step.eig_iterations,
            });
            (step.embedding, step.reduced, None)
        }
        InitialWeights::LpRatio(y0) => {
            check_embedding(&y0, g, cfg.k)?;
            let gamma0 = lp_ratio_weights(g, &y0, tau);
            let step = solve_with_eliminator(&elim, g, Some(&gamma0), cfg.k, &opts, None)?;
            trace.push(TraceRow {
                iter: 1,
                j_tau: j_tau(g, &step.embedding, tau)?,
                epsilon: 1.0,
                eig_iters: step.eig_iterations,
            });
            (step.embedding, step.reduced, Some(y0))
        }
        InitialWeights::Regularized(y0) => {
            check_embedding(&y0, g, cfg.k)?;
            let reduced = elim.beth(&y0)?;
            trace.push(TraceRow {
                iter: 1,
                j_tau: j_tau(g, &y0, tau)?,
                epsilon: 1.0,
                eig_iters: 0,
            });
            (y0, reduced, None)
        }
    };

    let theta_hat = estimate_theta(g, theta_source.as_ref().unwrap_or(&y), cfg.k + 1, cfg.seed)?;
    let kappa = kappa_from(theta_hat, cfg.kappa_tilde, g.edge_count());

    let mut floored = 0usize;
    let mut epsilon = 1.0f64;
    let stop = if tau == 2.0 {
        StopReason::Quadratic
    } else {
        loop {
            // steps (b) and (c) on the latest iterate
            epsilon = update_epsilon(g, &y, epsilon, kappa);
            if epsilon == 0.0 {
                break StopReason::EpsilonZero;
            }
            if trace.len() >= cfg.max_iters {
                break StopReason::MaxIterations;
            }
            let before = floored;
            let gamma = gamma_with(g, &y, epsilon, tau, Some(&mut floored))?;
            if floored > before {
                tracing::warn!(
                    edges = floored - before,
                    "reweighting base was zero; floored at {GAMMA_BASE_FLOOR:e}"
                );
            }
            // step (a)
            let step = solve_with_eliminator(&elim, g, Some(&gamma), cfg.k, &opts, Some(&reduced))?;
            let prev = trace.last().map(|r| r.j_tau).unwrap_or(f64::INFINITY);
            let current = j_tau(g, &step.embedding, tau)?;
            trace.push(TraceRow {
                iter: trace.len() + 1,
                j_tau: current,
                epsilon,
                eig_iters: step.eig_iterations,
            });
            y = step.embedding;
            reduced = step.reduced;
            if current == 0.0 || (prev - current).abs() <= cfg.rel_cost_tol * current {
                break StopReason::RelativeChange;
            }
        }
    };

    Ok(IrrqResult {
        embedding: y,
        trace,
        theta_hat,
        kappa,
        stop,
        floored_gammas: floored,
    })
}

fn check_embedding(y: &Embedding, g: &Graph, k: usize) -> Result<()> {
    crate::graph::check_len(g.n(), y.n())?;
    crate::graph::check_len(k, y.k())
}

fn lp_ratio_weights(g: &Graph, y: &Embedding, tau: f64) -> Vec<f64> {
    let n = y.n();
    let data = y.matrix().as_slice();
    g.edges()
        .iter()
        .map(|e| {
            let (mut lp, mut l2) = (0.0, 0.0);
            for c in 0..y.k() {
                let d = (data[c * n + e.i] - data[c * n + e.j]).abs();
                lp += d.powf(tau);
                l2 += d * d;
            }
            if l2 > 0.0 {
                lp / l2
            } else {
                1.0
            }
        })
        .collect()
}

/// Right-multiplies an embedding by a `k × k` matrix.
pub fn rotate(y: &Embedding, h: &DMatrix<f64>) -> Embedding {
    Embedding::from_matrix(y.matrix() * h)
}
