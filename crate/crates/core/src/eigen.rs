//! Smallest eigenpairs of symmetric operators.
//!
//! Small problems are materialized and handed to a dense symmetric
//! eigensolver. Larger ones use block LOBPCG with only matrix-free access to
//! the operator: the search space `[X, R, P]` is orthonormalized column by
//! column while the same column operations are replayed on the cached
//! operator images, so each iteration costs one product per active residual.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symmetric linear map accessed only through products.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);

    /// Diagonal entries, if cheap; enables Jacobi preconditioning.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Dense symmetric matrix as an operator.
pub struct DenseOperator(pub DMatrix<f64>);

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.0.nrows();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                let col = &self.0.as_slice()[j * n..(j + 1) * n];
                for (o, &a) in out.iter_mut().zip(col) {
                    *o += a * xj;
                }
            }
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.0.diagonal().iter().copied().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Residual bound `‖A u − λ u‖ ≤ tol · max(|λ|, ‖A‖)`, with `‖A‖`
    /// estimated from below by the largest diagonal entry and Ritz value.
    pub tol: f64,
    pub max_iters: usize,
    /// Operators of at most this dimension are solved densely.
    pub dense_threshold: usize,
    /// Extra block columns beyond the requested `k`.
    pub guard: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iters: 5000,
            dense_threshold: 200,
            guard: 4,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// `dim × k`, orthonormal columns.
    pub vectors: DMatrix<f64>,
    /// Block iterations taken (0 for the dense path).
    pub iterations: usize,
    /// Operator applications, counted per vector.
    pub applications: usize,
}

pub(crate) fn column(m: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[j * n..(j + 1) * n]
}

pub(crate) fn column_mut(m: &mut DMatrix<f64>, j: usize) -> &mut [f64] {
    let n = m.nrows();
    &mut m.as_mut_slice()[j * n..(j + 1) * n]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn fix_signs(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let col = column_mut(m, j);
        let mut best = 0.0f64;
        for &v in col.iter() {
            if v.abs() > best.abs() + 1e-12 {
                best = v;
            }
        }
        if best < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Materializes `op` by applying it to the unit vectors.
pub fn materialize(op: &dyn SymmetricOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, column_mut(&mut a, j));
        e[j] = 0.0;
    }
    (&a + a.transpose()) * 0.5
}

/// Ascending eigenpairs of a dense symmetric matrix.
pub fn dense_symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// The `k` smallest eigenpairs of `op`. `warm` optionally seeds the block
/// with approximate eigenvectors (any number of columns of length `dim`).
pub fn eigensolve_smallest(
    op: &dyn SymmetricOperator,
    k: usize,
    opts: &EigenOptions,
    warm: Option<&DMatrix<f64>>,
) -> Result<EigenResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "requested {k} eigenpairs of a {n}-dimensional operator"
        )));
    }
    if let Some(w) = warm {
        crate::graph::check_len(n, w.nrows())?;
    }
    // LOBPCG needs room for three blocks
    let mut result = if n <= opts.dense_threshold || 3 * k > n {
        let (values, vectors) = dense_symmetric_eigen(&materialize(op));
        EigenResult {
            values: values[..k].to_vec(),
            vectors: vectors.columns(0, k).into_owned(),
            iterations: 0,
            applications: n,
        }
    } else {
        lobpcg(op, k, opts, warm)?
    };
    fix_signs(&mut result.vectors);
    Ok(result)
}

/// Column block with cached operator images.
struct Block {
    vecs: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
}

impl Block {
    fn new() -> Self {
        Block {
            vecs: Vec::new(),
            images: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.vecs.len()
    }

    /// Orthogonalizes `v` (and its image, if known) against the block twice,
    /// normalizes, and appends unless it collapsed below `drop_tol`.
    fn push_orthonormal(
        &mut self,
        mut v: Vec<f64>,
        mut image: Option<Vec<f64>>,
        drop_tol: f64,
    ) -> bool {
        let start = norm(&v);
        if start == 0.0 || !start.is_finite() {
            return false;
        }
        for _ in 0..2 {
            for (u, au) in self.vecs.iter().zip(&self.images) {
                let c = dot(u, &v);
                axpy(-c, u, &mut v);
                if let Some(img) = image.as_mut() {
                    axpy(-c, au, img);
                }
            }
        }
        let nv = norm(&v);
        if nv <= drop_tol * start {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        if let Some(img) = image.as_mut() {
            img.iter_mut().for_each(|x| *x /= nv);
        }
        self.vecs.push(v);
        // images are filled in by the caller when unknown
        self.images.push(image.unwrap_or_default());
        true
    }
}

fn lobpcg(
    op: &dyn SymmetricOperator,
    k: usize,
    opts: &EigenOptions,
    warm: Option<&DMatrix<f64>>,
) -> Result<EigenResult> {
    let n = op.dim();
    let m = (k + opts.guard).min(n / 3).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut applications = 0usize;
    let apply = |x: &[f64], applications: &mut usize| {
        let mut out = vec![0.0; n];
        op.apply(x, &mut out);
        *applications += 1;
        out
    };

    // initial block: warm columns first, then random fill
    let mut x_block = Block::new();
    if let Some(w) = warm {
        for j in 0..w.ncols().min(m) {
            x_block.push_orthonormal(column(w, j).to_vec(), None, 1e-10);
        }
    }
    while x_block.len() < m {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        x_block.push_orthonormal(v, None, 1e-10);
    }
    for j in 0..m {
        x_block.images[j] = apply(&x_block.vecs[j], &mut applications);
    }

    let diag = op.diagonal();
    let mut scale = diag
        .as_ref()
        .map_or(0.0, |d| d.iter().fold(0.0f64, |a, &v| a.max(v.abs())));
    let (mut x, mut ax, mut theta, top) = rayleigh_ritz(&x_block, m);
    scale = scale.max(top.abs());
    if scale == 0.0 {
        scale = 1.0;
    }
    let mut p: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;
    let mut worst = f64::INFINITY;

    for iter in 1..=opts.max_iters {
        if iter % 20 == 0 {
            // refresh cached images to stop drift
            for j in 0..m {
                ax[j] = apply(&x[j], &mut applications);
            }
        }
        let mut residuals = Vec::with_capacity(m);
        let mut converged = true;
        worst = 0.0;
        for j in 0..m {
            let mut r = ax[j].clone();
            axpy(-theta[j], &x[j], &mut r);
            let rn = norm(&r);
            let bound = opts.tol * theta[j].abs().max(scale);
            if j < k {
                worst = worst.max(rn / theta[j].abs().max(scale));
                converged &= rn <= bound;
            }
            residuals.push((r, rn, bound));
        }
        if converged {
            // confirm with exact images
            let mut ok = true;
            for j in 0..k {
                let exact = apply(&x[j], &mut applications);
                let mut r = exact.clone();
                axpy(-theta[j], &x[j], &mut r);
                ok &= norm(&r) <= opts.tol * theta[j].abs().max(scale);
                ax[j] = exact;
            }
            if ok {
                return Ok(finish(x, theta, k, n, iter, applications));
            }
            continue;
        }

        let mut basis = Block::new();
        for j in 0..m {
            basis.vecs.push(x[j].clone());
            basis.images.push(ax[j].clone());
        }
        let first_r = basis.len();
        for (mut r, rn, bound) in residuals {
            // residuals of locked pairs are mostly rounding noise
            if rn > 0.01 * bound {
                if let Some(d) = diag.as_ref() {
                    for (ri, &di) in r.iter_mut().zip(d) {
                        if di > 0.0 {
                            *ri /= di;
                        }
                    }
                }
                basis.push_orthonormal(r, None, 1e-10);
            }
        }
        for j in first_r..basis.len() {
            basis.images[j] = apply(&basis.vecs[j], &mut applications);
        }
        if let Some((pv, pav)) = p.take() {
            for (v, av) in pv.into_iter().zip(pav) {
                basis.push_orthonormal(v, Some(av), 1e-8);
            }
        }

        let (vals, coeffs) = projected_eigen(&basis);
        let dim = basis.len();
        scale = scale.max(vals[dim - 1].abs());
        let mut new_x = Vec::with_capacity(m);
        let mut new_ax = Vec::with_capacity(m);
        let mut new_p = Vec::with_capacity(m);
        let mut new_ap = Vec::with_capacity(m);
        for c in 0..m {
            let mut xv = vec![0.0; n];
            let mut axv = vec![0.0; n];
            let mut pv = vec![0.0; n];
            let mut apv = vec![0.0; n];
            for s in 0..dim {
                let w = coeffs[(s, c)];
                if w == 0.0 {
                    continue;
                }
                axpy(w, &basis.vecs[s], &mut xv);
                axpy(w, &basis.images[s], &mut axv);
                if s >= m {
                    axpy(w, &basis.vecs[s], &mut pv);
                    axpy(w, &basis.images[s], &mut apv);
                }
            }
            new_x.push(xv);
            new_ax.push(axv);
            new_p.push(pv);
            new_ap.push(apv);
        }
        x = new_x;
        ax = new_ax;
        theta = vals[..m].to_vec();
        p = Some((new_p, new_ap));
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iters,
        residual: worst,
    })
}

fn projected_eigen(basis: &Block) -> (Vec<f64>, DMatrix<f64>) {
    let d = basis.len();
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = 0.5
                * (dot(&basis.vecs[i], &basis.images[j]) + dot(&basis.vecs[j], &basis.images[i]));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    dense_symmetric_eigen(&g)
}

/// Ritz vectors, their images, the lowest `m` Ritz values and the largest.
type RitzTriple = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>, f64);

fn rayleigh_ritz(block: &Block, m: usize) -> RitzTriple {
    let (vals, coeffs) = projected_eigen(block);
    let n = block.vecs[0].len();
    let mut x = Vec::with_capacity(m);
    let mut ax = Vec::with_capacity(m);
    for c in 0..m {
        let mut xv = vec![0.0; n];
        let mut axv = vec![0.0; n];
        for s in 0..block.len() {
            axpy(coeffs[(s, c)], &block.vecs[s], &mut xv);
            axpy(coeffs[(s, c)], &block.images[s], &mut axv);
        }
        x.push(xv);
        ax.push(axv);
    }
    let top = vals[vals.len() - 1];
    (x, ax, vals[..m].to_vec(), top)
}

fn finish(
    x: Vec<Vec<f64>>,
    theta: Vec<f64>,
    k: usize,
    n: usize,
    iterations: usize,
    applications: usize,
) -> EigenResult {
    let mut vectors = DMatrix::zeros(n, k);
    for j in 0..k {
        column_mut(&mut vectors, j).copy_from_slice(&x[j]);
    }
    EigenResult {
        values: theta[..k].to_vec(),
        vectors,
        iterations,
        applications,
    }
}
