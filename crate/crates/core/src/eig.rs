//! Lowest eigenpairs of the sector Hamiltonian.
//!
//! [`lowest_k`] is a thick-restart Lanczos iteration with full (two-pass)
//! reorthogonalization against the stored Krylov block; near-degenerate
//! ground manifolds defeat plain Lanczos, so correctness wins over memory
//! here. [`dense_all`] is the small-scale dense oracle.

use crate::error::{Error, Result};
use crate::model::{MatrixFreeHamiltonian, SparseHamiltonian};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Anything that can act as a real-symmetric operator on sector vectors.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    /// y = A x
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOp for SparseHamiltonian {
    fn dim(&self) -> usize {
        SparseHamiltonian::dim(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        SparseHamiltonian::apply(self, x, y)
    }
}

impl LinearOp for MatrixFreeHamiltonian<'_> {
    fn dim(&self) -> usize {
        MatrixFreeHamiltonian::dim(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        MatrixFreeHamiltonian::apply(self, x, y)
    }
}

/// H(w) = A + w B over a shared sparsity family; lets a W-sweep reuse two
/// fixed assemblies instead of rebuilding per grid point.
pub struct AffineOp<'a> {
    pub fixed: &'a SparseHamiltonian,
    pub scaled: &'a SparseHamiltonian,
    pub factor: f64,
}

impl LinearOp for AffineOp<'_> {
    fn dim(&self) -> usize {
        self.fixed.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.fixed.apply(x, y);
        if self.factor != 0.0 {
            let mut tmp = vec![0.0; x.len()];
            self.scaled.apply(x, &mut tmp);
            for (yi, ti) in y.iter_mut().zip(&tmp) {
                *yi += self.factor * ti;
            }
        }
    }
}

/// The k lowest eigenpairs, ascending, with post-hoc residuals.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// ||H v - lambda v||_2 per pair, recomputed with a fresh matvec.
    pub residuals: Vec<f64>,
    /// Matrix-vector products consumed.
    pub iterations: usize,
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DENSE_CAP: usize = 4096;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn seeded_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = norm(&v);
    for x in &mut v {
        *x /= n;
    }
    v
}

/// Compute the `k` lowest eigenpairs of `op` to relative residual `tol`,
/// deterministically for a fixed `seed` (seeded start vector, fixed
/// reorthogonalization schedule). `k` is clamped to the operator dimension.
///
/// On hitting the iteration cap the best result so far travels inside the
/// convergence error.
pub fn lowest_k(op: &dyn LinearOp, k: usize, tol: f64, seed: u64) -> Result<EigenResult> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::Domain("operator has dimension 0".into()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let k = k.min(dim);
    let max_basis = dim.min((3 * k + 12).max(80));
    let keep = (k + 8).min(max_basis / 2).max(k.min(max_basis.saturating_sub(1)));
    let matvec_cap = (10 * k * (dim as f64).sqrt() as usize).max(4 * max_basis);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = vec![seeded_unit_vector(dim, &mut rng)];
    let mut proj = DMatrix::<f64>::zeros(max_basis, max_basis);
    let mut matvecs = 0usize;

    loop {
        // Extend the basis to max_basis vectors; two-pass reorthogonalization
        // against everything stored.
        let mut beta_last = 0.0;
        let mut continuation: Option<Vec<f64>> = None;
        while basis.len() <= max_basis {
            let j = basis.len() - 1;
            let mut w = vec![0.0; dim];
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            for _pass in 0..2 {
                for i in 0..basis.len() {
                    let h = dot(&basis[i], &w);
                    for (wx, vx) in w.iter_mut().zip(&basis[i]) {
                        *wx -= h * vx;
                    }
                    proj[(i, j)] += h;
                    proj[(j, i)] = proj[(i, j)];
                }
            }
            let beta = norm(&w);
            if basis.len() == max_basis {
                beta_last = beta;
                if beta > 1e-14 {
                    for x in &mut w {
                        *x /= beta;
                    }
                    continuation = Some(w);
                }
                break;
            }
            if beta > 1e-10 {
                for x in &mut w {
                    *x /= beta;
                }
                // the (j+1, j) border entry is accumulated by the next
                // column's orthogonalization dots, not written here
                basis.push(w);
            } else {
                // invariant subspace hit: continue with a fresh direction
                let mut r = seeded_unit_vector(dim, &mut rng);
                for _pass in 0..2 {
                    for v in &basis {
                        let h = dot(v, &r);
                        for (rx, vx) in r.iter_mut().zip(v) {
                            *rx -= h * vx;
                        }
                    }
                }
                let n = norm(&r);
                for x in &mut r {
                    *x /= n;
                }
                basis.push(r);
            }
        }

        // Rayleigh-Ritz on the projected block.
        let m = basis.len().min(max_basis);
        let tm = proj.view((0, 0), (m, m)).into_owned();
        let se = tm.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());

        let converged = (0..k).all(|i| {
            let idx = order[i];
            let theta = se.eigenvalues[idx];
            let est = (beta_last * se.eigenvectors[(m - 1, idx)]).abs();
            est <= 0.5 * tol * theta.abs().max(1.0)
        });
        let exhausted = matvecs >= matvec_cap;

        if converged || exhausted || continuation.is_none() {
            // Assemble Ritz vectors for the k lowest pairs.
            let mut eigenvalues = Vec::with_capacity(k);
            let mut eigenvectors = Vec::with_capacity(k);
            let mut residuals = Vec::with_capacity(k);
            for &idx in order.iter().take(k) {
                let mut x = vec![0.0; dim];
                for (j, v) in basis.iter().take(m).enumerate() {
                    let c = se.eigenvectors[(j, idx)];
                    for (xi, vi) in x.iter_mut().zip(v) {
                        *xi += c * vi;
                    }
                }
                let n = norm(&x);
                for xi in &mut x {
                    *xi /= n;
                }
                let mut hx = vec![0.0; dim];
                op.apply(&x, &mut hx);
                matvecs += 1;
                let lambda = se.eigenvalues[idx];
                let mut rss = 0.0;
                for (h, v) in hx.iter().zip(&x) {
                    let d = h - lambda * v;
                    rss += d * d;
                }
                eigenvalues.push(lambda);
                eigenvectors.push(x);
                residuals.push(rss.sqrt());
            }
            let result = EigenResult {
                eigenvalues,
                eigenvectors,
                residuals,
                iterations: matvecs,
            };
            let ok = result
                .eigenvalues
                .iter()
                .zip(&result.residuals)
                .all(|(l, r)| *r <= tol * l.abs().max(1.0));
            if ok {
                return Ok(result);
            }
            if exhausted || continuation.is_none() {
                return Err(Error::Convergence {
                    message: format!(
                        "iteration cap of {matvec_cap} matvecs reached before residuals met {tol:e}"
                    ),
                    best: Box::new(result),
                });
            }
            // estimated residuals passed but true residuals did not: restart
        }

        // Thick restart: keep the lowest `keep` Ritz vectors plus the
        // continuation vector.
        let cont = continuation.expect("continuation vector present when restarting");
        let mut new_basis: Vec<Vec<f64>> = Vec::with_capacity(keep + 1);
        for &idx in order.iter().take(keep) {
            let mut x = vec![0.0; dim];
            for (j, v) in basis.iter().take(m).enumerate() {
                let c = se.eigenvectors[(j, idx)];
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += c * vi;
                }
            }
            let n = norm(&x);
            for xi in &mut x {
                *xi /= n;
            }
            new_basis.push(x);
        }
        proj.fill(0.0);
        for (i, &idx) in order.iter().take(keep).enumerate() {
            proj[(i, i)] = se.eigenvalues[idx];
        }
        new_basis.push(cont);
        basis = new_basis;
    }
}

/// Full spectrum via a dense symmetric eigensolver; the small-scale oracle.
pub fn dense_all(h: &SparseHamiltonian) -> Result<EigenResult> {
    dense_all_with_cap(h, DENSE_CAP)
}

pub fn dense_all_with_cap(h: &SparseHamiltonian, cap: usize) -> Result<EigenResult> {
    let dim = h.dim();
    if dim > cap {
        return Err(Error::Resource(format!(
            "dimension {dim} exceeds dense solver cap {cap}"
        )));
    }
    let se = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let mut eigenvalues = Vec::with_capacity(dim);
    let mut eigenvectors = Vec::with_capacity(dim);
    let mut residuals = Vec::with_capacity(dim);
    for &idx in &order {
        let v: Vec<f64> = se.eigenvectors.column(idx).iter().copied().collect();
        let lambda = se.eigenvalues[idx];
        let mut hv = vec![0.0; dim];
        h.apply(&v, &mut hv);
        let mut rss = 0.0;
        for (h_i, v_i) in hv.iter().zip(&v) {
            let d = h_i - lambda * v_i;
            rss += d * d;
        }
        eigenvalues.push(lambda);
        eigenvectors.push(v);
        residuals.push(rss.sqrt());
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
        residuals,
        iterations: 0,
    })
}
