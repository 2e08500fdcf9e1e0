//! Lowest eigenpairs of `H(s)`: dense symmetric solve for small systems and a
//! restarted block Lanczos iteration on the matrix-free operator otherwise.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::SystemHamiltonian;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += alpha * b;
    }
}

fn scale(x: &mut [f64], alpha: f64) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Lowest eigenvalues (ascending) with their orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Settings for the iterative solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    /// Block size; raised to at least `k + 2`.
    pub block: usize,
    /// Basis size that triggers a restart; raised to at least `3 * block`.
    pub max_basis: usize,
    pub max_iterations: usize,
    /// Residual target relative to the operator norm bound.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            block: 0,
            max_basis: 24,
            max_iterations: 5000,
            tol: 1e-11,
            seed: 0x5eed,
        }
    }
}

/// `k` lowest eigenpairs from a full dense diagonalization.
pub fn dense_lowest(sys: &SystemHamiltonian, s: f64, k: usize) -> Result<EigenPairs> {
    let h = sys.dense(s)?;
    let k = k.min(sys.dim());
    Ok(lowest_of_symmetric(h, k))
}

pub(crate) fn lowest_of_symmetric(h: DMatrix<f64>, k: usize) -> EigenPairs {
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    EigenPairs {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    }
}

/// Orthogonalizes `v` against `basis` (two classical Gram-Schmidt passes) and
/// normalizes it. Returns `None` when `v` lies numerically inside the span.
fn orthonormalize(basis: &[Vec<f64>], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let before = norm(&v);
    if before == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &v);
            axpy(&mut v, -c, q);
        }
    }
    let after = norm(&v);
    if after <= 1e-10 * before {
        return None;
    }
    scale(&mut v, 1.0 / after);
    Some(v)
}

struct Krylov<'a> {
    sys: &'a SystemHamiltonian,
    s: f64,
    basis: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    /// Projected matrix `Vᵀ H V`, grown alongside the basis.
    projected: Vec<Vec<f64>>,
}

impl<'a> Krylov<'a> {
    fn push(&mut self, v: Vec<f64>) {
        let mut hv = vec![0.0; v.len()];
        self.sys.apply_unchecked(self.s, &v, &mut hv);
        let row: Vec<f64> = self.basis.iter().map(|q| dot(q, &hv)).collect();
        for (r, x) in self.projected.iter_mut().zip(&row) {
            r.push(*x);
        }
        let mut row = row;
        row.push(dot(&v, &hv));
        self.projected.push(row);
        self.basis.push(v);
        self.images.push(hv);
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let m = self.basis.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            0.5 * (self.projected[i][j] + self.projected[j][i])
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let y = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, y)
    }

    fn combine(rows: &[Vec<f64>], y: &DMatrix<f64>, col: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows[0].len()];
        for (r, v) in rows.iter().enumerate() {
            axpy(&mut out, y[(r, col)], v);
        }
        out
    }
}

/// `k` lowest eigenpairs by block Lanczos with full reorthogonalization,
/// exact Rayleigh-Ritz on the Krylov basis and thick restarts from Ritz vectors.
///
/// `warm` vectors, if any, seed the start block; the rest is filled from a
/// ChaCha generator seeded with `cfg.seed`, so results are deterministic.
pub fn lanczos_lowest(
    sys: &SystemHamiltonian,
    s: f64,
    k: usize,
    cfg: &LanczosConfig,
    warm: &[Vec<f64>],
) -> Result<EigenPairs> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ScheduleOutOfRange(s));
    }
    let dim = sys.dim();
    if k == 0 || k > dim {
        return Err(Error::param("k", "need 1 <= k <= 2^n"));
    }
    let block = cfg.block.max(k + 2).min(dim);
    let max_basis = cfg.max_basis.max(3 * block).min(dim);
    let target = cfg.tol * sys.norm_bound(s);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| rng.random::<f64>() - 0.5).collect()
    };

    let mut kr = Krylov {
        sys,
        s,
        basis: Vec::new(),
        images: Vec::new(),
        projected: Vec::new(),
    };
    let mut start = Vec::with_capacity(block);
    for w in warm.iter().filter(|w| w.len() == dim).take(block) {
        if let Some(q) = orthonormalize(&start, w.clone()) {
            start.push(q);
        }
    }
    let mut attempts = 0;
    while start.len() < block && attempts < 4 * block {
        attempts += 1;
        if let Some(q) = orthonormalize(&start, random(&mut rng)) {
            start.push(q);
        }
    }
    let mut last = 0..start.len();
    start.into_iter().for_each(|q| kr.push(q));

    let mut worst = f64::INFINITY;
    for iteration in 0..cfg.max_iterations {
        // Components of H·(last block) outside the basis: Q·B. They are the
        // only part of H·V not captured by the projected matrix.
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(last.len());
        let mut coeff: Vec<Vec<f64>> = Vec::with_capacity(last.len());
        for j in last.clone() {
            let mut l = kr.images[j].clone();
            for _ in 0..2 {
                for q in &kr.basis {
                    let c = dot(q, &l);
                    axpy(&mut l, -c, q);
                }
            }
            let mut col = Vec::with_capacity(next.len() + 1);
            for _ in 0..2 {
                for (i, q) in next.iter().enumerate() {
                    let c = dot(q, &l);
                    axpy(&mut l, -c, q);
                    if col.len() <= i {
                        col.push(c);
                    } else {
                        col[i] += c;
                    }
                }
            }
            let nl = norm(&l);
            if nl > 1e-12 * sys.norm_bound(s) {
                scale(&mut l, 1.0 / nl);
                col.push(nl);
                next.push(l);
            }
            coeff.push(col);
        }

        let (theta, y) = kr.ritz();
        let off = last.start;
        let residual = |c: usize| -> f64 {
            let mut acc = vec![0.0; next.len()];
            for (j, col) in coeff.iter().enumerate() {
                for (i, b) in col.iter().enumerate() {
                    acc[i] += b * y[(off + j, c)];
                }
            }
            norm(&acc)
        };
        worst = (0..k).map(residual).fold(0.0, f64::max);
        let exhausted = next.is_empty() && kr.basis.len() == dim;
        if worst <= target || exhausted {
            let ritz = (0..k).map(|c| Krylov::combine(&kr.basis, &y, c)).collect();
            return finish(sys, s, theta, ritz, k, target, iteration);
        }
        if next.is_empty() {
            // invariant subspace reached without convergence; widen it
            if let Some(q) = orthonormalize(&kr.basis, random(&mut rng)) {
                next.push(q);
            }
        } else if kr.basis.len() + next.len() > max_basis {
            let keep = (max_basis / 3).max(block + k).min(theta.len());
            let basis = (0..keep)
                .map(|c| Krylov::combine(&kr.basis, &y, c))
                .collect();
            let images = (0..keep)
                .map(|c| Krylov::combine(&kr.images, &y, c))
                .collect();
            kr.basis = basis;
            kr.images = images;
            kr.projected = (0..keep)
                .map(|i| {
                    (0..keep)
                        .map(|j| if i == j { theta[i] } else { 0.0 })
                        .collect()
                })
                .collect();
        }
        let first = kr.basis.len();
        for q in next {
            kr.push(q);
        }
        last = first..kr.basis.len();
    }
    Err(Error::NotConverged {
        s,
        residual: worst,
        iterations: cfg.max_iterations,
    })
}

/// Recomputes residuals with fresh operator applications before accepting.
fn finish(
    sys: &SystemHamiltonian,
    s: f64,
    theta: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    k: usize,
    target: f64,
    iterations: usize,
) -> Result<EigenPairs> {
    let mut values = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    let mut worst = 0.0f64;
    for (mut v, &t) in vectors.into_iter().zip(&theta).take(k) {
        let nv = norm(&v);
        scale(&mut v, 1.0 / nv);
        let mut r = vec![0.0; v.len()];
        sys.apply_unchecked(s, &v, &mut r);
        let rq = dot(&v, &r);
        axpy(&mut r, -rq, &v);
        worst = worst.max(norm(&r));
        values.push(if (rq - t).abs() <= target.max(1e-14) {
            rq
        } else {
            t
        });
        out.push(v);
    }
    // loose acceptance: the Krylov residuals already met the target
    if worst > 10.0 * target.max(1e-13 * sys.norm_bound(s)) {
        return Err(Error::NotConverged {
            s,
            residual: worst,
            iterations,
        });
    }
    Ok(EigenPairs {
        values,
        vectors: out,
    })
}
