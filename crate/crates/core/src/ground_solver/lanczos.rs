//! Lanczos iteration with full reorthogonalization for the lowest eigenpair
//! of a real symmetric operator.
//!
//! The Krylov basis is capped by both `max_krylov` and a memory budget;
//! when the cap is hit without convergence the iteration restarts from the
//! current Ritz vector.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LanczosConfig {
    /// Residual threshold relative to `max(1, |E|)`.
    pub tol: f64,
    pub max_krylov: usize,
    pub max_restarts: usize,
    /// Upper bound on the memory spent on Krylov vectors.
    pub max_basis_bytes: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_krylov: 200, max_restarts: 50, max_basis_bytes: 1 << 30 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for v in against {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
}

/// Random unit vector orthogonal to `deflate`.
pub fn random_start(dim: usize, seed: u64, deflate: &[Vec<f64>]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    orthogonalize(&mut v, deflate);
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Lowest eigenpair of `apply` restricted to the complement of `deflate`
/// (a set of orthonormal vectors).
pub fn lowest_eigenpair<F>(
    dim: usize,
    apply: F,
    start: Vec<f64>,
    deflate: &[Vec<f64>],
    cfg: &LanczosConfig,
) -> Result<EigenPair>
where
    F: Fn(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::Numerical("empty operator".into()));
    }
    let by_memory = (cfg.max_basis_bytes / (8 * dim)).max(4);
    let krylov = cfg.max_krylov.min(by_memory).min(dim - deflate.len()).max(1);

    let mut x = start;
    let mut best = EigenPair { value: f64::INFINITY, vector: Vec::new(), residual: f64::INFINITY, iterations: 0 };
    let mut total = 0;
    let mut w = vec![0.0; dim];

    for _restart in 0..=cfg.max_restarts {
        orthogonalize(&mut x, deflate);
        let nx = norm(&x);
        if nx == 0.0 || !nx.is_finite() {
            return Err(Error::Numerical("degenerate Lanczos start vector".into()));
        }
        x.iter_mut().for_each(|v| *v /= nx);

        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = (f64::INFINITY, Vec::new());

        for j in 0..krylov {
            apply(&basis[j], &mut w);
            total += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            orthogonalize(&mut w, deflate);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);

            let m = alpha.len();
            let mut t = DMatrix::<f64>::zeros(m, m);
            for k in 0..m {
                t[(k, k)] = alpha[k];
                if k + 1 < m {
                    t[(k, k + 1)] = beta[k];
                    t[(k + 1, k)] = beta[k];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imin, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let y: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
            let estimate = (b * y[m - 1]).abs();
            ritz = (theta, y);

            let scale = theta.abs().max(1.0);
            if estimate <= 0.1 * cfg.tol * scale || b <= 1e-14 * scale || j + 1 == krylov {
                break;
            }
            beta.push(b);
            let next: Vec<f64> = w.iter().map(|v| v / b).collect();
            basis.push(next);
        }

        // Ritz vector and its true residual.
        let (_, y) = ritz;
        let mut v = vec![0.0; dim];
        for (coef, q) in y.iter().zip(&basis) {
            axpy(*coef, q, &mut v);
        }
        orthogonalize(&mut v, deflate);
        let nv = norm(&v);
        v.iter_mut().for_each(|c| *c /= nv);
        apply(&v, &mut w);
        let value = dot(&v, &w);
        axpy(-value, &v, &mut w);
        orthogonalize(&mut w, deflate);
        let residual = norm(&w);

        if residual < best.residual {
            best = EigenPair { value, vector: v.clone(), residual, iterations: total };
        }
        if residual <= cfg.tol * value.abs().max(1.0) {
            best.iterations = total;
            return Ok(best);
        }
        x = v;
    }
    Err(Error::Convergence { iterations: total, residual: best.residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d = [3.0, -1.0, 2.0, 0.5, 7.0];
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..5 {
                y[i] = d[i] * x[i];
            }
        };
        let cfg = LanczosConfig::default();
        let g = lowest_eigenpair(5, apply, random_start(5, 1, &[]), &[], &cfg).unwrap();
        assert!((g.value + 1.0).abs() < 1e-12);
        assert!((g.vector[1].abs() - 1.0).abs() < 1e-10);

        let e1 = lowest_eigenpair(5, apply, random_start(5, 2, &[g.vector.clone()]), &[g.vector], &cfg).unwrap();
        assert!((e1.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn restarts_when_krylov_is_small() {
        let n = 60;
        let apply = |x: &[f64], y: &mut [f64]| {
            // 1D Laplacian
            for i in 0..n {
                let mut v = 2.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        };
        let cfg = LanczosConfig { max_krylov: 12, max_restarts: 400, ..Default::default() };
        let g = lowest_eigenpair(n, apply, random_start(n, 3, &[]), &[], &cfg).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((g.value - exact).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let n = 200;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = (i as f64).sqrt() * x[i];
            }
        };
        let cfg = LanczosConfig { max_krylov: 3, max_restarts: 1, tol: 1e-14, ..Default::default() };
        match lowest_eigenpair(n, apply, random_start(n, 0, &[]), &[], &cfg) {
            Err(Error::Convergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
