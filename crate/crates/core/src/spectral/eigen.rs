use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::operator::{LocalOperator, SparseOperator};
use crate::error::{Error, Result};

/// Largest block handed to the dense solver.
pub const DENSE_BLOCK_CAP: usize = 10_000;
/// Residual target relative to the operator norm.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
    Restricted,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub lambda_min: f64,
    pub lambda_second: Option<f64>,
    pub residual: f64,
    pub method: Method,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

/// Lowest-eigenpair strategy, selected by name at runtime.
pub trait EigenSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn lowest(&self, op: &SparseOperator) -> Result<SpectrumResult>;
}

/// Exact diagonalization of each connected block of the operator graph.
#[derive(Debug, Clone)]
pub struct DenseSolver {
    pub block_cap: usize,
}

impl Default for DenseSolver {
    fn default() -> Self {
        DenseSolver { block_cap: DENSE_BLOCK_CAP }
    }
}

impl EigenSolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn lowest(&self, op: &SparseOperator) -> Result<SpectrumResult> {
        if op.dim == 0 {
            return Err(Error::Solver("empty operator".into()));
        }
        let blocks = op.components();
        if let Some(b) = blocks.iter().find(|b| b.len() > self.block_cap) {
            return Err(Error::TooLarge { dim: b.len() as u128, cap: self.block_cap as u128 });
        }
        // (two lowest eigenvalues, lowest eigenvector) per block
        let per_block: Vec<(f64, Option<f64>, Vec<f64>)> = blocks
            .par_iter()
            .map(|idx| {
                let eig = SymmetricEigen::new(op.dense_block(idx));
                let mut order: Vec<usize> = (0..idx.len()).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                let v = eig.eigenvectors.column(order[0]).iter().copied().collect();
                (eig.eigenvalues[order[0]], order.get(1).map(|&k| eig.eigenvalues[k]), v)
            })
            .collect();
        let best = (0..blocks.len()).min_by(|&a, &b| per_block[a].0.total_cmp(&per_block[b].0)).unwrap();
        let lambda_min = per_block[best].0;
        let mut others: Vec<f64> = per_block.iter().enumerate().filter(|(k, _)| *k != best).map(|(_, p)| p.0).collect();
        others.extend(per_block[best].1);
        let lambda_second = others.into_iter().min_by(f64::total_cmp);
        let mut vector = vec![0.0; op.dim];
        for (&i, &x) in blocks[best].iter().zip(&per_block[best].2) {
            vector[i] = x;
        }
        let residual = residual(op, lambda_min, &vector);
        Ok(SpectrumResult { lambda_min, lambda_second, residual, method: Method::Dense, vector })
    }
}

/// Lowest two eigenvalues of a factored operator without assembling it:
/// every connected block of the operator graph is found by breadth-first
/// search from the local terms and diagonalized on its own. The returned
/// vector is left empty; `residual` is the worst block residual.
pub fn lowest_blockwise(op: &LocalOperator, block_cap: usize) -> Result<SpectrumResult> {
    let dim = op.basis.dim().filter(|&d| d <= u32::MAX as u64).ok_or(Error::TooLarge { dim: op.basis.dim_u128(), cap: u32::MAX as u128 })?;
    let mut seen = vec![false; dim as usize];
    let mut low = [f64::INFINITY; 2];
    let push = |x: f64, low: &mut [f64; 2]| {
        if x < low[0] {
            low[1] = low[0];
            low[0] = x;
        } else if x < low[1] {
            low[1] = x;
        }
    };
    let mut worst_residual = 0.0f64;
    for s in 0..dim {
        if seen[s as usize] {
            continue;
        }
        let block = op.closure(&[s], block_cap)?;
        for &b in &block {
            seen[b as usize] = true;
        }
        if block.len() == 1 {
            let d = op.column(s).into_iter().find(|e| e.0 == s).map_or(0.0, |e| e.1);
            push(d, &mut low);
            continue;
        }
        let m = op.restrict(&block).op;
        let eig = SymmetricEigen::new(m.to_dense());
        let mut ev: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().zip(0..).collect();
        ev.sort_by(|a, b| a.0.total_cmp(&b.0));
        let v: Vec<f64> = eig.eigenvectors.column(ev[0].1).iter().copied().collect();
        worst_residual = worst_residual.max(residual(&m, ev[0].0, &v));
        for &(x, _) in ev.iter().take(2) {
            push(x, &mut low);
        }
    }
    Ok(SpectrumResult {
        lambda_min: low[0],
        lambda_second: low[1].is_finite().then_some(low[1]),
        residual: worst_residual,
        method: Method::Dense,
        vector: Vec::new(),
    })
}

/// Explicitly restarted Lanczos with full reorthogonalization, started from
/// the normalized all-ones vector.
#[derive(Debug, Clone)]
pub struct LanczosSolver {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub tol: f64,
}

impl Default for LanczosSolver {
    fn default() -> Self {
        LanczosSolver { krylov_dim: 120, max_restarts: 400, tol: RESIDUAL_TOL }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.par_iter_mut().for_each(|x| *x /= n);
    }
    n
}

pub fn residual(op: &SparseOperator, lambda: f64, v: &[f64]) -> f64 {
    let hv = op.matvec(v);
    hv.iter().zip(v).map(|(h, x)| (h - lambda * x).powi(2)).sum::<f64>().sqrt()
}

impl EigenSolver for LanczosSolver {
    fn name(&self) -> &'static str {
        "lanczos"
    }

    fn lowest(&self, op: &SparseOperator) -> Result<SpectrumResult> {
        let n = op.dim;
        if n == 0 {
            return Err(Error::Solver("empty operator".into()));
        }
        let scale = op.norm_bound().max(f64::MIN_POSITIVE);
        let m = self.krylov_dim.min(n).max(1);
        let mut start = vec![1.0; n];
        normalize(&mut start);
        let mut last_res = f64::INFINITY;
        for _ in 0..self.max_restarts {
            let mut basis: Vec<Vec<f64>> = vec![start.clone()];
            let mut alpha: Vec<f64> = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            for k in 0..m {
                let mut w = op.matvec(&basis[k]);
                let a = dot(&w, &basis[k]);
                alpha.push(a);
                for _ in 0..2 {
                    for q in &basis {
                        let c = dot(&w, q);
                        axpy(&mut w, -c, q);
                    }
                }
                let b = normalize(&mut w);
                if k + 1 == m || b <= 1e-12 * scale {
                    break;
                }
                beta.push(b);
                basis.push(w);
            }
            let k = alpha.len();
            let mut t = DMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alpha[i];
                if i + 1 < k {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let s: DVector<f64> = eig.eigenvectors.column(order[0]).into_owned();
            let mut x = vec![0.0; n];
            for (j, q) in basis.iter().take(k).enumerate() {
                axpy(&mut x, s[j], q);
            }
            normalize(&mut x);
            let lambda = op.quadratic_form(&x);
            let res = residual(op, lambda, &x);
            last_res = res;
            if res <= self.tol * scale {
                let lambda_second = order.get(1).map(|&j| eig.eigenvalues[j]);
                return Ok(SpectrumResult { lambda_min: lambda, lambda_second, residual: res, method: Method::Iterative, vector: x });
            }
            start = x;
        }
        Err(Error::Solver(format!("no convergence after {} restarts (residual {last_res:.3e})", self.max_restarts)))
    }
}

/// Dense for small operators, Lanczos otherwise.
#[derive(Debug, Clone, Default)]
pub struct AutoSolver;

impl EigenSolver for AutoSolver {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn lowest(&self, op: &SparseOperator) -> Result<SpectrumResult> {
        match DenseSolver::default().lowest(op) {
            Err(Error::TooLarge { .. }) => LanczosSolver::default().lowest(op),
            other => other,
        }
    }
}

pub fn solver_names() -> &'static [&'static str] {
    &["dense", "lanczos", "auto"]
}

pub fn solver_by_name(name: &str) -> Result<Box<dyn EigenSolver>> {
    match name {
        "dense" => Ok(Box::new(DenseSolver::default())),
        "lanczos" | "iterative" => Ok(Box::new(LanczosSolver::default())),
        "auto" => Ok(Box::new(AutoSolver)),
        other => Err(Error::Unknown { kind: "eigensolver", name: other.to_string() }),
    }
}

/// All eigenvalues of a small symmetric operator, ascending.
pub fn dense_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> SparseOperator {
        SparseOperator::from_triples(2, vec![(0, 0, 0.5), (0, 1, -0.5), (1, 0, -0.5), (1, 1, 0.5)])
    }

    #[test]
    fn dense_two_level() {
        let r = DenseSolver::default().lowest(&two_level()).unwrap();
        assert!(r.lambda_min.abs() < 1e-14);
        assert!((r.lambda_second.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_two_level() {
        let r = LanczosSolver::default().lowest(&two_level()).unwrap();
        assert!(r.lambda_min.abs() < 1e-12);
    }

    #[test]
    fn dense_merges_blocks() {
        // two decoupled walks with different offsets
        let mut t = vec![(0, 0, 2.0), (1, 1, 3.0)];
        t.extend([(2, 2, 1.0), (3, 3, 1.0), (2, 3, -0.25), (3, 2, -0.25)]);
        let h = SparseOperator::from_triples(4, t);
        let r = DenseSolver::default().lowest(&h).unwrap();
        assert!((r.lambda_min - 0.75).abs() < 1e-14);
        assert!((r.lambda_second.unwrap() - 1.25).abs() < 1e-14);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_on_path() {
        let n = 300;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, if i == 0 || i == n - 1 { 0.5 } else { 1.0 } + 0.001 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -0.5));
                t.push((i + 1, i, -0.5));
            }
        }
        let h = SparseOperator::from_triples(n as usize, t);
        let d = DenseSolver::default().lowest(&h).unwrap();
        let l = LanczosSolver::default().lowest(&h).unwrap();
        assert!((d.lambda_min - l.lambda_min).abs() < 1e-8, "{} vs {}", d.lambda_min, l.lambda_min);
    }

    #[test]
    fn registry_resolves_names() {
        for n in solver_names() {
            assert_eq!(solver_by_name(n).unwrap().name(), *n);
        }
        assert!(solver_by_name("qr").is_err());
    }
}
