//! Compressed sparse row matrices and a Jacobi-preconditioned CG solver.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Square sparse matrix in CSR layout with sorted column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the block sparsity of a tetrahedral mesh: `block` dofs
    /// per node, dof `block * node + c`.
    pub fn from_tets(n_nodes: usize, tets: &[[usize; 4]], block: usize) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for t in tets {
            for &a in t {
                adj[a].extend_from_slice(t);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        let n = n_nodes * block;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &adj {
            for _ in 0..block {
                for &b in row {
                    col_idx.extend((0..block).map(|c| block * b + c));
                }
                row_ptr.push(col_idx.len());
            }
        }
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Builds a matrix from sorted per-row `(column, value)` lists.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => lo + k,
            Err(_) => panic!("entry ({i}, {j}) outside sparsity pattern"),
        }
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi]
            .binary_search(&j)
            .map(|k| self.values[lo + k])
            .unwrap_or(0.0)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        par::for_each_indexed(y, |i, yi| {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Restricts `A x = b` to the free dofs given prescribed values on the
    /// fixed ones. Returns the reduced matrix, reduced right-hand side and the
    /// map from reduced to full dof index.
    pub fn eliminate(&self, b: &[f64], fixed: &[Option<f64>]) -> (CsrMatrix, Vec<f64>, Vec<usize>) {
        let free: Vec<usize> = (0..self.n).filter(|&i| fixed[i].is_none()).collect();
        let mut reduced_index = vec![usize::MAX; self.n];
        for (r, &i) in free.iter().enumerate() {
            reduced_index[i] = r;
        }
        let mut rhs = Vec::with_capacity(free.len());
        let rows = free
            .iter()
            .map(|&i| {
                let mut bi = b[i];
                let mut row = Vec::new();
                for (j, a) in self.row(i) {
                    match fixed[j] {
                        Some(v) => bi -= a * v,
                        None => row.push((reduced_index[j], a)),
                    }
                }
                rhs.push(bi);
                row
            })
            .collect();
        (CsrMatrix::from_rows(rows), rhs, free)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum_by(a.len(), |i| a[i] * b[i])
}

/// Iterative solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when `‖b − A x‖ ≤ rtol ‖b‖`.
    pub rtol: f64,
    /// Iteration cap; `None` means `50 √n`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_residual: f64,
    /// Seconds.
    pub wall_time: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD `a`, starting from `x`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], opts: &SolverOptions) -> Result<SolveStats> {
    let start = Instant::now();
    let n = a.dim();
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| ((50.0 * (n as f64).sqrt()).ceil() as usize).max(50));
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            final_residual: 0.0,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = a.mul_vec(x);
    par::for_each_indexed(&mut r, |i, ri| *ri = b[i] - *ri);
    let mut z: Vec<f64> = (0..n).map(|i| inv_diag[i] * r[i]).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while rel > opts.rtol {
        if it >= max_iter {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rel,
            });
        }
        a.mul_vec_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Singular(format!(
                "non-positive curvature {pq:e} at iteration {it}"
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            z[i] = inv_diag[i] * r[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    Ok(SolveStats {
        iterations: it,
        final_residual: rel,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1-D Laplacian with Dirichlet ends eliminated.
    fn laplacian(n: usize) -> CsrMatrix {
        CsrMatrix::from_rows(
            (0..n)
                .map(|i| {
                    let mut row = Vec::new();
                    if i > 0 {
                        row.push((i - 1, -1.0));
                    }
                    row.push((i, 2.0));
                    if i + 1 < n {
                        row.push((i + 1, -1.0));
                    }
                    row
                })
                .collect(),
        )
    }

    #[test]
    fn pcg_solves_tridiagonal_system() {
        let a = laplacian(50);
        let exact: Vec<f64> = (0..50).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = a.mul_vec(&exact);
        let mut x = vec![0.0; 50];
        let stats = pcg(&a, &b, &mut x, &SolverOptions::default()).unwrap();
        assert!(stats.final_residual <= 1e-10);
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = laplacian(200);
        let b = vec![1.0; 200];
        let mut x = vec![0.0; 200];
        let opts = SolverOptions { rtol: 1e-12, max_iter: Some(3) };
        assert!(matches!(pcg(&a, &b, &mut x, &opts), Err(Error::NoConvergence { iterations: 3, .. })));
    }

    #[test]
    fn elimination_moves_fixed_values_to_rhs() {
        let a = laplacian(3);
        let (red, rhs, free) = a.eliminate(&[0.0, 0.0, 0.0], &[Some(1.0), None, Some(3.0)]);
        assert_eq!(free, vec![1]);
        assert_eq!(red.dim(), 1);
        assert_eq!(red.get(0, 0), 2.0);
        assert_eq!(rhs, vec![4.0]);
    }
}
