//! Sparse symmetric solves: CSR storage and Jacobi-preconditioned
//! conjugate gradients.

use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Compressed sparse row matrix. Built from accumulated triplets; duplicate
/// entries are summed.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(n: usize, triplets: &[(u32, u32, f64)]) -> Csr {
        let mut rows: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); n];
        for &(i, j, v) in triplets {
            *rows[i as usize].entry(j).or_insert(0.0) += v;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col.push(j);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k] as usize];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] as usize == i {
                    d[i] = self.val[k];
                }
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients with Jacobi preconditioning for symmetric positive
/// definite systems. Converges to a relative residual of `tol` against
/// `|b|`; iteration count is capped at `50 sqrt(n) + 100`.
pub fn solve_cg(a: &Csr, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let diag = a.diagonal();
    let mut inv_diag = vec![0.0; n];
    for i in 0..n {
        if !(diag[i] > 0.0) {
            return Err(Error::Solver(format!(
                "non-positive diagonal entry {} at row {i}",
                diag[i]
            )));
        }
        inv_diag[i] = 1.0 / diag[i];
    }

    let max_iter = 100 + (50.0 * (n as f64).sqrt()) as usize;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for iter in 0..max_iter {
        let rel = norm(&r) / norm_b;
        if rel <= tol {
            return Ok((x, SolveStats { iterations: iter, relative_residual: rel }));
        }
        a.mul(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        if !alpha.is_finite() {
            return Err(Error::Solver(format!("breakdown at iteration {iter}")));
        }
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / norm_b;
    Err(Error::Solver(format!(
        "conjugate gradients stalled at relative residual {rel:.3e} after {max_iter} iterations"
    )))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_accumulate_and_sort() {
        let m = Csr::from_triplets(2, &[(0, 1, 2.0), (0, 1, 3.0), (1, 0, 5.0), (0, 0, 1.0)]);
        assert_eq!(m.row_ptr, vec![0, 2, 3]);
        assert_eq!(m.col, vec![0, 1, 0]);
        assert_eq!(m.val, vec![1.0, 5.0, 5.0]);
        let mut y = vec![0.0; 2];
        m.mul(&[1.0, 2.0], &mut y);
        assert_eq!(y, vec![11.0, 5.0]);
    }

    #[test]
    fn cg_solves_a_graded_laplacian() {
        // 1D Dirichlet Laplacian with variable coefficients
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            let w = 1.0 + 0.5 * ((i as f64) * 0.37).sin();
            t.push((i as u32, i as u32, 2.0 * w));
            if i + 1 < n {
                t.push((i as u32, (i + 1) as u32, -w));
                t.push(((i + 1) as u32, i as u32, -w));
            }
        }
        let a = Csr::from_triplets(n, &t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        let (x, stats) = solve_cg(&a, &b, 1e-12).unwrap();
        let mut ax = vec![0.0; n];
        a.mul(&x, &mut ax);
        let res: f64 = ax
            .iter()
            .zip(&b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        assert!(res / norm(&b) <= 1e-11, "residual {res}");
        assert!(stats.iterations > 0);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = Csr::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let (x, stats) = solve_cg(&a, &[0.0; 3], 1e-12).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn indefinite_diagonal_is_rejected() {
        let a = Csr::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(solve_cg(&a, &[1.0, 1.0], 1e-12).is_err());
    }
}
