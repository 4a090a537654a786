//! Sparse storage and Krylov solvers for the column solves that are too big
//! for a dense factorization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Above this size Green columns are obtained iteratively.
pub const DENSE_LIMIT: usize = 2000;

/// Relative residual target of the iterative solvers.
pub const ITERATIVE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Rows given as sorted `(column, value)` lists.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *o = self.cols[s..e].iter().zip(&self.vals[s..e]).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
                self.cols[s..e].iter().position(|&c| c == i).map(|k| self.vals[s + k]).unwrap_or(0.0)
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                rows[self.cols[k]].push((i, self.vals[k]));
            }
        }
        Self::from_rows(self.n, rows)
    }

    pub fn is_symmetric(&self) -> bool {
        let t = self.transpose();
        t.cols == self.cols && t.vals.iter().zip(&self.vals).all(|(a, b)| a == b)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
pub fn conjugate_gradient(a: &Csr, b: &[f64], rtol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotSubcritical("form matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= rtol * bnorm {
            return Ok(x);
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
    Err(Error::NoConvergence(format!("CG did not reach rtol {rtol} in {max_iter} iterations")))
}

/// Jacobi-preconditioned BiCGSTAB for general systems.
pub fn bicgstab(a: &Csr, b: &[f64], rtol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(v, d)| v * d).collect() };
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            return Err(Error::NoConvergence("BiCGSTAB breakdown (rho = 0)".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precond(&p);
        a.mul_vec(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm(&s) <= rtol * bnorm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        let z = precond(&s);
        a.mul_vec(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= rtol * bnorm {
            return Ok(x);
        }
        if omega == 0.0 {
            return Err(Error::NoConvergence("BiCGSTAB breakdown (omega = 0)".into()));
        }
    }
    Err(Error::NoConvergence(format!("BiCGSTAB did not reach rtol {rtol} in {max_iter} iterations")))
}

/// Solves `A x = b`, choosing CG for symmetric and BiCGSTAB otherwise.
pub fn solve_sparse(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    let max_iter = 20 * a.n() + 1000;
    if a.is_symmetric() {
        conjugate_gradient(a, b, ITERATIVE_RTOL, max_iter)
    } else {
        bicgstab(a, b, ITERATIVE_RTOL, max_iter)
    }
}

/// Dense inverse via LU; `None` when singular.
pub fn dense_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let lu = a.clone().lu();
    let inv = lu.try_inverse()?;
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Ascending eigenvalues and matching eigenvector columns of a symmetric matrix.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(a.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().iter().fold(0.0_f64, |m, &s| m.max(s))
}

/// Eigenvalues `(re, im)` of a general square matrix. The deflation
/// threshold is relative to `max |a_ij|`; nalgebra's own entry point uses an
/// absolute `ε` and can stall on well-scaled symmetric input.
pub fn general_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let scale = a.amax();
    if scale == 0.0 {
        return Ok(vec![(0.0, 0.0); a.nrows()]);
    }
    let schur = nalgebra::Schur::try_new(a.clone(), 1e-14 * scale, 1000 * a.nrows().max(10))
        .ok_or_else(|| Error::NoConvergence(format!("Schur iteration on a {}×{} matrix", a.nrows(), a.ncols())))?;
    Ok(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect())
}

pub fn sup_norm(a: &DMatrix<f64>) -> f64 {
    a.amax()
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lower: f64, diag: f64, upper: f64) -> Csr {
        let rows = (0..n)
            .map(|i| {
                let mut r = Vec::new();
                if i > 0 {
                    r.push((i - 1, lower));
                }
                r.push((i, diag));
                if i + 1 < n {
                    r.push((i + 1, upper));
                }
                r
            })
            .collect();
        Csr::from_rows(n, rows)
    }

    #[test]
    fn cg_matches_dense() {
        let a = tridiag(50, -1.0, 2.0, -1.0);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let x = solve_sparse(&a, &b).unwrap();
        let dense = dense_inverse(&a.to_dense()).unwrap() * to_dvector(&b);
        for i in 0..50 {
            assert!((x[i] - dense[i]).abs() < 1e-9 * dense.amax());
        }
    }

    #[test]
    fn bicgstab_matches_dense() {
        let a = tridiag(40, -1.5, 2.5, -1.0);
        assert!(!a.is_symmetric());
        let b: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
        let x = solve_sparse(&a, &b).unwrap();
        let dense = dense_inverse(&a.to_dense()).unwrap() * to_dvector(&b);
        for i in 0..40 {
            assert!((x[i] - dense[i]).abs() < 1e-9 * dense.amax());
        }
    }

    #[test]
    fn eigen_sorted() {
        let a = tridiag(5, -1.0, 2.0, -1.0).to_dense();
        let (vals, vecs) = symmetric_eigen(&a);
        for j in 1..=5 {
            let exact = 2.0 * (1.0 - (j as f64 * std::f64::consts::PI / 6.0).cos());
            assert!((vals[j - 1] - exact).abs() < 1e-12);
        }
        let v0 = vecs.column(0);
        let av = &a * v0;
        assert!((av - v0 * vals[0]).amax() < 1e-12);
    }
}
