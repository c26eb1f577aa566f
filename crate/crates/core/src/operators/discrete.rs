//! Dense kernel operators on the discrete L^2 space of a grid.
//!
//! An operator with kernel matrix K acts by (A xi)_i = sum_j K_ij w_j xi_j, the
//! quadrature of its integral kernel. The inner product is
//! <xi, eta> = sum_i w_i xi_i conj(eta_i), so W^{1/2} K W^{1/2} is the matrix
//! of A in an orthonormal basis.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::symbolics::grid::Grid;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Something whose action on the orthonormalized discrete L^2 space can be
/// applied without forming a matrix. Power iteration only needs this.
pub trait LinearOperator: Sync {
    fn size(&self) -> usize;
    /// y = B x with B = W^{1/2} K W^{1/2}.
    fn apply_l2(&self, x: &[C64], y: &mut [C64]);
    /// y = B^* x.
    fn apply_l2_adjoint(&self, x: &[C64], y: &mut [C64]);
}

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    kernel: Mat<C64>,
    label: String,
}

impl DiscreteOperator {
    pub fn new(grid: Arc<Grid>, kernel: Mat<C64>, label: impl Into<String>) -> Result<Self> {
        let n = grid.len();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: kernel.nrows().max(kernel.ncols()) });
        }
        Ok(DiscreteOperator { grid, kernel, label: label.into() })
    }

    pub fn zeros(grid: Arc<Grid>, label: impl Into<String>) -> Self {
        let n = grid.len();
        DiscreteOperator { grid, kernel: Mat::zeros(n, n), label: label.into() }
    }

    /// Kernel diag(1 / w), so that K W = I.
    pub fn identity(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        let w = grid.weights();
        let kernel = Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0 / w[i], 0.0) } else { ZERO });
        DiscreteOperator { grid, kernel, label: "identity".into() }
    }

    /// Diagonal operator multiplying by `d`.
    pub fn multiplication(grid: Arc<Grid>, d: &[C64], label: impl Into<String>) -> Result<Self> {
        let n = grid.len();
        if d.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: d.len() });
        }
        let w = grid.weights();
        let kernel = Mat::from_fn(n, n, |i, j| if i == j { d[i] / w[i] } else { ZERO });
        Ok(DiscreteOperator { grid, kernel, label: label.into() })
    }

    /// Assemble K_ij = k(i, j), rows in parallel.
    pub fn from_fn<F>(grid: Arc<Grid>, label: impl Into<String>, k: F) -> Self
    where
        F: Fn(usize, usize) -> C64 + Sync,
    {
        let n = grid.len();
        let mut rows = vec![ZERO; n * n];
        rows.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = k(i, j);
            }
        });
        let kernel = Mat::from_fn(n, n, |i, j| rows[i * n + j]);
        DiscreteOperator { grid, kernel, label: label.into() }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kernel(&self) -> &Mat<C64> {
        &self.kernel
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        self.grid.weights()
    }

    /// K (w . xi).
    pub fn apply(&self, xi: &[C64]) -> Result<Vec<C64>> {
        self.check_vec(xi)?;
        let w = self.weights();
        let wx: Vec<C64> = xi.iter().zip(w).map(|(x, w)| x * w).collect();
        let col = Mat::from_fn(wx.len(), 1, |i, _| wx[i]);
        let y = &self.kernel * &col;
        Ok((0..self.len()).map(|i| y[(i, 0)]).collect())
    }

    /// Row-by-row quadrature sum_j K_ij w_j xi_j; the reference for `apply`.
    pub fn apply_quadrature(&self, xi: &[C64]) -> Result<Vec<C64>> {
        self.check_vec(xi)?;
        let w = self.weights();
        Ok((0..self.len())
            .into_par_iter()
            .map(|i| (0..self.len()).map(|j| self.kernel[(i, j)] * (w[j] * xi[j])).sum())
            .collect())
    }

    /// <xi, eta> in the weighted inner product.
    pub fn inner(&self, xi: &[C64], eta: &[C64]) -> C64 {
        xi.iter().zip(eta).zip(self.weights()).map(|((x, e), w)| x * e.conj() * w).sum()
    }

    /// W^{1/2} K W^{1/2}: the matrix in an orthonormal basis.
    pub fn weighted_matrix(&self) -> Mat<C64> {
        let s: Vec<f64> = self.weights().iter().map(|w| w.sqrt()).collect();
        Mat::from_fn(self.len(), self.len(), |i, j| self.kernel[(i, j)] * (s[i] * s[j]))
    }

    fn check_vec(&self, xi: &[C64]) -> Result<()> {
        if xi.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: xi.len() });
        }
        Ok(())
    }

    fn check_grid(&self, other: &DiscreteOperator) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Kernel of A B: K_A diag(w) K_B.
    pub fn compose(&self, other: &DiscreteOperator) -> Result<DiscreteOperator> {
        self.check_grid(other)?;
        let w = self.weights();
        let wb = Mat::from_fn(self.len(), self.len(), |i, j| other.kernel[(i, j)] * w[i]);
        Ok(DiscreteOperator {
            grid: self.grid.clone(),
            kernel: &self.kernel * &wb,
            label: format!("{} . {}", self.label, other.label),
        })
    }

    /// Conjugate transpose; exact adjoint for the weighted inner product.
    pub fn adjoint(&self) -> DiscreteOperator {
        DiscreteOperator {
            grid: self.grid.clone(),
            kernel: self.kernel.adjoint().to_owned(),
            label: format!("({})^*", self.label),
        }
    }

    pub fn add(&self, other: &DiscreteOperator) -> Result<DiscreteOperator> {
        self.combine(other, C64::new(1.0, 0.0), "+")
    }

    pub fn sub(&self, other: &DiscreteOperator) -> Result<DiscreteOperator> {
        self.combine(other, C64::new(-1.0, 0.0), "-")
    }

    fn combine(&self, other: &DiscreteOperator, c: C64, op: &str) -> Result<DiscreteOperator> {
        self.check_grid(other)?;
        Ok(DiscreteOperator {
            grid: self.grid.clone(),
            kernel: Mat::from_fn(self.len(), self.len(), |i, j| {
                self.kernel[(i, j)] + c * other.kernel[(i, j)]
            }),
            label: format!("{} {op} {}", self.label, other.label),
        })
    }

    pub fn scale(&self, c: C64) -> DiscreteOperator {
        DiscreteOperator {
            grid: self.grid.clone(),
            kernel: Mat::from_fn(self.len(), self.len(), |i, j| c * self.kernel[(i, j)]),
            label: format!("({c}) {}", self.label),
        }
    }

    /// Keep only rows and columns with `keep[i]`; the compression P A P by
    /// the coordinate projection onto those nodes.
    pub fn masked(&self, keep: &[bool]) -> Result<DiscreteOperator> {
        if keep.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: keep.len() });
        }
        Ok(DiscreteOperator {
            grid: self.grid.clone(),
            kernel: Mat::from_fn(self.len(), self.len(), |i, j| {
                if keep[i] && keep[j] {
                    self.kernel[(i, j)]
                } else {
                    ZERO
                }
            }),
            label: format!("masked({})", self.label),
        })
    }

    /// Compression to the nodes listed in `idx`, as a weighted l^2 matrix.
    pub fn weighted_submatrix(&self, idx: &[usize]) -> Mat<C64> {
        let w = self.weights();
        Mat::from_fn(idx.len(), idx.len(), |a, b| {
            let (i, j) = (idx[a], idx[b]);
            self.kernel[(i, j)] * (w[i] * w[j]).sqrt()
        })
    }

    /// Largest entrywise modulus of the kernel.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.len() {
            for i in 0..self.len() {
                m = m.max(self.kernel[(i, j)].norm());
            }
        }
        m
    }
}

/// A dense matrix already expressed in an orthonormal basis.
pub struct DenseL2<'a>(pub &'a Mat<C64>);

impl LinearOperator for DenseL2<'_> {
    fn size(&self) -> usize {
        self.0.nrows()
    }

    fn apply_l2(&self, x: &[C64], y: &mut [C64]) {
        let m = self.0;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum();
        });
    }

    fn apply_l2_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let m = self.0;
        y.par_iter_mut().enumerate().for_each(|(j, yj)| {
            *yj = (0..m.nrows()).map(|i| m[(i, j)].conj() * x[i]).sum();
        });
    }
}

impl LinearOperator for DiscreteOperator {
    fn size(&self) -> usize {
        self.len()
    }

    fn apply_l2(&self, x: &[C64], y: &mut [C64]) {
        let w = self.weights();
        let k = &self.kernel;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let s: C64 = (0..w.len()).map(|j| k[(i, j)] * (w[j].sqrt() * x[j])).sum();
            *yi = s * w[i].sqrt();
        });
    }

    fn apply_l2_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let w = self.weights();
        let k = &self.kernel;
        y.par_iter_mut().enumerate().for_each(|(j, yj)| {
            let s: C64 = (0..w.len()).map(|i| k[(i, j)].conj() * (w[i].sqrt() * x[i])).sum();
            *yj = s * w[j].sqrt();
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::grid::make_grid;

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(make_grid(1, 3.0, None, (n, None)).unwrap())
    }

    fn sample(g: &Arc<Grid>, seed: f64) -> DiscreteOperator {
        DiscreteOperator::from_fn(g.clone(), "s", |i, j| {
            C64::new((seed * (i + 2 * j) as f64).sin(), (seed * (3 * i + j) as f64).cos())
        })
    }

    #[test]
    fn two_apply_routes_agree() {
        let g = grid(13);
        let a = sample(&g, 0.7);
        let xi: Vec<C64> = (0..13).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        let y1 = a.apply(&xi).unwrap();
        let y2 = a.apply_quadrature(&xi).unwrap();
        let scale = y2.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (p, q) in y1.iter().zip(&y2) {
            assert!((p - q).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn compose_with_identity_and_double_adjoint() {
        let g = grid(9);
        let a = sample(&g, 0.3);
        let b = a.compose(&DiscreteOperator::identity(g.clone())).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert!((a.kernel()[(i, j)] - b.kernel()[(i, j)]).norm() < 1e-14);
                assert_eq!(a.adjoint().adjoint().kernel()[(i, j)], a.kernel()[(i, j)]);
            }
        }
    }

    #[test]
    fn adjoint_identity_in_weighted_inner_product() {
        let g = grid(11);
        let a = sample(&g, 1.1);
        let xi: Vec<C64> = (0..11).map(|k| C64::new((k as f64).sin(), 0.5)).collect();
        let eta: Vec<C64> = (0..11).map(|k| C64::new(1.0, (k as f64).cos())).collect();
        let lhs = a.inner(&a.apply(&xi).unwrap(), &eta);
        let rhs = a.inner(&xi, &a.adjoint().apply(&eta).unwrap());
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = sample(&grid(5), 0.1);
        let b = sample(&grid(6), 0.1);
        assert!(matches!(a.compose(&b), Err(Error::GridMismatch)));
        assert!(a.apply(&[C64::new(1.0, 0.0)]).is_err());
    }
}
