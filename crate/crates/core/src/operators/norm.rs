//! Operator norms on the discrete L^2 space: dense singular values or power
//! iteration on A^* A from a seeded start vector.

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discrete::{DiscreteOperator, LinearOperator};
use crate::error::{Error, Result};

/// Above this many nodes `Auto` switches from dense SVD to power iteration.
pub const DENSE_LIMIT: usize = 2048;
/// Above this size the dense route uses the Gram matrix spectrum instead of a
/// full SVD; the largest singular value is unaffected by the squaring.
const GRAM_THRESHOLD: usize = 1100;
pub const DEFAULT_SEED: u64 = 0x5eed_cafe;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    Svd,
    #[serde(alias = "power")]
    PowerIteration,
    Auto,
}

impl std::str::FromStr for NormMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(NormMethod::Svd),
            "power" | "power-iteration" => Ok(NormMethod::PowerIteration),
            "auto" => Ok(NormMethod::Auto),
            other => Err(Error::Config(format!("unknown norm method `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub method: NormMethod,
    /// Relative Rayleigh-quotient increment at which power iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { method: NormMethod::Auto, tol: 1e-8, max_iter: 5000, seed: DEFAULT_SEED }
    }
}

impl NormOptions {
    pub fn with_method(method: NormMethod) -> Self {
        NormOptions { method, ..Self::default() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodUsed {
    Svd,
    PowerIteration,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: MethodUsed,
    pub iterations: usize,
    /// Relative Rayleigh increment at termination (0 for SVD).
    pub residual: f64,
}

/// ||A|| on the discrete L^2 space of the operator's grid.
pub fn operator_norm(a: &DiscreteOperator, method: NormMethod, tol: f64) -> Result<NormEstimate> {
    operator_norm_with(a, &NormOptions { method, tol, ..NormOptions::default() })
}

pub fn operator_norm_with(a: &DiscreteOperator, opts: &NormOptions) -> Result<NormEstimate> {
    matrix_norm_with(&a.weighted_matrix(), opts)
}

/// Norm of a matrix already written in an orthonormal basis.
pub fn matrix_norm_with(b: &Mat<C64>, opts: &NormOptions) -> Result<NormEstimate> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let dense = match opts.method {
        NormMethod::Svd => true,
        NormMethod::PowerIteration => false,
        NormMethod::Auto => b.nrows().max(b.ncols()) <= DENSE_LIMIT,
    } || b.nrows() != b.ncols();
    if dense {
        Ok(NormEstimate { value: dense_norm(b)?, method: MethodUsed::Svd, iterations: 0, residual: 0.0 })
    } else {
        power_iteration(&RowMajor::new(b), opts)
    }
}

/// Largest singular value by a dense factorization.
pub fn dense_norm(b: &Mat<C64>) -> Result<f64> {
    Ok(singular_values(b)?.first().copied().unwrap_or(0.0))
}

/// All singular values in nonincreasing order. Large square matrices go
/// through the Gram spectrum, which is accurate for the leading values.
pub fn singular_values(b: &Mat<C64>) -> Result<Vec<f64>> {
    if b.nrows() == 0 || b.ncols() == 0 {
        return Ok(Vec::new());
    }
    if b.nrows().min(b.ncols()) <= GRAM_THRESHOLD {
        return b.singular_values().map_err(|e| Error::Linalg(format!("{e:?}")));
    }
    let gram = b.adjoint() * b;
    let mut ev = gram
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    ev.reverse();
    Ok(ev.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// Row-major copies of B and B^*, for cache-friendly products.
struct RowMajor {
    n: usize,
    m: usize,
    rows: Vec<C64>,
    adj_rows: Vec<C64>,
}

impl RowMajor {
    fn new(b: &Mat<C64>) -> Self {
        let (n, m) = (b.nrows(), b.ncols());
        let mut rows = vec![C64::new(0.0, 0.0); n * m];
        let mut adj_rows = vec![C64::new(0.0, 0.0); n * m];
        for j in 0..m {
            for i in 0..n {
                let v = b[(i, j)];
                rows[i * m + j] = v;
                adj_rows[j * n + i] = v.conj();
            }
        }
        RowMajor { n, m, rows, adj_rows }
    }
}

fn matvec(data: &[C64], cols: usize, x: &[C64], y: &mut [C64]) {
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let row = &data[i * cols..(i + 1) * cols];
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *yi = acc;
    });
}

impl LinearOperator for RowMajor {
    fn size(&self) -> usize {
        self.m
    }

    fn apply_l2(&self, x: &[C64], y: &mut [C64]) {
        matvec(&self.rows, self.m, x, y)
    }

    fn apply_l2_adjoint(&self, x: &[C64], y: &mut [C64]) {
        matvec(&self.adj_rows, self.n, x, y)
    }
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Power iteration on B^* B. Stops once the relative increment of the
/// Rayleigh quotient ||B x||^2 falls below `tol`.
pub fn power_iteration<L: LinearOperator + ?Sized>(op: &L, opts: &NormOptions) -> Result<NormEstimate> {
    let n = op.size();
    let done = |value, iterations, residual| NormEstimate {
        value,
        method: MethodUsed::PowerIteration,
        iterations,
        residual,
    };
    if n == 0 {
        return Ok(done(0.0, 0, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<C64> =
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut y = vec![C64::new(0.0, 0.0); n];
    let mut lambda_prev = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let s = norm2(&x);
        x.iter_mut().for_each(|z| *z /= s);
        // y has the row count of B; for square operators that is n.
        op.apply_l2(&x, &mut y);
        let lambda = norm2(&y).powi(2);
        if lambda == 0.0 {
            return Ok(done(0.0, it, 0.0));
        }
        residual = (lambda - lambda_prev).abs() / lambda;
        if residual < opts.tol {
            return Ok(done(lambda.sqrt(), it, residual));
        }
        lambda_prev = lambda;
        op.apply_l2_adjoint(&y, &mut x);
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::symbolics::grid::Grid;

    fn unit_grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::periodic_line(0.0, n as f64, n).unwrap())
    }

    #[test]
    fn diagonal_matrix() {
        let g = unit_grid(3);
        let d = [1.0, -3.0, 2.0].map(|v| C64::new(v, 0.0));
        let a = DiscreteOperator::multiplication(g, &d, "diag").unwrap();
        for m in [NormMethod::Svd, NormMethod::PowerIteration] {
            let e = operator_norm(&a, m, 1e-12).unwrap();
            assert!((e.value - 3.0).abs() < 1e-9, "{m:?} {e:?}");
        }
    }

    #[test]
    fn rank_one() {
        let n = 40;
        let g = unit_grid(n);
        let a: Vec<C64> = (0..n).map(|i| C64::new((i as f64 * 0.3).sin(), 0.2)).collect();
        let b: Vec<C64> = (0..n).map(|i| C64::new(1.0, (i as f64 * 0.1).cos())).collect();
        let op = DiscreteOperator::from_fn(g, "ab*", |i, j| a[i] * b[j].conj());
        let exact = norm2(&a) * norm2(&b);
        let e = operator_norm(&op, NormMethod::PowerIteration, 1e-12).unwrap();
        assert!((e.value - exact).abs() < 1e-10 * exact);
        assert!((operator_norm(&op, NormMethod::Svd, 1e-8).unwrap().value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn random_complex_matrix_power_vs_svd() {
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = Mat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let svd = dense_norm(&m).unwrap();
        let opts = NormOptions { tol: 1e-12, max_iter: 100_000, ..NormOptions::with_method(NormMethod::PowerIteration) };
        let p = matrix_norm_with(&m, &opts).unwrap();
        assert!((p.value - svd).abs() <= 1e-6 * svd, "{} vs {svd}", p.value);
    }

    #[test]
    fn gram_route_matches_svd() {
        let n = GRAM_THRESHOLD + 20;
        let m = Mat::from_fn(n, n, |i, j| C64::new(1.0 / (1.0 + (i as f64 - j as f64).abs()), 0.0));
        let via_gram = singular_values(&m).unwrap()[0];
        let direct = m.singular_values().unwrap()[0];
        assert!((via_gram - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn zero_operator_and_nonconvergence() {
        let g = unit_grid(4);
        let z = DiscreteOperator::zeros(g.clone(), "0");
        assert_eq!(operator_norm(&z, NormMethod::PowerIteration, 1e-8).unwrap().value, 0.0);
        let d = [1.0, 0.999999, 0.5, 0.1].map(|v| C64::new(v, 0.0));
        let a = DiscreteOperator::multiplication(g, &d, "near-degenerate").unwrap();
        let opts = NormOptions { tol: 1e-15, max_iter: 3, ..NormOptions::with_method(NormMethod::PowerIteration) };
        assert!(matches!(operator_norm_with(&a, &opts), Err(Error::NonConvergence { iterations: 3, .. })));
        assert!(operator_norm(&a, NormMethod::Svd, 0.0).is_err());
    }

    #[test]
    fn deterministic_across_calls() {
        let g = unit_grid(30);
        let a = DiscreteOperator::from_fn(g, "t", |i, j| C64::new(1.0 / (1.0 + (i + j) as f64), 0.0));
        let e1 = operator_norm(&a, NormMethod::PowerIteration, 1e-10).unwrap();
        let e2 = operator_norm(&a, NormMethod::PowerIteration, 1e-10).unwrap();
        assert_eq!(e1.value.to_bits(), e2.value.to_bits());
        assert_eq!(e1.iterations, e2.iterations);
    }
}
