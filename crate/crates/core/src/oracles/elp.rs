use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_inner, check_multipliers, finish_eval, DualEval, DualOracle};
use crate::bench::flat_dirichlet;
use crate::dual::{Dims, DualPoint, PrimalPoint};
use crate::error::{Error, Result};
use crate::linalg::{dot, log_sum_exp, softmax_in_place};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn mul_transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// Largest Euclidean norm over the columns, i.e. the `ℓ₁ → ℓ₂` operator norm.
    pub fn max_column_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.get(i, j).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Entropy-linear program
/// `min { Σ xᵢ ln(xᵢ/ξᵢ) : x ∈ S_n(1), Ax = b }`.
#[derive(Clone, Debug)]
pub struct ElpInstance {
    xi: Vec<f64>,
    log_xi: Vec<f64>,
    matrix: DenseMatrix,
    rhs: DualPoint,
}

impl ElpInstance {
    pub fn new(xi: Vec<f64>, matrix: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::InvalidInstance("empty prior".into()));
        }
        if let Some(bad) = xi.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInstance(format!(
                "prior entries must be positive, found {bad}"
            )));
        }
        if matrix.cols() != xi.len() {
            return Err(Error::DimensionMismatch {
                what: "constraint matrix columns",
                expected: xi.len(),
                found: matrix.cols(),
            });
        }
        if b.len() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                what: "right-hand side",
                expected: matrix.rows(),
                found: b.len(),
            });
        }
        let log_xi = xi.iter().map(|v| v.ln()).collect();
        Ok(Self {
            xi,
            log_xi,
            matrix,
            rhs: DualPoint::new(b, Vec::new()),
        })
    }

    /// Random feasible instance: `A` uniform in `[-1, 1]`, `ξ` uniform in
    /// `[0.5, 1.5]`, and `b = A x₀` for a flat-Dirichlet `x₀`.
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let data = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let matrix = DenseMatrix::new(m, n, data)?;
        let xi = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let x0 = flat_dirichlet(&mut rng, n);
        let b = matrix.mul_vec(&x0);
        Self::new(xi, matrix, b)
    }

    pub fn prior(&self) -> &[f64] {
        &self.xi
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    fn log_weights(&self, lam: &DualPoint) -> Vec<f64> {
        let shift = self.matrix.mul_transpose_vec(&lam.eq);
        self.log_xi.iter().zip(&shift).map(|(l, s)| l - s).collect()
    }
}

impl DualOracle for ElpInstance {
    fn dims(&self) -> Dims {
        Dims {
            n: self.xi.len(),
            m_eq: self.matrix.rows(),
            m_in: 0,
        }
    }

    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn strong_convexity_euclidean(&self) -> f64 {
        // Hessian diag(1/xᵢ) with xᵢ ≤ 1 on the simplex
        1.0
    }

    fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.xi)
            .map(|(&v, &p)| if v > 0.0 { v * (v / p).ln() } else { 0.0 })
            .sum()
    }

    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.xi)
            .map(|(v, p)| (v / p).ln() + 1.0)
            .collect()
    }

    fn apply(&self, x: &[f64]) -> DualPoint {
        DualPoint::new(self.matrix.mul_vec(x), Vec::new())
    }

    fn apply_adjoint(&self, lam: &DualPoint) -> Vec<f64> {
        self.matrix.mul_transpose_vec(&lam.eq)
    }

    fn rhs(&self) -> &DualPoint {
        &self.rhs
    }

    fn inner_solution(&self, lam: &DualPoint) -> Result<PrimalPoint> {
        check_multipliers(self.dims(), lam)?;
        let mut w = self.log_weights(lam);
        softmax_in_place(&mut w, 1.0);
        check_inner(w)
    }

    fn operator_norms(&self) -> (f64, f64) {
        (self.matrix.max_column_norm(), 0.0)
    }

    fn in_domain(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.xi.len()
            && x.iter().all(|v| *v >= 0.0)
            && (x.iter().sum::<f64>() - 1.0).abs() <= tol
    }

    fn evaluate(&self, lam: &DualPoint) -> Result<DualEval> {
        check_multipliers(self.dims(), lam)?;
        let w = self.log_weights(lam);
        let lse = log_sum_exp(&w);
        let mut x = w;
        softmax_in_place(&mut x, 1.0);
        let x = check_inner(x)?;
        let value = lam.dot(&self.rhs) + lse;
        let gradient = self.residual(&x).scaled(-1.0);
        finish_eval(value, gradient, x)
    }
}
