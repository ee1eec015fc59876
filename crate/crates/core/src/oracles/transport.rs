//! Entropy-regularized transport instances. The plan `X` is a `p × p` matrix
//! stored row-major; the constraint operator maps it to `(Xe, Xᵀe)`.
//!
//! The total mass `Σ xᵢⱼ` is part of `Q` (the probability simplex for ROT, the
//! simplex scaled to `m` for ROPT), which keeps the entropy strongly convex and
//! the inner problem a softmax.

use super::{check_inner, check_multipliers, finish_eval, DualEval, DualOracle};
use crate::dual::{Dims, DualPoint, PrimalPoint};
use crate::error::{Error, Result};
use crate::linalg::{dot, log_sum_exp, softmax_in_place, x_ln_x_sum};

#[derive(Clone, Debug)]
struct TransportCore {
    p: usize,
    cost: Vec<f64>,
    gamma: f64,
}

impl TransportCore {
    fn new(p: usize, cost: Vec<f64>, gamma: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInstance(
                "transport side must be positive".into(),
            ));
        }
        if cost.len() != p * p {
            return Err(Error::DimensionMismatch {
                what: "cost matrix",
                expected: p * p,
                found: cost.len(),
            });
        }
        if let Some(c) = cost.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidInstance(format!(
                "cost entries must be finite and nonnegative, found {c}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "regularization must be positive, found {gamma}"
            )));
        }
        Ok(Self { p, cost, gamma })
    }

    /// `−(cᵢⱼ + uᵢ + vⱼ) / γ`
    fn log_weights(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let p = self.p;
        let inv = 1.0 / self.gamma;
        let mut w = Vec::with_capacity(p * p);
        for i in 0..p {
            let row = &self.cost[i * p..(i + 1) * p];
            w.extend(row.iter().zip(v).map(|(c, vj)| -(c + u[i] + vj) * inv));
        }
        w
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.gamma * x_ln_x_sum(x) + dot(&self.cost, x)
    }

    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.cost)
            .map(|(v, c)| self.gamma * (v.ln() + 1.0) + c)
            .collect()
    }

    fn marginals(&self, x: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; 2 * p];
        for i in 0..p {
            for j in 0..p {
                let v = x[i * p + j];
                out[i] += v;
                out[p + j] += v;
            }
        }
        out
    }

    fn adjoint(&self, uv: &[f64]) -> Vec<f64> {
        let p = self.p;
        let (u, v) = uv.split_at(p);
        let mut out = Vec::with_capacity(p * p);
        for ui in u {
            out.extend(v.iter().map(|vj| ui + vj));
        }
        out
    }

    /// Max column Euclidean norm of the stacked marginal operator: every
    /// column holds exactly one unit entry in each half.
    fn marginal_operator_norm(&self) -> f64 {
        2f64.sqrt()
    }

    fn in_domain(&self, x: &[f64], mass: f64, tol: f64) -> bool {
        x.len() == self.p * self.p
            && x.iter().all(|v| *v >= 0.0)
            && (x.iter().sum::<f64>() - mass).abs() <= tol * mass.max(1.0)
    }
}

fn check_histogram(name: &str, a: &[f64], p: usize) -> Result<f64> {
    if a.len() != p {
        return Err(Error::DimensionMismatch {
            what: "marginal",
            expected: p,
            found: a.len(),
        });
    }
    if let Some(v) = a.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInstance(format!(
            "{name} entries must be nonnegative, found {v}"
        )));
    }
    Ok(a.iter().sum())
}

/// Regularized optimal transport
/// `min { γ Σ xᵢⱼ ln xᵢⱼ + Σ cᵢⱼ xᵢⱼ : Xe = a₁, Xᵀe = a₂ }`.
#[derive(Clone, Debug)]
pub struct RotInstance {
    core: TransportCore,
    rhs: DualPoint,
}

impl RotInstance {
    pub fn new(p: usize, cost: Vec<f64>, a1: Vec<f64>, a2: Vec<f64>, gamma: f64) -> Result<Self> {
        let core = TransportCore::new(p, cost, gamma)?;
        for (name, a) in [("a1", &a1), ("a2", &a2)] {
            let total = check_histogram(name, a, p)?;
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInstance(format!(
                    "{name} must sum to 1, sums to {total}"
                )));
            }
        }
        let mut b = a1;
        b.extend(a2);
        Ok(Self {
            core,
            rhs: DualPoint::new(b, Vec::new()),
        })
    }

    pub fn side(&self) -> usize {
        self.core.p
    }

    pub fn gamma(&self) -> f64 {
        self.core.gamma
    }

    pub fn cost(&self) -> &[f64] {
        &self.core.cost
    }

    pub fn a1(&self) -> &[f64] {
        &self.rhs.eq[..self.core.p]
    }

    pub fn a2(&self) -> &[f64] {
        &self.rhs.eq[self.core.p..]
    }

    /// Same instance with a different regularization parameter.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        RotInstance::new(
            self.side(),
            self.cost().to_vec(),
            self.a1().to_vec(),
            self.a2().to_vec(),
            gamma,
        )
    }
}

impl DualOracle for RotInstance {
    fn dims(&self) -> Dims {
        Dims {
            n: self.core.p * self.core.p,
            m_eq: 2 * self.core.p,
            m_in: 0,
        }
    }

    fn strong_convexity(&self) -> f64 {
        self.core.gamma
    }

    fn strong_convexity_euclidean(&self) -> f64 {
        self.core.gamma
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.core.objective(x)
    }

    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.core.objective_gradient(x)
    }

    fn apply(&self, x: &[f64]) -> DualPoint {
        DualPoint::new(self.core.marginals(x), Vec::new())
    }

    fn apply_adjoint(&self, lam: &DualPoint) -> Vec<f64> {
        self.core.adjoint(&lam.eq)
    }

    fn rhs(&self) -> &DualPoint {
        &self.rhs
    }

    fn inner_solution(&self, lam: &DualPoint) -> Result<PrimalPoint> {
        check_multipliers(self.dims(), lam)?;
        let (u, v) = lam.eq.split_at(self.core.p);
        let mut w = self.core.log_weights(u, v);
        softmax_in_place(&mut w, 1.0);
        check_inner(w)
    }

    fn operator_norms(&self) -> (f64, f64) {
        (self.core.marginal_operator_norm(), 0.0)
    }

    fn in_domain(&self, x: &[f64], tol: f64) -> bool {
        self.core.in_domain(x, 1.0, tol)
    }

    fn evaluate(&self, lam: &DualPoint) -> Result<DualEval> {
        check_multipliers(self.dims(), lam)?;
        let (u, v) = lam.eq.split_at(self.core.p);
        let mut x = self.core.log_weights(u, v);
        let lse = softmax_in_place(&mut x, 1.0);
        let x = check_inner(x)?;
        let value = lam.dot(&self.rhs) + self.core.gamma * lse;
        let gradient = self.residual(&x).scaled(-1.0);
        finish_eval(value, gradient, x)
    }
}

/// Regularized optimal partial transport
/// `min { γ Σ xᵢⱼ ln xᵢⱼ + Σ cᵢⱼ xᵢⱼ : Xe ≤ a₁, Xᵀe ≤ a₂, eᵀXe = m }`,
/// with the mass condition folded into `Q`.
#[derive(Clone, Debug)]
pub struct RoptInstance {
    core: TransportCore,
    mass: f64,
    rhs: DualPoint,
}

impl RoptInstance {
    pub fn new(
        p: usize,
        cost: Vec<f64>,
        a1: Vec<f64>,
        a2: Vec<f64>,
        mass: f64,
        gamma: f64,
    ) -> Result<Self> {
        let core = TransportCore::new(p, cost, gamma)?;
        let s1 = check_histogram("a1", &a1, p)?;
        let s2 = check_histogram("a2", &a2, p)?;
        if !(mass > 0.0 && mass <= s1.min(s2)) {
            return Err(Error::InvalidInstance(format!(
                "mass must lie in (0, {}], found {mass}",
                s1.min(s2)
            )));
        }
        let mut b = a1;
        b.extend(a2);
        Ok(Self {
            core,
            mass,
            rhs: DualPoint::new(Vec::new(), b),
        })
    }

    pub fn side(&self) -> usize {
        self.core.p
    }

    pub fn gamma(&self) -> f64 {
        self.core.gamma
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn cost(&self) -> &[f64] {
        &self.core.cost
    }
}

impl DualOracle for RoptInstance {
    fn dims(&self) -> Dims {
        Dims {
            n: self.core.p * self.core.p,
            m_eq: 0,
            m_in: 2 * self.core.p,
        }
    }

    /// Entropy on the simplex scaled to mass `m` is `γ/m`-strongly convex in `ℓ₁`.
    fn strong_convexity(&self) -> f64 {
        self.core.gamma / self.mass
    }

    fn strong_convexity_euclidean(&self) -> f64 {
        self.core.gamma / self.mass
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.core.objective(x)
    }

    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.core.objective_gradient(x)
    }

    fn apply(&self, x: &[f64]) -> DualPoint {
        DualPoint::new(Vec::new(), self.core.marginals(x))
    }

    fn apply_adjoint(&self, lam: &DualPoint) -> Vec<f64> {
        self.core.adjoint(&lam.ineq)
    }

    fn rhs(&self) -> &DualPoint {
        &self.rhs
    }

    fn inner_solution(&self, lam: &DualPoint) -> Result<PrimalPoint> {
        check_multipliers(self.dims(), lam)?;
        let (u, v) = lam.ineq.split_at(self.core.p);
        let mut w = self.core.log_weights(u, v);
        softmax_in_place(&mut w, self.mass);
        check_inner(w)
    }

    fn operator_norms(&self) -> (f64, f64) {
        (0.0, self.core.marginal_operator_norm())
    }

    fn in_domain(&self, x: &[f64], tol: f64) -> bool {
        self.core.in_domain(x, self.mass, tol)
    }

    fn evaluate(&self, lam: &DualPoint) -> Result<DualEval> {
        check_multipliers(self.dims(), lam)?;
        let (u, v) = lam.ineq.split_at(self.core.p);
        let w = self.core.log_weights(u, v);
        let lse = log_sum_exp(&w);
        let mut x = w;
        softmax_in_place(&mut x, self.mass);
        let x = check_inner(x)?;
        let g = self.core.gamma;
        let m = self.mass;
        let value = lam.dot(&self.rhs) + m * g * lse - g * m * m.ln();
        let gradient = self.residual(&x).scaled(-1.0);
        finish_eval(value, gradient, x)
    }
}
