//! Dual oracles: closed-form inner solutions `x(λ)`, dual values `φ(λ)` and
//! gradients `∇φ(λ) = b − A x(λ)` for the shipped problem families.

mod elp;
mod ingest;
mod instance;
mod transport;

pub use elp::{DenseMatrix, ElpInstance};
pub use ingest::{
    ingest_marginal, load_marginal, read_histogram_text, read_pgm, square_side, Histogram, EPS_MASS,
};
pub use instance::{CostSource, Family, InstanceSpec, MarginalSource, Problem};
pub use transport::{RoptInstance, RotInstance};

use crate::dual::{residual_norms, Dims, DualPoint, PrimalPoint};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, norm2};

/// Choice of norm on the primal space `E`; dual-space norms are always Euclidean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NormPairing {
    /// `‖·‖₁` on `E`. Operator norms are maximum column Euclidean norms.
    #[default]
    L1,
    /// `‖·‖₂` on `E`. Operator norms are spectral norms (power iteration).
    Euclidean,
}

/// Everything one inner solve yields.
#[derive(Clone, Debug)]
pub struct DualEval {
    pub value: f64,
    pub gradient: DualPoint,
    pub x: PrimalPoint,
}

/// A problem `min { f(x) : x ∈ Q, A₁x = b₁, A₂x ≤ b₂ }` whose inner problem
/// `max_{x∈Q} −f(x) − ⟨A₁ᵀλ⁽¹⁾ + A₂ᵀλ⁽²⁾, x⟩` has a closed-form solution.
pub trait DualOracle: Send + Sync {
    fn dims(&self) -> Dims;

    /// Strong convexity modulus `ν` of `f` on `Q` with respect to `‖·‖₁`.
    fn strong_convexity(&self) -> f64;

    /// Strong convexity modulus of `f` on `Q` with respect to `‖·‖₂`.
    fn strong_convexity_euclidean(&self) -> f64;

    fn objective(&self, x: &[f64]) -> f64;

    /// `∇f(x)` at a point of the relative interior of `Q`.
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `(A₁x, A₂x)`
    fn apply(&self, x: &[f64]) -> DualPoint;

    /// `A₁ᵀλ⁽¹⁾ + A₂ᵀλ⁽²⁾`
    fn apply_adjoint(&self, lam: &DualPoint) -> Vec<f64>;

    /// `(b₁, b₂)`
    fn rhs(&self) -> &DualPoint;

    /// `x(λ)`, the unique maximizer of the inner problem.
    fn inner_solution(&self, lam: &DualPoint) -> Result<PrimalPoint>;

    /// `(‖A₁‖, ‖A₂‖)` from `(E, ‖·‖₁)` to Euclidean `H₁`, `H₂`.
    fn operator_norms(&self) -> (f64, f64);

    /// Membership test for `Q`, with tolerance on equality-type conditions.
    fn in_domain(&self, x: &[f64], tol: f64) -> bool;

    fn lipschitz(&self) -> f64 {
        self.lipschitz_for(NormPairing::L1)
    }

    /// `L = (‖A₁‖² + ‖A₂‖²) / ν` under the given norm pairing.
    fn lipschitz_for(&self, pairing: NormPairing) -> f64 {
        match pairing {
            NormPairing::L1 => {
                let (a1, a2) = self.operator_norms();
                (a1 * a1 + a2 * a2) / self.strong_convexity()
            }
            NormPairing::Euclidean => {
                let (a1, a2) = spectral_norms(self);
                (a1 * a1 + a2 * a2) / self.strong_convexity_euclidean()
            }
        }
    }

    /// Dual value, gradient and inner solution from a single inner solve.
    fn evaluate(&self, lam: &DualPoint) -> Result<DualEval> {
        generic_evaluate(self, lam)
    }

    fn dual_value(&self, lam: &DualPoint) -> Result<f64> {
        Ok(self.evaluate(lam)?.value)
    }

    /// `(b₁ − A₁x(λ), b₂ − A₂x(λ))`, not projected.
    fn dual_gradient(&self, lam: &DualPoint) -> Result<DualPoint> {
        Ok(self.evaluate(lam)?.gradient)
    }

    /// `(A₁x − b₁, A₂x − b₂)`
    fn residual(&self, x: &[f64]) -> DualPoint {
        let mut r = self.apply(x);
        r.axpy(-1.0, self.rhs());
        r
    }

    /// `(‖A₁x − b₁‖₂, ‖(A₂x − b₂)₊‖₂)`
    fn residual_norms(&self, x: &[f64]) -> (f64, f64) {
        residual_norms(&self.residual(x))
    }
}

/// `φ(λ) = ⟨λ, b⟩ − f(x(λ)) − ⟨Aᵀλ, x(λ)⟩` evaluated literally from the inner solution.
pub fn generic_evaluate<O: DualOracle + ?Sized>(oracle: &O, lam: &DualPoint) -> Result<DualEval> {
    let x = oracle.inner_solution(lam)?;
    let shift = oracle.apply_adjoint(lam);
    let value = lam.dot(oracle.rhs()) - oracle.objective(&x) - dot(&shift, &x);
    let gradient = oracle.residual(&x).scaled(-1.0);
    finish_eval(value, gradient, x)
}

pub(crate) fn finish_eval(value: f64, gradient: DualPoint, x: PrimalPoint) -> Result<DualEval> {
    if !value.is_finite() {
        return Err(Error::NonFinite("dual value"));
    }
    if !gradient.is_finite() {
        return Err(Error::NonFinite("dual gradient"));
    }
    Ok(DualEval { value, gradient, x })
}

pub(crate) fn check_multipliers(dims: Dims, lam: &DualPoint) -> Result<()> {
    dims.check_dual(lam)?;
    if !lam.is_finite() {
        return Err(Error::NonFinite("multipliers"));
    }
    Ok(())
}

pub(crate) fn check_inner(x: Vec<f64>) -> Result<PrimalPoint> {
    if !all_finite(&x) {
        return Err(Error::NonFinite("inner solution"));
    }
    Ok(PrimalPoint(x))
}

/// Spectral norms `(‖A₁‖₂, ‖A₂‖₂)` by power iteration on `AᵀA`, block by block.
pub fn spectral_norms<O: DualOracle + ?Sized>(oracle: &O) -> (f64, f64) {
    let dims = oracle.dims();
    let block = |use_eq: bool| -> f64 {
        let m = if use_eq { dims.m_eq } else { dims.m_in };
        if m == 0 {
            return 0.0;
        }
        // deterministic, generically non-degenerate start
        let mut x: Vec<f64> = (0..dims.n)
            .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
            .collect();
        let mut estimate = 0.0_f64;
        for _ in 0..10_000 {
            let nx = norm2(&x);
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let ax = oracle.apply(&x);
            let lam = if use_eq {
                DualPoint::new(ax.eq, vec![0.0; dims.m_in])
            } else {
                DualPoint::new(vec![0.0; dims.m_eq], ax.ineq)
            };
            let next = oracle.apply_adjoint(&lam);
            let rayleigh = dot(&next, &x);
            let converged = (rayleigh - estimate).abs() <= 1e-14 * rayleigh.abs();
            estimate = rayleigh;
            x = next;
            if converged {
                break;
            }
        }
        estimate.max(0.0).sqrt()
    };
    (block(true), block(false))
}
