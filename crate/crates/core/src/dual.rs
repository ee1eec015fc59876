//! Dual-space types, projections and the acceleration coefficient sequence.
//!
//! The dual feasible set is `Λ = H₁* × {λ ≥ 0 in H₂*}`: equality multipliers are
//! free, inequality multipliers are nonnegative. All dual-space norms are Euclidean.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::oracles::DualOracle;

/// Problem dimensions: primal size `n`, equality rows `m_eq`, inequality rows `m_in`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m_eq: usize,
    pub m_in: usize,
}

impl Dims {
    pub fn check_dual(&self, p: &DualPoint) -> Result<()> {
        if p.eq.len() != self.m_eq {
            return Err(Error::DimensionMismatch {
                what: "equality multipliers",
                expected: self.m_eq,
                found: p.eq.len(),
            });
        }
        if p.ineq.len() != self.m_in {
            return Err(Error::DimensionMismatch {
                what: "inequality multipliers",
                expected: self.m_in,
                found: p.ineq.len(),
            });
        }
        Ok(())
    }

    pub fn check_primal(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "primal point",
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// A point `λ = (λ⁽¹⁾, λ⁽²⁾)` of the dual space, also used for dual-shaped
/// vectors such as gradients and residuals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DualPoint {
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
}

impl DualPoint {
    pub fn new(eq: Vec<f64>, ineq: Vec<f64>) -> Self {
        Self { eq, ineq }
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            eq: vec![0.0; dims.m_eq],
            ineq: vec![0.0; dims.m_in],
        }
    }

    pub fn len(&self) -> usize {
        self.eq.len() + self.ineq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.eq.iter().chain(self.ineq.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.eq.iter_mut().chain(self.ineq.iter_mut())
    }

    /// Flattened copy `(eq, ineq)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    /// Inverse of [`DualPoint::to_vec`].
    pub fn from_flat(flat: &[f64], m_eq: usize) -> Self {
        Self {
            eq: flat[..m_eq].to_vec(),
            ineq: flat[m_eq..].to_vec(),
        }
    }

    pub fn dot(&self, other: &DualPoint) -> f64 {
        dot(&self.eq, &other.eq) + dot(&self.ineq, &other.ineq)
    }

    pub fn norm(&self) -> f64 {
        dual_norm_sq(self).sqrt()
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &DualPoint) {
        crate::linalg::axpy(alpha, &x.eq, &mut self.eq);
        crate::linalg::axpy(alpha, &x.ineq, &mut self.ineq);
    }

    pub fn scaled(&self, alpha: f64) -> DualPoint {
        DualPoint {
            eq: self.eq.iter().map(|v| alpha * v).collect(),
            ineq: self.ineq.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: f64, other: &DualPoint, b: f64) -> DualPoint {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect();
        DualPoint {
            eq: mix(&self.eq, &other.eq),
            ineq: mix(&self.ineq, &other.ineq),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// Membership in `Λ`.
    pub fn in_lambda(&self) -> bool {
        self.ineq.iter().all(|&v| v >= 0.0)
    }
}

/// A point of the primal space `E`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PrimalPoint(pub Vec<f64>);

impl PrimalPoint {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PrimalPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PrimalPoint {
    fn from(v: Vec<f64>) -> Self {
        PrimalPoint(v)
    }
}

/// Componentwise `max(v, 0)`.
pub fn positive_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// Euclidean projection onto `Λ`: identity on the equality block, clamp on the
/// inequality block.
pub fn project_onto_lambda(mut p: DualPoint) -> DualPoint {
    for v in p.ineq.iter_mut() {
        // max(-0.0, 0.0) keeps the sign bit; normalise so projection is bitwise idempotent
        *v = if *v > 0.0 { *v } else { 0.0 };
    }
    p
}

pub fn dual_norm_sq(p: &DualPoint) -> f64 {
    dot(&p.eq, &p.eq) + dot(&p.ineq, &p.ineq)
}

/// An admissible coefficient sequence: `α₀ ∈ (0, 1]` and `α_k² ≤ C_k = Σ_{i≤k} α_i`.
pub trait CoefficientSequence {
    fn alpha(&self, k: usize) -> f64;
    fn cumulative(&self, k: usize) -> f64;

    /// `τ_k = α_{k+1} / C_{k+1}`
    fn tau(&self, k: usize) -> f64 {
        self.alpha(k + 1) / self.cumulative(k + 1)
    }
}

/// `α_k = (k + 1) / 2`, giving `C_k = (k + 1)(k + 2) / 4`.
#[derive(Clone, Copy, Debug, Default)]
pub struct StandardSequence;

impl CoefficientSequence for StandardSequence {
    fn alpha(&self, k: usize) -> f64 {
        (k as f64 + 1.0) / 2.0
    }

    fn cumulative(&self, k: usize) -> f64 {
        let k = k as f64;
        (k + 1.0) * (k + 2.0) / 4.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccelCoefficients {
    pub alpha: f64,
    pub cumulative: f64,
    pub tau: f64,
}

pub fn accel_coefficients(k: usize) -> AccelCoefficients {
    let seq = StandardSequence;
    AccelCoefficients {
        alpha: seq.alpha(k),
        cumulative: seq.cumulative(k),
        tau: seq.tau(k),
    }
}

/// Target accuracy `(ε_f, ε_eq, ε_in)` of an approximate primal solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetAccuracy {
    pub f: f64,
    pub eq: f64,
    pub ineq: f64,
}

/// Stopping thresholds `(ε̃_f, ε̃_eq, ε̃_in)`, optionally with the target accuracy
/// they were derived from.
///
/// A threshold for a constraint block the problem does not have is ignored by
/// the solvers; it may be zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub f: f64,
    pub eq: f64,
    pub ineq: f64,
    pub target: Option<TargetAccuracy>,
}

impl Tolerances {
    pub fn new(f: f64, eq: f64, ineq: f64) -> Self {
        Self {
            f,
            eq,
            ineq,
            target: None,
        }
    }

    /// Same threshold for every clause.
    pub fn uniform(eps: f64) -> Self {
        Self::new(eps, eps, eps)
    }

    /// Stopping thresholds guaranteeing a `target`-solution:
    /// `ε̃_f = ε_f`, `ε̃_eq = min(ε_f / 2R₁, ε_eq)`, `ε̃_in = min(ε_f / 2R₂, ε_in)`.
    pub fn from_target(target: TargetAccuracy, bounds: &BoundParams) -> Self {
        let cap = |r: f64, eps: f64| {
            if r > 0.0 {
                (target.f / (2.0 * r)).min(eps)
            } else {
                eps
            }
        };
        Self {
            f: target.f,
            eq: cap(bounds.r1, target.eq),
            ineq: cap(bounds.r2, target.ineq),
            target: Some(target),
        }
    }

    pub fn validate(&self, dims: Dims) -> Result<()> {
        let check = |name: &str, v: f64, needed: bool| {
            if v.is_nan() || v < 0.0 || (needed && v <= 0.0) {
                Err(Error::InvalidTolerance(format!("{name} = {v}")))
            } else {
                Ok(())
            }
        };
        check("eps_f", self.f, true)?;
        check("eps_eq", self.eq, dims.m_eq > 0)?;
        check("eps_in", self.ineq, dims.m_in > 0)?;
        Ok(())
    }
}

/// A-priori bounds `‖λ*⁽¹⁾‖ ≤ R₁`, `‖λ*⁽²⁾‖ ≤ R₂` and the dual Lipschitz constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    pub r1: f64,
    pub r2: f64,
    pub lipschitz: f64,
}

impl BoundParams {
    pub fn new(r1: f64, r2: f64, lipschitz: f64) -> Result<Self> {
        if !(r1 >= 0.0 && r2 >= 0.0 && r1.is_finite() && r2.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "dual bounds must be nonnegative, got R1 = {r1}, R2 = {r2}"
            )));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        Ok(Self { r1, r2, lipschitz })
    }

    pub fn radius_sq(&self) -> f64 {
        self.r1 * self.r1 + self.r2 * self.r2
    }

    /// `2L(R₁² + R₂²) / C_k`
    pub fn certified_bound(&self, cumulative: f64) -> f64 {
        2.0 * self.lipschitz * self.radius_sq() / cumulative
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionQuality {
    pub f_err: f64,
    pub eq_res: f64,
    pub in_res: f64,
}

/// `(|f(x) − opt|, ‖A₁x − b₁‖₂, ‖(A₂x − b₂)₊‖₂)`.
pub fn solution_quality<O: DualOracle + ?Sized>(
    x: &[f64],
    oracle: &O,
    opt_value: f64,
) -> Result<SolutionQuality> {
    oracle.dims().check_primal(x)?;
    let (eq_res, in_res) = oracle.residual_norms(x);
    Ok(SolutionQuality {
        f_err: (oracle.objective(x) - opt_value).abs(),
        eq_res,
        in_res,
    })
}

pub(crate) fn residual_norms(residual: &DualPoint) -> (f64, f64) {
    let pos: f64 = residual.ineq.iter().fold(0.0, |acc, &v| {
        let p = v.max(0.0);
        acc + p * p
    });
    (norm2(&residual.eq), pos.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn positive_part_examples() {
        assert_eq!(positive_part(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(positive_part(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(positive_part(&[-3.5]), vec![0.0]);
    }

    #[test]
    fn projection_examples() {
        let p = project_onto_lambda(DualPoint::new(vec![1.0, -2.0], vec![-1.0, 3.0]));
        assert_eq!(p, DualPoint::new(vec![1.0, -2.0], vec![0.0, 3.0]));

        let p = project_onto_lambda(DualPoint::new(vec![], vec![-5.0]));
        assert_eq!(p, DualPoint::new(vec![], vec![0.0]));

        let inside = DualPoint::new(vec![-4.0], vec![0.0, 7.5]);
        assert_eq!(project_onto_lambda(inside.clone()), inside);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let dims = Dims {
            n: 3,
            m_eq: 2,
            m_in: 0,
        };
        let err = dims
            .check_dual(&DualPoint::new(vec![1.0], vec![]))
            .unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1,
                ..
            }
        ));
        assert!(dims
            .check_dual(&DualPoint::new(vec![1.0, 2.0], vec![]))
            .is_ok());
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(dual_norm_sq(&DualPoint::new(vec![3.0], vec![4.0])), 25.0);
        assert_eq!(
            dual_norm_sq(&DualPoint::new(vec![0.0, 0.0], vec![0.0])),
            0.0
        );
        assert_eq!(dual_norm_sq(&DualPoint::new(vec![1.0, 1.0], vec![])), 2.0);
    }

    #[test]
    fn coefficient_examples() {
        let c0 = accel_coefficients(0);
        assert_eq!(c0.alpha, 0.5);
        assert_eq!(c0.cumulative, 0.5);
        assert!((c0.tau - 2.0 / 3.0).abs() < 1e-15);

        let c3 = accel_coefficients(3);
        assert_eq!(c3.alpha, 2.0);
        assert_eq!(c3.cumulative, 5.0);
        assert!((c3.tau - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_are_admissible() {
        let seq = StandardSequence;
        let a0 = seq.alpha(0);
        assert!(a0 > 0.0 && a0 <= 1.0);
        let mut running = 0.0;
        for k in 0..=10_000 {
            let c = accel_coefficients(k);
            running += c.alpha;
            assert!(c.alpha * c.alpha <= c.cumulative, "k = {k}");
            assert!((running - c.cumulative).abs() <= 1e-9 * c.cumulative);
            if k > 0 {
                let prev = accel_coefficients(k - 1);
                assert_eq!(c.cumulative, prev.cumulative + c.alpha);
            }
        }
    }

    #[test]
    fn target_mapping() {
        let bounds = BoundParams::new(2.0, 0.0, 1.0).unwrap();
        let tol = Tolerances::from_target(
            TargetAccuracy {
                f: 0.1,
                eq: 1.0,
                ineq: 0.5,
            },
            &bounds,
        );
        assert_eq!(tol.f, 0.1);
        assert_eq!(tol.eq, 0.025);
        // R₂ = 0: no inequality multiplier to trade against
        assert_eq!(tol.ineq, 0.5);
    }

    #[test]
    fn tolerance_validation_ignores_absent_blocks() {
        let dims = Dims {
            n: 4,
            m_eq: 2,
            m_in: 0,
        };
        assert!(Tolerances::new(1e-3, 1e-3, 0.0).validate(dims).is_ok());
        assert!(Tolerances::new(1e-3, 0.0, 0.0).validate(dims).is_err());
        assert!(Tolerances::new(0.0, 1e-3, 0.0).validate(dims).is_err());
    }

    fn dual_point(m_eq: usize, m_in: usize) -> impl Strategy<Value = DualPoint> {
        (
            prop::collection::vec(-1e3..1e3f64, m_eq),
            prop::collection::vec(-1e3..1e3f64, m_in),
        )
            .prop_map(|(eq, ineq)| DualPoint::new(eq, ineq))
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(p in dual_point(3, 4)) {
            let once = project_onto_lambda(p);
            prop_assert!(once.in_lambda());
            let twice = project_onto_lambda(once.clone());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn projection_is_nonexpansive(a in dual_point(2, 5), b in dual_point(2, 5)) {
            let diff = |x: &DualPoint, y: &DualPoint| x.combine(1.0, y, -1.0).norm();
            let before = diff(&a, &b);
            let after = diff(&project_onto_lambda(a), &project_onto_lambda(b));
            prop_assert!(after <= before + 1e-12);
        }

        #[test]
        fn norm_vanishes_only_at_zero(p in dual_point(2, 2)) {
            let zero = p.iter().all(|v| *v == 0.0);
            prop_assert_eq!(dual_norm_sq(&p) == 0.0, zero);
        }
    }
}
