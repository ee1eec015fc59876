//! Self-checks run by `fpdgm validate`: finite-difference gradients,
//! closed-form inner solutions against a projected-gradient maximizer, the
//! log-sum-exp dual value against its defining formula, and the certified
//! per-iteration bounds of the primal-dual method.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::random_marginals;
use crate::dual::{BoundParams, Dims, DualPoint, PrimalPoint, Tolerances};
use crate::error::Result;
use crate::linalg::dot;
use crate::oracles::{
    generic_evaluate, DualEval, DualOracle, ElpInstance, RoptInstance, RotInstance,
};
use crate::solver::{solve, SolveOptions, Status};

pub const FD_STEP: f64 = 1e-6;
pub const FD_REL_TOL: f64 = 1e-6;
/// Gradient coordinates smaller than this are skipped by the relative check.
pub const FD_MIN_COMPONENT: f64 = 1e-8;
pub const INNER_TOL: f64 = 1e-8;
pub const DUAL_FORMULA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    Gradient,
    Inner,
    Duality,
    Bounds,
}

impl Check {
    pub const ALL: [Check; 4] = [Check::Gradient, Check::Inner, Check::Duality, Check::Bounds];

    pub fn as_str(&self) -> &'static str {
        match self {
            Check::Gradient => "gradient",
            Check::Inner => "inner",
            Check::Duality => "duality",
            Check::Bounds => "bounds",
        }
    }
}

/// Deliberate defects for exercising the failure path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Report `−∇φ` instead of `∇φ`.
    WrongSignGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    pub case: String,
    pub passed: bool,
    pub error: f64,
    pub threshold: f64,
}

/// Central differences of `φ` along every coordinate.
pub fn finite_difference_gradient<O: DualOracle + ?Sized>(
    oracle: &O,
    lam: &DualPoint,
    step: f64,
) -> Result<DualPoint> {
    let m_eq = lam.eq.len();
    let base = lam.to_vec();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += step;
        minus[i] -= step;
        let fp = oracle.dual_value(&DualPoint::from_flat(&plus, m_eq))?;
        let fm = oracle.dual_value(&DualPoint::from_flat(&minus, m_eq))?;
        out.push((fp - fm) / (2.0 * step));
    }
    Ok(DualPoint::from_flat(&out, m_eq))
}

/// Largest relative deviation over coordinates with `|g_i| ≥ FD_MIN_COMPONENT`.
pub fn gradient_relative_error(analytic: &DualPoint, numeric: &DualPoint) -> f64 {
    analytic
        .iter()
        .zip(numeric.iter())
        .filter(|(g, _)| g.abs() >= FD_MIN_COMPONENT)
        .map(|(g, d)| (g - d).abs() / g.abs())
        .fold(0.0, f64::max)
}

/// Euclidean projection onto `{x : Σx = total, x ≥ 0}` by sorting.
pub fn project_to_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let t = (cumulative - total) / (k as f64 + 1.0);
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Maximizes `−f(x) − ⟨Aᵀλ, x⟩` over `{x ≥ floor, Σx = mass}` by projected
/// gradient ascent with a curvature-based step rule.
pub fn brute_force_inner<O: DualOracle + ?Sized>(
    oracle: &O,
    lam: &DualPoint,
    mass: f64,
    max_steps: usize,
) -> Vec<f64> {
    let n = oracle.dims().n;
    let shift = oracle.apply_adjoint(lam);
    let floor = 1e-14 * mass;
    let ascent = |x: &[f64]| -> Vec<f64> {
        oracle
            .objective_gradient(x)
            .iter()
            .zip(&shift)
            .map(|(g, s)| -g - s)
            .collect()
    };
    let project = |y: &[f64]| -> Vec<f64> {
        let shifted: Vec<f64> = y.iter().map(|v| v - floor).collect();
        project_to_simplex(&shifted, mass - n as f64 * floor)
            .into_iter()
            .map(|v| v + floor)
            .collect()
    };

    let mut x = vec![mass / n as f64; n];
    let mut grad = ascent(&x);
    let mut step = 1.0;
    for _ in 0..max_steps {
        let (next, next_grad) = loop {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi).collect();
            let next = project(&trial);
            let next_grad = ascent(&next);
            let dx: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let curvature = -dot(&dg, &dx);
            if curvature <= dot(&dx, &dx) / step || step < 1e-300 {
                break (next, next_grad);
            }
            step *= 0.5;
        };
        let moved = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        grad = next_grad;
        if moved == 0.0 {
            break;
        }
        step *= 1.5;
    }
    x
}

/// Wraps an oracle and corrupts it according to a [`Fault`].
pub struct FaultyOracle<'a> {
    inner: &'a dyn DualOracle,
    fault: Fault,
}

impl<'a> FaultyOracle<'a> {
    pub fn new(inner: &'a dyn DualOracle, fault: Fault) -> Self {
        Self { inner, fault }
    }
}

impl DualOracle for FaultyOracle<'_> {
    fn dims(&self) -> Dims {
        self.inner.dims()
    }
    fn strong_convexity(&self) -> f64 {
        self.inner.strong_convexity()
    }
    fn strong_convexity_euclidean(&self) -> f64 {
        self.inner.strong_convexity_euclidean()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(x)
    }
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.objective_gradient(x)
    }
    fn apply(&self, x: &[f64]) -> DualPoint {
        self.inner.apply(x)
    }
    fn apply_adjoint(&self, lam: &DualPoint) -> Vec<f64> {
        self.inner.apply_adjoint(lam)
    }
    fn rhs(&self) -> &DualPoint {
        self.inner.rhs()
    }
    fn inner_solution(&self, lam: &DualPoint) -> Result<PrimalPoint> {
        self.inner.inner_solution(lam)
    }
    fn operator_norms(&self) -> (f64, f64) {
        self.inner.operator_norms()
    }
    fn in_domain(&self, x: &[f64], tol: f64) -> bool {
        self.inner.in_domain(x, tol)
    }
    fn evaluate(&self, lam: &DualPoint) -> Result<DualEval> {
        let mut eval = self.inner.evaluate(lam)?;
        match self.fault {
            Fault::WrongSignGradient => eval.gradient = eval.gradient.scaled(-1.0),
        }
        Ok(eval)
    }
}

fn random_cost(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p * p).map(|_| rng.random::<f64>()).collect()
}

/// Small seeded instances of every family, with a multiplier to test at.
fn cases(seed: u64) -> Vec<(String, Box<dyn DualOracle>, DualPoint, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(String, Box<dyn DualOracle>, DualPoint, f64)> = Vec::new();
    for (k, gamma) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let elp = ElpInstance::random(6 + 2 * k, 2 + k, seed + k as u64).expect("valid ELP");
        let lam = DualPoint::new(
            (0..2 + k).map(|_| rng.random_range(-2.0..2.0)).collect(),
            vec![],
        );
        out.push((
            format!("elp n={} seed={}", 6 + 2 * k, seed + k as u64),
            Box::new(elp),
            lam,
            1.0,
        ));

        let p = 3;
        let (a1, a2, _) = random_marginals(p, seed + 10 + k as u64);
        let rot = RotInstance::new(p, random_cost(&mut rng, p), a1, a2, gamma).expect("valid ROT");
        let lam = DualPoint::new(
            (0..2 * p)
                .map(|_| rng.random_range(-gamma..gamma))
                .collect(),
            vec![],
        );
        out.push((format!("rot p={p} gamma={gamma}"), Box::new(rot), lam, 1.0));

        let (a1, a2, _) = random_marginals(p, seed + 20 + k as u64);
        let ropt =
            RoptInstance::new(p, random_cost(&mut rng, p), a1, a2, 0.7, gamma).expect("valid ROPT");
        let lam = DualPoint::new(
            vec![],
            (0..2 * p).map(|_| rng.random_range(0.0..gamma)).collect(),
        );
        out.push((
            format!("ropt p={p} gamma={gamma}"),
            Box::new(ropt),
            lam,
            0.7,
        ));
    }
    out
}

fn gradient_checks(seed: u64, fault: Option<Fault>) -> Vec<CheckResult> {
    cases(seed)
        .into_iter()
        .map(|(name, oracle, lam, _)| {
            let faulty;
            let oracle: &dyn DualOracle = match fault {
                Some(f) => {
                    faulty = FaultyOracle::new(oracle.as_ref(), f);
                    &faulty
                }
                None => oracle.as_ref(),
            };
            let error = match (
                oracle.dual_gradient(&lam),
                finite_difference_gradient(oracle, &lam, FD_STEP),
            ) {
                (Ok(g), Ok(fd)) => gradient_relative_error(&g, &fd),
                _ => f64::INFINITY,
            };
            CheckResult {
                check: Check::Gradient.as_str(),
                case: name,
                passed: error <= FD_REL_TOL,
                error,
                threshold: FD_REL_TOL,
            }
        })
        .collect()
}

fn inner_checks(seed: u64) -> Vec<CheckResult> {
    cases(seed)
        .into_iter()
        .map(|(name, oracle, lam, mass)| {
            let error = match oracle.inner_solution(&lam) {
                Ok(x) => {
                    let reference = brute_force_inner(oracle.as_ref(), &lam, mass, 100_000);
                    x.iter()
                        .zip(&reference)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                }
                Err(_) => f64::INFINITY,
            };
            CheckResult {
                check: Check::Inner.as_str(),
                case: name,
                passed: error <= INNER_TOL,
                error,
                threshold: INNER_TOL,
            }
        })
        .collect()
}

fn duality_checks(seed: u64) -> Vec<CheckResult> {
    cases(seed)
        .into_iter()
        .map(|(name, oracle, lam, _)| {
            let error = match (
                oracle.evaluate(&lam),
                generic_evaluate(oracle.as_ref(), &lam),
            ) {
                (Ok(a), Ok(b)) => (a.value - b.value).abs(),
                _ => f64::INFINITY,
            };
            CheckResult {
                check: Check::Duality.as_str(),
                case: name,
                passed: error <= DUAL_FORMULA_TOL,
                error,
                threshold: DUAL_FORMULA_TOL,
            }
        })
        .collect()
}

/// Monitors the certified bounds on a transport instance, with `R` taken as
/// twice the multiplier norm of a high-accuracy reference run.
fn bound_checks(seed: u64, fault: Option<Fault>) -> Vec<CheckResult> {
    let p = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a1, a2, _) = random_marginals(p, seed + 30);
    let rot = RotInstance::new(p, random_cost(&mut rng, p), a1, a2, 0.5).expect("valid ROT");
    let faulty;
    let oracle: &dyn DualOracle = match fault {
        Some(f) => {
            faulty = FaultyOracle::new(&rot, f);
            &faulty
        }
        None => &rot,
    };
    let reference = solve(
        &rot,
        &Tolerances::new(1e-10, 1e-10, 0.0),
        &SolveOptions::default().with_max_iter(5_000_000),
    );
    let (error, passed) = match reference {
        Ok(r) if r.status == Status::Converged => {
            let bounds = BoundParams::new(2.0 * r.dual.norm(), 0.0, oracle.lipschitz())
                .expect("valid bounds");
            match solve(
                oracle,
                &Tolerances::new(1e-8, 1e-8, 0.0),
                &SolveOptions::default()
                    .with_bounds(bounds)
                    .with_max_iter(20_000),
            ) {
                Ok(run) => (
                    run.bound_violations.len() as f64,
                    run.bound_violations.is_empty(),
                ),
                Err(_) => (f64::INFINITY, false),
            }
        }
        _ => (f64::INFINITY, false),
    };
    vec![CheckResult {
        check: Check::Bounds.as_str(),
        case: format!("rot p={p} gamma=0.5 violations"),
        passed,
        error,
        threshold: 0.0,
    }]
}

pub fn run_checks(checks: &[Check], seed: u64, fault: Option<Fault>) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for check in checks {
        match check {
            Check::Gradient => out.extend(gradient_checks(seed, fault)),
            Check::Inner => out.extend(inner_checks(seed)),
            Check::Duality => out.extend(duality_checks(seed)),
            Check::Bounds => out.extend(bound_checks(seed, fault)),
        }
    }
    out
}

/// CSV report `check,case,passed,error,threshold`.
pub fn write_check_csv<W: io::Write>(results: &[CheckResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        assert_eq!(
            project_to_simplex(&[0.2, 0.3, 0.5], 1.0),
            vec![0.2, 0.3, 0.5]
        );
        let p = project_to_simplex(&[2.0, 0.0], 1.0);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_to_simplex(&[1.0, 1.0, 1.0], 1.5);
        assert!(p.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn wrong_sign_gradient_is_caught() {
        let results = gradient_checks(1, Some(Fault::WrongSignGradient));
        assert!(results.iter().all(|r| !r.passed));
    }
}
