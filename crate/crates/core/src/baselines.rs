//! Comparison solvers: Sinkhorn balancing, Fletcher–Reeves conjugate gradient
//! on the dual, and the fast gradient method on a Tikhonov-regularized dual.
//!
//! All three report the primal point attached to their current dual iterate
//! and stop on the same three-part criterion as [`crate::solver::solve`].

use std::time::Instant;

use crate::dual::{DualPoint, PrimalPoint, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;
use crate::oracles::{DualEval, DualOracle, RotInstance};
use crate::solver::{SolveOptions, SolveReport, Status, TraceRow, DEFAULT_MAX_ITER};

/// Golden-section search for the minimizer of a unimodal `f` on `t ≥ 0`.
///
/// The bracket is found by doubling from `t = 1`; the search stops once the
/// bracket is shorter than `rel_tol` relative to its position.
pub fn line_search_1d<F: FnMut(f64) -> f64>(mut f: F, rel_tol: f64) -> Result<f64> {
    const MAX_DOUBLINGS: usize = 60;
    let mut eval = |t: f64| {
        let v = f(t);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let f0 = eval(0.0);
    let (mut lo, mut hi);
    let f1 = eval(1.0);
    if f1 >= f0 {
        lo = 0.0;
        hi = 1.0;
    } else {
        let mut prev = 0.0;
        let mut t = 1.0;
        let mut ft = f1;
        let mut doublings = 0;
        loop {
            let next = 2.0 * t;
            let fnext = eval(next);
            if fnext >= ft {
                lo = prev;
                hi = next;
                break;
            }
            doublings += 1;
            if doublings >= MAX_DOUBLINGS {
                return Err(Error::BracketFailed(MAX_DOUBLINGS));
            }
            prev = t;
            t = next;
            ft = fnext;
        }
    }

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = eval(c);
    let mut fd = eval(d);
    for _ in 0..500 {
        if hi - lo <= rel_tol * (0.5 * (lo.abs() + hi.abs())).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = eval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = eval(d);
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(if eval(t) <= f0 { t } else { 0.0 })
}

fn max_iter(options: &SolveOptions) -> usize {
    options.max_iter.unwrap_or(DEFAULT_MAX_ITER)
}

fn elapsed(options: &SolveOptions, start: &Instant) -> u64 {
    if options.record_timing {
        start.elapsed().as_nanos() as u64
    } else {
        0
    }
}

/// Trace row for a dual iterate `λ` whose primal companion is `x(λ)`.
fn dual_iterate_row<O: DualOracle + ?Sized>(
    oracle: &O,
    k: usize,
    eval: &DualEval,
    wall_ns: u64,
) -> TraceRow {
    let f = oracle.objective(&eval.x);
    let (eq_res, in_res) = oracle.residual_norms(&eval.x);
    TraceRow {
        k,
        phi: eval.value,
        f,
        gap: (f + eval.value).abs(),
        eq_res,
        in_res,
        cert_bound: None,
        phi_lambda: Some(eval.value),
        wall_ns,
    }
}

fn meets(row: &TraceRow, tol: &Tolerances) -> bool {
    row.gap <= tol.f && row.eq_res <= tol.eq && row.in_res <= tol.ineq
}

fn require_equality_only<O: DualOracle + ?Sized>(oracle: &O, what: &str) -> Result<()> {
    if oracle.dims().m_in > 0 {
        return Err(Error::NotApplicable(format!(
            "{what} (needs an equality-constrained dual)"
        )));
    }
    Ok(())
}

/// Log-domain scaling vectors of the plan `diag(u) K diag(v)` with `K = exp(−c/γ)`.
#[derive(Clone, Debug)]
pub struct BalancingState {
    p: usize,
    gamma: f64,
    pub log_u: Vec<f64>,
    pub log_v: Vec<f64>,
    log_kernel: Vec<f64>,
    log_a1: Vec<f64>,
    log_a2: Vec<f64>,
}

impl BalancingState {
    pub fn new(rot: &RotInstance) -> Self {
        let p = rot.side();
        let gamma = rot.gamma();
        Self {
            p,
            gamma,
            log_u: vec![0.0; p],
            log_v: vec![0.0; p],
            log_kernel: rot.cost().iter().map(|c| -c / gamma).collect(),
            log_a1: rot.a1().iter().map(|a| a.ln()).collect(),
            log_a2: rot.a2().iter().map(|a| a.ln()).collect(),
        }
    }

    /// Rescale rows so the plan's row sums equal `a₁`.
    pub fn row_sweep(&mut self) {
        let p = self.p;
        let mut buf = vec![0.0; p];
        for i in 0..p {
            for j in 0..p {
                buf[j] = self.log_kernel[i * p + j] + self.log_v[j];
            }
            self.log_u[i] = self.log_a1[i] - log_sum_exp(&buf);
        }
    }

    /// Rescale columns so the plan's column sums equal `a₂`.
    pub fn column_sweep(&mut self) {
        let p = self.p;
        let mut buf = vec![0.0; p];
        for j in 0..p {
            for i in 0..p {
                buf[i] = self.log_kernel[i * p + j] + self.log_u[i];
            }
            self.log_v[j] = self.log_a2[j] - log_sum_exp(&buf);
        }
    }

    pub fn plan(&self) -> Vec<f64> {
        let p = self.p;
        let mut x = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                x.push((self.log_u[i] + self.log_kernel[i * p + j] + self.log_v[j]).exp());
            }
        }
        x
    }

    /// Multipliers `λ = −γ(ln u, ln v)` with the gauge fixed by centering `ln u`.
    pub fn dual_point(&self) -> DualPoint {
        let mean = self.log_u.iter().sum::<f64>() / self.p as f64;
        let mut eq: Vec<f64> = self
            .log_u
            .iter()
            .map(|l| -self.gamma * (l - mean))
            .collect();
        eq.extend(self.log_v.iter().map(|l| -self.gamma * (l + mean)));
        DualPoint::new(eq, Vec::new())
    }
}

/// Sinkhorn balancing; one iteration is a row sweep followed by a column sweep.
pub fn sinkhorn_balance(
    rot: &RotInstance,
    tol: &Tolerances,
    options: &SolveOptions,
) -> Result<SolveReport> {
    tol.validate(rot.dims())?;
    let start = Instant::now();
    let mut state = BalancingState::new(rot);
    let mut trace = Vec::new();
    let mut status = Status::IterationCap;
    let mut primal = Vec::new();
    let mut dual = DualPoint::zeros(rot.dims());

    for k in 0..max_iter(options) {
        state.row_sweep();
        state.column_sweep();
        let x = state.plan();
        let lam = state.dual_point();
        let phi = match rot.dual_value(&lam) {
            Ok(v) if x.iter().all(|v| v.is_finite()) => v,
            _ => {
                status = Status::NumericalFailure;
                break;
            }
        };
        let f = rot.objective(&x);
        let (eq_res, in_res) = rot.residual_norms(&x);
        let row = TraceRow {
            k,
            phi,
            f,
            gap: (f + phi).abs(),
            eq_res,
            in_res,
            cert_bound: None,
            phi_lambda: Some(phi),
            wall_ns: elapsed(options, &start),
        };
        let done = meets(&row, tol);
        trace.push(row);
        primal = x;
        dual = lam;
        if done {
            status = Status::Converged;
            break;
        }
    }
    Ok(SolveReport::from_trace(
        status,
        PrimalPoint(primal),
        dual,
        trace,
        Vec::new(),
    ))
}

/// Relative bracket length for the exact line search in [`cgm_fletcher_reeves`].
pub const LINE_SEARCH_TOL: f64 = 1e-10;

/// Fletcher–Reeves nonlinear conjugate gradient on `φ` with exact line search.
///
/// The direction is reset to steepest descent every `m₁` iterations and
/// whenever it fails to be a descent direction. The primal iterate is `x(λ_k)`.
pub fn cgm_fletcher_reeves<O: DualOracle + ?Sized>(
    oracle: &O,
    tol: &Tolerances,
    options: &SolveOptions,
) -> Result<SolveReport> {
    require_equality_only(oracle, "conjugate gradient")?;
    let dims = oracle.dims();
    tol.validate(dims)?;
    let restart_every = dims.m_eq.max(1);
    let start = Instant::now();

    let mut lam = DualPoint::zeros(dims);
    let mut eval = match oracle.evaluate(&lam) {
        Ok(e) => e,
        Err(_) => {
            return Ok(SolveReport::from_trace(
                Status::NumericalFailure,
                PrimalPoint::default(),
                lam,
                Vec::new(),
                Vec::new(),
            ))
        }
    };
    let mut dir = eval.gradient.scaled(-1.0);
    let mut since_restart = 0;
    let mut restarts = 0usize;
    let mut trace = Vec::new();
    let mut status = Status::IterationCap;

    for k in 0..max_iter(options) {
        let row = dual_iterate_row(oracle, k, &eval, elapsed(options, &start));
        let done = meets(&row, tol);
        trace.push(row);
        if done {
            status = Status::Converged;
            break;
        }

        if since_restart >= restart_every || dir.dot(&eval.gradient) >= 0.0 {
            dir = eval.gradient.scaled(-1.0);
            since_restart = 0;
            restarts += 1;
        }
        let along = |t: f64| {
            let trial = lam.combine(1.0, &dir, t);
            oracle.dual_value(&trial).unwrap_or(f64::INFINITY)
        };
        let mut t = line_search_1d(along, LINE_SEARCH_TOL)?;
        if t == 0.0 && since_restart > 0 {
            // no progress along the conjugate direction; retry steepest descent
            dir = eval.gradient.scaled(-1.0);
            since_restart = 0;
            restarts += 1;
            let along = |t: f64| {
                oracle
                    .dual_value(&lam.combine(1.0, &dir, t))
                    .unwrap_or(f64::INFINITY)
            };
            t = line_search_1d(along, LINE_SEARCH_TOL)?;
        }
        if t == 0.0 {
            log::debug!("conjugate gradient stalled at iteration {k}");
            break;
        }

        let next_lam = lam.combine(1.0, &dir, t);
        let next = match oracle.evaluate(&next_lam) {
            Ok(e) => e,
            Err(_) => {
                status = Status::NumericalFailure;
                break;
            }
        };
        let g_old = eval.gradient.dot(&eval.gradient);
        let g_new = next.gradient.dot(&next.gradient);
        let beta = if g_old > 0.0 { g_new / g_old } else { 0.0 };
        dir = next.gradient.combine(-1.0, &dir, beta);
        lam = next_lam;
        eval = next;
        since_restart += 1;
    }
    log::debug!("conjugate gradient used {restarts} restarts");
    Ok(SolveReport::from_trace(
        status,
        eval.x,
        lam,
        trace,
        Vec::new(),
    ))
}

/// Regularization weight for [`reg_dual_fgm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegDelta {
    Fixed(f64),
    /// `δ = ε̃_f / (8 R²)` with `R = max(1, 2‖λ_k‖)` tracked as a running maximum;
    /// `δ` only ever decreases and the momentum is never reset.
    Adaptive,
}

/// Fast gradient method on `φ(λ) + (δ/2)‖λ‖²`, primal iterate `x(λ_k)`.
///
/// For `δ > 0` the momentum is the constant `(√(L+δ) − √δ)/(√(L+δ) + √δ)`;
/// for `δ = 0` it follows the usual `t_{k+1} = (1 + √(1 + 4t_k²))/2` schedule.
pub fn reg_dual_fgm<O: DualOracle + ?Sized>(
    oracle: &O,
    tol: &Tolerances,
    options: &SolveOptions,
    delta: RegDelta,
) -> Result<SolveReport> {
    require_equality_only(oracle, "regularized fast gradient")?;
    let dims = oracle.dims();
    tol.validate(dims)?;
    let lipschitz = options
        .lipschitz
        .unwrap_or_else(|| oracle.lipschitz_for(options.pairing));
    let start = Instant::now();

    let delta_for = |radius: f64| tol.f / (8.0 * radius * radius);
    let mut radius = 1.0;
    let mut delta_now = match delta {
        RegDelta::Fixed(d) if d >= 0.0 && d.is_finite() => d,
        RegDelta::Fixed(d) => {
            return Err(Error::InvalidInstance(format!(
                "regularization weight must be nonnegative, found {d}"
            )))
        }
        RegDelta::Adaptive => delta_for(radius),
    };

    let mut lam = DualPoint::zeros(dims);
    let mut lam_prev = lam.clone();
    let mut t_k = 1.0_f64;
    let mut trace = Vec::new();
    let mut status = Status::IterationCap;
    let mut last_x = PrimalPoint::default();

    for k in 0..max_iter(options) {
        let eval = match oracle.evaluate(&lam) {
            Ok(e) => e,
            Err(_) => {
                status = Status::NumericalFailure;
                break;
            }
        };
        let row = dual_iterate_row(oracle, k, &eval, elapsed(options, &start));
        let done = meets(&row, tol);
        trace.push(row);
        last_x = eval.x;
        if done {
            status = Status::Converged;
            break;
        }

        if delta == RegDelta::Adaptive {
            let r = 2.0 * lam.norm();
            if r > radius {
                radius = r;
                delta_now = delta_for(radius);
            }
        }

        let smooth = lipschitz + delta_now;
        let momentum = if delta_now > 0.0 {
            let (a, b) = (smooth.sqrt(), delta_now.sqrt());
            (a - b) / (a + b)
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
            let m = (t_k - 1.0) / t_next;
            t_k = t_next;
            m
        };
        let y = lam.combine(1.0 + momentum, &lam_prev, -momentum);
        let grad = match oracle.dual_gradient(&y) {
            Ok(g) => g,
            Err(_) => {
                status = Status::NumericalFailure;
                break;
            }
        };
        let mut next = y.clone();
        next.axpy(-1.0 / smooth, &grad);
        next.axpy(-delta_now / smooth, &y);
        lam_prev = std::mem::replace(&mut lam, next);
    }

    Ok(SolveReport::from_trace(
        status,
        last_x,
        lam,
        trace,
        Vec::new(),
    ))
}
