//! Fast primal-dual gradient method on the Lagrange dual.
//!
//! Each iteration takes a projected gradient step from `λ_k` (giving `η_k`),
//! minimizes the accumulated linear model plus `(L/2)‖λ‖²` over `Λ` (giving
//! `ζ_k`), and mixes the two into `λ_{k+1}`. The primal estimate `x̂_k` is the
//! `α`-weighted average of the inner solutions `x(λ_i)`, and the run stops once
//! `|f(x̂_k) + φ(η_k)|` and both constraint residuals at `x̂_k` are below their
//! thresholds.

use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dual::{
    accel_coefficients, project_onto_lambda, BoundParams, DualPoint, PrimalPoint, Tolerances,
};
use crate::error::{Error, Result};
use crate::oracles::{DualEval, DualOracle, NormPairing};

/// Iteration cap when no bounds are available to derive one.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// Relative slack when checking the certified bounds, absorbing rounding in
/// `f(x̂) + φ(η)`.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    IterationCap,
    NumericalFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterationCap => "iteration-cap",
            Status::NumericalFailure => "numerical-failure",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a solver trace. For the primal-dual method `phi` is `φ(η_k)` and
/// `f` is `f(x̂_k)`; baselines report their own primal and dual iterates.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub phi: f64,
    pub f: f64,
    pub gap: f64,
    pub eq_res: f64,
    pub in_res: f64,
    /// `2L(R₁² + R₂²)/C_k`, when bounds were supplied.
    pub cert_bound: Option<f64>,
    /// `φ(λ_k)` at the point the gradient was taken.
    pub phi_lambda: Option<f64>,
    pub wall_ns: u64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: Status,
    pub iterations: usize,
    pub final_gap: f64,
    pub final_eq_residual: f64,
    pub final_in_residual: f64,
    pub primal: PrimalPoint,
    pub dual: DualPoint,
    pub trace: Vec<TraceRow>,
    /// Iterations at which a certified bound failed to hold.
    pub bound_violations: Vec<usize>,
}

impl SolveReport {
    /// Index `k` of the last iteration performed.
    pub fn stop_index(&self) -> Option<usize> {
        self.trace.last().map(|r| r.k)
    }

    pub(crate) fn from_trace(
        status: Status,
        primal: PrimalPoint,
        dual: DualPoint,
        trace: Vec<TraceRow>,
        bound_violations: Vec<usize>,
    ) -> Self {
        let (gap, eq, ineq) = trace
            .last()
            .map(|r| (r.gap, r.eq_res, r.in_res))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        Self {
            status,
            iterations: trace.len(),
            final_gap: gap,
            final_eq_residual: eq,
            final_in_residual: ineq,
            primal,
            dual,
            trace,
            bound_violations,
        }
    }

    pub fn write_trace_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        write_trace_csv(&self.trace, writer)
    }
}

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    k: usize,
    phi_eta: f64,
    f_xhat: f64,
    gap: f64,
    eq_res: f64,
    in_res: f64,
    cert_bound: Option<f64>,
    wall_ns: u64,
}

/// Trace CSV: `k,phi_eta,f_xhat,gap,eq_res,in_res,cert_bound,wall_ns`.
pub fn write_trace_csv<W: io::Write>(trace: &[TraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in trace {
        w.serialize(TraceRecord {
            k: r.k,
            phi_eta: r.phi,
            f_xhat: r.f,
            gap: r.gap,
            eq_res: r.eq_res,
            in_res: r.in_res,
            cert_bound: r.cert_bound,
            wall_ns: r.wall_ns,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: io::Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<TraceRecord>()
        .map(|rec| {
            let rec = rec?;
            Ok(TraceRow {
                k: rec.k,
                phi: rec.phi_eta,
                f: rec.f_xhat,
                gap: rec.gap,
                eq_res: rec.eq_res,
                in_res: rec.in_res,
                cert_bound: rec.cert_bound,
                phi_lambda: None,
                wall_ns: rec.wall_ns,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Defaults to `10·N_stop` with bounds, [`DEFAULT_MAX_ITER`] without.
    pub max_iter: Option<usize>,
    /// Enables the certified-bound monitor.
    pub bounds: Option<BoundParams>,
    /// Overrides the oracle's Lipschitz constant.
    pub lipschitz: Option<f64>,
    pub pairing: NormPairing,
    /// Record wall-clock time in the trace; when off every `wall_ns` is zero.
    pub record_timing: bool,
}

impl SolveOptions {
    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn with_bounds(mut self, bounds: BoundParams) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn timed(mut self) -> Self {
        self.record_timing = true;
        self
    }
}

/// `argmin_{λ∈Λ} ⟨∇φ(λ_k), λ − λ_k⟩ + (L/2)‖λ − λ_k‖²`, i.e.
/// `proj_Λ(λ_k − ∇φ(λ_k)/L)`.
pub fn eta_step(lam: &DualPoint, gradient: &DualPoint, lipschitz: f64) -> Result<DualPoint> {
    if !gradient.is_finite() {
        return Err(Error::NonFinite("dual gradient"));
    }
    Ok(project_onto_lambda(lam.combine(
        1.0,
        gradient,
        -1.0 / lipschitz,
    )))
}

/// `argmin_{λ∈Λ} ⟨Σ αᵢ∇φ(λᵢ), λ⟩ + (L/2)‖λ‖²`, i.e. `proj_Λ(−Σ αᵢ∇φ(λᵢ)/L)`.
pub fn zeta_step(grad_accum: &DualPoint, lipschitz: f64) -> Result<DualPoint> {
    if !grad_accum.is_finite() {
        return Err(Error::NonFinite("gradient accumulator"));
    }
    Ok(project_onto_lambda(grad_accum.scaled(-1.0 / lipschitz)))
}

/// Running state between iterations. After iteration `k` has been taken,
/// `k` is `k + 1`, `lam` is `λ_{k+1}`, while `eta`, `zeta`, `x_hat` and
/// `cumulative` still describe iteration `k`.
#[derive(Clone, Debug)]
pub struct AccelState {
    pub k: usize,
    pub lam: DualPoint,
    pub eta: DualPoint,
    pub zeta: DualPoint,
    pub grad_accum: DualPoint,
    pub x_hat: PrimalPoint,
    pub cumulative: f64,
}

/// What one iteration produced besides the state update.
#[derive(Clone, Debug)]
pub struct Iterate {
    pub k: usize,
    /// Oracle output at `λ_k`.
    pub at_lambda: DualEval,
    pub phi_eta: f64,
}

/// Step-by-step driver; [`solve`] wraps it with the stopping rule.
pub struct FastPrimalDual<'a, O: DualOracle + ?Sized> {
    oracle: &'a O,
    lipschitz: f64,
    state: AccelState,
}

impl<'a, O: DualOracle + ?Sized> FastPrimalDual<'a, O> {
    pub fn new(oracle: &'a O, lipschitz: f64) -> Self {
        let dims = oracle.dims();
        let zero = DualPoint::zeros(dims);
        Self {
            oracle,
            lipschitz,
            state: AccelState {
                k: 0,
                lam: zero.clone(),
                eta: zero.clone(),
                zeta: zero.clone(),
                grad_accum: zero,
                x_hat: PrimalPoint(vec![0.0; dims.n]),
                cumulative: 0.0,
            },
        }
    }

    pub fn state(&self) -> &AccelState {
        &self.state
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn step(&mut self) -> Result<Iterate> {
        let st = &mut self.state;
        let k = st.k;
        let at_lambda = self.oracle.evaluate(&st.lam)?;
        let coeff = accel_coefficients(k);

        if k == 0 {
            st.x_hat = at_lambda.x.clone();
        } else {
            let tau = accel_coefficients(k - 1).tau;
            for (xh, xi) in st.x_hat.0.iter_mut().zip(at_lambda.x.iter()) {
                *xh = (1.0 - tau) * *xh + tau * xi;
            }
        }

        let eta = eta_step(&st.lam, &at_lambda.gradient, self.lipschitz)?;
        st.grad_accum.axpy(coeff.alpha, &at_lambda.gradient);
        let zeta = zeta_step(&st.grad_accum, self.lipschitz)?;
        let phi_eta = self.oracle.dual_value(&eta)?;

        st.lam = zeta.combine(coeff.tau, &eta, 1.0 - coeff.tau);
        st.eta = eta;
        st.zeta = zeta;
        st.cumulative = coeff.cumulative;
        st.k = k + 1;
        Ok(Iterate {
            k,
            at_lambda,
            phi_eta,
        })
    }
}

/// Runs the method from `λ₀ = 0` until the three-part stopping rule holds.
///
/// Numerical failures and the iteration cap are reported through
/// [`SolveReport::status`]; `Err` is returned only for invalid inputs.
pub fn solve<O: DualOracle + ?Sized>(
    oracle: &O,
    tol: &Tolerances,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let dims = oracle.dims();
    tol.validate(dims)?;
    let lipschitz = options
        .lipschitz
        .unwrap_or_else(|| oracle.lipschitz_for(options.pairing));
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::InvalidInstance(format!(
            "Lipschitz constant must be positive, found {lipschitz}"
        )));
    }
    let max_iter = match (options.max_iter, &options.bounds) {
        (Some(m), _) => m,
        (None, Some(b)) => iteration_bounds(b, tol)
            .map(|ib| 10 * (ib.n_stop as usize).max(1))
            .unwrap_or(DEFAULT_MAX_ITER),
        (None, None) => DEFAULT_MAX_ITER,
    };

    let start = Instant::now();
    let mut method = FastPrimalDual::new(oracle, lipschitz);
    let mut trace = Vec::new();
    let mut violations = Vec::new();
    let mut status = Status::IterationCap;

    for _ in 0..max_iter {
        let it = match method.step() {
            Ok(it) => it,
            Err(e) => {
                log::warn!("primal-dual iteration {} failed: {e}", method.state().k);
                status = Status::NumericalFailure;
                break;
            }
        };
        let st = method.state();
        let f_xhat = oracle.objective(&st.x_hat);
        let gap = (f_xhat + it.phi_eta).abs();
        let (eq_res, in_res) = oracle.residual_norms(&st.x_hat);
        if !(gap.is_finite() && eq_res.is_finite() && in_res.is_finite()) {
            status = Status::NumericalFailure;
            break;
        }

        let cert_bound = options.bounds.map(|b| {
            let bound = b.certified_bound(st.cumulative);
            let allowance = bound + BOUND_SLACK * (1.0 + f_xhat.abs() + it.phi_eta.abs());
            let weighted = b.r1 * eq_res + b.r2 * in_res;
            if gap > allowance || weighted > allowance {
                violations.push(it.k);
            }
            bound
        });

        trace.push(TraceRow {
            k: it.k,
            phi: it.phi_eta,
            f: f_xhat,
            gap,
            eq_res,
            in_res,
            cert_bound,
            phi_lambda: Some(it.at_lambda.value),
            wall_ns: if options.record_timing {
                start.elapsed().as_nanos() as u64
            } else {
                0
            },
        });

        let eq_ok = dims.m_eq == 0 || eq_res <= tol.eq;
        let in_ok = dims.m_in == 0 || in_res <= tol.ineq;
        if gap <= tol.f && eq_ok && in_ok {
            status = Status::Converged;
            break;
        }
    }

    let st = method.state();
    if !violations.is_empty() {
        log::warn!(
            "certified bound violated at {} iterations",
            violations.len()
        );
    }
    Ok(SolveReport::from_trace(
        status,
        st.x_hat.clone(),
        st.eta.clone(),
        trace,
        violations,
    ))
}

/// A-priori iteration counts: `n_stop` bounds when the stopping rule fires,
/// `n_solution` when `x̂` is a target-accuracy solution.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationBounds {
    pub n_stop: u64,
    /// Per-clause terms `⌈√(·)⌉` for (objective, equality, inequality); `None` when omitted.
    pub stop_terms: [Option<u64>; 3],
    pub n_solution: Option<u64>,
    pub solution_terms: Option<[Option<u64>; 3]>,
}

fn bound_terms(bounds: &BoundParams, first_factor: f64, eps: [f64; 3]) -> [Option<u64>; 3] {
    let scale = bounds.lipschitz * bounds.radius_sq();
    let term = |num: f64, den: f64| {
        if den > 0.0 && den.is_finite() {
            Some((num / den).sqrt().ceil() as u64)
        } else {
            None
        }
    };
    [
        term(first_factor * scale, eps[0]),
        if bounds.r1 > 0.0 {
            term(8.0 * scale, bounds.r1 * eps[1])
        } else {
            None
        },
        if bounds.r2 > 0.0 {
            term(8.0 * scale, bounds.r2 * eps[2])
        } else {
            None
        },
    ]
}

fn max_minus_one(terms: &[Option<u64>; 3]) -> Option<u64> {
    terms.iter().flatten().max().map(|m| m.saturating_sub(1))
}

/// Worst-case iteration counts for `α_k = (k+1)/2`, from `C_k ≥ (k+1)²/4`.
pub fn iteration_bounds(bounds: &BoundParams, tol: &Tolerances) -> Result<IterationBounds> {
    let stop_terms = bound_terms(bounds, 8.0, [tol.f, tol.eq, tol.ineq]);
    let n_stop = max_minus_one(&stop_terms).ok_or(Error::NoBoundTerms)?;
    let solution_terms = tol
        .target
        .map(|t| bound_terms(bounds, 16.0, [t.f, t.eq, t.ineq]));
    Ok(IterationBounds {
        n_stop,
        stop_terms,
        n_solution: solution_terms.as_ref().and_then(max_minus_one),
        solution_terms,
    })
}
