//! Reference computations used by the integration tests. Nothing here calls
//! into the closed-form oracle internals: operators are materialized by
//! probing `apply` with unit vectors and everything else is recomputed from
//! first principles.

#![allow(dead_code)]

use fpdgm::{DualOracle, DualPoint, ElpInstance, RoptInstance, RotInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense `m × n` matrix of the stacked constraint operator, column `j` = `A e_j`.
pub fn materialize(oracle: &dyn DualOracle) -> Vec<Vec<f64>> {
    let n = oracle.dims().n;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(oracle.apply(&e).to_vec());
    }
    let m = cols.first().map_or(0, |c| c.len());
    (0..m)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

pub fn adjoint(rows: &[Vec<f64>], lam: &[f64]) -> Vec<f64> {
    let n = rows.first().map_or(0, |r| r.len());
    (0..n)
        .map(|j| rows.iter().zip(lam).map(|(r, l)| r[j] * l).sum())
        .collect()
}

pub fn max_column_norm(rows: &[Vec<f64>]) -> f64 {
    let n = rows.first().map_or(0, |r| r.len());
    (0..n)
        .map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// `f(x) = w Σ xᵢ ln(xᵢ/ξᵢ) + ⟨c, x⟩` on `{x ≥ 0, Σx = mass}`.
#[derive(Clone, Debug)]
pub struct Entropic {
    pub weight: f64,
    pub prior: Vec<f64>,
    pub linear: Vec<f64>,
    pub mass: f64,
}

impl Entropic {
    pub fn elp(elp: &ElpInstance) -> Self {
        let n = elp.prior().len();
        Self {
            weight: 1.0,
            prior: elp.prior().to_vec(),
            linear: vec![0.0; n],
            mass: 1.0,
        }
    }

    pub fn rot(rot: &RotInstance) -> Self {
        Self {
            weight: rot.gamma(),
            prior: vec![1.0; rot.cost().len()],
            linear: rot.cost().to_vec(),
            mass: 1.0,
        }
    }

    pub fn ropt(ropt: &RoptInstance) -> Self {
        Self {
            weight: ropt.gamma(),
            prior: vec![1.0; ropt.cost().len()],
            linear: ropt.cost().to_vec(),
            mass: ropt.mass(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.prior)
            .zip(&self.linear)
            .map(|((&v, &p), &c)| {
                let ent = if v > 0.0 { v * (v / p).ln() } else { 0.0 };
                self.weight * ent + c * v
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.prior)
            .zip(&self.linear)
            .map(|((&v, &p), &c)| self.weight * ((v / p).ln() + 1.0) + c)
            .collect()
    }

    /// Maximizer of `−f(x) − ⟨s, x⟩` from the stationarity condition
    /// `∇f(x) + s + μ𝟙 = 0`, with the scalar `μ` found by bisection.
    pub fn inner_by_bisection(&self, s: &[f64]) -> Vec<f64> {
        let log_x = |mu: f64| -> Vec<f64> {
            self.prior
                .iter()
                .zip(&self.linear)
                .zip(s)
                .map(|((p, c), si)| p.ln() - (c + si + mu) / self.weight - 1.0)
                .collect()
        };
        let total = |mu: f64| log_x(mu).iter().map(|l| l.exp()).sum::<f64>();
        let (mut lo, mut hi) = (-1.0, 1.0);
        while total(lo) < self.mass {
            lo *= 2.0;
        }
        while total(hi) > self.mass {
            hi *= 2.0;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if total(mid) > self.mass {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x: Vec<f64> = log_x(0.5 * (lo + hi)).iter().map(|l| l.exp()).collect();
        let t: f64 = x.iter().sum();
        x.iter().map(|v| v * self.mass / t).collect()
    }

    /// Accelerated projected gradient ascent on `−f(x) − ⟨s, x⟩` over the
    /// simplex of the given mass, with momentum reset whenever it points
    /// against the step. Steps are accepted when the local curvature along the
    /// move does not exceed `1/step`, a test on gradients only, so it stays
    /// meaningful below the resolution of the objective values.
    pub fn inner_by_ascent(&self, s: &[f64], steps: usize) -> Vec<f64> {
        let n = s.len();
        let floor = 1e-15 * self.mass;
        let ascent = |x: &[f64]| -> Vec<f64> {
            self.gradient(x)
                .iter()
                .zip(s)
                .map(|(a, b)| -a - b)
                .collect()
        };
        let mut x = vec![self.mass / n as f64; n];
        let mut y = x.clone();
        let mut t: f64 = 1.0;
        let mut step = 1.0;
        for _ in 0..steps {
            let gy = ascent(&y);
            let mut next = None;
            for _ in 0..200 {
                let trial: Vec<f64> = y.iter().zip(&gy).map(|(a, b)| a + step * b).collect();
                let cand = project_simplex(&trial, self.mass, floor);
                let d: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
                let dg: Vec<f64> = ascent(&cand).iter().zip(&gy).map(|(a, b)| a - b).collect();
                if -dot(&dg, &d) <= dot(&d, &d) / step {
                    next = Some(cand);
                    break;
                }
                step *= 0.5;
            }
            let Some(next) = next else { break };
            let mapping: Vec<f64> = next.iter().zip(&y).map(|(a, b)| a - b).collect();
            let delta: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
            if dot(&mapping, &delta) < 0.0 {
                t = 1.0;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a + beta * (a - b)).max(floor))
                .collect();
            let total: f64 = y.iter().sum();
            y.iter_mut().for_each(|v| *v *= self.mass / total);
            if max_abs_diff(&next, &x) == 0.0 && beta == 0.0 {
                x = next;
                break;
            }
            x = next;
            t = t_next;
            step *= 1.2;
        }
        x
    }
}

/// Euclidean projection onto `{x ≥ floor, Σx = mass}` (bisection on the shift).
pub fn project_simplex(v: &[f64], mass: f64, floor: f64) -> Vec<f64> {
    let total = |t: f64| v.iter().map(|x| (x - t).max(floor)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - mass;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x: Vec<f64> = v.iter().map(|x| (x - 0.5 * (lo + hi)).max(floor)).collect();
    let t: f64 = x.iter().sum();
    x.iter().map(|a| a * mass / t).collect()
}

/// `(φ(λ + he_i) − φ(λ − he_i)) / 2h` for every coordinate.
pub fn central_differences(oracle: &dyn DualOracle, lam: &DualPoint, h: f64) -> Vec<f64> {
    let flat = lam.to_vec();
    let m_eq = lam.eq.len();
    (0..flat.len())
        .map(|i| {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[i] += h;
            minus[i] -= h;
            let fp = oracle
                .dual_value(&DualPoint::from_flat(&plus, m_eq))
                .unwrap();
            let fm = oracle
                .dual_value(&DualPoint::from_flat(&minus, m_eq))
                .unwrap();
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Plain (not log-domain) Sinkhorn scaling until both marginals match to `tol`.
pub fn plain_sinkhorn(rot: &RotInstance, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let p = rot.side();
    let k: Vec<f64> = rot
        .cost()
        .iter()
        .map(|c| (-c / rot.gamma()).exp())
        .collect();
    let (a1, a2) = (rot.a1(), rot.a2());
    let mut u = vec![1.0; p];
    let mut v = vec![1.0; p];
    let plan = |u: &[f64], v: &[f64]| -> Vec<f64> {
        (0..p * p).map(|ij| u[ij / p] * k[ij] * v[ij % p]).collect()
    };
    for _ in 0..max_sweeps {
        for i in 0..p {
            u[i] = a1[i] / (0..p).map(|j| k[i * p + j] * v[j]).sum::<f64>();
        }
        for j in 0..p {
            v[j] = a2[j] / (0..p).map(|i| k[i * p + j] * u[i]).sum::<f64>();
        }
        let x = plan(&u, &v);
        let row_err = (0..p)
            .map(|i| ((0..p).map(|j| x[i * p + j]).sum::<f64>() - a1[i]).abs())
            .fold(0.0, f64::max);
        if row_err <= tol {
            return x;
        }
    }
    panic!("plain Sinkhorn did not reach {tol}");
}

/// Minimizer of `Σ xᵢ ln(xᵢ/ξᵢ)` over `{x ∈ Δ₃, ⟨a, x⟩ = b}`: the feasible set
/// is a segment, scanned on a `10⁻⁵` grid and refined by golden section.
pub fn elp3_grid_optimum(xi: &[f64; 3], a: &[f64; 3], b: f64) -> (f64, [f64; 3], [[f64; 3]; 2]) {
    // the plane ⟨a, x⟩ = b cut with the simplex edges
    let vertices = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut ends: Vec<[f64; 3]> = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (fi, fj) = (a[i] - b, a[j] - b);
        if fi == fj {
            continue;
        }
        let t = fi / (fi - fj);
        if (0.0..=1.0).contains(&t) {
            let mut x = [0.0; 3];
            for k in 0..3 {
                x[k] = (1.0 - t) * vertices[i][k] + t * vertices[j][k];
            }
            if !ends
                .iter()
                .any(|e| (0..3).all(|k| (e[k] - x[k]).abs() < 1e-15))
            {
                ends.push(x);
            }
        }
    }
    assert!(ends.len() == 2, "degenerate feasible segment");
    let (e0, e1) = (ends[0], ends[1]);
    let point = |t: f64| -> [f64; 3] {
        let mut x = [0.0; 3];
        for k in 0..3 {
            x[k] = ((1.0 - t) * e0[k] + t * e1[k]).max(0.0);
        }
        x
    };
    let f = |t: f64| -> f64 {
        point(t)
            .iter()
            .zip(xi)
            .map(|(v, p)| if *v > 0.0 { v * (v / p).ln() } else { 0.0 })
            .sum()
    };
    let steps = 100_000;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for s in 0..=steps {
        let v = f(s as f64 / steps as f64);
        if v < best_val {
            best_val = v;
            best = s;
        }
    }
    let h = 1.0 / steps as f64;
    let (mut lo, mut hi) = (((best as f64) - 1.0) * h, ((best as f64) + 1.0) * h);
    lo = lo.max(0.0);
    hi = hi.min(1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let t = 0.5 * (lo + hi);
    (f(t).min(best_val), point(t), [e0, e1])
}

pub fn random_lambda_eq(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> DualPoint {
    DualPoint::new(
        (0..m).map(|_| rng.random_range(-scale..scale)).collect(),
        vec![],
    )
}

pub fn random_lambda_ineq(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> DualPoint {
    DualPoint::new(
        vec![],
        (0..m).map(|_| rng.random_range(0.0..scale)).collect(),
    )
}

pub fn random_cost(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p * p).map(|_| rng.random::<f64>()).collect()
}

/// Coefficient of determination of the least-squares line `y = a + b x`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    (a, b, 1.0 - ss_res / ss_tot)
}
