//! Small dense vector helpers shared by the oracles and solvers.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Numerically stable `ln(sum(exp(v)))`. Returns `-inf` for an empty slice.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = v.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Overwrites `v` with `scale * softmax(v)` and returns `ln(sum(exp(v)))` of the input.
pub(crate) fn softmax_in_place(v: &mut [f64], scale: f64) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    let factor = scale / sum;
    for x in v.iter_mut() {
        *x *= factor;
    }
    max + sum.ln()
}

/// Entropy term `sum x ln x` with the convention `0 ln 0 = 0`.
pub(crate) fn x_ln_x_sum(x: &[f64]) -> f64 {
    x.iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum()
}
