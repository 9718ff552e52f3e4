//! Stable scalar kernels for the pair sums.
//!
//! Every pair quantity is driven by the scalar
//! `t_ij = -(y_i - y_j) * beta'(x_i - x_j)`, through which the pair kernel is
//! `R_ij = e^t`. The three maps needed downstream are
//!
//! * `log(1 + R_ij) = softplus(t)` (likelihood term),
//! * `R_ij / (1 + R_ij) = logistic(t)` (gradient weight),
//! * `R_ij / (1 + R_ij)^2 = logistic(t) * logistic(-t)` (Hessian weight).
//!
//! Naive evaluation of `e^t` overflows near `|t| ~ 709`; the branchless forms
//! below are finite and accurate for every representable `t`.

/// `log(1 + e^x)` without overflow: `max(x, 0) + log1p(e^{-|x|})`.
#[inline(always)]
pub fn log1pexp(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function `e^x / (1 + e^x)`, exact in both tails.
#[inline(always)]
pub fn logistic(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    if x >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

/// Curvature weight `logistic(x) * logistic(-x)`; even in `x`, peak 1/4 at 0.
#[inline(always)]
pub fn logistic_weight(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    let d = 1.0 + e;
    e / (d * d)
}

/// Softplus and logistic from a single exponential; the pair loops need both.
#[inline(always)]
pub fn softplus_logistic(x: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let sp = x.max(0.0) + e.ln_1p();
    let s = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    (sp, s)
}
