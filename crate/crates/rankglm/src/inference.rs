//! Directional inference after a penalized fit: likelihood-ratio and Wald
//! procedures along a one-dimensional path through the estimate.
//!
//! For a target coordinate `j` with nuisance direction `w`, the path moves
//! the target to `alpha` while correcting every other coordinate against it:
//! `beta_j(alpha) = alpha` and `beta_g(alpha) = beta_g - (alpha - beta_j) w_g`
//! for `g != j`. The composite log-likelihood restricted to this path is
//! concave in `alpha`, so its maximizer is found by a safeguarded Newton
//! search on the directional derivative. The likelihood-ratio statistic
//! compares the path maximum against a null value; its scaled version is
//! referred to a chi-square(1) law, and the companion Wald interval uses the
//! Hajek plug-in variance together with the estimated partial information.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{Beta, Dataset};
use crate::error::{Error, Result};
use crate::prob::{chi2_1_quantile, chi2_1_sf, normal_two_sided_pvalue, std_normal_quantile};
use crate::projector;
use crate::ranklik;

/// Relative tolerance on the directional derivative at the reported maximizer.
const DERIV_TOL: f64 = 1e-8;

/// Everything produced by one directional test of `H0: beta_j = alpha0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceReport {
    /// Target coordinate.
    pub j: usize,
    /// Null value tested.
    pub alpha0: f64,
    /// Significance level shared by the test and the interval.
    pub omega: f64,
    /// Maximizer of the directional log-likelihood (the path estimate).
    pub alpha_hat_p: f64,
    /// Plug-in variance `u' Sigma u` with `u_j = 1`, `u_g = -w_g`.
    pub sigma2_hat: f64,
    /// Estimated partial information for the target (positive by contract).
    pub h_partial_hat: f64,
    /// Raw likelihood-ratio statistic `2 n (max - null)`.
    pub lambda_n: f64,
    /// Scaled statistic referred to chi-square(1).
    pub scaled_lambda_n: f64,
    /// Upper-tail chi-square(1) p-value of the scaled statistic.
    pub dlrt_pvalue: f64,
    /// Whether the scaled statistic reaches the chi-square(1) critical value.
    pub reject_dlrt: bool,
    /// Wald confidence interval centered at the path estimate.
    pub wald_ci: (f64, f64),
    /// Two-sided normal p-value of the standardized path estimate.
    pub wald_pvalue: f64,
}

fn check_target(data: &Dataset, beta: &Beta, w: &Array1<f64>, j: usize) -> Result<()> {
    let d = data.dim();
    if beta.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector has length {} but X has {d} columns",
            beta.len()
        )));
    }
    if j >= d {
        return Err(Error::InvalidInput(format!(
            "target index {j} is out of range for {d} columns"
        )));
    }
    if w.len() + 1 != d {
        return Err(Error::DimensionMismatch(format!(
            "nuisance direction has length {} but expected {}",
            w.len(),
            d - 1
        )));
    }
    if let Some(bad) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "nuisance direction entry {bad} is not finite"
        )));
    }
    Ok(())
}

fn check_finite(value: f64, what: &str) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::InvalidInput(format!(
            "{what} must be finite, got {value}"
        )));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "significance level must lie in (0, 1], got {omega}"
        )));
    }
    Ok(())
}

/// Coefficients on the path at position `alpha`. At `alpha = beta_j` the
/// correction term is exactly zero and the input coefficients come back
/// unchanged.
fn path_values(beta: &Beta, w: &Array1<f64>, j: usize, alpha: f64) -> Array1<f64> {
    let mut b = beta.values().clone();
    let t = alpha - b[j];
    b[j] = alpha;
    let mut gi = 0;
    for g in 0..b.len() {
        if g != j {
            b[g] -= t * w[gi];
            gi += 1;
        }
    }
    b
}

/// The tangent of the path: `1` on the target, `-w` elsewhere.
fn direction_vector(w: &Array1<f64>, j: usize, d: usize) -> Array1<f64> {
    let mut v = Array1::<f64>::zeros(d);
    v[j] = 1.0;
    let mut gi = 0;
    for g in 0..d {
        if g != j {
            v[g] = -w[gi];
            gi += 1;
        }
    }
    v
}

fn loglik_at(data: &Dataset, beta: &Beta, w: &Array1<f64>, j: usize, alpha: f64) -> Result<f64> {
    let b = Beta::new(path_values(beta, w, j, alpha))?;
    ranklik::pairwise_loglik(data, &b)
}

/// Directional log-likelihood `alpha -> l(beta(alpha))`.
pub fn directional_loglik(
    data: &Dataset,
    beta: &Beta,
    w: &Array1<f64>,
    j: usize,
    alpha: f64,
) -> Result<f64> {
    check_target(data, beta, w, j)?;
    check_finite(alpha, "path position")?;
    loglik_at(data, beta, w, j, alpha)
}

/// Safeguarded Newton search for the path maximizer: bracket a sign change
/// of the directional derivative by doubling away from the start, then
/// interleave Newton steps with bisection inside the bracket.
fn solve_max(
    data: &Dataset,
    beta: &Beta,
    w: &Array1<f64>,
    j: usize,
    v: &Array1<f64>,
) -> Result<f64> {
    let derivs = |alpha: f64| -> Result<(f64, f64, f64)> {
        let b = Beta::new(path_values(beta, w, j, alpha))?;
        ranklik::directional_derivs(data, &b, v)
    };
    let start = beta.values()[j];
    let (_, d1s, d2s) = derivs(start)?;
    if d1s == 0.0 {
        if d2s < 0.0 {
            return Ok(start);
        }
        // No slope and no curvature here: probe one unit away to tell a
        // globally flat likelihood (tied responses, degenerate direction)
        // from a merely saturated neighborhood.
        let (_, d1p, d2p) = derivs(start + 1.0)?;
        if d1p == 0.0 && d2p == 0.0 {
            return Err(Error::Degenerate(
                "directional log-likelihood is flat; responses may be tied or the direction degenerate"
                    .into(),
            ));
        }
        return Ok(start);
    }
    let going_up = d1s > 0.0;
    let mut span = start.abs().max(1.0);
    let mut near = start;
    let mut far = start;
    let mut found = false;
    for _ in 0..60 {
        far = if going_up { near + span } else { near - span };
        let (_, d1f, _) = derivs(far)?;
        if d1f == 0.0 || (d1f > 0.0) != going_up {
            found = true;
            break;
        }
        near = far;
        span *= 2.0;
    }
    if !found {
        return Err(Error::Degenerate(
            "directional log-likelihood has no interior maximum along this path".into(),
        ));
    }
    let (mut lo, mut hi) = if going_up { (near, far) } else { (far, near) };
    let mut x = 0.5 * (lo + hi);
    for iter in 0..120 {
        let (_, d1x, d2x) = derivs(x)?;
        if d1x.abs() <= DERIV_TOL * (1.0 + d2x.abs()) {
            return Ok(x);
        }
        if d1x > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 1e-13 * (1.0 + x.abs()) {
            return Ok(x);
        }
        let newton = if d2x < 0.0 { x - d1x / d2x } else { f64::NAN };
        // Forcing a bisection on alternate iterations guarantees the bracket
        // contracts geometrically even when Newton steps stall at one end.
        x = if iter % 2 == 0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numerical(
        "directional maximizer did not reach the derivative tolerance".into(),
    ))
}

/// Maximizer of the directional log-likelihood over the path position.
pub fn max_directional(data: &Dataset, beta: &Beta, w: &Array1<f64>, j: usize) -> Result<f64> {
    check_target(data, beta, w, j)?;
    let v = direction_vector(w, j, data.dim());
    solve_max(data, beta, w, j, &v)
}

fn statistic_at(
    data: &Dataset,
    beta: &Beta,
    w: &Array1<f64>,
    j: usize,
    alpha_hat: f64,
    alpha0: f64,
) -> Result<f64> {
    let top = loglik_at(data, beta, w, j, alpha_hat)?;
    let null = loglik_at(data, beta, w, j, alpha0)?;
    let lam = 2.0 * data.n() as f64 * (top - null);
    if lam < -1e-10 {
        return Err(Error::Numerical(format!(
            "likelihood-ratio statistic is negative ({lam}); the path maximizer is unreliable"
        )));
    }
    Ok(lam)
}

/// Raw likelihood-ratio statistic `2 n (l(alpha_hat) - l(alpha0))` along the
/// path, where `alpha_hat` maximizes the directional log-likelihood.
pub fn dlrt_statistic(
    data: &Dataset,
    beta: &Beta,
    w: &Array1<f64>,
    j: usize,
    alpha0: f64,
) -> Result<f64> {
    check_target(data, beta, w, j)?;
    check_finite(alpha0, "null value")?;
    let v = direction_vector(w, j, data.dim());
    let alpha_hat = solve_max(data, beta, w, j, &v)?;
    statistic_at(data, beta, w, j, alpha_hat, alpha0)
}

fn plugin_from(
    sigma: &Array2<f64>,
    hessian: &Array2<f64>,
    w: &Array1<f64>,
    j: usize,
) -> Result<(f64, f64)> {
    let d = sigma.nrows();
    let u = direction_vector(w, j, d);
    let s2 = u.dot(&sigma.dot(&u)).max(0.0);
    let mut hp = 0.0;
    for a in 0..d {
        hp -= u[a] * hessian[[a, j]];
    }
    if !(hp > 0.0) {
        return Err(Error::Degenerate(format!(
            "estimated partial information for coordinate {j} is {hp}, not positive"
        )));
    }
    Ok((s2, hp))
}

/// Plug-in variance and partial information for the target: the quadratic
/// form `u' Sigma u` (clamped at zero) and `-u' H e_j`, both with
/// `u_j = 1`, `u_g = -w_g`.
pub fn plugin_variance(
    data: &Dataset,
    beta: &Beta,
    w: &Array1<f64>,
    j: usize,
) -> Result<(f64, f64)> {
    check_target(data, beta, w, j)?;
    let sigma = ranklik::hajek_sigma(data, beta)?;
    let hessian = ranklik::pairwise_hessian(data, beta)?;
    plugin_from(&sigma, &hessian, w, j)
}

/// Wald confidence interval for the target at level `omega`, centered at the
/// path estimate with halfwidth `2 sigma q / (hp sqrt(n))` where `q` is the
/// `1 - omega/2` normal quantile. At `omega = 1` the interval collapses onto
/// the point estimate.
pub fn wald_interval(
    alpha_hat_p: f64,
    sigma2: f64,
    hp: f64,
    n: usize,
    omega: f64,
) -> Result<(f64, f64)> {
    check_finite(alpha_hat_p, "path estimate")?;
    check_omega(omega)?;
    if n == 0 {
        return Err(Error::InvalidInput(
            "sample size must be at least 1".into(),
        ));
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "plug-in variance must be nonnegative and finite, got {sigma2}"
        )));
    }
    if !hp.is_finite() {
        return Err(Error::InvalidInput(format!(
            "partial information must be finite, got {hp}"
        )));
    }
    if !(hp > 0.0) {
        return Err(Error::Degenerate(format!(
            "partial information is {hp}, not positive"
        )));
    }
    let q = std_normal_quantile(1.0 - 0.5 * omega)?;
    let half = 2.0 * sigma2.sqrt() * q / (hp * (n as f64).sqrt());
    Ok((alpha_hat_p - half, alpha_hat_p + half))
}

/// The full directional test with precomputed curvature inputs. Used by
/// [`infer_targets`] to share one Hessian and one Hajek covariance across
/// several targets.
pub(crate) fn dlrt_test_with(
    data: &Dataset,
    beta: &Beta,
    w: &Array1<f64>,
    j: usize,
    alpha0: f64,
    omega: f64,
    sigma: &Array2<f64>,
    hessian: &Array2<f64>,
) -> Result<InferenceReport> {
    check_target(data, beta, w, j)?;
    check_finite(alpha0, "null value")?;
    check_omega(omega)?;
    let v = direction_vector(w, j, data.dim());
    let alpha_hat_p = solve_max(data, beta, w, j, &v)?;
    let lambda_n = statistic_at(data, beta, w, j, alpha_hat_p, alpha0)?;
    let (sigma2_hat, h_partial_hat) = plugin_from(sigma, hessian, w, j)?;
    if sigma2_hat == 0.0 {
        return Err(Error::Degenerate(format!(
            "plug-in variance for coordinate {j} is zero; the scaled statistic is undefined"
        )));
    }
    let scaled_lambda_n = h_partial_hat * lambda_n.max(0.0) / (4.0 * sigma2_hat);
    let critical = if omega < 1.0 {
        chi2_1_quantile(1.0 - omega)?
    } else {
        0.0
    };
    let reject_dlrt = scaled_lambda_n >= critical;
    let dlrt_pvalue = chi2_1_sf(scaled_lambda_n);
    let z = (data.n() as f64).sqrt() * (alpha_hat_p - alpha0) * h_partial_hat
        / (2.0 * sigma2_hat.sqrt());
    let wald_pvalue = normal_two_sided_pvalue(z);
    let wald_ci = wald_interval(alpha_hat_p, sigma2_hat, h_partial_hat, data.n(), omega)?;
    Ok(InferenceReport {
        j,
        alpha0,
        omega,
        alpha_hat_p,
        sigma2_hat,
        h_partial_hat,
        lambda_n,
        scaled_lambda_n,
        dlrt_pvalue,
        reject_dlrt,
        wald_ci,
        wald_pvalue,
    })
}

/// Directional likelihood-ratio test of `H0: beta_j = alpha0` at level
/// `omega`, reporting the statistic, its chi-square(1) calibration, and the
/// companion Wald interval.
pub fn dlrt_test(
    data: &Dataset,
    beta: &Beta,
    w: &Array1<f64>,
    j: usize,
    alpha0: f64,
    omega: f64,
) -> Result<InferenceReport> {
    check_target(data, beta, w, j)?;
    let sigma = ranklik::hajek_sigma(data, beta)?;
    let hessian = ranklik::pairwise_hessian(data, beta)?;
    dlrt_test_with(data, beta, w, j, alpha0, omega, &sigma, &hessian)
}

/// Run the directional test for several `(target, null value)` pairs,
/// estimating a fresh nuisance direction per target at penalty `lambda_s`
/// while sharing one Hessian and one Hajek covariance. Failures are
/// reported per target; only shared-input failures abort the whole batch.
pub fn infer_targets(
    data: &Dataset,
    beta_hat: &Beta,
    targets: &[(usize, f64)],
    omega: f64,
    lambda_s: f64,
) -> Result<Vec<Result<InferenceReport>>> {
    if beta_hat.len() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector has length {} but X has {} columns",
            beta_hat.len(),
            data.dim()
        )));
    }
    check_omega(omega)?;
    if !(lambda_s >= 0.0) || !lambda_s.is_finite() {
        return Err(Error::InvalidInput(format!(
            "direction penalty must be nonnegative and finite, got {lambda_s}"
        )));
    }
    let hessian = ranklik::pairwise_hessian(data, beta_hat)?;
    let sigma = ranklik::hajek_sigma(data, beta_hat)?;
    Ok(targets
        .iter()
        .map(|&(j, alpha0)| {
            let dir = projector::estimate_w_from_hessian(&hessian, j, lambda_s)?;
            dlrt_test_with(data, beta_hat, &dir.w, j, alpha0, omega, &sigma, &hessian)
        })
        .collect())
}
