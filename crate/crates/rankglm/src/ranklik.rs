//! Pairwise and third-order rank composite likelihood kernels.
//!
//! Everything here is a pure function of a [`Dataset`] and a coefficient
//! vector. The pair scan is the workhorse: for each kept pair (i, j) the
//! exponent t_ij = -(y_i - y_j) * beta'(x_i - x_j) drives a softplus term
//! (likelihood), a logistic weight (gradient), or a logistic variance weight
//! (Hessian). With an observation indicator, pairs touching an unobserved
//! row are skipped outright — their y values are never read — while the
//! normalizing constant stays the total pair count n(n-1)/2.
//!
//! Sums accumulate sequentially in ascending pair order (i, j), i < j; that
//! fixed reduction order is the reproducibility contract. Callers that want
//! concurrency parallelize across replicates or folds, not inside a pair sum.
//!
//! Covariates enter only through within-pair differences, so every operation
//! first recenters X by subtracting its first row. Algebraically a no-op, the
//! recentering keeps the matrix-factorized forms below stable when columns
//! carry a large common offset, and makes location shifts cancel bit-for-bit
//! whenever the shifted inputs are exactly representable. It is idempotent:
//! already-centered data passes through without copying.

use itertools::Itertools;
use ndarray::{Array1, Array2, Axis, CowArray, Ix2};
use serde::Serialize;

use crate::data::{Beta, Dataset};
use crate::error::{Error, Result};
use crate::math::{log1pexp, logistic, logistic_weight, softplus_logistic};

/// Scale diagnostics for the pair kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairKernelDiagnostics {
    /// Max over kept pairs of the sup-norm of (y_i - y_j)(x_i - x_j).
    #[serde(rename = "M")]
    pub m: f64,
    /// Number of pairs with both endpoints observed.
    pub n_pairs_kept: usize,
    /// Total pair count n(n-1)/2.
    pub n_pairs_total: usize,
}

/// Observed-row index list plus the recentered covariate matrix.
struct Centered<'a> {
    obs: Vec<usize>,
    xc: CowArray<'a, f64, Ix2>,
}

fn centered(data: &Dataset) -> Result<Centered<'_>> {
    let obs: Vec<usize> = (0..data.n()).filter(|&i| data.observed(i)).collect();
    if obs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 observed samples are required, found {}",
            obs.len()
        )));
    }
    let x = data.x();
    let xc = if x.row(0).iter().all(|&v| v == 0.0) {
        CowArray::from(x.view())
    } else {
        let x0 = x.row(0).to_owned();
        CowArray::from(x - &x0)
    };
    Ok(Centered { obs, xc })
}

fn check_dims(data: &Dataset, beta: &Beta) -> Result<()> {
    if beta.len() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {} but X has {} columns",
            beta.len(),
            data.dim()
        )));
    }
    Ok(())
}

#[inline]
fn total_pairs_f(n: usize) -> f64 {
    (n * (n - 1) / 2) as f64
}

fn ensure_finite_scalar(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "non-finite {what} (overflow guard breached)"
        )))
    }
}

fn ensure_finite_vec(v: Array1<f64>, what: &str) -> Result<Array1<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "non-finite entry in {what} (overflow guard breached)"
        )))
    }
}

fn ensure_finite_mat(v: Array2<f64>, what: &str) -> Result<Array2<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "non-finite entry in {what} (overflow guard breached)"
        )))
    }
}

/// Pairwise rank composite log-likelihood
/// `l(beta) = -C^{-1} sum_{i<j} w_ij log(1 + R_ij(beta))`,
/// with `R_ij = exp(t_ij)`, `w_ij = delta_i delta_j` (1 without an
/// indicator) and `C = n(n-1)/2` regardless of how many pairs are kept.
///
/// The value is finite, nonpositive, and equals `-log 2 * kept/total` when
/// every kept pair kernel is 1 (in particular `-log 2` at `beta = 0` on
/// complete data).
pub fn pairwise_loglik(data: &Dataset, beta: &Beta) -> Result<f64> {
    check_dims(data, beta)?;
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let y = data.y();
    let mut acc = 0.0;
    for (pos, &i) in ctr.obs.iter().enumerate() {
        let yi = y[i];
        let ui = u[i];
        for &j in &ctr.obs[pos + 1..] {
            let t = -(yi - y[j]) * (ui - u[j]);
            acc += log1pexp(t);
        }
    }
    ensure_finite_scalar(-acc / total_pairs_f(data.n()), "pairwise log-likelihood")
}

/// Fused likelihood and gradient evaluation sharing one pair scan; this is
/// the solver's inner kernel.
pub(crate) fn loglik_and_gradient(data: &Dataset, beta: &Beta) -> Result<(f64, Array1<f64>)> {
    check_dims(data, beta)?;
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let y = data.y();
    let mut acc = 0.0;
    let mut r = Array1::<f64>::zeros(data.n());
    for (pos, &i) in ctr.obs.iter().enumerate() {
        let yi = y[i];
        let ui = u[i];
        for &j in &ctr.obs[pos + 1..] {
            let dy = yi - y[j];
            let t = -dy * (ui - u[j]);
            let (sp, s) = softplus_logistic(t);
            acc += sp;
            let c = s * dy;
            r[i] += c;
            r[j] -= c;
        }
    }
    let cfull = total_pairs_f(data.n());
    let grad = ctr.xc.t().dot(&r) / cfull;
    let value = ensure_finite_scalar(-acc / cfull, "pairwise log-likelihood")?;
    Ok((value, ensure_finite_vec(grad, "pairwise gradient")?))
}

/// Gradient of [`pairwise_loglik`]:
/// `C^{-1} sum_{i<j} w_ij logistic(t_ij) (y_i - y_j)(x_i - x_j)`.
///
/// Assembled as `Xc' r` where `r` collects the signed pair weights per row,
/// which keeps the scan at O(n^2 + nd).
pub fn pairwise_gradient(data: &Dataset, beta: &Beta) -> Result<Array1<f64>> {
    loglik_and_gradient(data, beta).map(|(_, g)| g)
}

/// Hessian of [`pairwise_loglik`]:
/// `-C^{-1} sum_{i<j} w_ij logistic_weight(t_ij) (y_i - y_j)^2 (x_i - x_j)^{\otimes 2}`,
/// symmetric and negative semidefinite.
///
/// Assembled as `-C^{-1} Xc' (D - K) Xc` where `K` holds the pair weights
/// and `D` their row sums, then symmetrized exactly via `(H + H')/2`.
pub fn pairwise_hessian(data: &Dataset, beta: &Beta) -> Result<Array2<f64>> {
    check_dims(data, beta)?;
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let y = data.y();
    let n = data.n();
    let mut kmat = Array2::<f64>::zeros((n, n));
    let mut diag = vec![0.0f64; n];
    for (pos, &i) in ctr.obs.iter().enumerate() {
        let yi = y[i];
        let ui = u[i];
        for &j in &ctr.obs[pos + 1..] {
            let dy = yi - y[j];
            let kw = logistic_weight(-dy * (ui - u[j])) * dy * dy;
            kmat[[i, j]] = -kw;
            kmat[[j, i]] = -kw;
            diag[i] += kw;
            diag[j] += kw;
        }
    }
    for (i, &v) in diag.iter().enumerate() {
        kmat[[i, i]] = v;
    }
    let inner = kmat.dot(&ctr.xc);
    let h = ctr.xc.t().dot(&inner);
    let result = (&h + &h.t()) * (-0.5 / total_pairs_f(n));
    ensure_finite_mat(result, "pairwise Hessian")
}

/// Hajek-projection covariance estimator
/// `Sigma = n^{-1} sum_i [ (n-1)^{-1} sum_{j != i} w_ij h_ij(beta) ]^{\otimes 2}`
/// with `h_ij = logistic(t_ij)(y_i - y_j)(x_i - x_j)`; symmetric PSD.
///
/// Rows with `delta_i = 0` contribute a zero projection term, while the
/// divisors keep the full `n` and `n - 1`.
pub fn hajek_sigma(data: &Dataset, beta: &Beta) -> Result<Array2<f64>> {
    check_dims(data, beta)?;
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let y = data.y();
    let n = data.n();
    let mut cmat = Array2::<f64>::zeros((n, n));
    let mut rvec = Array1::<f64>::zeros(n);
    for (pos, &i) in ctr.obs.iter().enumerate() {
        let yi = y[i];
        let ui = u[i];
        for &j in &ctr.obs[pos + 1..] {
            let c = logistic(-(yi - y[j]) * (ui - u[j])) * (yi - y[j]);
            cmat[[i, j]] = c;
            cmat[[j, i]] = -c;
            rvec[i] += c;
            rvec[j] -= c;
        }
    }
    let proj = cmat.dot(&ctr.xc);
    let rcol = rvec.insert_axis(Axis(1));
    let gmat = (&ctr.xc.view() * &rcol - &proj) / (n - 1) as f64;
    let s = gmat.t().dot(&gmat);
    let result = (&s + &s.t()) * (0.5 / n as f64);
    ensure_finite_mat(result, "Hajek covariance")
}

/// Directional value and first two derivatives of `a -> l(beta + a v)` at
/// `a = 0`, via a single pair scan:
/// `d1 = C^{-1} sum s(t) dy dz`, `d2 = -C^{-1} sum s(t)(1-s(t)) (dy dz)^2`
/// with `z = Xc v`.
pub(crate) fn directional_derivs(
    data: &Dataset,
    beta: &Beta,
    v: &Array1<f64>,
) -> Result<(f64, f64, f64)> {
    check_dims(data, beta)?;
    if v.len() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {} but X has {} columns",
            v.len(),
            data.dim()
        )));
    }
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let z = ctr.xc.dot(v);
    let y = data.y();
    let mut acc = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (pos, &i) in ctr.obs.iter().enumerate() {
        let yi = y[i];
        let ui = u[i];
        let zi = z[i];
        for &j in &ctr.obs[pos + 1..] {
            let dy = yi - y[j];
            let t = -dy * (ui - u[j]);
            let (sp, s) = softplus_logistic(t);
            acc += sp;
            let dyz = dy * (zi - z[j]);
            d1 += s * dyz;
            d2 -= s * (1.0 - s) * dyz * dyz;
        }
    }
    let cfull = total_pairs_f(data.n());
    let value = ensure_finite_scalar(-acc / cfull, "directional log-likelihood")?;
    Ok((
        value,
        ensure_finite_scalar(d1 / cfull, "directional derivative")?,
        ensure_finite_scalar(d2 / cfull, "directional curvature")?,
    ))
}

/// Diagonal of the negated Hessian at beta = 0 (where every logistic
/// variance weight is exactly 1/4): `C^{-1} sum 0.25 dy^2 dx_j^2` per
/// coordinate. Used to seed the solver's step size.
pub(crate) fn hessian_diag_at_zero(data: &Dataset) -> Result<Array1<f64>> {
    let ctr = centered(data)?;
    let y = data.y();
    let d = data.dim();
    let mut diag = Array1::<f64>::zeros(d);
    for (pos, &i) in ctr.obs.iter().enumerate() {
        let yi = y[i];
        let row_i = ctr.xc.row(i);
        for &j in &ctr.obs[pos + 1..] {
            let dy = yi - y[j];
            if dy == 0.0 {
                continue;
            }
            let c = 0.25 * dy * dy;
            let row_j = ctr.xc.row(j);
            for m in 0..d {
                let dx = row_i[m] - row_j[m];
                diag[m] += c * dx * dx;
            }
        }
    }
    Ok(diag / total_pairs_f(data.n()))
}

/// Held-out pair loss for cross-validation: the softplus sum over kept pairs
/// with at least one endpoint inside the marked fold, together with the
/// total number of fold-touching pairs (counted regardless of observation
/// indicators, mirroring the total-pair-count normalization).
pub(crate) fn heldout_pair_loss(
    data: &Dataset,
    in_fold: &[bool],
    beta: &Beta,
) -> Result<(f64, usize)> {
    check_dims(data, beta)?;
    if in_fold.len() != data.n() {
        return Err(Error::DimensionMismatch(format!(
            "fold mask has length {} but the dataset has {} rows",
            in_fold.len(),
            data.n()
        )));
    }
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let y = data.y();
    let n = data.n();
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if !(in_fold[i] || in_fold[j]) {
                continue;
            }
            count += 1;
            if data.observed(i) && data.observed(j) {
                acc += log1pexp(-(y[i] - y[j]) * (u[i] - u[j]));
            }
        }
    }
    Ok((acc, count))
}

/// Third-order rank composite log-likelihood
/// `l3(beta) = -C(n,3)^{-1} sum_{i<j<k} log sum_{pi in S3} exp(a_pi)`,
/// where `a_pi = sum_m u_m (y_{pi(m)} - y_m)` ranges over the six response
/// assignments of each triple (identity exponent 0). Complete data only.
///
/// Equals `-log 6` at `beta = 0` (all six assignments equally likely) and is
/// always nonpositive.
pub fn third_order_loglik(data: &Dataset, beta: &Beta) -> Result<f64> {
    if data.delta().is_some() {
        return Err(Error::InvalidInput(
            "third-order likelihood supports complete data only (no observation indicator)"
                .to_string(),
        ));
    }
    let n = data.n();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "third-order likelihood requires at least 3 samples, got {n}"
        )));
    }
    check_dims(data, beta)?;
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let y = data.y();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let tij = -(y[i] - y[j]) * (u[i] - u[j]);
                let tik = -(y[i] - y[k]) * (u[i] - u[k]);
                let tjk = -(y[j] - y[k]) * (u[j] - u[k]);
                let c1 = u[i] * (y[j] - y[i]) + u[j] * (y[k] - y[j]) + u[k] * (y[i] - y[k]);
                let c2 = u[i] * (y[k] - y[i]) + u[j] * (y[i] - y[j]) + u[k] * (y[j] - y[k]);
                let e = [0.0, tij, tik, tjk, c1, c2];
                let m = e.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let sum: f64 = e.iter().map(|&v| (v - m).exp()).sum();
                acc += m + sum.ln();
            }
        }
    }
    let c3 = (n * (n - 1) * (n - 2) / 6) as f64;
    ensure_finite_scalar(-acc / c3, "third-order log-likelihood")
}

/// Enumeration cap for [`rank_probability_oracle`].
pub const ORACLE_MAX_N: usize = 7;

/// Exact rank-vector distribution by full enumeration: one probability per
/// permutation of the responses, in lexicographic order of the assignment
/// (identity first). Entries are positive and sum to 1; for n = 2 they are
/// `1/(1 + R_12)` and `R_12/(1 + R_12)`.
///
/// Complete data only, and n is capped at [`ORACLE_MAX_N`] (factorial cost).
pub fn rank_probability_oracle(data: &Dataset, beta: &Beta) -> Result<Vec<f64>> {
    if data.delta().is_some() {
        return Err(Error::InvalidInput(
            "rank probability oracle supports complete data only (no observation indicator)"
                .to_string(),
        ));
    }
    let n = data.n();
    if n > ORACLE_MAX_N {
        return Err(Error::InvalidInput(format!(
            "rank probability oracle enumerates n! permutations and is capped at n = {ORACLE_MAX_N}, got {n}"
        )));
    }
    check_dims(data, beta)?;
    let ctr = centered(data)?;
    let u = ctr.xc.dot(beta.values());
    let y0 = data.y()[0];
    let yc: Vec<f64> = data.y().iter().map(|v| v - y0).collect();
    let mut exps = Vec::new();
    for perm in (0..n).permutations(n) {
        let e: f64 = perm
            .iter()
            .enumerate()
            .map(|(pos, &src)| u[pos] * yc[src])
            .sum();
        exps.push(e);
    }
    let m = exps.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut probs: Vec<f64> = exps.iter().map(|&e| (e - m).exp()).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }
    Ok(probs)
}

/// Pair-kernel scale diagnostics: the largest within-pair increment
/// `max_{kept (i,j)} ||(y_i - y_j)(x_i - x_j)||_inf` plus kept/total pair
/// counts under the observation indicator.
pub fn kernel_diagnostics(data: &Dataset) -> PairKernelDiagnostics {
    let n = data.n();
    let y = data.y();
    let x = data.x();
    let mut m = 0.0f64;
    let mut kept = 0usize;
    for i in 0..n {
        if !data.observed(i) {
            continue;
        }
        for j in (i + 1)..n {
            if !data.observed(j) {
                continue;
            }
            kept += 1;
            let dy = y[i] - y[j];
            for c in 0..data.dim() {
                m = m.max((dy * (x[[i, c]] - x[[j, c]])).abs());
            }
        }
    }
    PairKernelDiagnostics {
        m,
        n_pairs_kept: kept,
        n_pairs_total: n * (n - 1) / 2,
    }
}
