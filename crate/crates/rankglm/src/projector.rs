//! Nuisance-direction estimation for post-regularization inference.
//!
//! For a target coordinate j, the directional likelihood needs a vector w
//! approximating `H_jg (H_gg)^-1` — the regression of the target score on
//! the nuisance scores, with H the composite-likelihood Hessian at the first
//! stage fit, `g` ranging over the non-target coordinates. It is estimated by
//! the Dantzig-type program
//!
//! ```text
//!   minimize ||w||_1   subject to   ||h_j - H_gg w||_inf <= lambda_s,
//! ```
//!
//! where `h_j` is the target row of the Hessian without its diagonal entry.
//! The program is solved exactly as a linear program in the split
//! w = w+ - w- (2(d-1) variables, 2(d-1) inequality rows) with the in-crate
//! simplex. When zero is feasible it is returned directly — zero has the
//! smallest possible L1 norm, so no solve is needed.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{Beta, Dataset};
use crate::error::{Error, Result};
use crate::ranklik;
use crate::simplex::{solve_lp, LpStatus};

/// Terminal state of the direction solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// The estimated nuisance direction for one target coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionFit {
    /// Target coordinate index.
    pub j: usize,
    /// Direction vector, length d-1 (nuisance coordinates in index order).
    pub w: Array1<f64>,
    pub lambda_s: f64,
    /// `||h_j - H_gg w||_inf` recomputed directly from the returned w (not
    /// taken from the solver's internal state).
    pub feasibility_gap: f64,
    pub solver_status: SolverStatus,
}

/// The constraint-radius formula on real arguments: `4 sqrt(log(n d) / n)`.
pub fn lambda_s_formula(n: f64, d: f64) -> f64 {
    4.0 * ((n * d).ln() / n).sqrt()
}

/// Default constraint radius for a given sample size and dimension.
pub fn default_lambda_s(n: usize, d: usize) -> f64 {
    lambda_s_formula(n as f64, d as f64)
}

/// Estimate the nuisance direction at `beta_hat` for target `j`.
pub fn estimate_w(
    data: &Dataset,
    beta_hat: &Beta,
    j: usize,
    lambda_s: f64,
) -> Result<DirectionFit> {
    let h = ranklik::pairwise_hessian(data, beta_hat)?;
    estimate_w_from_hessian(&h, j, lambda_s)
}

/// Same as [`estimate_w`] but reusing a precomputed full Hessian — the
/// useful entry point when several targets share one first-stage fit.
pub fn estimate_w_from_hessian(
    hessian: &Array2<f64>,
    j: usize,
    lambda_s: f64,
) -> Result<DirectionFit> {
    let d = hessian.nrows();
    if hessian.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "hessian must be square, got {}x{}",
            d,
            hessian.ncols()
        )));
    }
    if d < 2 {
        return Err(Error::InvalidInput(
            "direction estimation needs at least two covariates".into(),
        ));
    }
    if j >= d {
        return Err(Error::InvalidInput(format!(
            "target index {j} out of range for {d} covariates"
        )));
    }
    if !(lambda_s.is_finite() && lambda_s >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda_s must be nonnegative and finite, got {lambda_s}"
        )));
    }

    let m = d - 1;
    let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
    let bvec = Array1::from_iter(others.iter().map(|&g| hessian[[j, g]]));
    let amat = Array2::from_shape_fn((m, m), |(r, c)| hessian[[others[r], others[c]]]);

    let binf = bvec.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if binf <= lambda_s {
        // Zero is feasible, and nothing beats its L1 norm.
        return Ok(DirectionFit {
            j,
            w: Array1::zeros(m),
            lambda_s,
            feasibility_gap: binf,
            solver_status: SolverStatus::Optimal,
        });
    }

    // LP in the split w = w+ - w-:
    //   H_gg (w+ - w-) <= lambda_s + h_j   (residual >= -lambda_s)
    //  -H_gg (w+ - w-) <= lambda_s - h_j   (residual <= +lambda_s)
    let mut a_lp = Array2::<f64>::zeros((2 * m, 2 * m));
    let mut b_lp = vec![0.0; 2 * m];
    for r in 0..m {
        for c in 0..m {
            let v = amat[[r, c]];
            a_lp[[r, c]] = v;
            a_lp[[r, m + c]] = -v;
            a_lp[[m + r, c]] = -v;
            a_lp[[m + r, m + c]] = v;
        }
        b_lp[r] = lambda_s + bvec[r];
        b_lp[m + r] = lambda_s - bvec[r];
    }
    let cost = vec![1.0; 2 * m];
    let max_iter = 1000 + 50 * (4 * m + 2);
    let sol = solve_lp(&cost, &a_lp, &b_lp, max_iter);

    let (status, w) = match sol.status {
        LpStatus::Optimal => (SolverStatus::Optimal, split_to_w(&sol.z, m)),
        LpStatus::MaxIter => (SolverStatus::MaxIter, split_to_w(&sol.z, m)),
        LpStatus::Infeasible => (SolverStatus::Infeasible, Array1::zeros(m)),
        // The L1 objective is bounded below by 0 on the feasible set, so an
        // unbounded report can only be numerical failure; surface it as a
        // non-optimal status rather than a panic.
        LpStatus::Unbounded => (SolverStatus::Infeasible, Array1::zeros(m)),
    };
    let residual = &bvec - &amat.dot(&w);
    let feasibility_gap = residual.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(DirectionFit {
        j,
        w,
        lambda_s,
        feasibility_gap,
        solver_status: status,
    })
}

fn split_to_w(z: &[f64], m: usize) -> Array1<f64> {
    Array1::from_iter((0..m).map(|i| z[i] - z[m + i]))
}
