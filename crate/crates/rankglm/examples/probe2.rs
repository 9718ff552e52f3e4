//! Deep-dive probe: per-replicate directional profile around the target.

use ndarray::Array1;
use rankglm::estimator::{cross_validate_with, fit_penalized, lambda_max, log_lambda_grid};
use rankglm::inference::{directional_loglik, dlrt_test, max_directional};
use rankglm::penalty::{PenaltyConfig, PenaltyFamily};
use rankglm::simlab::{generate, SimDesign, SimModel};
use rankglm::SolverOptions;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mu: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let reps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let opts = SolverOptions {
        tol: 1e-5,
        max_iter: 300,
        ..SolverOptions::default()
    };
    for rep in 0..reps {
        let design = SimDesign::new(SimModel::LinearGaussian, 100, 200, mu, 7000 + rep as u64);
        let data = generate(&design).unwrap();
        let lmax = lambda_max(&data).unwrap();
        let grid = log_lambda_grid(lmax, 12, 0.1);
        let cv = cross_validate_with(&data, PenaltyFamily::L1, &grid, 5, 99, &opts).unwrap();
        let fit = fit_penalized(&data, &PenaltyConfig::l1(cv.lambda_best), &opts).unwrap();
        let b = fit.beta.values();
        let w = Array1::<f64>::zeros(data.dim() - 1);
        let ahat = max_directional(&data, &fit.beta, &w, 0).unwrap();
        // coarse profile of the directional likelihood in alpha
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        let mut profile = String::new();
        for k in 0..=30 {
            let a = -0.5 + 3.0 * k as f64 / 30.0;
            let v = directional_loglik(&data, &fit.beta, &w, 0, a).unwrap();
            if v > best.0 {
                best = (v, a);
            }
            if k % 5 == 0 {
                profile.push_str(&format!("l({a:.1})={v:.5} "));
            }
        }
        let report = dlrt_test(&data, &fit.beta, &w, 0, mu, 0.05).unwrap();
        println!(
            "rep {rep}: lam {:.3} b123 [{:.3} {:.3} {:.3}] ahat {ahat:.4} grid-argmax {:.2}",
            cv.lambda_best, b[0], b[1], b[2], best.1
        );
        println!(
            "   {profile}\n   scaled {:.3} hp {:.4} s2 {:.4} lam_n {:.4} p {:.4}",
            report.scaled_lambda_n, report.h_partial_hat, report.sigma2_hat, report.lambda_n,
            report.dlrt_pvalue
        );
    }
}
