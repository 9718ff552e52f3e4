//! Probe the likelihood landscape: empirical profile from an oracle start,
//! in-sample likelihood at the true scale vs. the shrunk scale, and SCAD
//! pipeline behavior at strong signal.

use ndarray::Array1;
use rankglm::data::Beta;
use rankglm::estimator::{cross_validate_with, fit_penalized, lambda_max, log_lambda_grid};
use rankglm::inference::{dlrt_test, max_directional};
use rankglm::penalty::{PenaltyConfig, PenaltyFamily};
use rankglm::ranklik::pairwise_loglik;
use rankglm::simlab::{generate, SimDesign, SimModel};
use rankglm::SolverOptions;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mu: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let reps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let rounds: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(4);
    let opts = SolverOptions {
        tol: 1e-5,
        max_iter: 300,
        lla_rounds: rounds,
        ..SolverOptions::default()
    };
    for rep in 0..reps {
        let design = SimDesign::new(SimModel::LinearGaussian, 100, 200, mu, 9100 + rep as u64);
        let data = generate(&design).unwrap();
        let d = data.dim();
        let w = Array1::<f64>::zeros(d - 1);

        // in-sample likelihood along the true direction
        let scale_ll = |c: f64| {
            let mut b = Array1::<f64>::zeros(d);
            for j in 0..3 {
                b[j] = c * mu;
            }
            pairwise_loglik(&data, &Beta::new(b).unwrap()).unwrap()
        };
        // profile in coordinate 0 from the oracle start
        let oracle = Beta::new(design.beta_star()).unwrap();
        let ahat_oracle = max_directional(&data, &oracle, &w, 0).unwrap();
        let rep_oracle = dlrt_test(&data, &oracle, &w, 0, mu, 0.05).unwrap();

        // SCAD pipeline
        let lmax = lambda_max(&data).unwrap();
        let grid = log_lambda_grid(lmax, 12, 0.1);
        let cv = cross_validate_with(&data, PenaltyFamily::Scad, &grid, 5, 99, &opts).unwrap();
        let fit = fit_penalized(&data, &PenaltyConfig::scad(cv.lambda_best), &opts).unwrap();
        let b = fit.beta.values();
        let ahat = max_directional(&data, &fit.beta, &w, 0).unwrap();
        let rep_scad = dlrt_test(&data, &fit.beta, &w, 0, mu, 0.05).unwrap();
        println!(
            "rep {rep}: ll(c) 0.5/1.0/1.5 = {:.4}/{:.4}/{:.4}  oracle-ahat {:.3} (scaled {:.2})",
            scale_ll(0.5),
            scale_ll(1.0),
            scale_ll(1.5),
            ahat_oracle,
            rep_oracle.scaled_lambda_n,
        );
        println!(
            "   scad: lam {:.3} act {} b123 [{:.2} {:.2} {:.2}] ahat {:.3} scaled {:.2} p {:.3}",
            cv.lambda_best,
            fit.active_set.len(),
            b[0],
            b[1],
            b[2],
            ahat,
            rep_scad.scaled_lambda_n,
            rep_scad.dlrt_pvalue,
        );
    }
}
