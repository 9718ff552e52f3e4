//! Oracle tests for the simulation lab: seeded generators, the Toeplitz
//! covariate law, missingness scenarios with their closed-form observation
//! rates, and the Monte Carlo runners' bookkeeping and determinism.

mod common;

use ndarray::{Array1, Array2};
use rankglm::simlab::{
    apply_missingness, generate, run_estimation_error, run_power, run_type1, MissingScenario,
    PipelineConfig, SimDesign, SimModel, TestMethod,
};
use rankglm::{Dataset, Error};

fn linear_design(n: usize, d: usize, mu: f64, seed: u64) -> SimDesign {
    SimDesign::new(SimModel::LinearGaussian, n, d, mu, seed)
}

fn logistic_design(n: usize, d: usize, mu: f64, seed: u64) -> SimDesign {
    SimDesign::new(SimModel::Logistic, n, d, mu, seed)
}

/// A cheap pipeline configuration for smoke runs: fixed lambda, no CV.
fn fast_config() -> PipelineConfig {
    PipelineConfig {
        fixed_lambda_frac: Some(0.35),
        keep_records: true,
        ..PipelineConfig::default()
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[test]
fn same_seed_reproduces_the_dataset_bitwise() {
    let design = linear_design(50, 6, 0.7, 901);
    let a = generate(&design).unwrap();
    let b = generate(&design).unwrap();
    assert_eq!(a.y(), b.y());
    assert_eq!(a.x(), b.x());
}

#[test]
fn different_seeds_give_different_draws() {
    let a = generate(&linear_design(50, 6, 0.7, 902)).unwrap();
    let b = generate(&linear_design(50, 6, 0.7, 903)).unwrap();
    assert_ne!(a.y(), b.y());
}

#[test]
fn toeplitz_covariance_is_reproduced() {
    let design = linear_design(20000, 5, 0.0, 911);
    let data = generate(&design).unwrap();
    let x = data.x();
    let n = x.nrows() as f64;
    let means: Vec<f64> = (0..5).map(|j| x.column(j).sum() / n).collect();
    for i in 0..5 {
        for j in 0..5 {
            let mut c = 0.0;
            for row in 0..x.nrows() {
                c += (x[[row, i]] - means[i]) * (x[[row, j]] - means[j]);
            }
            c /= n - 1.0;
            let target = 0.6f64.powi((i as i32 - j as i32).abs());
            assert!(
                (c - target).abs() < 0.05,
                "cov[{i},{j}] = {c}, expected {target}"
            );
        }
    }
}

#[test]
fn null_signal_decorrelates_the_response() {
    let design = linear_design(5000, 4, 0.0, 912);
    let data = generate(&design).unwrap();
    let y: Vec<f64> = data.y().to_vec();
    for j in 0..4 {
        let xj: Vec<f64> = data.x().column(j).to_vec();
        let r = common::pearson(&y, &xj);
        assert!(r.abs() < 0.1, "null corr(y, x{j}) = {r}");
    }
}

#[test]
fn linear_signal_correlates_the_response() {
    let design = linear_design(4000, 6, 1.0, 913);
    let data = generate(&design).unwrap();
    let y: Vec<f64> = data.y().to_vec();
    let x0: Vec<f64> = data.x().column(0).to_vec();
    // corr(y, x1) = (1 + rho + rho^2) / sqrt(b' Sigma b + 1) ~ 0.73 here.
    let r = common::pearson(&y, &x0);
    assert!(r > 0.5, "signal corr(y, x1) = {r}");
}

#[test]
fn logistic_responses_are_binary_with_balanced_null() {
    let design = logistic_design(4000, 5, 0.0, 914);
    let data = generate(&design).unwrap();
    assert!(data.y().iter().all(|&v| v == 0.0 || v == 1.0));
    let mean = data.y().sum() / 4000.0;
    // mu = 0 makes every success probability exactly 1/2.
    assert!((mean - 0.5).abs() < 3.0 * (0.25f64 / 4000.0).sqrt());
}

#[test]
fn design_validation_rejects_bad_inputs() {
    assert!(generate(&linear_design(3, 6, 0.0, 1)).is_err());
    assert!(generate(&linear_design(20, 2, 0.0, 1)).is_err());
    let mut bad_rho = linear_design(20, 6, 0.0, 1);
    bad_rho.rho = 1.0;
    assert!(generate(&bad_rho).is_err());
    bad_rho.rho = -1.0;
    assert!(generate(&bad_rho).is_err());
    let mut bad_mu = linear_design(20, 6, 0.0, 1);
    bad_mu.mu = f64::NAN;
    assert!(generate(&bad_mu).is_err());
    let mut no_support = linear_design(20, 6, 0.0, 1);
    no_support.s_true = 0;
    assert!(generate(&no_support).is_err());
}

// ---------------------------------------------------------------------------
// apply_missingness
// ---------------------------------------------------------------------------

#[test]
fn none_scenario_marks_everything_observed() {
    let data = generate(&linear_design(30, 5, 0.4, 921)).unwrap();
    let out = apply_missingness(&data, MissingScenario::None, 5).unwrap();
    assert_eq!(out.delta().unwrap(), &Array1::<u8>::ones(30));
    assert_eq!(out.y(), data.y());
    assert_eq!(out.x(), data.x());
}

#[test]
fn linear_s1_is_the_indicator_rule() {
    let data = generate(&linear_design(200, 5, 0.3, 922)).unwrap();
    let out = apply_missingness(&data, MissingScenario::LinearS1, 7).unwrap();
    let delta = out.delta().unwrap();
    for i in 0..200 {
        assert_eq!(delta[i], u8::from(data.y()[i] <= 0.0), "row {i}");
    }
    // Unobserved responses are retained, not dropped.
    assert_eq!(out.y(), data.y());
    assert_eq!(out.x(), data.x());
}

#[test]
fn linear_s1_observed_fraction_is_half_under_the_null() {
    let data = generate(&linear_design(4000, 5, 0.0, 923)).unwrap();
    let out = apply_missingness(&data, MissingScenario::LinearS1, 9).unwrap();
    let frac = out.delta().unwrap().iter().filter(|&&v| v == 1).count() as f64 / 4000.0;
    assert!((frac - 0.5).abs() < 3.0 * (0.25f64 / 4000.0).sqrt());
}

#[test]
fn linear_s2_observed_fraction_matches_expectation() {
    // P(observed) = P(y <= 0) + 0.2 P(y > 0) = 0.6 under the null.
    let data = generate(&linear_design(4000, 5, 0.0, 924)).unwrap();
    let out = apply_missingness(&data, MissingScenario::LinearS2, 11).unwrap();
    let delta = out.delta().unwrap();
    for i in 0..4000 {
        if data.y()[i] <= 0.0 {
            assert_eq!(delta[i], 1, "nonpositive responses are always kept");
        }
    }
    let frac = delta.iter().filter(|&&v| v == 1).count() as f64 / 4000.0;
    assert!((frac - 0.6).abs() < 3.0 * (0.24f64 / 4000.0).sqrt());
}

#[test]
fn logistic_s1_fraction_matches_conditional_expectation() {
    let data = generate(&logistic_design(4000, 5, 0.0, 925)).unwrap();
    let out = apply_missingness(&data, MissingScenario::LogisticS1, 13).unwrap();
    let frac = out.delta().unwrap().iter().filter(|&&v| v == 1).count() as f64 / 4000.0;
    let ybar = data.y().sum() / 4000.0;
    // P(delta = 1 | y) = 0.2 + 0.6 y, so the conditional rate is exact.
    let expect = 0.2 + 0.6 * ybar;
    assert!(
        (frac - expect).abs() < 3.0 * (0.16f64 / 4000.0).sqrt(),
        "frac {frac} vs {expect}"
    );
}

#[test]
fn logistic_s2_always_keeps_successes() {
    let data = generate(&logistic_design(2000, 5, 0.3, 926)).unwrap();
    let out = apply_missingness(&data, MissingScenario::LogisticS2, 15).unwrap();
    let delta = out.delta().unwrap();
    for i in 0..2000 {
        if data.y()[i] == 1.0 {
            assert_eq!(delta[i], 1, "P(delta=1 | y=1) = 1 exactly");
        }
    }
}

#[test]
fn missingness_is_deterministic_in_the_seed() {
    let data = generate(&linear_design(200, 5, 0.0, 927)).unwrap();
    let a = apply_missingness(&data, MissingScenario::LinearS2, 21).unwrap();
    let b = apply_missingness(&data, MissingScenario::LinearS2, 21).unwrap();
    let c = apply_missingness(&data, MissingScenario::LinearS2, 22).unwrap();
    assert_eq!(a.delta().unwrap(), b.delta().unwrap());
    assert_ne!(a.delta().unwrap(), c.delta().unwrap());
}

#[test]
fn out_of_range_probabilities_are_rejected() {
    // Linear-scale responses pushed through a logistic scenario produce
    // success probabilities outside [0, 1].
    let y = Array1::from_vec(vec![2.5, -0.3, 0.1, 0.4, -1.2, 0.9]);
    let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64).sin());
    let data = Dataset::new(y, x).unwrap();
    assert!(matches!(
        apply_missingness(&data, MissingScenario::LogisticS1, 3),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn all_positive_responses_exhaust_linear_s1() {
    let y = Array1::from_vec(vec![0.5, 1.5, 2.5, 3.5, 4.5, 5.5]);
    let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i + 2 * j) as f64).cos());
    let data = Dataset::new(y, x).unwrap();
    assert!(matches!(
        apply_missingness(&data, MissingScenario::LinearS1, 3),
        Err(Error::Degenerate(_))
    ));
}

// ---------------------------------------------------------------------------
// run_type1 / run_power
// ---------------------------------------------------------------------------

#[test]
fn type1_smoke_bookkeeping_and_determinism() {
    let design = linear_design(36, 8, 0.0, 931);
    let cfg = fast_config();
    let res = run_type1(
        &design,
        MissingScenario::None,
        false,
        0,
        4,
        0.2,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    assert_eq!(res.replicates + res.failures, 4);
    assert_eq!(res.failures, 0);
    assert!((0.0..=1.0).contains(&res.rejection_rate));
    let p = res.rejection_rate;
    assert_eq!(
        res.monte_carlo_se,
        (p * (1.0 - p) / res.replicates as f64).sqrt()
    );
    let records = res.per_replicate.as_ref().unwrap();
    assert_eq!(records.len(), res.replicates);
    let hits = records.iter().filter(|r| r.reject_dlrt).count();
    assert_eq!(res.rejection_rate, hits as f64 / records.len() as f64);
    for (i, rec) in records.iter().enumerate() {
        assert_eq!(rec.replicate, i);
        assert!(rec.alpha_hat_p.is_finite());
        assert!(rec.scaled_lambda_n >= 0.0);
        assert!((0.0..=1.0).contains(&rec.dlrt_pvalue));
        assert!((0.0..=1.0).contains(&rec.wald_pvalue));
        assert_eq!(rec.observed, 36);
        assert!(rec.lambda_used > 0.0);
    }
    // Replicates draw independent streams: the path estimates must differ.
    assert!(records[0].alpha_hat_p != records[1].alpha_hat_p);

    let rerun = run_type1(
        &design,
        MissingScenario::None,
        false,
        0,
        4,
        0.2,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    assert_eq!(rerun.rejection_rate, res.rejection_rate);
    let rr = rerun.per_replicate.as_ref().unwrap();
    for (a, b) in records.iter().zip(rr.iter()) {
        assert_eq!(a.alpha_hat_p, b.alpha_hat_p);
        assert_eq!(a.scaled_lambda_n, b.scaled_lambda_n);
        assert_eq!(a.lambda_used, b.lambda_used);
    }
}

#[test]
fn wald_method_reports_the_wald_rate() {
    let design = linear_design(36, 8, 0.0, 932);
    let cfg = fast_config();
    let res = run_type1(
        &design,
        MissingScenario::None,
        false,
        0,
        3,
        0.3,
        TestMethod::Wald,
        &cfg,
    )
    .unwrap();
    let records = res.per_replicate.as_ref().unwrap();
    let hits = records.iter().filter(|r| r.reject_wald).count();
    assert_eq!(res.rejection_rate, hits as f64 / records.len() as f64);
    for rec in records {
        assert_eq!(rec.reject_wald, rec.wald_pvalue <= 0.3);
    }
}

#[test]
fn records_are_dropped_unless_requested() {
    let design = linear_design(36, 8, 0.0, 933);
    let cfg = PipelineConfig {
        fixed_lambda_frac: Some(0.35),
        keep_records: false,
        ..PipelineConfig::default()
    };
    let res = run_type1(
        &design,
        MissingScenario::None,
        false,
        0,
        2,
        0.05,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    assert!(res.per_replicate.is_none());
}

#[test]
fn alpha0_follows_the_design_signal_when_asked() {
    // At mu = 0 the two alpha0 conventions coincide, so the runs agree
    // bitwise; at mu > 0 they must differ through the tested null.
    let design = linear_design(36, 8, 0.0, 934);
    let cfg = fast_config();
    let at_mu = run_type1(
        &design,
        MissingScenario::None,
        true,
        0,
        2,
        0.05,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    let at_zero = run_type1(
        &design,
        MissingScenario::None,
        false,
        0,
        2,
        0.05,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    let a = at_mu.per_replicate.as_ref().unwrap();
    let b = at_zero.per_replicate.as_ref().unwrap();
    for (ra, rb) in a.iter().zip(b.iter()) {
        assert_eq!(ra.scaled_lambda_n, rb.scaled_lambda_n);
    }
}

#[test]
fn power_grid_reuses_the_type1_protocol() {
    let design = linear_design(36, 8, 0.0, 935);
    let cfg = fast_config();
    let grid = [0.0, 0.6];
    let power = run_power(
        &design,
        &grid,
        MissingScenario::None,
        0,
        3,
        0.05,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    assert_eq!(power.len(), 2);
    for (mu, entry) in grid.iter().zip(power.iter()) {
        let mut d = design.clone();
        d.mu = *mu;
        let direct = run_type1(
            &d,
            MissingScenario::None,
            false,
            0,
            3,
            0.05,
            TestMethod::Dlrt,
            &cfg,
        )
        .unwrap();
        assert_eq!(entry.rejection_rate, direct.rejection_rate);
        let ea = entry.per_replicate.as_ref().unwrap();
        let eb = direct.per_replicate.as_ref().unwrap();
        for (ra, rb) in ea.iter().zip(eb.iter()) {
            assert_eq!(ra.alpha_hat_p, rb.alpha_hat_p);
        }
    }
}

#[test]
fn missing_pipeline_smoke_is_deterministic() {
    let design = linear_design(40, 8, 0.2, 936);
    let cfg = fast_config();
    let run = |seed_design: &SimDesign| {
        run_type1(
            seed_design,
            MissingScenario::LinearS1,
            true,
            0,
            3,
            0.05,
            TestMethod::Dlrt,
            &cfg,
        )
        .unwrap()
    };
    let a = run(&design);
    let b = run(&design);
    assert_eq!(a.rejection_rate, b.rejection_rate);
    let ra = a.per_replicate.as_ref().unwrap();
    let rb = b.per_replicate.as_ref().unwrap();
    for (x, y) in ra.iter().zip(rb.iter()) {
        assert_eq!(x.alpha_hat_p, y.alpha_hat_p);
        assert_eq!(x.observed, y.observed);
        assert!(x.observed >= 2 && x.observed < 40);
    }
}

#[test]
fn cv_pipeline_smoke_runs() {
    // One replicate through the full per-replicate CV path.
    let design = linear_design(30, 6, 0.0, 937);
    let cfg = PipelineConfig {
        grid_size: 6,
        grid_min_ratio: 0.1,
        keep_records: true,
        ..PipelineConfig::default()
    };
    let res = run_type1(
        &design,
        MissingScenario::None,
        false,
        0,
        1,
        0.05,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    assert_eq!(res.replicates, 1);
    let rec = &res.per_replicate.as_ref().unwrap()[0];
    assert!(rec.lambda_used > 0.0 && rec.lambda_used.is_finite());
}

#[test]
fn runner_rejects_invalid_arguments() {
    let design = linear_design(36, 8, 0.0, 938);
    let cfg = fast_config();
    let call = |d: &SimDesign, scen, j, r, omega, cfg: &PipelineConfig| {
        run_type1(d, scen, false, j, r, omega, TestMethod::Dlrt, cfg)
    };
    assert!(call(&design, MissingScenario::None, 0, 0, 0.05, &cfg).is_err());
    assert!(call(&design, MissingScenario::None, 8, 2, 0.05, &cfg).is_err());
    assert!(call(&design, MissingScenario::None, 0, 2, 0.0, &cfg).is_err());
    // Scenario / model mismatch is rejected before any work.
    assert!(call(&design, MissingScenario::LogisticS1, 0, 2, 0.05, &cfg).is_err());
    let logi = logistic_design(36, 8, 0.0, 938);
    assert!(call(&logi, MissingScenario::LinearS1, 0, 2, 0.05, &cfg).is_err());
    let mut bad = cfg.clone();
    bad.cv_folds = 1;
    assert!(call(&design, MissingScenario::None, 0, 2, 0.05, &bad).is_err());
    let mut bad = cfg.clone();
    bad.fixed_lambda_frac = Some(0.0);
    assert!(call(&design, MissingScenario::None, 0, 2, 0.05, &bad).is_err());
    let mut bad = cfg.clone();
    bad.grid_min_ratio = 1.5;
    assert!(call(&design, MissingScenario::None, 0, 2, 0.05, &bad).is_err());
}

#[test]
fn estimation_error_runner_tracks_the_truth() {
    let design = linear_design(40, 8, 0.8, 939);
    let cfg = PipelineConfig {
        fixed_lambda_frac: Some(0.25),
        ..PipelineConfig::default()
    };
    let errs = run_estimation_error(&design, MissingScenario::None, 5, &cfg).unwrap();
    assert_eq!(errs.len(), 5);
    for e in &errs {
        assert!(e.is_finite() && *e >= 0.0);
    }
    let rerun = run_estimation_error(&design, MissingScenario::None, 5, &cfg).unwrap();
    assert_eq!(errs, rerun);
}

#[test]
fn experiment_result_round_trips_through_json() {
    let design = linear_design(36, 8, 0.0, 940);
    let cfg = fast_config();
    let res = run_type1(
        &design,
        MissingScenario::None,
        false,
        0,
        2,
        0.05,
        TestMethod::Dlrt,
        &cfg,
    )
    .unwrap();
    let json = serde_json::to_string(&res).unwrap();
    let back: rankglm::simlab::ExperimentResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.rejection_rate, res.rejection_rate);
    assert_eq!(back.replicates, res.replicates);
    let ra = res.per_replicate.as_ref().unwrap();
    let rb = back.per_replicate.as_ref().unwrap();
    assert_eq!(ra.len(), rb.len());
    assert_eq!(ra[0].alpha_hat_p, rb[0].alpha_hat_p);
    // Config and design serialize for the command-line surface.
    let dj = serde_json::to_string(&design).unwrap();
    let dback: SimDesign = serde_json::from_str(&dj).unwrap();
    assert_eq!(dback.n, design.n);
    let cj = serde_json::to_string(&cfg).unwrap();
    let cback: PipelineConfig = serde_json::from_str(&cj).unwrap();
    assert_eq!(cback.fixed_lambda_frac, cfg.fixed_lambda_frac);
}
