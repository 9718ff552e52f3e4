//! Calibration probe for the Monte Carlo pipeline (timing + rejection rates).
//! Usage: probe <model> <scenario> <n> <d> <mu> <r> [alpha0=mu|zero]

use std::time::Instant;

use rankglm::simlab::{
    run_type1, MissingScenario, PipelineConfig, SimDesign, SimModel, TestMethod,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let model = match args.get(1).map(String::as_str) {
        Some("logistic") => SimModel::Logistic,
        _ => SimModel::LinearGaussian,
    };
    let scenario = match args.get(2).map(String::as_str) {
        Some("linear_s1") => MissingScenario::LinearS1,
        Some("linear_s2") => MissingScenario::LinearS2,
        Some("logistic_s1") => MissingScenario::LogisticS1,
        Some("logistic_s2") => MissingScenario::LogisticS2,
        _ => MissingScenario::None,
    };
    let n: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(100);
    let d: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(200);
    let mu: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let r: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(50);
    let alpha0_mu = args.get(7).map(String::as_str) != Some("zero");

    let design = SimDesign::new(model, n, d, mu, 20260823);
    let mut config = PipelineConfig {
        keep_records: true,
        ..PipelineConfig::default()
    };
    if let Some(v) = args.get(8).and_then(|s| s.parse().ok()) {
        config.grid_size = v;
    }
    if let Some(v) = args.get(9).and_then(|s| s.parse().ok()) {
        config.grid_min_ratio = v;
    }
    if let Some(v) = args.get(10).and_then(|s| s.parse().ok()) {
        config.solver.tol = v;
    }
    if let Some(v) = args.get(11).and_then(|s| s.parse().ok()) {
        config.solver.max_iter = v;
    }
    if let Some(v) = args.get(12).and_then(|s| s.parse().ok()) {
        config.fixed_lambda_frac = Some(v);
    }
    if let Some(v) = args.get(13).and_then(|s| s.parse::<f64>().ok()) {
        config.relax = Some(v);
    }
    if let Some(v) = args.get(14).and_then(|s| s.parse().ok()) {
        config.lambda_s = Some(v);
    }
    if let Some(v) = args.get(15).map(String::as_str) {
        config.penalty = match v {
            "scad" => rankglm::penalty::PenaltyFamily::Scad,
            "mcp" => rankglm::penalty::PenaltyFamily::Mcp,
            _ => rankglm::penalty::PenaltyFamily::L1,
        };
    }
    if let Some(v) = args.get(16).and_then(|s| s.parse().ok()) {
        config.solver.lla_rounds = v;
    }
    if args.get(17).map(String::as_str) == Some("1") {
        config.rescale = true;
    }
    if let Some(v) = args.get(18).and_then(|s| s.parse().ok()) {
        config.bag = v;
    }
    let t0 = Instant::now();
    let res = run_type1(
        &design,
        scenario,
        alpha0_mu,
        0,
        r,
        0.05,
        TestMethod::Dlrt,
        &config,
    )
    .unwrap();
    let dt = t0.elapsed();
    let recs = res.per_replicate.as_ref().unwrap();
    let wald = recs.iter().filter(|rec| rec.reject_wald).count() as f64 / recs.len() as f64;
    let mean_lambda = recs.iter().map(|rec| rec.lambda_used).sum::<f64>() / recs.len() as f64;
    let mean_active =
        recs.iter().map(|rec| rec.active_set_size as f64).sum::<f64>() / recs.len() as f64;
    let mean_alpha = recs.iter().map(|rec| rec.alpha_hat_p).sum::<f64>() / recs.len() as f64;
    let mean_obs = recs.iter().map(|rec| rec.observed as f64).sum::<f64>() / recs.len() as f64;
    let mut scaled: Vec<f64> = recs.iter().map(|rec| rec.scaled_lambda_n).collect();
    scaled.sort_by(f64::total_cmp);
    println!(
        "elapsed {:.1?}  per-rep {:.1?}",
        dt,
        dt / r.max(1) as u32
    );
    println!(
        "dlrt {:.3}  wald {:.3}  se {:.3}  failures {}",
        res.rejection_rate, wald, res.monte_carlo_se, res.failures
    );
    println!(
        "mean lambda {:.4}  active {:.1}  alpha_hat {:.4}  observed {:.1}",
        mean_lambda, mean_active, mean_alpha, mean_obs
    );
    println!(
        "scaled stat quartiles {:.3} / {:.3} / {:.3}  max {:.3}",
        scaled[scaled.len() / 4],
        scaled[scaled.len() / 2],
        scaled[3 * scaled.len() / 4],
        scaled[scaled.len() - 1]
    );
    let var_a = recs
        .iter()
        .map(|rec| (rec.alpha_hat_p - mean_alpha).powi(2))
        .sum::<f64>()
        / (recs.len() - 1) as f64;
    // KS of the scaled statistic against chi-square(1) via the p-values
    // (both transforms give the same distance), and of the p-values
    // against uniform.
    let mut pv: Vec<f64> = recs.iter().map(|rec| rec.dlrt_pvalue).collect();
    pv.sort_by(f64::total_cmp);
    let m = pv.len() as f64;
    let mut ks = 0.0f64;
    for (i, &p) in pv.iter().enumerate() {
        ks = ks.max((p - i as f64 / m).abs());
        ks = ks.max(((i + 1) as f64 / m - p).abs());
    }
    println!(
        "alpha_hat sd {:.4}  ks(pvalue, uniform) {:.4}  (crit01 {:.4})",
        var_a.sqrt(),
        ks,
        1.62762 / m.sqrt()
    );
    // Split by whether the first stage kept the tested coordinate.
    let (sel, miss): (Vec<_>, Vec<_>) = recs.iter().partition(|rec| rec.beta_hat_j != 0.0);
    for (tag, grp) in [("selected", &sel), ("missed", &miss)] {
        if grp.is_empty() {
            continue;
        }
        let k = grp.len() as f64;
        let ma = grp.iter().map(|rec| rec.alpha_hat_p).sum::<f64>() / k;
        let rd = grp.iter().filter(|rec| rec.reject_dlrt).count() as f64 / k;
        let rw = grp.iter().filter(|rec| rec.reject_wald).count() as f64 / k;
        let mx = grp
            .iter()
            .map(|rec| rec.scaled_lambda_n)
            .fold(0.0f64, f64::max);
        println!(
            "  {tag}: {} reps  alpha_hat {:.4}  dlrt {:.3}  wald {:.3}  max stat {:.2}",
            grp.len(),
            ma,
            rd,
            rw,
            mx
        );
    }
}
