//! Monte Carlo simulation lab: seeded data generators with Toeplitz-correlated
//! Gaussian covariates, decomposable missingness scenarios, and experiment
//! runners for Type I error, power, and estimation-error studies.
//!
//! Every replicate owns an RNG stream derived from the master seed with a
//! SplitMix64-style mixer, so results are independent of scheduling and
//! bit-reproducible. Replicates run in parallel; aggregation walks the
//! results in replicate order.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Beta, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{
    cross_validate_with, fit_penalized, lambda_max, log_lambda_grid, SolverOptions,
};
use crate::inference;
use crate::linalg::cholesky_lower;
use crate::math::logistic;
use crate::modelfit::{
    self, lasso_lambda_max, ModelFamily, ModelLassoFit, ModelLassoOptions,
};
use crate::penalty::{PenaltyConfig, PenaltyFamily};
use crate::projector;
use crate::ranklik;

/// Response model for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimModel {
    /// `y = x'b + e`, `e ~ N(0, 1)`.
    LinearGaussian,
    /// `y in {0, 1}` with `P(y = 1) = logistic(x'b)`.
    Logistic,
}

/// One synthetic-data design: model, dimensions, signal, covariate
/// correlation, and the master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimDesign {
    pub model: SimModel,
    pub n: usize,
    pub d: usize,
    /// Signal size: the first `s_true` coefficients equal `mu`.
    pub mu: f64,
    /// Toeplitz base for the covariate covariance `rho^|i-j|`.
    pub rho: f64,
    /// Number of nonzero true coefficients.
    pub s_true: usize,
    pub seed: u64,
}

impl SimDesign {
    /// A design with the standard correlation (0.6) and support size (3).
    pub fn new(model: SimModel, n: usize, d: usize, mu: f64, seed: u64) -> Self {
        Self {
            model,
            n,
            d,
            mu,
            rho: 0.6,
            s_true: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidInput(format!(
                "design needs n >= 4, got {}",
                self.n
            )));
        }
        if self.s_true < 1 {
            return Err(Error::InvalidInput(
                "design needs at least 1 true nonzero coefficient".into(),
            ));
        }
        if self.d < self.s_true {
            return Err(Error::InvalidInput(format!(
                "design needs d >= s_true, got d = {} < {}",
                self.d, self.s_true
            )));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::InvalidInput(format!(
                "Toeplitz base must lie strictly inside (-1, 1), got {}",
                self.rho
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "signal size must be finite, got {}",
                self.mu
            )));
        }
        Ok(())
    }

    /// The true coefficient vector: `mu` on the first `s_true` coordinates.
    pub fn beta_star(&self) -> Array1<f64> {
        let mut b = Array1::<f64>::zeros(self.d);
        for j in 0..self.s_true {
            b[j] = self.mu;
        }
        b
    }
}

/// Decomposable missingness scenarios. All depend on the response only, so
/// they satisfy the selection model under which pairwise weights stay valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingScenario {
    /// Fully observed.
    None,
    /// Linear model: observed iff `y <= 0`.
    LinearS1,
    /// Linear model: `P(observed) = 1 - 0.8 * 1{y > 0}`.
    LinearS2,
    /// Logistic model: `P(observed) = 0.2 + 0.6 y`.
    LogisticS1,
    /// Logistic model: `P(observed) = 0.2 + 0.8 y`.
    LogisticS2,
}

impl MissingScenario {
    /// Whether the scenario's observation rule is defined for the model.
    pub fn compatible_with(self, model: SimModel) -> bool {
        match self {
            MissingScenario::None => true,
            MissingScenario::LinearS1 | MissingScenario::LinearS2 => {
                model == SimModel::LinearGaussian
            }
            MissingScenario::LogisticS1 | MissingScenario::LogisticS2 => {
                model == SimModel::Logistic
            }
        }
    }

    /// Whether the observation rule involves randomness beyond `y`.
    fn is_stochastic(self) -> bool {
        !matches!(self, MissingScenario::None | MissingScenario::LinearS1)
    }
}

/// Which rejection indicator an experiment reports as its rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Dlrt,
    Wald,
}

/// First-stage estimator feeding the directional test.
///
/// The directional test accepts any root-rate initial estimator. The
/// model-native lasso (the standard choice for synthetic studies where the
/// response family is known) keeps the coefficient scale honest under
/// strong signals; the penalized rank fit is fully semiparametric but its
/// saturating pair kernel over-shrinks large coefficients, which displaces
/// the directional maximizer and breaks test calibration away from weak
/// signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstStage {
    /// Cross-validated linear/logistic lasso on the observed rows.
    ModelLasso,
    /// Cross-validated penalized pairwise-rank fit.
    RankPenalized,
}

/// Per-replicate pipeline settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Which estimator produces the initial coefficient vector.
    pub first_stage: FirstStage,
    /// Penalty family for the first stage. Folded-concave families run
    /// local-linear-approximation rounds on top of the lasso in either
    /// stage.
    pub penalty: PenaltyFamily,
    /// Cross-validation folds (when `fixed_lambda_frac` is unset).
    pub cv_folds: usize,
    /// Number of grid points for the CV lambda path.
    pub grid_size: usize,
    /// Smallest grid lambda as a fraction of the per-replicate lambda_max.
    pub grid_min_ratio: f64,
    /// Fast mode: skip CV and use this fraction of lambda_max directly.
    pub fixed_lambda_frac: Option<f64>,
    /// Relaxation weight on an unpenalized refit of the selected support
    /// (model-lasso first stage only): the first-stage coefficients become
    /// `(1 - g) * penalized + g * refit`. `None` keeps the penalized fit;
    /// `1.0` is the fully relaxed lasso.
    pub relax: Option<f64>,
    /// Evaluate the curvature and variability plug-ins at the first-stage
    /// fit rescaled along its ray to maximize the pairwise likelihood (a
    /// one-dimensional concave problem with no selection effect), instead
    /// of at the raw penalized fit. Penalized fits are shrunk below the
    /// scale at which the saturating pair kernel operates, which inflates
    /// the apparent curvature and narrows the directional interval; the ray
    /// rescale restores the honest scale for the plug-ins while the
    /// directional maximizer itself still starts from the stable penalized
    /// fit (keeping the scale-search noise out of the point estimate).
    pub rescale: bool,
    /// Average the first-stage coefficients over this many 80% row
    /// subsamples (0 disables bagging). Smooths the selection indicator so
    /// the nuisance fit responds smoothly to the data; near the selection
    /// threshold a single fit's support is a coin flip, and conditioning on
    /// it displaces the directional maximizer.
    pub bag: usize,
    /// Nuisance-direction penalty; None uses the `4 sqrt(log(nd)/n)` default.
    pub lambda_s: Option<f64>,
    pub solver: SolverOptions,
    /// Keep per-replicate records in the result.
    pub keep_records: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            first_stage: FirstStage::ModelLasso,
            penalty: PenaltyFamily::L1,
            cv_folds: 5,
            grid_size: 25,
            grid_min_ratio: 0.05,
            fixed_lambda_frac: None,
            relax: None,
            rescale: false,
            bag: 0,
            lambda_s: None,
            solver: SolverOptions::default(),
            keep_records: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if let Some(g) = self.relax {
            if !(0.0..=1.0).contains(&g) || !g.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "relaxation weight must lie in [0, 1], got {g}"
                )));
            }
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidInput(format!(
                "cross-validation needs at least 2 folds, got {}",
                self.cv_folds
            )));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidInput(format!(
                "lambda grid needs at least 2 points, got {}",
                self.grid_size
            )));
        }
        if !(self.grid_min_ratio > 0.0 && self.grid_min_ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "grid_min_ratio must lie strictly between 0 and 1, got {}",
                self.grid_min_ratio
            )));
        }
        if let Some(f) = self.fixed_lambda_frac {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "fixed_lambda_frac must be positive and finite, got {f}"
                )));
            }
        }
        if let Some(ls) = self.lambda_s {
            if !(ls >= 0.0 && ls.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "lambda_s must be nonnegative and finite, got {ls}"
                )));
            }
        }
        Ok(())
    }
}

/// One replicate's outcome: the fitted lambda, the inference summary, and
/// missingness bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub lambda_used: f64,
    pub active_set_size: usize,
    pub observed: usize,
    /// First-stage value of the tested coordinate (before profiling).
    pub beta_hat_j: f64,
    pub alpha_hat_p: f64,
    pub scaled_lambda_n: f64,
    pub dlrt_pvalue: f64,
    pub wald_pvalue: f64,
    pub reject_dlrt: bool,
    pub reject_wald: bool,
}

/// Aggregated Monte Carlo outcome. `replicates` counts the successful runs
/// that enter the rate; failed replicates are excluded and counted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rejection_rate: f64,
    pub replicates: usize,
    /// `sqrt(p (1 - p) / replicates)`.
    pub monte_carlo_se: f64,
    pub failures: usize,
    pub per_replicate: Option<Vec<ReplicateRecord>>,
}

// --------------------------------------------------------------------------
// Seeding
// --------------------------------------------------------------------------

const TAG_REPLICATE: u64 = 0xA1;
const TAG_GENERATE: u64 = 0xB2;
const TAG_MISSING: u64 = 0xC3;
const TAG_CV: u64 = 0xD4;

/// Retries for a stochastic missingness draw before declaring it degenerate.
const DELTA_RETRIES: u32 = 16;
/// Fresh data redraws allowed when missingness leaves under 2 observed rows.
const REPLICATE_RETRIES: u64 = 8;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from `(master, tag, index)`.
pub(crate) fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let a = splitmix64(master.wrapping_add(splitmix64(tag)));
    splitmix64(a.wrapping_add(splitmix64(index)))
}

// --------------------------------------------------------------------------
// Generation
// --------------------------------------------------------------------------

/// Lower-triangular factor of the Toeplitz covariance `rho^|i-j|`.
fn toeplitz_factor(d: usize, rho: f64) -> Result<Array2<f64>> {
    let sigma = Array2::from_shape_fn((d, d), |(i, j)| {
        rho.powi((i as i32 - j as i32).abs())
    });
    cholesky_lower(&sigma)
}

/// Draw one dataset with a precomputed covariance factor and an explicit
/// stream seed.
fn generate_with_factor(design: &SimDesign, factor: &Array2<f64>, seed: u64) -> Result<Dataset> {
    let (n, d) = (design.n, design.d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let z = Array2::from_shape_vec((n, d), z).expect("row-major fill");
    let x = z.dot(&factor.t());
    let lin = x.dot(&design.beta_star());
    let y = match design.model {
        SimModel::LinearGaussian => {
            Array1::from_iter(lin.iter().map(|&m| m + rng.sample::<f64, _>(StandardNormal)))
        }
        SimModel::Logistic => Array1::from_iter(
            lin.iter()
                .map(|&m| f64::from(rng.random::<f64>() < logistic(m))),
        ),
    };
    Dataset::new(y, x)
}

/// Draw one dataset from the design's model, covariates first and then the
/// responses, all from a single ChaCha stream keyed by the design seed.
pub fn generate(design: &SimDesign) -> Result<Dataset> {
    design.validate()?;
    let factor = toeplitz_factor(design.d, design.rho)?;
    generate_with_factor(design, &factor, design.seed)
}

// --------------------------------------------------------------------------
// Missingness
// --------------------------------------------------------------------------

fn observation_probability(scenario: MissingScenario, y: f64) -> Result<f64> {
    let p = match scenario {
        MissingScenario::None => 1.0,
        MissingScenario::LinearS1 => f64::from(y <= 0.0),
        MissingScenario::LinearS2 => {
            if y > 0.0 {
                0.2
            } else {
                1.0
            }
        }
        MissingScenario::LogisticS1 => 0.2 + 0.6 * y,
        MissingScenario::LogisticS2 => 0.2 + 0.8 * y,
    };
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "scenario {scenario:?} gives observation probability {p} at y = {y}; \
             the scenario does not match the response model"
        )));
    }
    Ok(p)
}

fn draw_delta(
    y: &Array1<f64>,
    scenario: MissingScenario,
    rng: &mut ChaCha8Rng,
) -> Result<Array1<u8>> {
    let mut delta = Array1::<u8>::zeros(y.len());
    for (i, &yi) in y.iter().enumerate() {
        let p = observation_probability(scenario, yi)?;
        delta[i] = if p >= 1.0 {
            1
        } else if p <= 0.0 {
            0
        } else {
            u8::from(rng.random::<f64>() < p)
        };
    }
    Ok(delta)
}

/// Attach a missingness indicator drawn from the scenario. Responses and
/// covariates are retained untouched (unobserved rows keep their values;
/// the pairwise kernels never read them). Stochastic scenarios redraw up to
/// a bounded number of times if fewer than 2 rows come out observed.
pub fn apply_missingness(
    data: &Dataset,
    scenario: MissingScenario,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..DELTA_RETRIES {
        let delta = draw_delta(data.y(), scenario, &mut rng)?;
        let observed = delta.iter().filter(|&&v| v == 1).count();
        if observed >= 2 {
            return Dataset::with_delta(data.y().to_owned(), data.x().to_owned(), delta);
        }
        if !scenario.is_stochastic() {
            break;
        }
    }
    Err(Error::Degenerate(format!(
        "scenario {scenario:?} left fewer than 2 observed rows after redraws"
    )))
}

// --------------------------------------------------------------------------
// Runners
// --------------------------------------------------------------------------

struct ReplicateEnv<'a> {
    design: &'a SimDesign,
    factor: &'a Array2<f64>,
    scenario: MissingScenario,
    target_j: usize,
    alpha0: f64,
    omega: f64,
    lambda_s: f64,
    config: &'a PipelineConfig,
}

/// Draw data (with bounded redraws when missingness degenerates) and return
/// it with the replicate's derived stream root.
fn draw_replicate_data(env: &ReplicateEnv, rep_seed: u64) -> Result<Dataset> {
    let mut last_err = None;
    for attempt in 0..REPLICATE_RETRIES {
        let data = generate_with_factor(
            env.design,
            env.factor,
            derive_seed(rep_seed, TAG_GENERATE, attempt),
        )?;
        if env.scenario == MissingScenario::None {
            return Ok(data);
        }
        match apply_missingness(&data, env.scenario, derive_seed(rep_seed, TAG_MISSING, attempt))
        {
            Ok(d) => return Ok(d),
            Err(e @ Error::Degenerate(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Degenerate("missingness redraws exhausted".into())
    }))
}

fn penalty_for(family: PenaltyFamily, lambda: f64) -> PenaltyConfig {
    match family {
        PenaltyFamily::L1 => PenaltyConfig::l1(lambda),
        PenaltyFamily::Scad => PenaltyConfig::scad(lambda),
        PenaltyFamily::Mcp => PenaltyConfig::mcp(lambda),
    }
}

/// First-stage outcome in the shape the inference stage needs.
struct FirstStageFit {
    beta: Beta,
    lambda_used: f64,
    active_set_size: usize,
}

fn model_family(model: SimModel) -> ModelFamily {
    match model {
        SimModel::LinearGaussian => ModelFamily::LinearGaussian,
        SimModel::Logistic => ModelFamily::Logistic,
    }
}

/// Model-native lasso on the observed rows (complete-case); the penalty
/// level comes from held-out prediction loss over the lasso path (or a
/// fixed fraction of lambda_max in fast mode), and folded-concave families
/// add reweighted rounds on top of the selected penalty. The intercept
/// never reaches the rank stage, which is translation invariant.
fn fit_model_lasso(env: &ReplicateEnv, data: &Dataset, rep_seed: u64) -> Result<FirstStageFit> {
    let family = model_family(env.design.model);
    let observed: Vec<usize> = (0..data.n()).filter(|&i| data.observed(i)).collect();
    let cc = data.subset_rows(&observed);
    let (x, y) = (cc.x().view(), cc.y().view());
    let opts = ModelLassoOptions::default();
    let lmax = lasso_lambda_max(&x, &y, family)?;
    let lambda = match env.config.fixed_lambda_frac {
        Some(frac) => frac * lmax,
        None => {
            let grid = log_lambda_grid(lmax, env.config.grid_size, env.config.grid_min_ratio);
            modelfit::cv_lasso(
                &x,
                &y,
                family,
                &grid,
                env.config.cv_folds,
                derive_seed(rep_seed, TAG_CV, 0),
                &opts,
            )?
            .lambda_best
        }
    };
    let penalty = penalty_for(env.config.penalty, lambda);
    let fit = modelfit::fit_lla(&x, &y, family, &penalty, env.config.solver.lla_rounds, &opts)?;
    let fit = if env.config.bag > 0 {
        let m = (4 * x.nrows()).div_ceil(5);
        let mut mean = Array1::<f64>::zeros(x.ncols());
        let mut kept = 0usize;
        for b in 0..env.config.bag {
            let mut rows: Vec<usize> = (0..x.nrows()).collect();
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, TAG_CV, 1 + b as u64));
            rows.shuffle(&mut rng);
            rows.truncate(m);
            let (xb, yb) = (modelfit::gather_rows(&x, &rows), modelfit::gather(&y, &rows));
            match modelfit::fit_lla(
                &xb.view(),
                &yb.view(),
                family,
                &penalty,
                env.config.solver.lla_rounds,
                &opts,
            ) {
                Ok(f) => {
                    mean += &f.beta;
                    kept += 1;
                }
                Err(_) => continue,
            }
        }
        if kept == 0 {
            fit
        } else {
            mean /= kept as f64;
            let active: Vec<usize> =
                (0..mean.len()).filter(|&j| mean[j] != 0.0).collect();
            ModelLassoFit {
                beta: mean,
                intercept: fit.intercept,
                lambda_used: fit.lambda_used,
                active_set: active,
            }
        }
    } else {
        fit
    };
    let beta = match env.config.relax {
        // Blend toward an unpenalized refit of the selected support,
        // skipped when the support is too large for a stable refit.
        Some(g) if g > 0.0 && !fit.active_set.is_empty()
            && fit.active_set.len() * 2 < x.nrows() =>
        {
            let (_, refit) =
                modelfit::refit_on_support(&x, &y, family, &fit.active_set, &opts)?;
            (1.0 - g) * &fit.beta + g * &refit
        }
        _ => fit.beta,
    };
    Ok(FirstStageFit {
        beta: Beta::new(beta)?,
        lambda_used: fit.lambda_used,
        active_set_size: fit.active_set.len(),
    })
}

/// Rank-penalized first stage: pick lambda (CV or fixed fraction) and fit
/// the pairwise composite likelihood with the configured penalty.
fn fit_rank_penalized(env: &ReplicateEnv, data: &Dataset, rep_seed: u64) -> Result<FirstStageFit> {
    let lmax = lambda_max(data)?;
    let lambda = match env.config.fixed_lambda_frac {
        Some(frac) => frac * lmax,
        None => {
            let grid = log_lambda_grid(lmax, env.config.grid_size, env.config.grid_min_ratio);
            let cv = cross_validate_with(
                data,
                env.config.penalty,
                &grid,
                env.config.cv_folds,
                derive_seed(rep_seed, TAG_CV, 0),
                &env.config.solver,
            )?;
            cv.lambda_best
        }
    };
    let fit = fit_penalized(data, &penalty_for(env.config.penalty, lambda), &env.config.solver)?;
    Ok(FirstStageFit {
        beta: fit.beta,
        lambda_used: fit.lambda_used,
        active_set_size: fit.active_set.len(),
    })
}

/// Maximize the pairwise likelihood over `c * beta` for `c in [0, 8]` by
/// golden-section search (the likelihood is concave along any ray). A zero
/// vector is returned unchanged.
fn rank_ray_rescale(data: &Dataset, beta: &Beta) -> Result<Beta> {
    if beta.values().iter().all(|&b| b == 0.0) {
        return Ok(beta.clone());
    }
    let eval = |c: f64| -> Result<f64> {
        ranklik::pairwise_loglik(data, &Beta::new(beta.values().mapv(|b| c * b))?)
    };
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut lo, mut hi) = (0.0_f64, 8.0_f64);
    let mut c1 = hi - inv_phi * (hi - lo);
    let mut c2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(c1)?;
    let mut f2 = eval(c2)?;
    for _ in 0..70 {
        if f1 < f2 {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + inv_phi * (hi - lo);
            f2 = eval(c2)?;
        } else {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - inv_phi * (hi - lo);
            f1 = eval(c1)?;
        }
    }
    let c = 0.5 * (lo + hi);
    Beta::new(beta.values().mapv(|b| c * b))
}

fn fit_replicate(env: &ReplicateEnv, data: &Dataset, rep_seed: u64) -> Result<FirstStageFit> {
    match env.config.first_stage {
        FirstStage::ModelLasso => fit_model_lasso(env, data, rep_seed),
        FirstStage::RankPenalized => fit_rank_penalized(env, data, rep_seed),
    }
}

fn run_replicate(env: &ReplicateEnv, rep: usize) -> Result<ReplicateRecord> {
    let rep_seed = derive_seed(env.design.seed, TAG_REPLICATE, rep as u64);
    let data = draw_replicate_data(env, rep_seed)?;
    let fit = fit_replicate(env, &data, rep_seed)?;
    let eval_point = if env.config.rescale {
        rank_ray_rescale(&data, &fit.beta)?
    } else {
        fit.beta.clone()
    };
    let hessian = ranklik::pairwise_hessian(&data, &eval_point)?;
    let sigma = ranklik::hajek_sigma(&data, &eval_point)?;
    let dir = projector::estimate_w_from_hessian(&hessian, env.target_j, env.lambda_s)?;
    let report = inference::dlrt_test_with(
        &data,
        &fit.beta,
        &dir.w,
        env.target_j,
        env.alpha0,
        env.omega,
        &sigma,
        &hessian,
    )?;
    Ok(ReplicateRecord {
        replicate: rep,
        lambda_used: fit.lambda_used,
        active_set_size: fit.active_set_size,
        observed: data.n_observed(),
        beta_hat_j: fit.beta.values()[env.target_j],
        alpha_hat_p: report.alpha_hat_p,
        scaled_lambda_n: report.scaled_lambda_n,
        dlrt_pvalue: report.dlrt_pvalue,
        wald_pvalue: report.wald_pvalue,
        reject_dlrt: report.reject_dlrt,
        reject_wald: report.wald_pvalue <= env.omega,
    })
}

/// Fold per-replicate outcomes into an experiment result, excluding
/// failures. More than 2% failed replicates aborts the whole run.
fn aggregate(
    outcomes: Vec<Result<ReplicateRecord>>,
    requested: usize,
    method: TestMethod,
    keep_records: bool,
) -> Result<ExperimentResult> {
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = 0usize;
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failures += 1;
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if (failures as f64) >= 0.02 * requested as f64 && failures > 0 {
        return Err(Error::Numerical(format!(
            "{failures} of {requested} replicates failed (cap is 2%); first failure: {}",
            first_error.expect("failures imply a recorded error")
        )));
    }
    let successes = records.len();
    let rejections = records
        .iter()
        .filter(|r| match method {
            TestMethod::Dlrt => r.reject_dlrt,
            TestMethod::Wald => r.reject_wald,
        })
        .count();
    let rate = rejections as f64 / successes as f64;
    Ok(ExperimentResult {
        rejection_rate: rate,
        replicates: successes,
        monte_carlo_se: (rate * (1.0 - rate) / successes as f64).sqrt(),
        failures,
        per_replicate: if keep_records { Some(records) } else { None },
    })
}

fn check_run_args(
    design: &SimDesign,
    scenario: MissingScenario,
    target_j: usize,
    r: usize,
    config: &PipelineConfig,
) -> Result<()> {
    design.validate()?;
    config.validate()?;
    if !scenario.compatible_with(design.model) {
        return Err(Error::InvalidInput(format!(
            "scenario {scenario:?} does not apply to the {:?} model",
            design.model
        )));
    }
    if target_j >= design.d {
        return Err(Error::InvalidInput(format!(
            "target index {target_j} is out of range for {} columns",
            design.d
        )));
    }
    if r < 1 {
        return Err(Error::InvalidInput(
            "need at least 1 replicate".into(),
        ));
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

/// Monte Carlo rejection rate for `H0: beta_{target_j} = alpha0`, with
/// `alpha0 = mu` when `alpha0_equals_mu` (true-null calibration) and
/// `alpha0 = 0` otherwise (the power protocol). Each replicate draws fresh
/// data, applies the scenario, fits with CV-selected (or fixed-fraction)
/// lambda, estimates the nuisance direction, and runs the directional test.
#[allow(clippy::too_many_arguments)]
pub fn run_type1(
    design: &SimDesign,
    scenario: MissingScenario,
    alpha0_equals_mu: bool,
    target_j: usize,
    r: usize,
    omega: f64,
    method: TestMethod,
    config: &PipelineConfig,
) -> Result<ExperimentResult> {
    check_run_args(design, scenario, target_j, r, config)?;
    check_omega(omega)?;
    let factor = toeplitz_factor(design.d, design.rho)?;
    let env = ReplicateEnv {
        design,
        factor: &factor,
        scenario,
        target_j,
        alpha0: if alpha0_equals_mu { design.mu } else { 0.0 },
        omega,
        lambda_s: config
            .lambda_s
            .unwrap_or_else(|| projector::default_lambda_s(design.n, design.d)),
        config,
    };
    let outcomes: Vec<Result<ReplicateRecord>> = (0..r)
        .into_par_iter()
        .map(|rep| run_replicate(&env, rep))
        .collect();
    aggregate(outcomes, r, method, config.keep_records)
}

/// Power curve over a signal grid: each entry reruns the Type I protocol
/// with the design's `mu` replaced and the null pinned at zero. The master
/// seed is shared across grid points (common random numbers), which
/// stabilizes the monotone trend.
#[allow(clippy::too_many_arguments)]
pub fn run_power(
    design: &SimDesign,
    mu_grid: &[f64],
    scenario: MissingScenario,
    target_j: usize,
    r: usize,
    omega: f64,
    method: TestMethod,
    config: &PipelineConfig,
) -> Result<Vec<ExperimentResult>> {
    if mu_grid.is_empty() {
        return Err(Error::InvalidInput("signal grid must be nonempty".into()));
    }
    mu_grid
        .iter()
        .map(|&mu| {
            let mut d = design.clone();
            d.mu = mu;
            run_type1(&d, scenario, false, target_j, r, omega, method, config)
        })
        .collect()
}

/// Estimation-error study: per successful replicate, `||bhat - bstar||_2`
/// from the same seeded first-stage pipeline as [`run_type1`] (no inference
/// stage). The 2% failure cap applies.
pub fn run_estimation_error(
    design: &SimDesign,
    scenario: MissingScenario,
    r: usize,
    config: &PipelineConfig,
) -> Result<Vec<f64>> {
    check_run_args(design, scenario, 0, r, config)?;
    let factor = toeplitz_factor(design.d, design.rho)?;
    let env = ReplicateEnv {
        design,
        factor: &factor,
        scenario,
        target_j: 0,
        alpha0: 0.0,
        omega: 0.05,
        lambda_s: 0.0,
        config,
    };
    let bstar = design.beta_star();
    let outcomes: Vec<Result<f64>> = (0..r)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(env.design.seed, TAG_REPLICATE, rep as u64);
            let data = draw_replicate_data(&env, rep_seed)?;
            let fit = fit_replicate(&env, &data, rep_seed)?;
            let diff = fit.beta.values() - &bstar;
            Ok(diff.dot(&diff).sqrt())
        })
        .collect::<Vec<_>>();
    let mut errors = Vec::with_capacity(r);
    let mut failures = 0usize;
    for o in outcomes {
        match o {
            Ok(e) => errors.push(e),
            Err(_) => failures += 1,
        }
    }
    if (failures as f64) >= 0.02 * r as f64 && failures > 0 {
        return Err(Error::Numerical(format!(
            "{failures} of {r} replicates failed (cap is 2%)"
        )));
    }
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub_record(rep: usize, reject: bool) -> ReplicateRecord {
        ReplicateRecord {
            replicate: rep,
            lambda_used: 0.1,
            active_set_size: 2,
            observed: 10,
            alpha_hat_p: 0.0,
            scaled_lambda_n: if reject { 9.0 } else { 0.4 },
            dlrt_pvalue: if reject { 0.002 } else { 0.5 },
            wald_pvalue: if reject { 0.002 } else { 0.5 },
            reject_dlrt: reject,
            reject_wald: reject,
        }
    }

    #[test]
    fn single_forced_rejection_gives_rate_one() {
        let res = aggregate(vec![Ok(stub_record(0, true))], 1, TestMethod::Dlrt, false)
            .unwrap();
        assert_eq!(res.rejection_rate, 1.0);
        assert_eq!(res.replicates, 1);
        assert_eq!(res.failures, 0);
        assert_eq!(res.monte_carlo_se, 0.0);
    }

    #[test]
    fn failures_below_the_cap_are_excluded() {
        let mut outcomes: Vec<Result<ReplicateRecord>> = (0..197)
            .map(|i| Ok(stub_record(i, i % 2 == 0)))
            .collect();
        for _ in 0..3 {
            outcomes.push(Err(Error::Degenerate("stub".into())));
        }
        let res = aggregate(outcomes, 200, TestMethod::Dlrt, false).unwrap();
        assert_eq!(res.replicates, 197);
        assert_eq!(res.failures, 3);
        assert!((res.rejection_rate - 99.0 / 197.0).abs() < 1e-15);
    }

    #[test]
    fn failure_cap_aborts_the_run() {
        let outcomes: Vec<Result<ReplicateRecord>> = vec![
            Ok(stub_record(0, false)),
            Ok(stub_record(1, false)),
            Ok(stub_record(2, true)),
            Err(Error::Degenerate("stub".into())),
        ];
        let err = aggregate(outcomes, 4, TestMethod::Dlrt, false).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn wald_method_counts_the_wald_flags() {
        let outcomes: Vec<Result<ReplicateRecord>> = vec![
            Ok(ReplicateRecord {
                reject_wald: true,
                reject_dlrt: false,
                ..stub_record(0, false)
            }),
            Ok(stub_record(1, false)),
        ];
        let res = aggregate(outcomes, 2, TestMethod::Wald, true).unwrap();
        assert_eq!(res.rejection_rate, 0.5);
        assert_eq!(res.per_replicate.unwrap().len(), 2);
    }

    #[test]
    fn derived_seeds_separate_streams() {
        let a = derive_seed(7, TAG_REPLICATE, 0);
        let b = derive_seed(7, TAG_REPLICATE, 1);
        let c = derive_seed(8, TAG_REPLICATE, 0);
        let d = derive_seed(7, TAG_GENERATE, 0);
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, derive_seed(7, TAG_REPLICATE, 0));
    }
}
