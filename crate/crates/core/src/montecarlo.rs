//! Monte Carlo harnesses: MSE sweeps over covariance models, SINR sweeps
//! over array scenarios, and statistical verification of the Gaussian
//! moment identities the estimators rest on.
//!
//! Determinism contract: every trial draws from a ChaCha12 stream keyed by
//! `(seed, sweep index, trial index)` and reductions run in trial order, so
//! identical configs give bit-identical results under any worker count.

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::beamform::{capon_weights, linear_to_db, sample_snapshots, sinr_against, true_cov, UlaScenario};
use crate::complexcov::{estimate_complex_with_dim, CoeffDim};
use crate::error::{Error, Result};
use crate::estimators::{
    convex_combination, lw_rho, oas_rho, oracle_rho, rblw_rho, sample_covariance, statistics,
    Method,
};
use crate::linalg::{frobenius_sq, trace};
use crate::models::{CovModel, GaussianSampler};
use crate::rng::{fill_standard_normal, stream_rng};

/// Statistical acceptance threshold for the moment-verification ops, in
/// standard errors. Chosen to keep the false-failure probability of a full
/// suite run below about one percent.
pub const VERIFY_Z_TOL: f64 = 4.0;

/// Fraction of trials a SINR cell may lose to singular covariances before
/// the run is considered failed.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.001;

/// What a sweep runs against: a covariance model (MSE experiments) or an
/// array scenario (SINR experiments).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExperimentModel {
    Covariance(CovModel),
    Array(UlaScenario),
}

/// Declarative description of one Monte Carlo sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ExperimentModel,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Optional fixed shrinkage coefficients replacing the data-driven value
    /// per method (MSE runs only; used for coefficient sensitivity sweeps).
    pub rho_overrides: Vec<(Method, f64)>,
    /// Dimension parameter the coefficient rules see in the complex pipeline.
    pub coeff_dim: CoeffDim,
}

impl ExperimentConfig {
    pub fn new(model: ExperimentModel, n_grid: Vec<usize>, trials: usize, seed: u64, methods: Vec<Method>) -> Self {
        Self { model, n_grid, trials, seed, methods, rho_overrides: Vec::new(), coeff_dim: CoeffDim::Stacked }
    }

    fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParameter("n grid must be non-empty".into()));
        }
        if self.n_grid.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter("every n must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trial count must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("method list must be non-empty".into()));
        }
        for (m, r) in &self.rho_overrides {
            if !(0.0..=1.0).contains(r) {
                return Err(Error::InvalidParameter(format!(
                    "rho override for {m} must lie in [0, 1], got {r}"
                )));
            }
        }
        Ok(())
    }

    fn rho_override(&self, method: Method) -> Option<f64> {
        self.rho_overrides.iter().find(|(m, _)| *m == method).map(|(_, r)| *r)
    }
}

/// Which metric a result's `mean` column carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MetricKind {
    #[serde(rename = "mse")]
    Mse,
    #[serde(rename = "sinr_db")]
    SinrDb,
}

/// Per-(n, method) summary: metric mean, its 95% confidence half-width
/// (`1.96 * sample std / sqrt(trials)`), the mean realized shrinkage
/// coefficient and the number of trials that contributed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub n: usize,
    pub method: Method,
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub mean_rho: f64,
    pub trials_used: usize,
}

/// All cells of one sweep, in (n, method) order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub metric: MetricKind,
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    /// The cell for `(n, method)`, if present.
    pub fn cell(&self, n: usize, method: Method) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.n == n && c.method == method)
    }
}

/// Squared Frobenius distance between an estimate and the truth.
pub fn mse_frobenius(estimate: &Array2<f64>, truth: &Array2<f64>) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::ShapeMismatch(format!(
            "estimate is {:?}, truth is {:?}",
            estimate.dim(),
            truth.dim()
        )));
    }
    Ok(estimate.iter().zip(truth.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

fn trial_error(n: usize, trial: usize, method: Method, source: Error) -> Error {
    Error::Trial { n, trial, method: method.name().to_string(), source: Box::new(source) }
}

/// Sweeps `n_grid`, drawing fresh samples per (n, trial), estimating with
/// every requested method on the same samples, and averaging the squared
/// Frobenius error and realized coefficient per cell. The oracle method's
/// coefficient comes from the model's true covariance.
pub fn run_mse_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let model = match &cfg.model {
        ExperimentModel::Covariance(m) => m,
        ExperimentModel::Array(_) => {
            return Err(Error::InvalidParameter(
                "MSE experiments need a covariance model, got an array scenario".into(),
            ))
        }
    };
    let sigma = model.build();
    let sampler = GaussianSampler::new(sigma.clone(), cfg.seed)?;

    let mut cells = Vec::with_capacity(cfg.n_grid.len() * cfg.methods.len());
    for (n_idx, &n) in cfg.n_grid.iter().enumerate() {
        let oracle = if cfg.methods.contains(&Method::Oracle) {
            Some(oracle_rho(&sigma, n)?)
        } else {
            None
        };

        // (mse, rho) per method per trial, in trial order.
        let per_trial: Result<Vec<Vec<(f64, f64)>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| mse_trial(cfg, &sampler, &sigma, n, n_idx, trial, oracle))
            .collect();
        let per_trial = per_trial?;

        for (m_idx, &method) in cfg.methods.iter().enumerate() {
            let mses: Vec<f64> = per_trial.iter().map(|t| t[m_idx].0).collect();
            let rhos: Vec<f64> = per_trial.iter().map(|t| t[m_idx].1).collect();
            let (mean, se) = mean_and_se(&mses);
            let mean_rho = rhos.iter().sum::<f64>() / rhos.len() as f64;
            cells.push(CellResult {
                n,
                method,
                mean,
                ci95_halfwidth: 1.96 * se,
                mean_rho,
                trials_used: cfg.trials,
            });
        }
    }
    Ok(ExperimentResult { metric: MetricKind::Mse, cells })
}

fn mse_trial(
    cfg: &ExperimentConfig,
    sampler: &GaussianSampler,
    sigma: &Array2<f64>,
    n: usize,
    n_idx: usize,
    trial: usize,
    oracle: Option<f64>,
) -> Result<Vec<(f64, f64)>> {
    let x = sampler
        .sample_stream(n, [n_idx as u64, trial as u64])
        .map_err(|e| trial_error(n, trial, cfg.methods[0], e))?;
    let s = sample_covariance(&x);
    let stats = statistics(&s).map_err(|e| trial_error(n, trial, cfg.methods[0], e))?;

    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let rho = if let Some(r) = cfg.rho_override(method) {
            r
        } else {
            match method {
                Method::SampleOnly => 0.0,
                Method::Oracle => oracle.expect("precomputed when the oracle is requested"),
                Method::Lw => {
                    lw_rho(&x, &s).map_err(|e| trial_error(n, trial, method, e))?.clamped
                }
                Method::Rblw => rblw_rho(&stats).clamped,
                Method::Oas => oas_rho(&stats).clamped,
            }
        };
        let estimate = convex_combination(&s, rho);
        let mse = mse_frobenius(&estimate, sigma).map_err(|e| trial_error(n, trial, method, e))?;
        out.push((mse, rho));
    }
    Ok(out)
}

/// Sweeps snapshot counts for an array scenario: per trial, estimates the
/// complex covariance with each method, forms Capon weights toward the
/// signal and scores the output SINR against the true covariance. Averages
/// in linear units, reports in dB (half-widths mapped by the delta method).
/// Trials whose estimated covariance is singular are excluded and counted;
/// a cell losing more than 0.1% of its trials fails the run.
pub fn run_sinr_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let scenario = match &cfg.model {
        ExperimentModel::Array(sc) => sc,
        ExperimentModel::Covariance(_) => {
            return Err(Error::InvalidParameter(
                "SINR experiments need an array scenario, got a covariance model".into(),
            ))
        }
    };
    if cfg.methods.contains(&Method::Oracle) {
        return Err(Error::InvalidParameter(
            "the oracle method is not defined for the complex pipeline".into(),
        ));
    }
    let sigma_true = true_cov(scenario);
    let steering = scenario.signal_steering();

    let mut cells = Vec::with_capacity(cfg.n_grid.len() * cfg.methods.len());
    for (n_idx, &n) in cfg.n_grid.iter().enumerate() {
        // Some((sinr, rho)) per method, None marks an excluded trial.
        let per_trial: Result<Vec<Vec<Option<(f64, f64)>>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream_rng(cfg.seed, [n_idx as u64, trial as u64]);
                let snapshots = sample_snapshots(scenario, n, &mut rng);
                let mut row = Vec::with_capacity(cfg.methods.len());
                for &method in &cfg.methods {
                    let est = estimate_complex_with_dim(&snapshots, method, cfg.coeff_dim)
                        .map_err(|e| trial_error(n, trial, method, e))?;
                    match capon_weights(&est.sigma_hat, &steering) {
                        Ok(w) => {
                            row.push(Some((sinr_against(&w, scenario, &sigma_true), est.rho)))
                        }
                        Err(Error::SingularMatrix(_)) => row.push(None),
                        Err(e) => return Err(trial_error(n, trial, method, e)),
                    }
                }
                Ok(row)
            })
            .collect();
        let per_trial = per_trial?;

        for (m_idx, &method) in cfg.methods.iter().enumerate() {
            let mut sinrs = Vec::with_capacity(cfg.trials);
            let mut rhos = Vec::with_capacity(cfg.trials);
            for t in &per_trial {
                if let Some((s, r)) = t[m_idx] {
                    sinrs.push(s);
                    rhos.push(r);
                }
            }
            let excluded = cfg.trials - sinrs.len();
            if (excluded as f64) > MAX_EXCLUDED_FRACTION * cfg.trials as f64 {
                return Err(Error::SingularMatrix(format!(
                    "method {method} at n={n}: {excluded} of {} trials excluded as singular",
                    cfg.trials
                )));
            }
            let (mean_lin, se_lin) = mean_and_se(&sinrs);
            let mean_rho = rhos.iter().sum::<f64>() / rhos.len().max(1) as f64;
            cells.push(CellResult {
                n,
                method,
                mean: linear_to_db(mean_lin),
                ci95_halfwidth: 1.96 * se_lin * 10.0 / (std::f64::consts::LN_10 * mean_lin),
                mean_rho,
                trials_used: sinrs.len(),
            });
        }
    }
    Ok(ExperimentResult { metric: MetricKind::SinrDb, cells })
}

/// One Monte Carlo moment check: observed mean vs its target, with the
/// standard error and z-score that decided `pass`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// `noise_floor` is the absolute difference below which a deviation counts
/// as accumulated rounding rather than a statistical signal; identities that
/// hold exactly per trial (zero or rounding-level standard error) would
/// otherwise divide noise by noise.
fn moment_check(name: &str, values: &[f64], expected: f64, noise_floor: f64) -> MomentCheck {
    let (observed, se) = mean_and_se(values);
    let diff = observed - expected;
    let z_score = if diff.abs() <= noise_floor {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY
    };
    MomentCheck {
        name: name.to_string(),
        observed,
        expected,
        std_error: se,
        z_score,
        pass: z_score.abs() <= VERIFY_Z_TOL,
    }
}

/// Outcome of a verification op: one row per identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<MomentCheck>,
    pub trials: usize,
    pub pass: bool,
}

impl VerificationReport {
    fn from_checks(checks: Vec<MomentCheck>, trials: usize) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { checks, trials, pass }
    }
}

fn require_trials(trials: usize) -> Result<()> {
    if trials < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "verification needs at least 10000 trials for meaningful standard errors, got {trials}"
        )));
    }
    Ok(())
}

/// Monte Carlo check of the Gaussian trace identities of the sample
/// covariance:
///
/// * `E[Tr(S)]     = Tr(Sigma)`
/// * `E[Tr(S^2)]   = (n+1)/n Tr(Sigma^2) + Tr^2(Sigma)/n`
/// * `E[Tr^2(S)]   = Tr^2(Sigma) + 2 Tr(Sigma^2)/n`
///
/// Each estimate must land within [`VERIFY_Z_TOL`] standard errors.
pub fn verify_wishart_moments(
    sigma: &Array2<f64>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    require_trials(trials)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count n must be >= 1".into()));
    }
    let sampler = GaussianSampler::new(sigma.clone(), seed)?;
    let t1 = trace(sigma);
    let t2 = frobenius_sq(sigma);
    let nf = n as f64;

    let rows: Result<Vec<[f64; 3]>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let x = sampler.sample_stream(n, [0, trial as u64])?;
            let s = sample_covariance(&x);
            let tr = trace(s.matrix());
            Ok([tr, frobenius_sq(s.matrix()), tr * tr])
        })
        .collect();
    let rows = rows?;

    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let floor = |target: f64| 1e-12 * target.abs().max(1.0);
    let t2_target = (nf + 1.0) / nf * t2 + t1 * t1 / nf;
    let tsq_target = t1 * t1 + 2.0 / nf * t2;
    let checks = vec![
        moment_check("E[tr(S)]", &col(0), t1, floor(t1)),
        moment_check("E[tr(S^2)]", &col(1), t2_target, floor(t2_target)),
        moment_check("E[tr(S)^2]", &col(2), tsq_target, floor(tsq_target)),
    ];
    Ok(VerificationReport::from_checks(checks, trials))
}

/// Builds the right singular factor `Q` (r x n, `Q Q^T = I`, r = min(p, n))
/// of a p x n standard Gaussian matrix and returns its first column.
fn right_factor_column(p: usize, n: usize, rng: &mut rand_chacha::ChaCha12Rng) -> Result<Vec<f64>> {
    let mut g = vec![0.0; p * n];
    fill_standard_normal(rng, &mut g);
    let g = Array2::from_shape_vec((p, n), g).expect("length matches shape");

    if n <= p {
        // G^T G = Q^T Lambda^2 Q, so Q is the transposed eigenvector matrix;
        // its first column is the first component of every eigenvector.
        let m = g.t().dot(&g);
        let (_, vecs) = crate::linalg::symmetric_eigen(&m);
        Ok((0..n).map(|j| vecs[[0, j]]).collect())
    } else {
        // G G^T = H Lambda^2 H^T gives H and Lambda; then Q = Lambda^{-1} H^T G.
        let m = g.dot(&g.t());
        let (vals, vecs) = crate::linalg::symmetric_eigen(&m);
        let mut q0 = vec![0.0; p];
        for k in 0..p {
            let lambda = vals[k];
            if !(lambda > 0.0) {
                return Err(Error::SingularMatrix(
                    "Gaussian matrix produced a zero singular value".into(),
                ));
            }
            let mut dot = 0.0;
            for i in 0..p {
                dot += vecs[[i, k]] * g[[i, 0]];
            }
            q0[k] = dot / lambda.sqrt();
        }
        Ok(q0)
    }
}

/// Monte Carlo check of the fourth moments of an orthonormal-row factor
/// column: `E[q_j^4] = 3 / (n(n+2))` and `E[q_j^2 q_k^2] = 1 / (n(n+2))`,
/// valid in both the `n <= p` and `n > p` regimes.
pub fn verify_haar_moments(p: usize, n: usize, trials: usize, seed: u64) -> Result<VerificationReport> {
    require_trials(trials)?;
    if p == 0 || n == 0 {
        return Err(Error::InvalidParameter("p and n must be >= 1".into()));
    }
    let r = p.min(n);
    let nf = n as f64;

    let rows: Result<Vec<[f64; 2]>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, [0, trial as u64]);
            let q = right_factor_column(p, n, &mut rng)?;
            let y4 = q.iter().map(|v| v.powi(4)).sum::<f64>() / r as f64;
            let y22 = if r >= 2 {
                let mut acc = 0.0;
                for j in 0..r {
                    for k in (j + 1)..r {
                        acc += q[j] * q[j] * q[k] * q[k];
                    }
                }
                acc / (r * (r - 1) / 2) as f64
            } else {
                0.0
            };
            Ok([y4, y22])
        })
        .collect();
    let rows = rows?;

    let fourth = 3.0 / (nf * (nf + 2.0));
    let cross = 1.0 / (nf * (nf + 2.0));
    let mut checks = vec![moment_check(
        "E[q_j^4]",
        &rows.iter().map(|r| r[0]).collect::<Vec<f64>>(),
        fourth,
        1e-12 * fourth,
    )];
    if r >= 2 {
        checks.push(moment_check(
            "E[q_j^2 q_k^2]",
            &rows.iter().map(|r| r[1]).collect::<Vec<f64>>(),
            cross,
            1e-12 * cross,
        ));
    }
    Ok(VerificationReport::from_checks(checks, trials))
}

/// Monte Carlo check of the total-expectation consequence of the
/// conditional fourth-norm identity:
/// `E[||x_i||^4] = n/(n+2) * E[2 Tr(S^2) + Tr^2(S)]`,
/// both sides estimated from the same draws and compared through their
/// per-trial difference. At `n = 1` the identity holds per sample.
pub fn verify_norm_moment(
    sigma: &Array2<f64>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    require_trials(trials)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample count n must be >= 1".into()));
    }
    let sampler = GaussianSampler::new(sigma.clone(), seed)?;
    let nf = n as f64;

    let rows: Result<Vec<[f64; 2]>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let x = sampler.sample_stream(n, [0, trial as u64])?;
            let s = sample_covariance(&x);
            let lhs = x
                .data()
                .columns()
                .into_iter()
                .map(|c| {
                    let norm_sq: f64 = c.iter().map(|v| v * v).sum();
                    norm_sq * norm_sq
                })
                .sum::<f64>()
                / nf;
            let tr = trace(s.matrix());
            let rhs = nf / (nf + 2.0) * (2.0 * frobenius_sq(s.matrix()) + tr * tr);
            Ok([lhs - rhs, lhs])
        })
        .collect();
    let rows = rows?;
    let diffs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    // The two sides share magnitude E||x||^4; differences below rounding
    // level of that scale are not statistical evidence.
    let scale = rows.iter().map(|r| r[1].abs()).sum::<f64>() / trials as f64;
    let checks = vec![moment_check(
        "E[||x||^4] - n/(n+2) E[2tr(S^2)+tr(S)^2]",
        &diffs,
        0.0,
        1e-12 * scale.max(1.0),
    )];
    Ok(VerificationReport::from_checks(checks, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ar1_cov;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::array;

    fn small_mse_config() -> ExperimentConfig {
        ExperimentConfig::new(
            ExperimentModel::Covariance(CovModel::ar1(6, 0.5).unwrap()),
            vec![4, 8],
            40,
            7,
            vec![Method::Oracle, Method::Lw, Method::Rblw, Method::Oas],
        )
    }

    #[test]
    fn mse_frobenius_basics() {
        let a = Array2::<f64>::eye(3);
        assert_eq!(mse_frobenius(&a, &a).unwrap(), 0.0);
        let zero = Array2::<f64>::zeros((3, 3));
        assert_eq!(mse_frobenius(&zero, &a).unwrap(), 3.0);
        assert!(mse_frobenius(&zero, &Array2::zeros((2, 2))).is_err());
    }

    #[test]
    fn mse_frobenius_matches_elementwise_loop() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[0.5, 1.0], [-1.0, 2.0]];
        let mut expect = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let d: f64 = a[[i, j]] - b[[i, j]];
                expect += d * d;
            }
        }
        assert_relative_eq!(mse_frobenius(&a, &b).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn mse_experiment_is_deterministic() {
        let cfg = small_mse_config();
        let a = run_mse_experiment(&cfg).unwrap();
        let b = run_mse_experiment(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mse_experiment_shape_and_sanity() {
        let cfg = small_mse_config();
        let res = run_mse_experiment(&cfg).unwrap();
        assert_eq!(res.metric, MetricKind::Mse);
        assert_eq!(res.cells.len(), 8);
        for c in &res.cells {
            assert!(c.mean >= 0.0);
            assert!(c.ci95_halfwidth > 0.0);
            assert!((0.0..=1.0).contains(&c.mean_rho));
            assert_eq!(c.trials_used, 40);
        }
    }

    #[test]
    fn spherical_truth_gives_unit_oracle_coefficient_every_trial() {
        let cfg = ExperimentConfig::new(
            ExperimentModel::Covariance(CovModel::ar1(5, 0.0).unwrap()),
            vec![3],
            25,
            11,
            vec![Method::Oracle],
        );
        let res = run_mse_experiment(&cfg).unwrap();
        assert_abs_diff_eq!(res.cells[0].mean_rho, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn rho_override_pins_the_coefficient() {
        let mut cfg = small_mse_config();
        cfg.methods = vec![Method::Oas];
        cfg.rho_overrides = vec![(Method::Oas, 0.25)];
        let res = run_mse_experiment(&cfg).unwrap();
        for c in &res.cells {
            assert_eq!(c.mean_rho, 0.25);
        }
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = small_mse_config();
        cfg.n_grid.clear();
        assert!(run_mse_experiment(&cfg).is_err());

        let mut cfg = small_mse_config();
        cfg.trials = 0;
        assert!(run_mse_experiment(&cfg).is_err());

        let mut cfg = small_mse_config();
        cfg.rho_overrides = vec![(Method::Lw, 1.5)];
        assert!(run_mse_experiment(&cfg).is_err());

        let cfg = ExperimentConfig::new(
            ExperimentModel::Array(UlaScenario::benchmark()),
            vec![4],
            5,
            0,
            vec![Method::Lw],
        );
        assert!(run_mse_experiment(&cfg).is_err());
    }

    #[test]
    fn sinr_experiment_runs_and_is_deterministic() {
        let cfg = ExperimentConfig::new(
            ExperimentModel::Array(UlaScenario::benchmark()),
            vec![12, 20],
            30,
            5,
            vec![Method::Lw, Method::Rblw, Method::Oas],
        );
        let a = run_sinr_experiment(&cfg).unwrap();
        let b = run_sinr_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.metric, MetricKind::SinrDb);
        assert_eq!(a.cells.len(), 6);
        let bound = linear_to_db(10.0 * 10.0); // power * p array-gain ceiling
        for c in &a.cells {
            assert_eq!(c.trials_used, 30);
            assert!(c.mean <= bound, "SINR {} exceeds the array-gain bound {bound}", c.mean);
            assert!(c.ci95_halfwidth > 0.0);
        }
    }

    #[test]
    fn sinr_rejects_oracle_method() {
        let cfg = ExperimentConfig::new(
            ExperimentModel::Array(UlaScenario::benchmark()),
            vec![10],
            5,
            5,
            vec![Method::Oracle],
        );
        assert!(run_sinr_experiment(&cfg).is_err());
    }

    #[test]
    fn wishart_targets_match_hand_substitution() {
        // diag(2, 1), n = 3: targets 3, (4/3)*5 + 9/3, 9 + 10/3.
        let sigma = array![[2.0, 0.0], [0.0, 1.0]];
        let report = verify_wishart_moments(&sigma, 3, 10_000, 42).unwrap();
        assert_abs_diff_eq!(report.checks[0].expected, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.checks[1].expected, 4.0 / 3.0 * 5.0 + 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.checks[2].expected, 9.0 + 10.0 / 3.0, epsilon = 1e-12);
        assert!(report.pass, "{:?}", report.checks);
    }

    #[test]
    fn wishart_targets_scale_homogeneously() {
        let sigma = ar1_cov(4, 0.3).unwrap();
        let a = verify_wishart_moments(&sigma, 5, 10_000, 1).unwrap();
        let b = verify_wishart_moments(&(sigma * 2.0), 5, 10_000, 1).unwrap();
        assert_relative_eq!(b.checks[0].expected, 2.0 * a.checks[0].expected, epsilon = 1e-12);
        assert_relative_eq!(b.checks[1].expected, 4.0 * a.checks[1].expected, epsilon = 1e-12);
        assert_relative_eq!(b.checks[2].expected, 4.0 * a.checks[2].expected, epsilon = 1e-12);
    }

    #[test]
    fn wishart_requires_enough_trials() {
        let sigma = Array2::<f64>::eye(2);
        assert!(verify_wishart_moments(&sigma, 3, 100, 0).is_err());
    }

    #[test]
    fn haar_single_sample_is_exact() {
        // n = 1: the factor column is a unit scalar, q^4 = 1 = 3/(1*3).
        let report = verify_haar_moments(4, 1, 10_000, 3).unwrap();
        assert_eq!(report.checks.len(), 1);
        assert_abs_diff_eq!(report.checks[0].observed, 1.0, epsilon = 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn haar_both_regimes_pass_at_modest_trials() {
        for (p, n) in [(5usize, 3usize), (3, 5)] {
            let report = verify_haar_moments(p, n, 20_000, 9).unwrap();
            assert!(report.pass, "(p,n)=({p},{n}): {:?}", report.checks);
            let nf = n as f64;
            assert_abs_diff_eq!(report.checks[0].expected, 3.0 / (nf * (nf + 2.0)), epsilon = 0.0);
            assert_abs_diff_eq!(report.checks[1].expected, 1.0 / (nf * (nf + 2.0)), epsilon = 0.0);
        }
    }

    #[test]
    fn norm_moment_single_sample_is_exact_per_trial() {
        let sigma = array![[4.0, 0.0], [0.0, 1.0]];
        let report = verify_norm_moment(&sigma, 1, 10_000, 17).unwrap();
        // n = 1 makes the identity exact sample by sample.
        assert!(report.checks[0].observed.abs() < 1e-10);
        assert!(report.pass);
    }

    #[test]
    fn norm_moment_passes_for_diagonal_sigma() {
        let sigma = array![[4.0, 0.0], [0.0, 1.0]];
        let report = verify_norm_moment(&sigma, 5, 20_000, 23).unwrap();
        assert!(report.pass, "{:?}", report.checks);
    }
}
