//! Shrinkage covariance estimators toward the scaled identity.
//!
//! The estimators all share one structure: a convex combination
//! `(1 - rho) * S + rho * F` of the sample covariance `S` and the target
//! `F = (Tr(S)/p) * I`, and differ only in how the coefficient `rho` is
//! chosen:
//!
//! * the clairvoyant (oracle) coefficient, computable only from the true
//!   covariance;
//! * the Ledoit-Wolf (LW) plug-in estimate of the oracle coefficient;
//! * its Rao-Blackwellization (RBLW), which conditions LW on the sample
//!   covariance under Gaussian sampling;
//! * the oracle-approximating shrinkage (OAS) coefficient, the closed-form
//!   limit of re-substituting the current estimate into the oracle formula.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, symmetrize, trace};

/// Relative threshold below which the sample covariance is treated as a
/// scaled identity: `Tr(S^2) - Tr^2(S)/p <= SPHERICITY_REL_TOL * Tr^2(S)`.
///
/// Relative to `Tr^2(S)` so the classification is scale-equivariant.
pub const SPHERICITY_REL_TOL: f64 = 1e-12;

/// A p x n set of real observation vectors; column `i` is observation `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Array2<f64>,
}

impl SampleSet {
    /// Wraps a p x n matrix whose columns are observations.
    ///
    /// Rejects empty shapes and non-finite entries.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (p, n) = data.dim();
        if p == 0 || n == 0 {
            return Err(Error::InvalidInput(format!(
                "sample set must be non-empty, got {p}x{n}"
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "sample set contains non-finite entries".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    /// Dimension of each observation.
    pub fn p(&self) -> usize {
        self.data.nrows()
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.ncols()
    }
}

/// The sample covariance `S = (1/n) sum_i x_i x_i^T` together with the
/// sample count it came from. Stored explicitly symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCov {
    s: Array2<f64>,
    n: usize,
}

impl SampleCov {
    /// Wraps an externally computed covariance; symmetrizes defensively.
    pub fn from_matrix(mut s: Array2<f64>, n: usize) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "covariance must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("sample count n must be >= 1".into()));
        }
        if !s.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("covariance contains non-finite entries".into()));
        }
        symmetrize(&mut s);
        Ok(Self { s, n })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn p(&self) -> usize {
        self.s.nrows()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Scalar summaries of a sample covariance shared by every coefficient rule.
///
/// `phi` is the normalized eigenvalue dispersion in `[0, 1)` and `u` the
/// sphericity statistic (`0` exactly when `S` is a scaled identity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShrinkageStatistics {
    pub tr_s: f64,
    pub tr_s2: f64,
    pub phi: f64,
    pub u: f64,
    pub p: usize,
    pub n: usize,
}

impl ShrinkageStatistics {
    /// `Tr(S^2) - Tr^2(S)/p`, floored at zero against rounding.
    pub fn dispersion(&self) -> f64 {
        (self.tr_s2 - self.tr_s * self.tr_s / self.p as f64).max(0.0)
    }

    /// Whether `S` is numerically a scaled identity (see [`SPHERICITY_REL_TOL`]).
    pub fn is_spherical(&self) -> bool {
        self.dispersion() <= SPHERICITY_REL_TOL * self.tr_s * self.tr_s
    }

    /// Reinterprets the same traces under a different dimension parameter,
    /// recomputing `phi` and `u`. Used by the complex pipeline to probe the
    /// sensitivity of the coefficient rules to the stacked dimension.
    pub fn with_dimension(&self, p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::DegenerateDimension(p));
        }
        let (phi, u) = phi_and_u(self.tr_s, self.tr_s2, p);
        Ok(Self { phi, u, p, ..*self })
    }
}

/// A full shrinkage estimate: the matrix, the coefficient that built it and
/// the rule that chose the coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CovEstimate {
    pub sigma_hat: Array2<f64>,
    pub rho: f64,
    pub method: Method,
}

/// Coefficient rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    /// No shrinkage: the sample covariance itself (`rho = 0`).
    #[serde(rename = "sample")]
    SampleOnly,
    /// Clairvoyant coefficient computed from a supplied true covariance.
    #[serde(rename = "oracle")]
    Oracle,
    /// Ledoit-Wolf plug-in coefficient, clamped to `[0, 1]`.
    #[serde(rename = "lw")]
    Lw,
    /// Rao-Blackwellized Ledoit-Wolf coefficient, clamped to `[0, 1]`.
    #[serde(rename = "rblw")]
    Rblw,
    /// Oracle-approximating shrinkage coefficient (intrinsically in `(0, 1]`).
    #[serde(rename = "oas")]
    Oas,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SampleOnly,
        Method::Oracle,
        Method::Lw,
        Method::Rblw,
        Method::Oas,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SampleOnly => "sample",
            Method::Oracle => "oracle",
            Method::Lw => "lw",
            Method::Rblw => "rblw",
            Method::Oas => "oas",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sample" | "sampleonly" | "sample-only" => Ok(Method::SampleOnly),
            "oracle" => Ok(Method::Oracle),
            "lw" => Ok(Method::Lw),
            "rblw" => Ok(Method::Rblw),
            "oas" => Ok(Method::Oas),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Constants of the parameterized coefficient `min(alpha + beta/u, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoParams {
    pub alpha: f64,
    pub beta: f64,
}

impl RhoParams {
    /// Constants reproducing the RBLW coefficient exactly. Requires `p >= 2`,
    /// `n >= 1`.
    pub fn rblw(n: usize, p: usize) -> Self {
        assert!(p >= 2, "RhoParams::rblw requires p >= 2");
        assert!(n >= 1, "RhoParams::rblw requires n >= 1");
        let (nf, pf) = (n as f64, p as f64);
        RhoParams {
            alpha: (nf - 2.0) / (nf * (nf + 2.0)),
            beta: ((pf + 1.0) * nf - 2.0) / (nf * (nf + 2.0) * (pf - 1.0)),
        }
    }

    /// Constants reproducing the OAS coefficient exactly. Requires `p >= 2`,
    /// `n >= 1`.
    ///
    /// Derived so that `alpha + beta/u` is algebraically identical to the
    /// closed-form coefficient
    /// `[(1 - 2/p) Tr(S^2) + Tr^2(S)] / [(n + 1 - 2/p)(Tr(S^2) - Tr^2(S)/p)]`.
    pub fn oas(n: usize, p: usize) -> Self {
        assert!(p >= 2, "RhoParams::oas requires p >= 2");
        assert!(n >= 1, "RhoParams::oas requires n >= 1");
        let (nf, pf) = (n as f64, p as f64);
        let denom = nf + 1.0 - 2.0 / pf;
        RhoParams {
            alpha: (1.0 - 2.0 / pf) / denom,
            beta: (pf + 1.0 - 2.0 / pf) / (denom * (pf - 1.0)),
        }
    }
}

/// A shrinkage coefficient before and after clamping to `[0, 1]`.
///
/// `degenerate` marks the spherical-sample convention: when `S` equals the
/// target the coefficient is immaterial, and `1` is returned to match the
/// natural OAS limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    /// Value straight out of the coefficient formula (`+inf` when degenerate).
    pub raw: f64,
    /// Value clamped to `[0, 1]`.
    pub clamped: f64,
    pub degenerate: bool,
}

impl RhoEstimate {
    fn degenerate() -> Self {
        RhoEstimate { raw: f64::INFINITY, clamped: 1.0, degenerate: true }
    }

    fn from_raw(raw: f64) -> Self {
        RhoEstimate { raw, clamped: raw.clamp(0.0, 1.0), degenerate: false }
    }
}

/// Iterates of the oracle re-substitution recursion; `rhos[0]` is the
/// starting value. The matrix iterate for step `j` is materialized on demand
/// by [`OasIteration::sigma_at`].
#[derive(Debug, Clone, PartialEq)]
pub struct OasIteration {
    pub rhos: Vec<f64>,
    pub converged: bool,
}

impl OasIteration {
    /// Final coefficient.
    pub fn limit(&self) -> f64 {
        *self.rhos.last().expect("iteration holds at least rho0")
    }

    /// Number of update steps taken.
    pub fn steps(&self) -> usize {
        self.rhos.len() - 1
    }

    /// Materializes the matrix iterate for step `j`.
    pub fn sigma_at(&self, s: &SampleCov, j: usize) -> Array2<f64> {
        convex_combination(s, self.rhos[j])
    }
}

/// `S = (1/n) sum_i x_i x_i^T`, explicitly symmetrized to kill accumulation
/// asymmetry from the matrix product.
pub fn sample_covariance(x: &SampleSet) -> SampleCov {
    let n = x.n();
    let mut s = x.data().dot(&x.data().t());
    s.mapv_inplace(|v| v / n as f64);
    symmetrize(&mut s);
    SampleCov { s, n }
}

/// The most parsimonious covariance estimate `(Tr(S)/p) * I`.
pub fn shrinkage_target(s: &SampleCov) -> Array2<f64> {
    let p = s.p();
    Array2::eye(p) * (trace(s.matrix()) / p as f64)
}

fn phi_and_u(tr_s: f64, tr_s2: f64, p: usize) -> (f64, f64) {
    let pf = p as f64;
    let tr_sq = tr_s * tr_s;
    let phi = ((tr_s2 - tr_sq / pf) / (tr_s2 + tr_sq)).max(0.0);
    let u = ((pf * tr_s2 / tr_sq - 1.0) / (pf - 1.0)).max(0.0);
    (phi, u)
}

/// Computes the scalar summaries driving every coefficient rule.
///
/// Errors on an all-zero sample (`Tr(S) = 0`) and on `p = 1`, where
/// shrinkage toward `(Tr(S)/p) I` is the identity map.
pub fn statistics(s: &SampleCov) -> Result<ShrinkageStatistics> {
    let p = s.p();
    if p < 2 {
        return Err(Error::DegenerateDimension(p));
    }
    let tr_s = trace(s.matrix());
    if tr_s <= 0.0 {
        return Err(Error::DegenerateSample(
            "sample covariance has non-positive trace".into(),
        ));
    }
    let tr_s2 = frobenius_sq(s.matrix());
    let (phi, u) = phi_and_u(tr_s, tr_s2, p);
    Ok(ShrinkageStatistics { tr_s, tr_s2, phi, u, p, n: s.n() })
}

/// The clairvoyant coefficient minimizing the expected squared Frobenius
/// error for Gaussian samples with true covariance `sigma`:
///
/// `[(1 - 2/p) Tr(Sigma^2) + Tr^2(Sigma)]
///  / [(n + 1 - 2/p) Tr(Sigma^2) + (1 - n/p) Tr^2(Sigma)]`.
///
/// Always in `(0, 1]` for symmetric PSD `sigma` with positive trace.
pub fn oracle_rho(sigma: &Array2<f64>, n: usize) -> Result<f64> {
    let p = sigma.nrows();
    if p != sigma.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "true covariance must be square, got {}x{}",
            p,
            sigma.ncols()
        )));
    }
    if p < 2 {
        return Err(Error::DegenerateDimension(p));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("sample count n must be >= 1".into()));
    }
    if !sigma.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("true covariance contains non-finite entries".into()));
    }
    let t1 = trace(sigma);
    if t1 <= 0.0 {
        return Err(Error::DegenerateSample("true covariance has non-positive trace".into()));
    }
    let t2 = frobenius_sq(sigma);
    let (nf, pf) = (n as f64, p as f64);
    let num = (1.0 - 2.0 / pf) * t2 + t1 * t1;
    let den = (nf + 1.0 - 2.0 / pf) * t2 + (1.0 - nf / pf) * t1 * t1;
    // den = num + n * (Tr(Sigma^2) - Tr^2(Sigma)/p) >= num > 0 for PSD input.
    assert!(den > 0.0, "oracle denominator must be positive for PSD input");
    Ok(num / den)
}

/// The Ledoit-Wolf plug-in coefficient
/// `sum_i ||x_i x_i^T - S||_F^2 / (n^2 [Tr(S^2) - Tr^2(S)/p])`.
///
/// Requires `s` to be the sample covariance of `x`. A numerically spherical
/// `S` takes the degeneracy convention (clamped value 1, flag set).
pub fn lw_rho(x: &SampleSet, s: &SampleCov) -> Result<RhoEstimate> {
    let p = x.p();
    let n = x.n();
    if p < 2 {
        return Err(Error::DegenerateDimension(p));
    }
    if s.p() != p || s.n() != n {
        return Err(Error::ShapeMismatch(format!(
            "sample covariance ({}x{}, n={}) inconsistent with data ({}x{}, n={})",
            s.p(),
            s.p(),
            s.n(),
            p,
            p,
            n
        )));
    }
    let tr_s = trace(s.matrix());
    if tr_s <= 0.0 {
        return Err(Error::DegenerateSample(
            "sample covariance has non-positive trace".into(),
        ));
    }
    let tr_s2 = frobenius_sq(s.matrix());
    let disp = tr_s2 - tr_s * tr_s / p as f64;
    if disp <= SPHERICITY_REL_TOL * tr_s * tr_s {
        return Ok(RhoEstimate::degenerate());
    }

    // Per-sample expansion of ||x x^T - S||_F^2 = ||x||^4 - 2 x^T S x + Tr(S^2);
    // the sum over samples is a sum of squares, so floor rounding at zero.
    let nf = n as f64;
    let mut acc = 0.0;
    for col in x.data().columns() {
        let norm_sq: f64 = col.iter().map(|v| v * v).sum();
        let sx = s.matrix().dot(&col);
        let quad: f64 = col.iter().zip(sx.iter()).map(|(a, b)| a * b).sum();
        acc += norm_sq * norm_sq - 2.0 * quad;
    }
    let numerator = (acc + nf * tr_s2).max(0.0);
    Ok(RhoEstimate::from_raw(numerator / (nf * nf * disp)))
}

/// The Rao-Blackwellized Ledoit-Wolf coefficient
/// `[(n-2)/n Tr(S^2) + Tr^2(S)] / [(n+2)(Tr(S^2) - Tr^2(S)/p)]`.
pub fn rblw_rho(stats: &ShrinkageStatistics) -> RhoEstimate {
    if stats.is_spherical() {
        return RhoEstimate::degenerate();
    }
    let nf = stats.n as f64;
    let num = (nf - 2.0) / nf * stats.tr_s2 + stats.tr_s * stats.tr_s;
    RhoEstimate::from_raw(num / ((nf + 2.0) * stats.dispersion()))
}

/// The OAS coefficient
/// `min([(1 - 2/p) Tr(S^2) + Tr^2(S)] / [(n + 1 - 2/p)(Tr(S^2) - Tr^2(S)/p)], 1)`,
/// the closed-form limit of [`oas_iterate`]. The clamped value is always in
/// `(0, 1]`; a spherical `S` yields 1 as the natural limit rather than by
/// convention.
pub fn oas_rho(stats: &ShrinkageStatistics) -> RhoEstimate {
    if stats.is_spherical() {
        return RhoEstimate::degenerate();
    }
    let (nf, pf) = (stats.n as f64, stats.p as f64);
    let num = (1.0 - 2.0 / pf) * stats.tr_s2 + stats.tr_s * stats.tr_s;
    RhoEstimate::from_raw(num / ((nf + 1.0 - 2.0 / pf) * stats.dispersion()))
}

/// Runs the oracle re-substitution recursion
///
/// `rho_{j+1} = [(1 - 2/p) Tr(Sigma_j S) + Tr^2(Sigma_j)]
///             / [(n + 1 - 2/p) Tr(Sigma_j S) + (1 - n/p) Tr^2(Sigma_j)]`
///
/// with `Sigma_{j+1} = (1 - rho_{j+1}) S + rho_{j+1} F`. Because every
/// iterate keeps `Tr(Sigma_j) = Tr(S)` and
/// `Tr(Sigma_j S) = Tr(S^2) - rho_j (Tr(S^2) - Tr^2(S)/p)`, the update is
/// evaluated as an O(1) scalar recursion producing exactly the same sequence
/// as the matrix form; matrices are materialized only on demand.
///
/// Stops when `|rho_{j+1} - rho_j| < tol`; reaching `max_iter` first is
/// reported as [`Error::NonConvergence`] (unreachable for valid inputs).
pub fn oas_iterate(
    stats: &ShrinkageStatistics,
    rho0: f64,
    max_iter: usize,
    tol: f64,
) -> Result<OasIteration> {
    if !(0.0..=1.0).contains(&rho0) {
        return Err(Error::InvalidParameter(format!(
            "rho0 must lie in [0, 1], got {rho0}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let (nf, pf) = (stats.n as f64, stats.p as f64);
    let tr_s2 = stats.tr_s2;
    let tr_sq = stats.tr_s * stats.tr_s;
    let disp = stats.dispersion();

    let mut rhos = Vec::with_capacity(16);
    rhos.push(rho0);
    let mut rho = rho0;
    let mut last_delta = f64::INFINITY;
    for _ in 0..max_iter {
        let cross = tr_s2 - rho * disp; // Tr(Sigma_j S)
        let num = (1.0 - 2.0 / pf) * cross + tr_sq;
        let den = (nf + 1.0 - 2.0 / pf) * cross + (1.0 - nf / pf) * tr_sq;
        let next = num / den;
        last_delta = (next - rho).abs();
        rho = next;
        rhos.push(rho);
        if last_delta < tol {
            return Ok(OasIteration { rhos, converged: true });
        }
    }
    Err(Error::NonConvergence { iterations: max_iter, last_delta })
}

/// The parameterized coefficient `min(alpha + beta/u, 1)`; `u = 0` returns 1
/// (limit convention). Both the RBLW and OAS rules are instances of this
/// form under [`RhoParams::rblw`] and [`RhoParams::oas`].
pub fn rho_param(params: &RhoParams, u: f64) -> f64 {
    debug_assert!(u >= 0.0, "sphericity statistic must be non-negative");
    if u == 0.0 {
        return 1.0;
    }
    (params.alpha + params.beta / u).min(1.0)
}

/// Materializes `(1 - rho) * S + rho * (Tr(S)/p) * I`.
pub fn convex_combination(s: &SampleCov, rho: f64) -> Array2<f64> {
    let p = s.p();
    let target_diag = trace(s.matrix()) / p as f64;
    let mut out = s.matrix() * (1.0 - rho);
    for i in 0..p {
        out[[i, i]] += rho * target_diag;
    }
    out
}

/// Builds the full estimate for `method`. The oracle method requires the
/// true covariance in `oracle_sigma`; the data-driven methods use their
/// clamped coefficients.
pub fn estimate(
    x: &SampleSet,
    method: Method,
    oracle_sigma: Option<&Array2<f64>>,
) -> Result<CovEstimate> {
    if x.p() < 2 {
        return Err(Error::DegenerateDimension(x.p()));
    }
    let s = sample_covariance(x);
    let rho = rho_for_method(x, &s, method, oracle_sigma)?;
    Ok(CovEstimate { sigma_hat: convex_combination(&s, rho), rho, method })
}

/// Chooses the (clamped) coefficient for `method` given data and its sample
/// covariance. Shared by the real and complex estimation pipelines.
pub(crate) fn rho_for_method(
    x: &SampleSet,
    s: &SampleCov,
    method: Method,
    oracle_sigma: Option<&Array2<f64>>,
) -> Result<f64> {
    match method {
        Method::SampleOnly => Ok(0.0),
        Method::Oracle => {
            let sigma = oracle_sigma
                .ok_or(Error::MissingParameter("oracle method requires the true covariance"))?;
            if sigma.nrows() != s.p() || sigma.ncols() != s.p() {
                return Err(Error::ShapeMismatch(format!(
                    "true covariance is {}x{}, data dimension is {}",
                    sigma.nrows(),
                    sigma.ncols(),
                    s.p()
                )));
            }
            oracle_rho(sigma, s.n())
        }
        Method::Lw => Ok(lw_rho(x, s)?.clamped),
        Method::Rblw => Ok(rblw_rho(&statistics(s)?).clamped),
        Method::Oas => Ok(oas_rho(&statistics(s)?).clamped),
    }
}
