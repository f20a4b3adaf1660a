//! True-covariance families and a covariance-faithful Gaussian sampler.

use ndarray::Array2;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::SampleSet;
use crate::linalg::{asymmetry, cholesky, frobenius_sq, symmetric_eigen};
use crate::rng::{fill_standard_normal, stream_rng};

/// Eigenvalues above `-PSD_CLAMP_REL * lambda_max` are treated as rounding
/// noise and clamped to zero; anything more negative is rejected as not PSD.
const PSD_CLAMP_REL: f64 = 1e-10;

/// Covariance family selector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CovModelKind {
    /// First-order autoregressive correlations: `Sigma_ij = r^|i-j|`.
    Ar1 { r: f64 },
    /// Increments of fractional Brownian motion with Hurst exponent `hurst`:
    /// `Sigma_ij = [(d+1)^{2H} - 2 d^{2H} + (d-1)^{2H}] / 2` with `d = |i-j|`
    /// and a unit diagonal (the `d = 0` convention; matches the variance of a
    /// unit-increment step and the H = 0.5 identity limit).
    FbmIncrement { hurst: f64 },
    /// An explicitly supplied symmetric matrix.
    Explicit(Array2<f64>),
}

/// A generator of a true covariance matrix of order `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovModel {
    pub kind: CovModelKind,
    pub p: usize,
}

impl CovModel {
    pub fn ar1(p: usize, r: f64) -> Result<Self> {
        check_ar1(r)?;
        check_dim(p)?;
        Ok(Self { kind: CovModelKind::Ar1 { r }, p })
    }

    pub fn fbm_increment(p: usize, hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        check_dim(p)?;
        Ok(Self { kind: CovModelKind::FbmIncrement { hurst }, p })
    }

    pub fn explicit(sigma: Array2<f64>) -> Result<Self> {
        let p = sigma.nrows();
        check_dim(p)?;
        if sigma.ncols() != p {
            return Err(Error::ShapeMismatch(format!(
                "covariance must be square, got {}x{}",
                p,
                sigma.ncols()
            )));
        }
        if !sigma.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("covariance contains non-finite entries".into()));
        }
        let scale = frobenius_sq(&sigma).sqrt().max(f64::MIN_POSITIVE);
        if asymmetry(&sigma) > 1e-10 * scale {
            return Err(Error::InvalidInput("explicit covariance is not symmetric".into()));
        }
        Ok(Self { kind: CovModelKind::Explicit(sigma), p })
    }

    /// Materializes the covariance matrix.
    pub fn build(&self) -> Array2<f64> {
        match &self.kind {
            CovModelKind::Ar1 { r } => ar1_cov(self.p, *r).expect("validated at construction"),
            CovModelKind::FbmIncrement { hurst } => {
                fbm_cov(self.p, *hurst).expect("validated at construction")
            }
            CovModelKind::Explicit(sigma) => sigma.clone(),
        }
    }
}

fn check_dim(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidParameter("dimension p must be >= 1".into()));
    }
    Ok(())
}

fn check_ar1(r: f64) -> Result<()> {
    if !(r.is_finite() && r.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "AR(1) correlation must satisfy |r| < 1, got {r}"
        )));
    }
    Ok(())
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst.is_finite() && (0.5..=1.0).contains(&hurst)) {
        return Err(Error::InvalidParameter(format!(
            "Hurst exponent must lie in [0.5, 1], got {hurst}"
        )));
    }
    Ok(())
}

/// Toeplitz AR(1) covariance `Sigma_ij = r^|i-j|`; requires `|r| < 1`.
pub fn ar1_cov(p: usize, r: f64) -> Result<Array2<f64>> {
    check_ar1(r)?;
    check_dim(p)?;
    let lags: Vec<f64> = (0..p).map(|d| r.powi(d as i32)).collect();
    Ok(Array2::from_shape_fn((p, p), |(i, j)| lags[i.abs_diff(j)]))
}

/// Toeplitz covariance of fractional-Brownian-motion increments with unit
/// diagonal; requires `hurst` in `[0.5, 1]`.
pub fn fbm_cov(p: usize, hurst: f64) -> Result<Array2<f64>> {
    check_hurst(hurst)?;
    check_dim(p)?;
    let two_h = 2.0 * hurst;
    let lags: Vec<f64> = (0..p)
        .map(|lag| {
            if lag == 0 {
                1.0
            } else {
                let d = lag as f64;
                0.5 * ((d + 1.0).powf(two_h) - 2.0 * d.powf(two_h) + (d - 1.0).powf(two_h))
            }
        })
        .collect();
    Ok(Array2::from_shape_fn((p, p), |(i, j)| lags[i.abs_diff(j)]))
}

/// Draws zero-mean Gaussian samples with an exact covariance factor.
///
/// The factor `L` satisfies `L L^T = Sigma`; samples are `X = L G` with `G`
/// standard normal from a ChaCha12 stream keyed by `(seed, stream ids)`, so
/// independent trials use disjoint streams and never share RNG state.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    sigma: Array2<f64>,
    factor: Array2<f64>,
    seed: u64,
}

impl GaussianSampler {
    /// Factors `sigma` (Cholesky first, symmetric eigendecomposition with
    /// zero-clamping of rounding-level negative eigenvalues as fallback).
    pub fn new(sigma: Array2<f64>, seed: u64) -> Result<Self> {
        let p = sigma.nrows();
        check_dim(p)?;
        if sigma.ncols() != p {
            return Err(Error::ShapeMismatch(format!(
                "covariance must be square, got {}x{}",
                p,
                sigma.ncols()
            )));
        }
        if !sigma.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("covariance contains non-finite entries".into()));
        }
        let scale = frobenius_sq(&sigma).sqrt().max(f64::MIN_POSITIVE);
        if asymmetry(&sigma) > 1e-10 * scale {
            return Err(Error::InvalidInput("covariance is not symmetric".into()));
        }

        let factor = match cholesky(&sigma) {
            Some(l) => l,
            None => {
                // Semidefinite corner cases (e.g. strongly correlated Toeplitz
                // families near their boundary) go through the eigenvalue route.
                let (vals, vecs) = symmetric_eigen(&sigma);
                let lambda_max = vals[p - 1].max(0.0);
                let floor = -PSD_CLAMP_REL * lambda_max;
                if vals[0] < floor {
                    return Err(Error::NotPsd(format!(
                        "smallest eigenvalue {} is below {floor:e}",
                        vals[0]
                    )));
                }
                let mut l = vecs;
                for (k, col) in l.columns_mut().into_iter().enumerate() {
                    let root = vals[k].max(0.0).sqrt();
                    for v in col {
                        *v *= root;
                    }
                }
                l
            }
        };
        Ok(Self { sigma, factor, seed })
    }

    pub fn sigma(&self) -> &Array2<f64> {
        &self.sigma
    }

    pub fn factor(&self) -> &Array2<f64> {
        &self.factor
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p(&self) -> usize {
        self.sigma.nrows()
    }

    /// Draws `n` observations from the default stream; deterministic given
    /// `(seed, p, n)`.
    pub fn sample(&self, n: usize) -> Result<SampleSet> {
        self.sample_stream(n, [0, 0])
    }

    /// Draws `n` observations from the stream identified by `ids`
    /// (e.g. `[sweep index, trial index]`).
    pub fn sample_stream(&self, n: usize, ids: [u64; 2]) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count n must be >= 1".into()));
        }
        let p = self.p();
        let mut rng = stream_rng(self.seed, ids);
        let x = self.draw(p, n, &mut rng);
        SampleSet::new(x)
    }

    /// Draws from a caller-provided generator (used by verification ops that
    /// manage their own streams).
    pub fn sample_with_rng<R: Rng>(&self, n: usize, rng: &mut R) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count n must be >= 1".into()));
        }
        SampleSet::new(self.draw(self.p(), n, rng))
    }

    fn draw<R: Rng>(&self, p: usize, n: usize, rng: &mut R) -> Array2<f64> {
        let mut g = vec![0.0; p * n];
        fill_standard_normal(rng, &mut g);
        let g = Array2::from_shape_vec((p, n), g).expect("length matches shape");
        self.factor.dot(&g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{sample_covariance, statistics};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn ar1_zero_correlation_is_identity() {
        assert_eq!(ar1_cov(4, 0.0).unwrap(), Array2::eye(4));
    }

    #[test]
    fn ar1_matches_hand_values() {
        let sigma = ar1_cov(3, 0.5).unwrap();
        let expect = array![[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]];
        assert_eq!(sigma, expect);
    }

    #[test]
    fn ar1_is_positive_definite_across_parameters() {
        for r in [0.1, 0.5, 0.9] {
            let sigma = ar1_cov(100, r).unwrap();
            let (vals, _) = symmetric_eigen(&sigma);
            assert!(vals[0] > 0.0, "r={r}: min eigenvalue {}", vals[0]);
        }
    }

    #[test]
    fn ar1_rejects_unit_correlation() {
        assert!(ar1_cov(3, 1.0).is_err());
        assert!(ar1_cov(3, -1.5).is_err());
    }

    #[test]
    fn fbm_half_hurst_is_identity() {
        let sigma = fbm_cov(5, 0.5).unwrap();
        for (idx, v) in sigma.indexed_iter() {
            let want = if idx.0 == idx.1 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(*v, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn fbm_unit_hurst_is_all_ones() {
        let sigma = fbm_cov(6, 1.0).unwrap();
        for v in sigma.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn fbm_family_is_psd_with_unit_diagonal() {
        for hurst in [0.6, 0.7, 0.8, 0.9] {
            let sigma = fbm_cov(100, hurst).unwrap();
            for i in 0..100 {
                assert_eq!(sigma[[i, i]], 1.0);
            }
            let (vals, _) = symmetric_eigen(&sigma);
            assert!(
                vals[0] > -1e-10 * vals[99],
                "H={hurst}: min eigenvalue {}",
                vals[0]
            );
        }
    }

    #[test]
    fn fbm_rejects_out_of_range_hurst() {
        assert!(fbm_cov(3, 0.49).is_err());
        assert!(fbm_cov(3, 1.01).is_err());
    }

    #[test]
    fn toeplitz_symmetry_of_both_families() {
        let a = ar1_cov(20, 0.7).unwrap();
        let f = fbm_cov(20, 0.8).unwrap();
        for m in [&a, &f] {
            for i in 0..20 {
                for j in 0..20 {
                    assert_eq!(m[[i, j]], m[[j, i]]);
                    if i + 1 < 20 && j + 1 < 20 {
                        assert_eq!(m[[i, j]], m[[i + 1, j + 1]]);
                    }
                }
            }
        }
    }

    #[test]
    fn factorization_reproduces_sigma() {
        for (label, sigma) in [
            ("ar1", ar1_cov(60, 0.9).unwrap()),
            ("fbm", fbm_cov(60, 0.9).unwrap()),
            ("fbm-boundary", fbm_cov(40, 1.0).unwrap()),
        ] {
            let sampler = GaussianSampler::new(sigma.clone(), 1).unwrap();
            let l = sampler.factor();
            let recon = l.dot(&l.t());
            let err = (&recon - &sigma).iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = frobenius_sq(&sigma).sqrt();
            assert!(err / scale < 1e-10, "{label}: relative factor error {}", err / scale);
        }
    }

    #[test]
    fn sampler_rejects_indefinite_matrix() {
        let mut sigma = Array2::eye(3);
        sigma[[2, 2]] = -0.5;
        assert!(matches!(GaussianSampler::new(sigma, 0), Err(Error::NotPsd(_))));
    }

    #[test]
    fn sampler_is_deterministic() {
        let sampler = GaussianSampler::new(ar1_cov(5, 0.3).unwrap(), 99).unwrap();
        let a = sampler.sample(7).unwrap();
        let b = sampler.sample(7).unwrap();
        assert_eq!(a.data(), b.data());
        let c = sampler.sample_stream(7, [0, 1]).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn sampler_whiteness_under_identity_covariance() {
        // For white data the sphericity statistic on a large sample must be
        // small: u < 3/p on at least 99 of 100 seeds at n = 50 p.
        let p = 10;
        let n = 50 * p;
        let mut hits = 0;
        for seed in 0..100u64 {
            let sampler = GaussianSampler::new(Array2::eye(p), seed).unwrap();
            let x = sampler.sample(n).unwrap();
            let st = statistics(&sample_covariance(&x)).unwrap();
            if st.u < 3.0 / p as f64 {
                hits += 1;
            }
        }
        assert!(hits >= 99, "only {hits}/100 seeds passed the whiteness bound");
    }
}
