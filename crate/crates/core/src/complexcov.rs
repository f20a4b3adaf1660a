//! Complex-covariance shrinkage through real stacking.
//!
//! A p-dimensional complex snapshot is represented as the 2p-dimensional
//! real vector of its real and imaginary parts. The real estimators run on
//! the stacked problem and the 2p x 2p result maps back to a p x p Hermitian
//! matrix through its block structure.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    convex_combination, rho_for_method, sample_covariance, Method, SampleSet,
};
use crate::linalg::asymmetry;

/// A p x n set of complex snapshots; column `t` is snapshot `x(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSampleSet {
    data: Array2<Complex64>,
}

impl ComplexSampleSet {
    pub fn new(data: Array2<Complex64>) -> Result<Self> {
        let (p, n) = data.dim();
        if p == 0 || n == 0 {
            return Err(Error::InvalidInput(format!(
                "snapshot set must be non-empty, got {p}x{n}"
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("snapshots contain non-finite entries".into()));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn p(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }
}

/// A Hermitian shrinkage estimate with the coefficient that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEstimate {
    pub sigma_hat: Array2<Complex64>,
    pub rho: f64,
    pub method: Method,
}

/// Which dimension parameter the coefficient rules see for stacked data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum CoeffDim {
    /// The stacked problem's true shape, `2p` (default).
    #[default]
    #[serde(rename = "stacked")]
    Stacked,
    /// The original complex dimension `p`, for sensitivity checks.
    #[serde(rename = "original")]
    Original,
}

/// Stacks each complex snapshot into `(Re(x); Im(x))`, a `2p x n` real set.
pub fn stack_real(x: &ComplexSampleSet) -> SampleSet {
    let (p, n) = x.data().dim();
    let mut out = Array2::<f64>::zeros((2 * p, n));
    for ((i, t), z) in x.data().indexed_iter() {
        out[[i, t]] = z.re;
        out[[i + p, t]] = z.im;
    }
    SampleSet::new(out).expect("stacked data inherits finiteness")
}

/// Splits a stacked real vector set back into complex snapshots; inverse of
/// [`stack_real`].
pub fn unstack_samples(stacked: &SampleSet) -> Result<ComplexSampleSet> {
    let (two_p, n) = stacked.data().dim();
    if two_p % 2 != 0 {
        return Err(Error::ShapeMismatch(format!(
            "stacked dimension must be even, got {two_p}"
        )));
    }
    let p = two_p / 2;
    let mut out = Array2::<Complex64>::zeros((p, n));
    for t in 0..n {
        for i in 0..p {
            out[[i, t]] = Complex64::new(stacked.data()[[i, t]], stacked.data()[[i + p, t]]);
        }
    }
    ComplexSampleSet::new(out)
}

/// Maps a symmetric `2p x 2p` stacked covariance to the `p x p` complex
/// covariance `(S_rr + S_ii) + j (S_ir - S_ri)`, explicitly
/// Hermitian-symmetrized.
pub fn unstack_cov(sigma_s: &ArrayView2<f64>) -> Result<Array2<Complex64>> {
    let two_p = sigma_s.nrows();
    if sigma_s.ncols() != two_p {
        return Err(Error::ShapeMismatch(format!(
            "stacked covariance must be square, got {}x{}",
            two_p,
            sigma_s.ncols()
        )));
    }
    if two_p % 2 != 0 {
        return Err(Error::ShapeMismatch(format!(
            "stacked covariance dimension must be even, got {two_p}"
        )));
    }
    let scale = sigma_s.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    if asymmetry(&sigma_s.to_owned()) > 1e-10 * scale {
        return Err(Error::InvalidInput("stacked covariance is not symmetric".into()));
    }
    let p = two_p / 2;
    let mut out = Array2::<Complex64>::zeros((p, p));
    for i in 0..p {
        for j in 0..p {
            let re = sigma_s[[i, j]] + sigma_s[[i + p, j + p]];
            let im = sigma_s[[i + p, j]] - sigma_s[[i, j + p]];
            out[[i, j]] = Complex64::new(re, im);
        }
    }
    hermitian_symmetrize(&mut out);
    Ok(out)
}

/// Replaces `a` with its Hermitian part `(a + a^H) / 2`.
pub fn hermitian_symmetrize(a: &mut Array2<Complex64>) {
    let p = a.nrows();
    for i in 0..p {
        a[[i, i]] = Complex64::new(a[[i, i]].re, 0.0);
        for j in (i + 1)..p {
            let m = 0.5 * (a[[i, j]] + a[[j, i]].conj());
            a[[i, j]] = m;
            a[[j, i]] = m.conj();
        }
    }
}

/// Runs a real shrinkage estimator on the stacked data and maps the result
/// back to a Hermitian estimate. The coefficient rules see the stacked
/// dimension `2p` by default.
pub fn estimate_complex(x: &ComplexSampleSet, method: Method) -> Result<HermitianEstimate> {
    estimate_complex_with_dim(x, method, CoeffDim::Stacked)
}

/// [`estimate_complex`] with an explicit dimension parameter for the
/// coefficient rules (sensitivity override).
pub fn estimate_complex_with_dim(
    x: &ComplexSampleSet,
    method: Method,
    dim: CoeffDim,
) -> Result<HermitianEstimate> {
    if method == Method::Oracle {
        return Err(Error::InvalidParameter(
            "the oracle method is not defined for the complex pipeline".into(),
        ));
    }
    let stacked = stack_real(x);
    let s = sample_covariance(&stacked);
    let rho = match (method, dim) {
        (_, CoeffDim::Stacked) | (Method::SampleOnly, _) => {
            rho_for_method(&stacked, &s, method, None)?
        }
        (_, CoeffDim::Original) => {
            let stats = crate::estimators::statistics(&s)?.with_dimension(x.p())?;
            match method {
                Method::Lw => {
                    // LW's numerator is dimension-free; only the denominator's
                    // dispersion term changes with p.
                    let base = crate::estimators::lw_rho(&stacked, &s)?;
                    if base.degenerate || stats.is_spherical() {
                        1.0
                    } else {
                        let stacked_stats = crate::estimators::statistics(&s)?;
                        let scaled = base.raw * stacked_stats.dispersion() / stats.dispersion();
                        scaled.clamp(0.0, 1.0)
                    }
                }
                Method::Rblw => crate::estimators::rblw_rho(&stats).clamped,
                Method::Oas => crate::estimators::oas_rho(&stats).clamped,
                Method::SampleOnly | Method::Oracle => unreachable!("handled above"),
            }
        }
    };
    let shrunk = crate::estimators::SampleCov::from_matrix(convex_combination(&s, rho), x.n())?;
    let sigma_hat = unstack_cov(&shrunk.matrix().view())?;
    Ok(HermitianEstimate { sigma_hat, rho, method })
}
