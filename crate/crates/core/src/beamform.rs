//! Uniform-linear-array scenarios, Capon weights and the SINR metric.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::complexcov::ComplexSampleSet;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_cholesky, hermitian_solve};
use crate::rng::standard_complex_normal;

/// A narrowband plane-wave source: spatial frequency (radians per element)
/// and power in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Source {
    pub omega: f64,
    pub power: f64,
}

/// A uniform linear array scenario: `p` sensors, independent Gaussian
/// sources, white sensor noise, and the index of the source of interest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UlaScenario {
    pub p: usize,
    pub sources: Vec<Source>,
    pub noise_power: f64,
    pub signal_index: usize,
}

impl UlaScenario {
    pub fn new(
        p: usize,
        sources: Vec<Source>,
        noise_power: f64,
        signal_index: usize,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("sensor count must be >= 1".into()));
        }
        if sources.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one source".into()));
        }
        if signal_index >= sources.len() {
            return Err(Error::InvalidParameter(format!(
                "signal index {signal_index} out of range for {} sources",
                sources.len()
            )));
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidParameter("noise power must be positive".into()));
        }
        for (k, s) in sources.iter().enumerate() {
            if !(s.power > 0.0 && s.power.is_finite() && s.omega.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "source {k} has invalid parameters"
                )));
            }
        }
        Ok(Self { p, sources, noise_power, signal_index })
    }

    /// The default benchmark: a 10-sensor half-wavelength ULA with a 10 dB
    /// source at 20 degrees and two independent 15 dB interferers, one at
    /// -30 degrees and one 0.9 beamwidths away from the source; unit noise.
    pub fn benchmark() -> Self {
        Self::benchmark_with(10, 20.0, 10.0, -30.0, 15.0, 0.9)
    }

    /// The benchmark layout with adjustable knobs. DOAs in degrees, powers
    /// in dB over the (unit) sensor noise; `gamma` places the second
    /// interferer at spatial frequency `pi sin(theta_s) + 2 pi gamma / p`.
    pub fn benchmark_with(
        p: usize,
        signal_doa_deg: f64,
        signal_db: f64,
        interferer_doa_deg: f64,
        interferer_db: f64,
        gamma: f64,
    ) -> Self {
        let signal_omega = spatial_frequency(signal_doa_deg.to_radians());
        let sources = vec![
            Source { omega: signal_omega, power: db_to_linear(signal_db) },
            Source {
                omega: spatial_frequency(interferer_doa_deg.to_radians()),
                power: db_to_linear(interferer_db),
            },
            Source {
                omega: signal_omega + std::f64::consts::TAU * gamma / p as f64,
                power: db_to_linear(interferer_db),
            },
        ];
        Self::new(p, sources, 1.0, 0).expect("benchmark parameters are valid")
    }

    pub fn signal(&self) -> &Source {
        &self.sources[self.signal_index]
    }

    /// Steering vector toward the source of interest.
    pub fn signal_steering(&self) -> Array1<Complex64> {
        array_response(self.p, self.signal().omega)
    }
}

/// Power ratio in dB to linear units.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Spatial frequency of a DOA under half-wavelength element spacing:
/// `omega = pi * sin(theta)`.
pub fn spatial_frequency(theta_radians: f64) -> f64 {
    std::f64::consts::PI * theta_radians.sin()
}

/// Array response `a_k = exp(-j (k-1) omega)`, `k = 1..p`.
pub fn array_response(p: usize, omega: f64) -> Array1<Complex64> {
    Array1::from_iter((0..p).map(|k| Complex64::from_polar(1.0, -(k as f64) * omega)))
}

/// The scenario's true snapshot covariance
/// `sum_k power_k a(omega_k) a(omega_k)^H + noise_power I`.
pub fn true_cov(sc: &UlaScenario) -> Array2<Complex64> {
    let p = sc.p;
    let mut sigma = Array2::<Complex64>::zeros((p, p));
    for src in &sc.sources {
        let a = array_response(p, src.omega);
        for i in 0..p {
            for j in 0..p {
                sigma[[i, j]] += src.power * a[i] * a[j].conj();
            }
        }
    }
    for i in 0..p {
        sigma[[i, i]] += sc.noise_power;
    }
    sigma
}

/// Capon (minimum-variance distortionless) weights with their constraint
/// gain `w^H a`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights {
    pub w: Array1<Complex64>,
    pub constraint_gain: Complex64,
}

/// `w = Sigma^{-1} a / (a^H Sigma^{-1} a)` through a Hermitian Cholesky
/// solve (never an explicit inverse). Scale-invariant in `Sigma`.
pub fn capon_weights(
    sigma: &Array2<Complex64>,
    steering: &Array1<Complex64>,
) -> Result<BeamWeights> {
    if sigma.nrows() != sigma.ncols() || sigma.nrows() != steering.len() {
        return Err(Error::ShapeMismatch(format!(
            "covariance {}x{} incompatible with steering length {}",
            sigma.nrows(),
            sigma.ncols(),
            steering.len()
        )));
    }
    let l = hermitian_cholesky(sigma).ok_or_else(|| {
        Error::SingularMatrix("covariance passed to the Capon solve is not positive definite".into())
    })?;
    let x = hermitian_solve(&l, steering);
    let gain: Complex64 = steering.iter().zip(x.iter()).map(|(a, v)| a.conj() * v).sum();
    if !(gain.re > 0.0 && gain.re.is_finite()) {
        return Err(Error::SingularMatrix(format!(
            "quadratic form a^H Sigma^{{-1}} a = {gain} is not positive"
        )));
    }
    let w = x.mapv(|v| v / gain);
    let constraint_gain: Complex64 =
        w.iter().zip(steering.iter()).map(|(wk, ak)| wk.conj() * ak).sum();
    Ok(BeamWeights { w, constraint_gain })
}

/// Output SINR of `w` against the scenario's true covariance:
/// `power_s |w^H a_s|^2 / (w^H [Sigma - power_s a_s a_s^H] w)`.
pub fn sinr(weights: &BeamWeights, sc: &UlaScenario) -> f64 {
    let sigma = true_cov(sc);
    sinr_against(weights, sc, &sigma)
}

/// [`sinr`] with a precomputed true covariance (the Monte Carlo runner
/// reuses one matrix across trials).
pub fn sinr_against(weights: &BeamWeights, sc: &UlaScenario, sigma: &Array2<Complex64>) -> f64 {
    let a_s = sc.signal_steering();
    let wh_a: Complex64 =
        weights.w.iter().zip(a_s.iter()).map(|(wk, ak)| wk.conj() * ak).sum();
    let signal_power = sc.signal().power;
    let numerator = signal_power * wh_a.norm_sqr();

    // w^H Sigma w, guaranteed real for Hermitian Sigma.
    let sw = sigma.dot(&weights.w);
    let quad: Complex64 = weights.w.iter().zip(sw.iter()).map(|(wk, v)| wk.conj() * v).sum();
    let denominator = quad.re - numerator;
    // Positive definiteness of the interference-plus-noise part makes the
    // denominator strictly positive.
    assert!(
        denominator > 0.0,
        "interference-plus-noise output power must be positive, got {denominator}"
    );
    numerator / denominator
}

/// Draws `n` snapshots: independent circular complex Gaussian source
/// amplitudes plus unit-covariance circular complex sensor noise.
pub fn sample_snapshots<R: Rng>(sc: &UlaScenario, n: usize, rng: &mut R) -> ComplexSampleSet {
    let p = sc.p;
    let responses: Vec<Array1<Complex64>> =
        sc.sources.iter().map(|s| array_response(p, s.omega)).collect();
    let amplitudes: Vec<f64> = sc.sources.iter().map(|s| s.power.sqrt()).collect();
    let noise_amp = sc.noise_power.sqrt();

    let mut data = Array2::<Complex64>::zeros((p, n));
    for t in 0..n {
        for (a, amp) in responses.iter().zip(&amplitudes) {
            let s = standard_complex_normal(rng) * *amp;
            for i in 0..p {
                data[[i, t]] += a[i] * s;
            }
        }
        for i in 0..p {
            data[[i, t]] += standard_complex_normal(rng) * noise_amp;
        }
    }
    ComplexSampleSet::new(data).expect("generated snapshots are finite")
}
