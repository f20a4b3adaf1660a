//! Property tests for the estimator invariants: clamp ranges, scale and
//! rotation equivariance, PSD preservation, coefficient unification and
//! monotonicity.

use ndarray::Array2;
use proptest::prelude::*;

use shrinkcov::estimators::{
    estimate, lw_rho, oas_iterate, oas_rho, rblw_rho, rho_param, sample_covariance, statistics,
    Method, RhoParams, SampleSet,
};
use shrinkcov::linalg::min_eigenvalue;
use shrinkcov::rng::{fill_standard_normal, stream_rng};

fn gaussian_samples(p: usize, n: usize, seed: u64) -> SampleSet {
    let mut rng = stream_rng(seed, [9, 0]);
    let mut g = vec![0.0; p * n];
    fill_standard_normal(&mut rng, &mut g);
    // Random per-row scales keep the spectra away from sphericity.
    let scales: Vec<f64> = (0..p).map(|_| 0.2 + 2.0 * rng.random::<f64>()).collect();
    let data = Array2::from_shape_vec((p, n), g).unwrap();
    let data = Array2::from_shape_fn((p, n), |(i, t)| data[[i, t]] * scales[i]);
    SampleSet::new(data).unwrap()
}

/// Product of Givens rotations with pseudo-random angles: orthogonal to
/// machine precision.
fn random_rotation(p: usize, seed: u64) -> Array2<f64> {
    let mut rng = stream_rng(seed, [17, 0]);
    let mut r = Array2::<f64>::eye(p);
    for i in 0..p {
        for j in (i + 1)..p {
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            let (s, c) = angle.sin_cos();
            for k in 0..p {
                let a = r[[i, k]];
                let b = r[[j, k]];
                r[[i, k]] = c * a - s * b;
                r[[j, k]] = s * a + c * b;
            }
        }
    }
    r
}

fn clamped_rhos(x: &SampleSet) -> Vec<(Method, f64)> {
    let s = sample_covariance(x);
    let stats = statistics(&s).unwrap();
    vec![
        (Method::Lw, lw_rho(x, &s).unwrap().clamped),
        (Method::Rblw, rblw_rho(&stats).clamped),
        (Method::Oas, oas_rho(&stats).clamped),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn clamp_ranges_hold(p in 2usize..9, n in 1usize..14, seed in 0u64..1_000_000) {
        let x = gaussian_samples(p, n, seed);
        let s = sample_covariance(&x);
        let stats = statistics(&s).unwrap();

        let lw = lw_rho(&x, &s).unwrap();
        prop_assert!((0.0..=1.0).contains(&lw.clamped));
        let rblw = rblw_rho(&stats);
        prop_assert!((0.0..=1.0).contains(&rblw.clamped));
        let oas = oas_rho(&stats);
        prop_assert!(oas.clamped > 0.0 && oas.clamped <= 1.0);
    }

    #[test]
    fn scale_equivariance(p in 2usize..9, n in 1usize..14, seed in 0u64..1_000_000,
                          scale_exp in -2.0f64..2.0) {
        let scale = 10f64.powf(scale_exp);
        let x = gaussian_samples(p, n, seed);
        let scaled = SampleSet::new(x.data() * scale).unwrap();

        for ((m1, r1), (m2, r2)) in clamped_rhos(&x).into_iter().zip(clamped_rhos(&scaled)) {
            prop_assert_eq!(m1, m2);
            prop_assert!((r1 - r2).abs() <= 1e-12, "{}: {} vs {}", m1, r1, r2);
        }

        // The estimate itself scales by scale^2.
        for method in [Method::Lw, Method::Rblw, Method::Oas] {
            let a = estimate(&x, method, None).unwrap();
            let b = estimate(&scaled, method, None).unwrap();
            let tr: f64 = b.sigma_hat.diag().sum();
            for (u, v) in a.sigma_hat.iter().zip(b.sigma_hat.iter()) {
                prop_assert!((u * scale * scale - v).abs() <= 1e-10 * tr.max(1.0));
            }
        }
    }

    #[test]
    fn oas_coefficient_decreases_in_n(p in 2usize..9, n in 1usize..14, seed in 0u64..1_000_000,
                                      n1 in 1usize..50, extra in 1usize..50) {
        let x = gaussian_samples(p, n, seed);
        let s = sample_covariance(&x);
        let stats = statistics(&s).unwrap();
        if stats.is_spherical() {
            return Ok(());
        }
        let n2 = n1 + extra;
        let r1 = oas_rho(&shrinkcov::ShrinkageStatistics { n: n1, ..stats });
        let r2 = oas_rho(&shrinkcov::ShrinkageStatistics { n: n2, ..stats });
        // Strict decrease of the unclamped value; non-increase after clamping.
        prop_assert!(r2.raw < r1.raw);
        prop_assert!(r2.clamped <= r1.clamped + 1e-15);
    }

    #[test]
    fn coefficient_unification(p in 2usize..9, n in 3usize..40, seed in 0u64..1_000_000) {
        let x = gaussian_samples(p, 2 + (seed as usize % 12), seed);
        let s = sample_covariance(&x);
        let stats = shrinkcov::ShrinkageStatistics { n, ..statistics(&s).unwrap() };
        if stats.is_spherical() {
            return Ok(());
        }
        let rblw = rblw_rho(&stats);
        let oas = oas_rho(&stats);
        let pr = RhoParams::rblw(n, p);
        let po = RhoParams::oas(n, p);
        if n >= 3 && p >= 3 {
            prop_assert!(pr.alpha > 0.0 && pr.beta > 0.0);
            prop_assert!(po.alpha > 0.0 && po.beta > 0.0);
        }
        let tol = |v: f64| 1e-12 * v.abs().max(1.0);
        let pr_unclamped = pr.alpha + pr.beta / stats.u;
        let po_unclamped = po.alpha + po.beta / stats.u;
        prop_assert!((rblw.raw - pr_unclamped).abs() <= tol(rblw.raw));
        prop_assert!((oas.raw - po_unclamped).abs() <= tol(oas.raw));
        prop_assert!((rblw.clamped - rho_param(&pr, stats.u)).abs() <= 1e-12);
        prop_assert!((oas.clamped - rho_param(&po, stats.u)).abs() <= 1e-12);
    }
}

#[test]
fn rotation_equivariance_on_randomized_instances() {
    for case in 0..1000u64 {
        let p = 2 + (case % 7) as usize;
        let n = 1 + (case % 11) as usize;
        let x = gaussian_samples(p, n, 5000 + case);
        let r = random_rotation(p, case);
        let rotated = SampleSet::new(r.dot(x.data())).unwrap();

        for method in [Method::Lw, Method::Rblw, Method::Oas] {
            let a = estimate(&x, method, None).unwrap();
            let b = estimate(&rotated, method, None).unwrap();
            assert!(
                (a.rho - b.rho).abs() <= 1e-12,
                "case {case} {method}: rho {} vs {}",
                a.rho,
                b.rho
            );
            let conjugated = r.dot(&a.sigma_hat).dot(&r.t());
            let tr: f64 = a.sigma_hat.diag().sum();
            for (u, v) in conjugated.iter().zip(b.sigma_hat.iter()) {
                assert!(
                    (u - v).abs() <= 1e-10 * tr.max(1.0),
                    "case {case} {method}: {u} vs {v}"
                );
            }
        }
    }
}

#[test]
fn psd_preservation_on_randomized_instances() {
    for case in 0..1000u64 {
        let p = 2 + (case % 9) as usize;
        let n = 1 + (case % 13) as usize;
        let x = gaussian_samples(p, n, 9000 + case);
        for method in [Method::Lw, Method::Rblw, Method::Oas] {
            let est = estimate(&x, method, None).unwrap();
            let tr: f64 = est.sigma_hat.diag().sum();
            let min = min_eigenvalue(&est.sigma_hat);
            assert!(
                min >= -1e-10 * tr / p as f64,
                "case {case} {method}: min eigenvalue {min}, trace {tr}"
            );
        }
    }
}

#[test]
fn iteration_converges_from_any_start() {
    // Theorem-style convergence spot check across starts in [0, 1].
    for case in 0..100u64 {
        let p = 3 + (case % 10) as usize;
        let n = 5 + (case % 30) as usize;
        let x = gaussian_samples(p, n, 40_000 + case);
        let stats = statistics(&sample_covariance(&x)).unwrap();
        let rho0 = (case as f64) / 99.0;
        let it = oas_iterate(&stats, rho0, 5000, 1e-12).unwrap();
        assert!(it.converged);
        assert!(
            (it.limit() - oas_rho(&stats).clamped).abs() < 1e-10,
            "case {case}: limit {} vs closed form {}",
            it.limit(),
            oas_rho(&stats).clamped
        );
    }
}
