//! Independent reference computations checked against the library.

use corrmac::outage::eigen_spectrum;
use corrmac::simulation::{substream, Purpose};
use corrmac::{
    build_correlation, build_e, draw_fading, epa_gain, lmmse_estimate, mc_distortion_mean, ChannelParams,
    CorrelationModel, CorrelationParams, EigenMode, EigenPolicy, FadingRealization, NetworkGeometry, Position,
    QuadraticForms, SimConfig,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Term-by-term scalar evaluation of the normalized distortion with Hermitian products.
fn distortion_double_sum(g: &[Complex64], a: &[f64], r: &DVector<f64>, c: &DMatrix<f64>, p: &ChannelParams) -> f64 {
    let n = g.len();
    let mut bcc = 0.0;
    for i in 0..n {
        for j in 0..n {
            bcc += (g[i].conj() * g[j]).re * a[i] * a[j] * c[(i, j)];
        }
    }
    let cross: Complex64 = (0..n).map(|i| g[i].conj() * a[i] * r[i]).sum();
    let noise: f64 = (0..n).map(|i| g[i].norm_sqr() * a[i] * a[i]).sum::<f64>() * p.sigma_n2;
    let num = p.sigma_s2 * (bcc - cross.norm_sqr()) + noise + p.sigma_nu2;
    let den = p.sigma_s2 * bcc + noise + p.sigma_nu2;
    num / den
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut a = m.clone();
    let n = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off.sqrt() <= 1e-15 * a.norm() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let (cs, sn) = (1.0 / (t * t + 1.0).sqrt(), t / (t * t + 1.0).sqrt());
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn random_network(rng: &mut impl Rng, n: usize, model: CorrelationModel) -> (corrmac::CorrelationStructure, Vec<f64>) {
    let nodes = (0..n).map(|_| Position::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))).collect();
    let geom = NetworkGeometry::new(nodes, Position::new(30.0, 0.0)).unwrap();
    let corr = build_correlation(&geom, &CorrelationParams::default(), model);
    let a = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
    (corr, a)
}

fn corrmac_gain(a: Vec<f64>) -> corrmac::GainVector {
    corrmac::GainVector::new(a).unwrap()
}

#[test]
fn matrix_path_matches_scalar_double_sum() {
    let params = ChannelParams::default();
    let mut rng = substream(11, Purpose::Signal, 0, 0);
    let mut worst = 0.0_f64;
    for n in 1..=20 {
        for model in CorrelationModel::ALL {
            let (corr, a) = random_network(&mut rng, n, model);
            let gains = corrmac_gain(a.clone());
            let qf = QuadraticForms::build(&gains, &corr, &params).unwrap();
            for _ in 0..20 {
                let g = draw_fading(&mut rng, n, 1.0);
                let oracle = distortion_double_sum(g.as_slice(), &a, corr.r(), corr.c(), &params);
                let d = qf.normalized_distortion(&g).unwrap();
                worst = worst.max((d - oracle).abs() / oracle);
            }
        }
    }
    assert!(worst <= 1e-12, "max relative gap {worst:e}");
}

#[test]
fn two_node_outage_matches_symbolic_eigenvalues() {
    let mut rng = substream(12, Purpose::Signal, 0, 0);
    let policy = EigenPolicy::default();
    for sigma_g2 in [0.5, 1.0, 3.0] {
        let params = ChannelParams { sigma_g2, ..ChannelParams::default() };
        for _ in 0..50 {
            let (corr, a) = random_network(&mut rng, 2, CorrelationModel::FullRank);
            let qf = QuadraticForms::build(&corrmac_gain(a), &corr, &params).unwrap();
            for delta in [0.05, 0.2, 0.5, 0.8, 0.95] {
                let e = build_e(&qf, delta).unwrap() * sigma_g2;
                let half_tr = 0.5 * (e[(0, 0)] + e[(1, 1)]);
                let rad = (0.25 * (e[(0, 0)] - e[(1, 1)]).powi(2) + e[(0, 1)].powi(2)).sqrt();
                let (l1, l2) = (half_tr + rad, half_tr - rad);
                let c = (1.0 - delta) * params.sigma_nu2;
                // gH E g = l1 X1 + l2 X2 with X1, X2 unit exponentials
                let oracle = if l1 <= 0.0 { 1.0 } else { 1.0 - l1 / (l1 - l2) * (-c / l1).exp() };
                let p = qf.outage_general(delta, EigenMode::Exact, &policy).unwrap().probability;
                assert!((p - oracle).abs() < 1e-10, "delta {delta}: {p} vs {oracle}");
            }
        }
    }
}

#[test]
fn nalgebra_spectrum_matches_jacobi() {
    let params = ChannelParams::default();
    let mut rng = substream(13, Purpose::Signal, 0, 0);
    for n in [1, 3, 7, 12] {
        for model in CorrelationModel::ALL {
            let (corr, a) = random_network(&mut rng, n, model);
            let qf = QuadraticForms::build(&corrmac_gain(a), &corr, &params).unwrap();
            for delta in [0.1, 0.4, 0.9] {
                let e = build_e(&qf, delta).unwrap();
                let spec = eigen_spectrum(&e, &EigenPolicy::default()).unwrap();
                let reference = jacobi_eigenvalues(&e);
                let scale = reference.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
                for (x, y) in spec.lambdas.iter().zip(&reference) {
                    assert!((x - y).abs() <= 1e-10 * scale, "{x} vs {y}");
                }
            }
        }
    }
}

#[test]
fn estimator_error_matches_normalized_distortion() {
    let params = ChannelParams::default();
    let n = 6;
    let mut rng = substream(14, Purpose::Signal, 0, 0);
    for model in CorrelationModel::ALL {
        let (corr, _) = random_network(&mut rng, n, model);
        let a = epa_gain(&params, n).unwrap();
        let g = draw_fading(&mut rng, n, 1.0);
        let expected = corrmac::normalized_distortion(&g, &a, &corr, &params).unwrap() * params.sigma_s2;

        // square root of the joint covariance of (s, s_1, ..., s_N)
        let eig = SymmetricEigen::new(corr.joint_matrix() * params.sigma_s2);
        let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));

        let trials = 200_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..trials {
            let u = DVector::from_fn(n + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let joint = &root * u;
            let s = joint[0];
            let mut z = Complex64::new(
                rng.sample::<f64, _>(StandardNormal) * (params.sigma_nu2 / 2.0).sqrt(),
                rng.sample::<f64, _>(StandardNormal) * (params.sigma_nu2 / 2.0).sqrt(),
            );
            for i in 0..n {
                let x = joint[i + 1] + rng.sample::<f64, _>(StandardNormal) * params.sigma_n2.sqrt();
                z += g.as_slice()[i] * a.as_slice()[i] * x;
            }
            let err = (Complex64::new(s, 0.0) - lmmse_estimate(z, &g, &a, &corr, &params).unwrap()).norm_sqr();
            sum += err;
            sum_sq += err * err;
        }
        let mean = sum / trials as f64;
        let se = ((sum_sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "{model}: empirical {mean} vs {expected} (se {se})");
    }
}

#[test]
fn at_most_one_positive_outage_eigenvalue() {
    let cfg = SimConfig::default();
    let policy = EigenPolicy::default();
    let (mut one, mut none) = (0, 0);
    for gi in 0..1000 {
        let (_, qf) = cfg.network(gi).unwrap();
        for k in 1..20 {
            let delta = k as f64 * 0.05;
            let spec = qf.fading_spectrum(delta, EigenMode::Exact, &policy).unwrap();
            assert!(spec.lambdas.iter().all(|l| l.is_finite()));
            match spec.positive_count() {
                0 => none += 1,
                1 => one += 1,
                c => panic!("geometry {gi}, delta {delta}: {c} positive eigenvalues"),
            }
        }
    }
    println!("one positive eigenvalue: {one}, none (certain outage): {none}");
    assert!(one > 0);
}

#[test]
fn approximate_spectrum_is_close_to_exact() {
    let params = ChannelParams::default();
    let mut rng = substream(15, Purpose::Signal, 0, 0);
    for model in CorrelationModel::ALL {
        for _ in 0..20 {
            let (corr, a) = random_network(&mut rng, 10, model);
            let amax2 = a.iter().fold(0.0_f64, |m, x| m.max(x * x));
            let qf = QuadraticForms::build(&corrmac_gain(a), &corr, &params).unwrap();
            for k in 0..=20 {
                let delta = k as f64 * 0.05;
                let exact = qf.lambda_plus(delta, EigenMode::Exact).unwrap();
                let approx = qf.lambda_plus(delta, EigenMode::Approx).unwrap();
                // E - approx = -(1 - delta) sigma_n2 W^2 shifts eigenvalues by at most this much
                assert!((exact - approx).abs() <= params.sigma_n2 * amax2 * (1.0 - delta) + 1e-12);
                assert!(exact <= approx + 1e-12);
            }
        }
    }
}

#[test]
fn kernel_scale_limits() {
    let mut rng = substream(16, Purpose::Geometry, 0, 0);
    for _ in 0..100 {
        let geom = corrmac::sample_geometry(&mut rng, 10, 20.0, 30.0).unwrap();
        let short = build_correlation(&geom, &CorrelationParams::new(1.0, 1.0).unwrap(), CorrelationModel::FullRank);
        let long = build_correlation(&geom, &CorrelationParams::new(1e6, 1.0).unwrap(), CorrelationModel::FullRank);
        assert!(short.r().iter().all(|&v| v < 1e-3));
        assert!(long.r().iter().all(|&v| v > 1.0 - 1e-3));
        assert!(long.c().iter().all(|&v| v > 1.0 - 1e-3));
        let dist = geom.node_distances();
        for ((i, j), &d) in dist.iter().enumerate().map(|(k, d)| ((k % 10, k / 10), d)) {
            if i != j && d > 7.0 {
                assert!(short.c()[(i, j)] < 1e-3);
            }
        }
    }
}

#[test]
fn joint_matrix_is_positive_semidefinite() {
    let mut rng = substream(17, Purpose::Geometry, 0, 0);
    for theta2 in [0.5, 1.0, 1.5, 2.0] {
        let params = CorrelationParams::new(250.0, theta2).unwrap();
        for _ in 0..100 {
            let geom = corrmac::sample_geometry(&mut rng, 15, 20.0, 30.0).unwrap();
            let corr = build_correlation(&geom, &params, CorrelationModel::FullRank);
            let eig = corr.joint_matrix().symmetric_eigenvalues();
            assert!(eig.min() >= -1e-10 * eig.max(), "theta2 {theta2}: min eigenvalue {}", eig.min());
        }
    }
}

#[test]
fn distortion_standard_error_scales_with_runs() {
    let base = SimConfig { fading_enabled: false, ..SimConfig::default() };
    let small = mc_distortion_mean(&SimConfig { n_geometries: 100, ..base.clone() }).unwrap();
    let large = mc_distortion_mean(&SimConfig { n_geometries: 10_000, ..base }).unwrap();
    let ratio = small.std_err / large.std_err;
    assert!((10.0 / 1.5..=15.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn full_rank_floor_is_nonincreasing_in_nodes() {
    let base = SimConfig { fading_enabled: false, model: CorrelationModel::FullRank, ..SimConfig::default() };
    let mut prev: Option<corrmac::MeanEstimate> = None;
    for n in [1, 5, 10, 50, 100, 300, 500] {
        let est = mc_distortion_mean(&SimConfig { n_nodes: n, ..base.clone() }).unwrap();
        if let Some(p) = prev {
            assert!(est.mean <= p.mean + 2.0 * p.std_err.hypot(est.std_err), "N={n}: {} after {}", est.mean, p.mean);
        }
        prev = Some(est);
    }
}

#[test]
fn distortion_stays_in_unit_interval() {
    for model in CorrelationModel::ALL {
        let cfg = SimConfig { model, n_geometries: 100, n_fading_draws: 100, ..SimConfig::default() };
        let samples = corrmac::simulation::distortion_samples(&cfg).unwrap();
        assert_eq!(samples.len(), 10_000);
        assert!(samples.iter().all(|s| s.d_tilde > 0.0 && s.d_tilde <= 1.0));
    }
    let (_, qf) = SimConfig::default().network(0).unwrap();
    assert_eq!(qf.normalized_distortion(&FadingRealization::zeros(10)).unwrap(), 1.0);
}
