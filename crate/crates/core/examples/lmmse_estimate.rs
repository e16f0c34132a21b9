//! Simulates the full signal chain on one network and compares the empirical
//! estimation error with the analytic normalized distortion.

use corrmac::simulation::{substream, Purpose};
use corrmac::{draw_fading, epa_gain, lmmse_estimate, normalized_distortion, SimConfig};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> corrmac::Result<()> {
    let config = SimConfig::default();
    let params = config.channel;
    let n = config.n_nodes;
    let corr = config.correlation(0)?;
    let a = epa_gain(&params, n)?;
    let mut rng = substream(config.seed, Purpose::Signal, 0, 0);
    let g = draw_fading(&mut rng, n, params.sigma_g2);

    let eig = SymmetricEigen::new(corr.joint_matrix() * params.sigma_s2);
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let mut normal = || rng.sample::<f64, _>(StandardNormal);

    let trials = 100_000;
    let mut mse = 0.0;
    for _ in 0..trials {
        let joint = &root * DVector::from_fn(n + 1, |_, _| normal());
        let mut z = Complex64::new(normal(), normal()) * (params.sigma_nu2 / 2.0).sqrt();
        for i in 0..n {
            let x = joint[i + 1] + normal() * params.sigma_n2.sqrt();
            z += g.as_slice()[i] * a.as_slice()[i] * x;
        }
        mse += (Complex64::new(joint[0], 0.0) - lmmse_estimate(z, &g, &a, &corr, &params)?).norm_sqr();
    }
    println!("empirical  E|s - s_hat|^2 / s2 = {:.5}", mse / trials as f64 / params.sigma_s2);
    println!("analytic   normalized distortion = {:.5}", normalized_distortion(&g, &a, &corr, &params)?);
    Ok(())
}
