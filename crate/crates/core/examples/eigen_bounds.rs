//! The largest outage eigenvalue, its lower bound, and how both fall as the
//! source moves away from the network.

use corrmac::{sweep_eigenvalue, SimConfig};

fn main() -> corrmac::Result<()> {
    let config = SimConfig { n_geometries: 200, ..SimConfig::default() };
    let deltas = [0.2, 0.4, 0.6, 0.8, 1.0];
    println!("{:>8} {:>6} {:>12} {:>12}", "source", "delta", "lambda+", "bound");
    for row in sweep_eigenvalue(&config, &[0.0, 30.0, 50.0], &deltas)? {
        println!(
            "{:>6} m {:>6.2} {:>12.5} {:>12.5}",
            row.source_distance, row.delta, row.lambda_exact_norm.mean, row.lambda_bound_norm.mean
        );
    }
    Ok(())
}
