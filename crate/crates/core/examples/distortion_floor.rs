//! Mean distortion without fading as the network grows. The full-rank model
//! settles on a floor while the other two keep improving.

use corrmac::{sweep_nodes, SimConfig};

fn main() -> corrmac::Result<()> {
    let config = SimConfig { fading_enabled: false, n_geometries: 300, ..SimConfig::default() };
    println!("{:>5} {:>10} {:>12} {:>10}", "N", "model", "mean D", "std err");
    for row in sweep_nodes(&config, &[1, 10, 50, 200, 500])? {
        println!("{:>5} {:>10} {:>12.6} {:>10.2e}", row.n, row.model.as_str(), row.mean_d, row.std_err);
    }
    Ok(())
}
