//! Closed-form outage probability next to a Monte Carlo estimate for one network per model.

use corrmac::simulation::empirical_outage;
use corrmac::{CorrelationModel, EigenMode, EigenPolicy, SimConfig};

fn main() -> corrmac::Result<()> {
    let deltas: Vec<f64> = (1..10).map(|k| k as f64 * 0.1).collect();
    let policy = EigenPolicy::default();
    for model in CorrelationModel::ALL {
        let config = SimConfig { model, ..SimConfig::default() };
        let (_, qf) = config.network(0)?;
        let mc = empirical_outage(&qf, &deltas, 50_000, config.seed, 0)?;
        println!("{model}");
        for pt in mc {
            let closed = qf.outage_general(pt.delta, EigenMode::Exact, &policy)?.probability;
            println!(
                "  delta {:.1}: closed form {:.4}, simulated {:.4} [{:.4}, {:.4}]",
                pt.delta, closed, pt.p_hat, pt.ci_low, pt.ci_high
            );
        }
    }
    Ok(())
}
