//! Builds one random network and prints its correlation structure under each model.

use corrmac::simulation::{substream, Purpose};
use corrmac::{build_correlation, sample_geometry, CorrelationModel, CorrelationParams};

fn main() -> corrmac::Result<()> {
    let mut rng = substream(7, Purpose::Geometry, 0, 0);
    let geom = sample_geometry(&mut rng, 5, 20.0, 30.0)?;
    let kernel = CorrelationParams::new(250.0, 1.0)?;

    for p in geom.nodes() {
        println!("node at ({:6.2}, {:6.2}), {:5.2} m from the source", p.x, p.y, p.distance(&geom.source()));
    }
    for model in CorrelationModel::ALL {
        let corr = build_correlation(&geom, &kernel, model);
        corr.check_joint_psd()?;
        println!("\n{model}");
        println!("  r = {:.4}", corr.r().transpose());
        println!("  C = {:.4}", corr.c());
    }
    Ok(())
}
