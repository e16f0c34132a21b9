//! Runs the validation checks at a reduced scale.

use corrmac::validation::{run_all, ValidationScale};
use corrmac::SimConfig;

fn main() -> corrmac::Result<()> {
    let scale = ValidationScale { geometries: 200, oracle_geometries: 5, oracle_draws: 20_000 };
    for check in run_all(&SimConfig::default(), &scale)? {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    Ok(())
}
