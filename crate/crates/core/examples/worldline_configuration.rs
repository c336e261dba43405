// A hand-built space–time configuration: spins, overlaps, space–time Fourier
// transform, and the JSON schema.

use tfim::lattice::TorusSpec;
use tfim::worldlines::WorldlineConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(1, 2)?;
    let mut cfg = WorldlineConfig::all_up(2, 1.0);
    cfg.flips[0] = vec![0.25, 0.75];
    cfg.validate()?;

    println!("σ(0, 0.5) = {}", cfg.spin(0, 0.5));
    // site 0 is down on [0.25, 0.75), so the overlap with site 1 is 0.5 − 0.5
    println!("∫σ(0,t)σ(1,t) dt = {}", cfg.overlap_integral(0, 1));
    println!("S(0,[0,β)) = {}", cfg.interaction_action(&spec, 1.0)?);

    let k = spec.momentum(1);
    for j in 0..3 {
        println!("σ̂(k=π, j={j}) = {:.6}", cfg.fourier_transform_sigma(&spec, &k, j)?);
    }
    println!("{}", serde_json::to_string(&cfg)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
