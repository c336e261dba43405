// Checkpoint a chain to JSON and resume it bit-exactly.

use tfim::lattice::TorusSpec;
use tfim::sampler::{ChainState, SamplerParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(1, 4)?;
    let p = SamplerParams::new(1.0, 1.0, 2.0, 7, 100);
    let mut a = ChainState::new(&spec, &p, 0)?;
    for _ in 0..500 {
        a.sweep(&p);
    }
    let saved = a.checkpoint()?;
    println!("checkpoint is {} bytes", saved.len());

    let mut b = ChainState::restore(&spec, &saved)?;
    for _ in 0..500 {
        a.sweep(&p);
        b.sweep(&p);
    }
    assert_eq!(a.config, b.config);
    println!("resumed chain matches after 500 more sweeps ({} flips)", b.config.total_flip_count());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
