// One worldline Markov chain on the side-4 chain with the automatic burn-in,
// compared against exact diagonalization.

use tfim::ed::SpectralDecomposition;
use tfim::lattice::TorusSpec;
use tfim::observables::{mean_flip_density, susceptibility_estimate, ObservableConfig};
use tfim::runner::run_chain;
use tfim::sampler::SamplerParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(1, 4)?;
    let params = SamplerParams::new(0.5, 1.0, 1.0, 42, 20_000);
    let (m, summary) = run_chain(&spec, &params, &ObservableConfig::default(), 0)?;
    println!(
        "burn-in {} sweeps (τ = {:.2}), {} samples",
        summary.burn_in,
        summary.tau_energy.unwrap_or(f64::NAN),
        summary.samples
    );
    println!("acceptance {:?}", summary.acceptance);

    let chi = susceptibility_estimate(&m);
    let exact = SpectralDecomposition::new(&spec, 0.5, 1.0, 0.0)?.susceptibility_exact(1.0)?;
    println!("χ = {:.4} ± {:.4}  (exact {exact:.4})", chi.mean, chi.se);
    let c01 = m.equal_time_correlation(1)?;
    println!("c(1, 0) = {:.4} ± {:.4}", c01.mean, c01.se);
    let f = mean_flip_density(&m);
    println!("flips per site {:.4} ± {:.4} (bound 2βδ = 2)", f.mean, f.se);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
