// χ along a coupling grid: increasing in λ, decreasing in δ.

use tfim::ed::SpectralDecomposition;
use tfim::lattice::TorusSpec;
use tfim::verify::scan_susceptibility;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(1, 6)?;
    let lambdas: Vec<f64> = (0..7).map(|i| 0.25 * i as f64).collect();
    let scan = scan_susceptibility(&spec, 2.0, 1.0, &lambdas)?;
    for (l, chi) in &scan.rows {
        println!("λ = {l:.2}  χ = {:.6}", chi.mean);
    }
    println!("nondecreasing: {}", scan.report.pass);
    for delta in [0.5, 1.0, 1.5] {
        let chi = SpectralDecomposition::new(&spec, 0.5, delta, 0.0)?.susceptibility_exact(2.0)?;
        println!("δ = {delta:.1}  χ = {chi:.6}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
