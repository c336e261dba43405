// The bubble diagram `B` by direct time integration and by the Fourier sum
// over the ĉ table, whose gap is controlled by the infrared tail bound.

use tfim::ed::SpectralDecomposition;
use tfim::lattice::TorusSpec;
use tfim::observables::ir_tail_bound;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(1, 4)?;
    let (beta, lambda, delta) = (1.0, 0.5, 1.0);
    let s = SpectralDecomposition::new(&spec, lambda, delta, 0.0)?;
    let (b, err) = s.bubble_with_error(beta);
    println!("direct B = {b:.12} (quadrature error {err:.1e})");
    for j in [4, 16, 64] {
        let fourier = s.chat_table(beta, j)?.fourier_bubble();
        let tail = ir_tail_bound(&spec, beta, lambda, delta, j);
        println!("J = {j:>2}: Fourier B = {fourier:.12}, gap {:.3e} ≤ tail bound {tail:.3e}", b - fourier);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
