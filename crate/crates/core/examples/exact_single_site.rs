// Exact diagonalization of one site against the 2×2 closed forms
// `c(t) = cosh(δ(β−2t))/cosh(δβ)` and `χ = tanh(δβ)/δ`.

use tfim::ed::SpectralDecomposition;
use tfim::lattice::TorusSpec;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (beta, delta) = (2.0, 0.7);
    let s = SpectralDecomposition::new(&TorusSpec::single_site(), 0.0, delta, 0.0)?;
    println!("energies {:?}", s.energies());
    for t in [0.0, 0.5, 1.0, 1.5] {
        let exact = (delta * (beta - 2.0 * t)).cosh() / (delta * beta).cosh();
        println!("c({t}) = {:.12}  closed form {exact:.12}", s.schwinger_exact(beta, 0, 0, t)?);
    }
    println!(
        "χ = {:.12}  closed form {:.12}",
        s.susceptibility_exact(beta)?,
        (delta * beta).tanh() / delta
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
