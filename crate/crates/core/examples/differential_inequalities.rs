// Both differential inequalities for χ and the derivative bounds on `χ⁻¹`,
// with exact χ and bubble diagram and finite-difference derivatives.

use tfim::ed::chi_partials;
use tfim::lattice::TorusSpec;
use tfim::verify::{check_derivative_bounds, check_diff_inequalities};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(1, 4)?;
    let (beta, lambda, delta) = (1.0, 0.5, 1.0);
    let p = chi_partials(&spec, beta, lambda, delta, 1e-3)?;
    println!(
        "χ = {:.8}, ∂χ/∂λ = {:.8} ± {:.1e}, ∂χ/∂δ = {:.8} ± {:.1e}",
        p.chi, p.dchi_dlambda.value, p.dchi_dlambda.error, p.dchi_ddelta.value, p.dchi_ddelta.error
    );
    let mut reports = check_diff_inequalities(&spec, beta, lambda, delta, 1e-3)?;
    reports.extend(check_derivative_bounds(&spec, beta, lambda, delta, 1e-3)?);
    for r in reports {
        println!("{:<20} margin {:>10.4} pass {}", r.check, r.margin.unwrap(), r.pass);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
