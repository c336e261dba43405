// The dyadic family `W′_{r,n}`, the `±` parts, symmetrization and snippets.

use tfim::hfunctions::{is_snippet, is_symmetric_about, minus_part, plus_part, symmetrize, w_prime, Branch, StepFunction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let beta = 1.0;
    let w = w_prime(0.5, 3, beta)?;
    println!("W′_(0.5,3): {} pieces, ‖·‖∞ = {}, ∫ = {}", w.values.len(), w.sup_norm(), w.integral());

    let h = StepFunction::new(beta, vec![0.0, 0.25, 0.5], vec![1.0, -1.0, 0.0])?;
    let (p, m) = (plus_part(&h)?, minus_part(&h)?);
    println!("h₊′ pieces {:?} values {:?}", p.breakpoints, p.values);
    println!("h₋′ pieces {:?} values {:?}", m.breakpoints, m.values);
    println!("h₊ symmetric about 0: {}", is_symmetric_about(&p, 0.0));

    let s = symmetrize(&h, 0.125, Branch::Plus)?;
    println!("symmetrized at 0.125 is symmetric there: {}", is_symmetric_about(&s, 0.125));
    println!("W′_(0.5,3) is a level-3 snippet of W′_(0.5,2): {}", is_snippet(&w, &w_prime(0.5, 2, beta)?, 3));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
