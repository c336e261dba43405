// Exact ĉ(k,l) on a chain against the infrared bound `48/(2λL̂ + l²/2δ)`,
// its sharper form, and the `l = 0` Duhamel bound.

use tfim::ed::SpectralDecomposition;
use tfim::lattice::TorusSpec;
use tfim::verify::{check_duhamel_bound, check_infrared, ChatSource};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(1, 6)?;
    let (beta, lambda, delta) = (2.0, 1.0, 1.0);
    let s = SpectralDecomposition::new(&spec, lambda, delta, 0.0)?;
    let table = s.chat_table(beta, 32)?;
    let src = ChatSource::Exact(&table);
    for r in check_infrared(&src, lambda, delta)? {
        println!("{}: worst margin {:.3e} at {}", r.check, r.margin.unwrap(), r.location);
    }
    let r = check_duhamel_bound(&src, lambda, delta)?;
    println!("{}: worst margin {:.3e} at {}", r.check, r.margin.unwrap(), r.location);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
