// Torus neighbors, the graph Laplacian and its Fourier symbol `L̂(k)`.

use tfim::lattice::{lhat, TorusSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = TorusSpec::new(2, 4)?;
    println!("{} sites, {} edges", spec.n_sites(), spec.edges().len());
    println!("neighbors of site 0: {:?}", spec.neighbors(0)?);

    // ½ Σ_{x∼y} (u_x − u_y)² over unordered edges
    let u: Vec<f64> = (0..spec.n_sites()).map(|x| (x as f64 * 0.7).sin()).collect();
    let direct: f64 = 0.5 * spec.edges().iter().map(|&(x, y)| (u[x] - u[y]).powi(2)).sum::<f64>();
    println!("edge sum {direct:.12}, quadratic form {:.12}", spec.laplacian_quadratic_form(&u)?);

    for k in spec.momentum_grid().iter().take(5) {
        println!("k = {:?}  L̂(k) = {:.4}", k.components(), lhat(k));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
