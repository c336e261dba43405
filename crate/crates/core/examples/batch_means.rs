// Streaming accumulators: batch-means error bars, merging chains, and the
// integrated autocorrelation time of an AR(1) series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfim::stats::{integrated_autocorr_time, Accumulator};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let a = 0.9;
    let mut acc = Accumulator::new(1);
    let mut other = Accumulator::new(1);
    let mut series = Vec::new();
    for (stream, target) in [(0u64, &mut acc), (1, &mut other)] {
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let mut x = 0.0;
        for _ in 0..1_000_000 {
            x = a * x + rng.gen::<f64>() - 0.5;
            target.push(stream, &[x]);
            if stream == 0 {
                series.push(x);
            }
        }
    }
    acc.merge(&other)?;
    let e = acc.estimate(0);
    println!("mean {:.5} ± {:.5} from {} batches", e.mean, e.se, e.n_batches);
    // τ = (1 + a) / (2(1 − a)) for AR(1)
    println!(
        "τ estimate {:.2} from 32 batch means, exact {:.2}",
        integrated_autocorr_time(&series),
        (1.0 + a) / (2.0 * (1.0 - a))
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
