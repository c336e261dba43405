// A config-driven run writing the artifact directory, as the `tfim` binary
// does.

use tfim::config::ExperimentConfig;
use tfim::runner::{run, Command, Source};

const CONFIG: &str = r#"
seeds = [11, 12]

[model]
d = 1
side = 4
beta = 1.0
lambda = 0.5
delta = 1.0

[sampler]
sweeps = 5000

[observables]
time_grid = 8
j_max = 8

[verify]
checks = ["infrared", "duhamel", "flip_domination"]
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut cfg = ExperimentConfig::from_toml(CONFIG)?;
    cfg.output_dir = dir.path().to_path_buf();
    let outcome = run(&cfg, Command::Sample, Source::Mc)?;
    for r in &outcome.reports {
        println!("{:<16} pass {} margin {:?}", r.check, r.pass, r.margin);
    }
    let mut files: Vec<String> = std::fs::read_dir(dir.path())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("artifacts: {files:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
