use std::path::Path;
use std::process::Command;

// OpenBLAS ships both BLAS and LAPACK symbols; link it directly instead of
// pulling a source build through openblas-src.
fn main() {
    let lib = std::env::var("TFIM_BLAS_LIB").unwrap_or_else(|_| "openblas".to_string());
    println!("cargo:rerun-if-env-changed=TFIM_BLAS_LIB");
    println!("cargo:rustc-link-lib={lib}");

    // commit recorded in run manifests
    let hash = Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string());
    println!("cargo:rustc-env=TFIM_GIT_HASH={hash}");
    for p in ["../../.git/HEAD", "../../.git/refs"] {
        if Path::new(p).exists() {
            println!("cargo:rerun-if-changed={p}");
        }
    }
}
