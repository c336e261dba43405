fn main() {
    std::process::exit(tfim::cli::main_with_args(std::env::args_os()));
}
