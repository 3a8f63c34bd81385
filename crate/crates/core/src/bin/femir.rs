use std::process::exit;

fn main() {
    exit(femmir_core::cli::run(std::env::args()))
}
